#include "trajdiv/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trajdiv {

namespace {

// Small dense helpers on DenseArray matrices; dimensions here are 4 or 6.
DenseArray mat_mul(const DenseArray& a, const DenseArray& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) throw std::invalid_argument("mat_mul: shape mismatch");
  DenseArray c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = a.at(i, kk);
      for (std::size_t j = 0; j < n; ++j) c.at(i, j) += aik * b.at(kk, j);
    }
  }
  return c;
}

DenseArray mat_t(const DenseArray& a) {
  DenseArray c({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) c.at(j, i) = a.at(i, j);
  }
  return c;
}

DenseArray mat_add(const DenseArray& a, const DenseArray& b) {
  DenseArray c = a;
  for (std::size_t i = 0; i < c.numel(); ++i) c[i] += b[i];
  return c;
}

DenseArray mat_sub(const DenseArray& a, const DenseArray& b) {
  DenseArray c = a;
  for (std::size_t i = 0; i < c.numel(); ++i) c[i] -= b[i];
  return c;
}

DenseArray identity(std::size_t n) {
  DenseArray c({n, n});
  for (std::size_t i = 0; i < n; ++i) c.at(i, i) = 1.0;
  return c;
}

void symmetrize(DenseArray& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a.at(i, j) + a.at(j, i));
      a.at(i, j) = v;
      a.at(j, i) = v;
    }
  }
}

DenseArray inv2x2(const DenseArray& a) {
  const double det = a.at(0, 0) * a.at(1, 1) - a.at(0, 1) * a.at(1, 0);
  if (std::abs(det) < 1e-300) {
    throw std::runtime_error("kalman: singular innovation covariance");
  }
  DenseArray c({2, 2});
  const double inv = 1.0 / det;
  c.at(0, 0) = a.at(1, 1) * inv;
  c.at(0, 1) = -a.at(0, 1) * inv;
  c.at(1, 0) = -a.at(1, 0) * inv;
  c.at(1, 1) = a.at(0, 0) * inv;
  return c;
}

// General small-matrix inverse (Gauss-Jordan with partial pivoting); used
// by the smoother on predicted covariances.
DenseArray inv_small(DenseArray a) {
  const std::size_t n = a.rows();
  DenseArray inv = identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a.at(r, col)) > std::abs(a.at(piv, col))) piv = r;
    }
    if (std::abs(a.at(piv, col)) < 1e-300) {
      throw std::runtime_error("kalman: singular covariance in smoother");
    }
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a.at(col, j), a.at(piv, j));
        std::swap(inv.at(col, j), inv.at(piv, j));
      }
    }
    const double scale = 1.0 / a.at(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      a.at(col, j) *= scale;
      inv.at(col, j) *= scale;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a.at(r, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a.at(r, j) -= f * a.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

// Cholesky with escalating diagonal jitter; zero matrices yield zero factors.
DenseArray cholesky_psd(DenseArray a) {
  const std::size_t n = a.rows();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a.at(i, i)));
  if (scale == 0.0) return DenseArray({n, n});
  for (double jitter = 0.0;; jitter = jitter == 0.0 ? scale * 1e-14 : jitter * 10.0) {
    DenseArray l({n, n});
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = 0; j <= i && ok; ++j) {
        double s = a.at(i, j) + (i == j ? jitter : 0.0);
        for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
        if (i == j) {
          if (s < 0.0) {
            ok = false;
          } else {
            l.at(i, i) = std::sqrt(s);
          }
        } else {
          l.at(i, j) = l.at(j, j) > 0.0 ? s / l.at(j, j) : 0.0;
        }
      }
    }
    if (ok) return l;
    if (jitter > scale) throw std::runtime_error("kalman: covariance is not PSD");
  }
}

DenseArray transition(const KfConfig& cfg) {
  const double dt = cfg.dt;
  const std::size_t d = cfg.state_dim();
  DenseArray f = identity(d);
  f.at(0, 2) = dt;
  f.at(1, 3) = dt;
  if (cfg.model == MotionModel::ca) {
    f.at(0, 4) = 0.5 * dt * dt;
    f.at(1, 5) = 0.5 * dt * dt;
    f.at(2, 4) = dt;
    f.at(3, 5) = dt;
  }
  return f;
}

// White-noise acceleration (CV) / jerk (CA) process covariance per axis.
DenseArray process_noise(const KfConfig& cfg) {
  const double dt = cfg.dt;
  const std::size_t d = cfg.state_dim();
  DenseArray q({d, d});
  if (cfg.model == MotionModel::cv) {
    const double q11 = cfg.q * dt * dt * dt / 3.0;
    const double q12 = cfg.q * dt * dt / 2.0;
    const double q22 = cfg.q * dt;
    for (int axis = 0; axis < 2; ++axis) {
      const std::size_t p = static_cast<std::size_t>(axis);
      q.at(p, p) = q11;
      q.at(p, p + 2) = q12;
      q.at(p + 2, p) = q12;
      q.at(p + 2, p + 2) = q22;
    }
  } else {
    const double d5 = std::pow(dt, 5) / 20.0, d4 = std::pow(dt, 4) / 8.0,
                 d3 = std::pow(dt, 3) / 6.0, d3v = std::pow(dt, 3) / 3.0,
                 d2 = dt * dt / 2.0;
    for (int axis = 0; axis < 2; ++axis) {
      const std::size_t p = static_cast<std::size_t>(axis);
      q.at(p, p) = cfg.q * d5;
      q.at(p, p + 2) = cfg.q * d4;
      q.at(p + 2, p) = cfg.q * d4;
      q.at(p, p + 4) = cfg.q * d3;
      q.at(p + 4, p) = cfg.q * d3;
      q.at(p + 2, p + 2) = cfg.q * d3v;
      q.at(p + 2, p + 4) = cfg.q * d2;
      q.at(p + 4, p + 2) = cfg.q * d2;
      q.at(p + 4, p + 4) = cfg.q * dt;
    }
  }
  return q;
}

}  // namespace

void KfConfig::validate() const {
  if (!(q > 0.0)) throw std::invalid_argument("kalman config: q must be positive");
  if (!(r > 0.0)) throw std::invalid_argument("kalman config: r must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("kalman config: dt must be positive");
}

GaussianState kf_fit(const Trajectory& past, const KfConfig& cfg) {
  cfg.validate();
  const std::size_t min_len = cfg.model == MotionModel::cv ? 2 : 3;
  if (past.size() < min_len) {
    throw std::invalid_argument("kf_fit: need at least " + std::to_string(min_len) +
                                " observations for this model");
  }
  const std::size_t d = cfg.state_dim();
  const std::size_t n = past.size();
  const DenseArray f = transition(cfg);
  const DenseArray ft = mat_t(f);
  const DenseArray q = process_noise(cfg);

  // Diffuse prior centered on the first observation.
  DenseArray x({d, 1});
  x.at(0, 0) = past.pts[0].x;
  x.at(1, 0) = past.pts[0].y;
  DenseArray p({d, d});
  for (std::size_t i = 0; i < d; ++i) p.at(i, i) = i < 2 ? 100.0 : 400.0;

  std::vector<DenseArray> filt_x(n), filt_p(n), pred_x(n), pred_p(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      x = mat_mul(f, x);
      p = mat_add(mat_mul(mat_mul(f, p), ft), q);
      symmetrize(p);
    }
    pred_x[k] = x;
    pred_p[k] = p;

    // Measurement update with H = [I2 | 0].
    DenseArray s({2, 2});
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) s.at(i, j) = p.at(i, j) + (i == j ? cfg.r : 0.0);
    }
    const DenseArray s_inv = inv2x2(s);
    DenseArray k_gain({d, 2});
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        k_gain.at(i, j) = p.at(i, 0) * s_inv.at(0, j) + p.at(i, 1) * s_inv.at(1, j);
      }
    }
    const double innov_x = past.pts[k].x - x.at(0, 0);
    const double innov_y = past.pts[k].y - x.at(1, 0);
    for (std::size_t i = 0; i < d; ++i) {
      x.at(i, 0) += k_gain.at(i, 0) * innov_x + k_gain.at(i, 1) * innov_y;
    }
    // Joseph-free covariance update, re-symmetrized.
    DenseArray kh({d, d});
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < 2; ++j) kh.at(i, j) = k_gain.at(i, j);
    }
    p = mat_mul(mat_sub(identity(d), kh), p);
    symmetrize(p);
    filt_x[k] = x;
    filt_p[k] = p;
  }

  // RTS backward recursion; at the terminal step the smoothed state equals
  // the filtered state, so the sweep matters only for callers asking for an
  // interior index.
  std::vector<DenseArray> smooth_x(n), smooth_p(n);
  smooth_x[n - 1] = filt_x[n - 1];
  smooth_p[n - 1] = filt_p[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) {
    const DenseArray gain = mat_mul(mat_mul(filt_p[k], ft), inv_small(pred_p[k + 1]));
    smooth_x[k] =
        mat_add(filt_x[k], mat_mul(gain, mat_sub(smooth_x[k + 1], pred_x[k + 1])));
    smooth_p[k] = mat_add(
        filt_p[k],
        mat_mul(mat_mul(gain, mat_sub(smooth_p[k + 1], pred_p[k + 1])), mat_t(gain)));
    symmetrize(smooth_p[k]);
  }

  GaussianState out;
  DenseArray mean({cfg.state_dim()});
  for (std::size_t i = 0; i < cfg.state_dim(); ++i) mean[i] = smooth_x[n - 1].at(i, 0);
  out.mean = std::move(mean);
  out.cov = smooth_p[n - 1];
  return out;
}

Trajectory kf_mean_rollout(const GaussianState& state, const KfConfig& cfg, std::size_t t_pred) {
  if (t_pred < 2) throw std::invalid_argument("kf_mean_rollout: t_pred must be >= 2");
  const std::size_t d = cfg.state_dim();
  if (state.mean.numel() != d) throw std::invalid_argument("kf_mean_rollout: state dim mismatch");
  const DenseArray f = transition(cfg);
  DenseArray x({d, 1});
  for (std::size_t i = 0; i < d; ++i) x.at(i, 0) = state.mean[i];
  std::vector<Vec2> pts;
  pts.reserve(t_pred);
  for (std::size_t k = 0; k < t_pred; ++k) {
    x = mat_mul(f, x);
    pts.push_back({x.at(0, 0), x.at(1, 0)});
  }
  return make_trajectory(cfg.dt, std::move(pts));
}

std::vector<Trajectory> kf_predict_samples(const GaussianState& state, const KfConfig& cfg,
                                           std::size_t t_pred, std::size_t n, Rng& rng) {
  const std::size_t d = cfg.state_dim();
  if (state.cov.rows() != d || state.cov.cols() != d) {
    throw std::invalid_argument("kf_predict_samples: covariance dim mismatch");
  }
  // Symmetry guard before factorization.
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (std::abs(state.cov.at(i, j) - state.cov.at(j, i)) > 1e-9) {
        throw std::invalid_argument("kf_predict_samples: covariance not symmetric");
      }
    }
  }
  const DenseArray l = cholesky_psd(state.cov);
  std::vector<Trajectory> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> z(d);
    for (auto& v : z) v = rng.normal();
    GaussianState draw;
    DenseArray mean({d});
    for (std::size_t i = 0; i < d; ++i) {
      double acc = state.mean[i];
      for (std::size_t j = 0; j <= i; ++j) acc += l.at(i, j) * z[j];
      mean[i] = acc;
    }
    draw.mean = std::move(mean);
    draw.cov = DenseArray({d, d});
    out.push_back(kf_mean_rollout(draw, cfg, t_pred));
  }
  return out;
}

}  // namespace trajdiv
