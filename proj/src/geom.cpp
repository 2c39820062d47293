#include "trajdiv/geom.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace trajdiv {

namespace {

void check_finite_pt(Vec2 p, const char* what) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw std::invalid_argument(std::string(what) + ": non-finite coordinate");
  }
}

}  // namespace

Polyline make_polyline(std::vector<Vec2> pts) {
  if (pts.size() < 2) throw std::invalid_argument("polyline: needs at least 2 points");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    check_finite_pt(pts[i], "polyline");
    if (i > 0 && (pts[i] - pts[i - 1]).norm() <= 1e-9) {
      throw std::invalid_argument("polyline: coincident points at index " + std::to_string(i));
    }
  }
  return Polyline{std::move(pts)};
}

double polyline_length(const Polyline& p) {
  double len = 0.0;
  for (std::size_t i = 1; i < p.pts.size(); ++i) len += (p.pts[i] - p.pts[i - 1]).norm();
  return len;
}

Trajectory make_trajectory(double dt, std::vector<Vec2> pts) {
  if (pts.size() < 2) throw std::invalid_argument("trajectory: needs at least 2 points");
  if (!(dt > 0.0)) throw std::invalid_argument("trajectory: dt must be positive");
  for (auto p : pts) check_finite_pt(p, "trajectory");
  return Trajectory{dt, std::move(pts)};
}

Polyline arclength_resample(const Polyline& p, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("arclength_resample: step must be positive");
  const double total = polyline_length(p);
  if (total < step) {
    throw std::invalid_argument("arclength_resample: polyline length " + std::to_string(total) +
                                " shorter than step " + std::to_string(step));
  }
  std::vector<Vec2> out;
  out.push_back(p.pts.front());
  double target = step;
  double walked = 0.0;
  for (std::size_t i = 1; i < p.pts.size(); ++i) {
    const Vec2 a = p.pts[i - 1];
    const Vec2 b = p.pts[i];
    const double seg = (b - a).norm();
    while (target <= walked + seg + 1e-12 && target < total - 1e-9) {
      const double u = (target - walked) / seg;
      out.push_back(a + (b - a) * u);
      target += step;
    }
    walked += seg;
  }
  out.push_back(p.pts.back());
  // Resampling an already-uniform polyline can land a target within fp noise
  // of the endpoint; drop such a duplicate.
  if (out.size() >= 2 && (out[out.size() - 1] - out[out.size() - 2]).norm() <= 1e-9) {
    out.erase(out.end() - 2);
  }
  return Polyline{std::move(out)};
}

PolylineProjection project_point(const Polyline& p, Vec2 q) {
  PolylineProjection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  double s_base = 0.0;
  for (std::size_t i = 1; i < p.pts.size(); ++i) {
    const Vec2 a = p.pts[i - 1];
    const Vec2 b = p.pts[i];
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    double u = ab.dot(q - a) / len2;
    u = std::clamp(u, 0.0, 1.0);
    const Vec2 c = a + ab * u;
    const double d2 = (q - c).dot(q - c);
    if (d2 < best_d2) {
      best_d2 = d2;
      best.closest = c;
      best.arclength = s_base + u * std::sqrt(len2);
      const Vec2 dir = ab * (1.0 / std::sqrt(len2));
      best.signed_offset = dir.cross(q - c);
      best.distance = std::sqrt(d2);
    }
    s_base += std::sqrt(len2);
  }
  return best;
}

LaneCurve fit_lane_curve(const Polyline& p, Vec2 vehicle_pos, double window,
                         double resample_step) {
  if (!(window > 0.0)) throw std::invalid_argument("fit_lane_curve: window must be positive");
  const Polyline rs = arclength_resample(p, resample_step);
  const std::size_t n = rs.pts.size();

  // Arclength of each resampled point; the final point may close a short
  // segment so accumulate rather than assume i*step.
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) s[i] = s[i - 1] + (rs.pts[i] - rs.pts[i - 1]).norm();

  std::size_t c = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d2 = (rs.pts[i] - vehicle_pos).dot(rs.pts[i] - vehicle_pos);
    if (d2 < best_d2) {
      best_d2 = d2;
      c = i;
    }
  }

  const Vec2 prev = rs.pts[c > 0 ? c - 1 : c];
  const Vec2 next = rs.pts[c + 1 < n ? c + 1 : c];
  Vec2 tangent = next - prev;
  const double tn = tangent.norm();
  if (tn <= 1e-12) throw std::invalid_argument("fit_lane_curve: degenerate tangent");
  tangent = tangent * (1.0 / tn);
  const Vec2 normal{-tangent.y, tangent.x};  // left of travel
  const Vec2 origin = rs.pts[c];

  // Least-squares quadratic of lateral offset vs signed arclength.
  double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  double rhs[3] = {0, 0, 0};
  std::size_t used = 0;
  double s_lo = 0.0, s_hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ds = s[i] - s[c];
    if (std::abs(ds) > window) continue;
    const double lat = normal.dot(rs.pts[i] - origin);
    const double basis[3] = {1.0, ds, ds * ds};
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) m[r][k] += basis[r] * basis[k];
      rhs[r] += basis[r] * lat;
    }
    s_lo = std::min(s_lo, ds);
    s_hi = std::max(s_hi, ds);
    ++used;
  }
  if (used < 3) {
    throw std::invalid_argument("fit_lane_curve: only " + std::to_string(used) +
                                " points within window, need 3");
  }

  // 3x3 Gaussian elimination with partial pivoting.
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    if (std::abs(m[piv][col]) < 1e-14) {
      throw std::invalid_argument("fit_lane_curve: singular normal equations");
    }
    std::swap(m[col], m[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 3; ++k) m[r][k] -= f * m[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  LaneCurve out;
  out.origin = origin;
  out.tangent = tangent;
  out.a0 = rhs[0] / m[0][0];
  out.a1 = rhs[1] / m[1][1];
  out.a2 = rhs[2] / m[2][2];
  out.s_min = s_lo;
  out.s_max = s_hi;
  return out;
}

namespace {

void check_comparable(const Trajectory& a, const Trajectory& b, const char* what, bool check_dt) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch " +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (check_dt && std::abs(a.dt - b.dt) > 1e-12) {
    throw std::invalid_argument(std::string(what) + ": timestep mismatch");
  }
}

}  // namespace

double ade(const Trajectory& pred, const Trajectory& truth) {
  check_comparable(pred, truth, "ade", true);
  double acc = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) acc += (pred.pts[t] - truth.pts[t]).norm();
  return acc / static_cast<double>(pred.size());
}

double fde(const Trajectory& pred, const Trajectory& truth) {
  check_comparable(pred, truth, "fde", false);
  return (pred.pts.back() - truth.pts.back()).norm();
}

}  // namespace trajdiv
