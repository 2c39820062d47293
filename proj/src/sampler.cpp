#include "trajdiv/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "trajdiv/io_util.hpp"
#include "trajdiv/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace trajdiv {

namespace {

double dist2(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

FpsResult fps_impl(const DenseArray& points, std::size_t count, int workers) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (count < 1 || count > n) {
    throw std::invalid_argument("fps: count " + std::to_string(count) + " outside [1," +
                                std::to_string(n) + "]");
  }
  points.check_finite();

  std::vector<double> centroid(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centroid[j] += points.at(i, j);
  }
  for (auto& c : centroid) c /= static_cast<double>(n);

  std::size_t start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d2 = dist2(points.data() + i * d, centroid.data(), d);
    if (d2 < best) {  // strict: ties keep the lowest index
      best = d2;
      start = i;
    }
  }

  FpsResult out;
  out.selected.reserve(count);
  out.assignment.assign(n, 0);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());

  std::size_t cur = start;
  double* min_d2_p = min_d2.data();
  std::size_t* assign_p = out.assignment.data();
  for (std::size_t pick = 0; pick < count; ++pick) {
    out.selected.push_back(cur);
    const double* rep = points.data() + cur * d;
    const double* pts = points.data();
    // Data-parallel update: each point owns its own slot, so the result is
    // identical for any worker count.
#ifdef _OPENMP
#pragma omp parallel for num_threads(workers > 1 ? workers : 1) schedule(static) if (workers > 1 && n > 4096)
#endif
    for (std::size_t i = 0; i < n; ++i) {
      const double d2 = dist2(pts + i * d, rep, d);
      if (d2 < min_d2_p[i]) {
        min_d2_p[i] = d2;
        assign_p[i] = pick;
      }
    }
    if (pick + 1 < count) {
      std::size_t far = 0;
      double far_d2 = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (min_d2[i] > far_d2) {  // strict: ties keep the lowest index
          far_d2 = min_d2[i];
          far = i;
        }
      }
      cur = far;
    }
  }
  double max_d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_d2 = std::max(max_d2, min_d2[i]);
  out.covering_radius = std::sqrt(max_d2);
  return out;
}

}  // namespace

FpsResult fps(const DenseArray& points, std::size_t count, int workers) {
  return fps_impl(points, count, workers);
}

FpsResult fps_serial(const DenseArray& points, std::size_t count) {
  return fps_impl(points, count, 1);
}

std::vector<double> voronoi_weights(const FpsResult& result) {
  if (result.selected.empty() || result.assignment.empty()) {
    throw std::invalid_argument("voronoi_weights: empty FPS result");
  }
  std::vector<std::size_t> counts(result.selected.size(), 0);
  for (std::size_t rep : result.assignment) {
    if (rep >= counts.size()) throw std::invalid_argument("voronoi_weights: bad assignment");
    ++counts[rep];
  }
  std::vector<double> w(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    w[j] = static_cast<double>(counts[j]) / static_cast<double>(result.assignment.size());
  }
  return w;
}

namespace {

DenseArray zh_block(const DenseArray& latents, const ModelConfig& cfg) {
  DenseArray out({latents.rows(), cfg.d_h});
  for (std::size_t i = 0; i < latents.rows(); ++i) {
    for (std::size_t j = 0; j < cfg.d_h; ++j) out.at(i, j) = latents.at(i, j);
  }
  return out;
}

DenseArray gather_rows(const DenseArray& latents, const std::vector<std::size_t>& rows) {
  DenseArray out({rows.size(), latents.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < latents.cols(); ++j) out.at(i, j) = latents.at(rows[i], j);
  }
  return out;
}

}  // namespace

WeightedPredictionSet select_fps(const EncodedScene& enc, const ParamStore& params,
                                 const ModelConfig& cfg, const DenseArray& latents,
                                 std::size_t count) {
  const FpsResult f = fps(zh_block(latents, cfg), count);
  const std::vector<double> w = voronoi_weights(f);
  const DenseArray chosen = gather_rows(latents, f.selected);
  auto trajs = decode_latents(enc, params, cfg, chosen);

  WeightedPredictionSet out;
  out.n_all = latents.rows();
  for (std::size_t j = 0; j < count; ++j) {
    out.entries.push_back({std::move(trajs[j]), latent_row(latents, f.selected[j], cfg), w[j]});
  }
  return out;
}

WeightedPredictionSet select_direct(const EncodedScene& enc, const ParamStore& params,
                                    const ModelConfig& cfg, const DenseArray& latents,
                                    std::size_t count) {
  if (count < 1 || count > latents.rows()) {
    throw std::invalid_argument("select_direct: bad count");
  }
  std::vector<std::size_t> rows(count);
  for (std::size_t i = 0; i < count; ++i) rows[i] = i;
  auto trajs = decode_latents(enc, params, cfg, gather_rows(latents, rows));
  WeightedPredictionSet out;
  out.n_all = latents.rows();
  const double w = 1.0 / static_cast<double>(count);
  for (std::size_t j = 0; j < count; ++j) {
    out.entries.push_back({std::move(trajs[j]), latent_row(latents, j, cfg), w});
  }
  return out;
}

WeightedPredictionSet semantic_sample(const Scene& scene, const ParamStore& params,
                                      const ModelConfig& cfg, std::size_t n_all, std::size_t count,
                                      std::uint64_t seed) {
  if (count > n_all) {
    throw std::invalid_argument("semantic_sample: count " + std::to_string(count) +
                                " exceeds n_all " + std::to_string(n_all));
  }
  const EncodedScene enc = encode_scene(scene, params, cfg);
  Rng rng = Rng::stream(seed, scene.id);
  const DenseArray latents = draw_latents(enc, params, cfg, n_all, rng);
  WeightedPredictionSet out = select_fps(enc, params, cfg, latents, count);
  out.seed = seed;
  return out;
}

WeightedPredictionSet direct_sample(const Scene& scene, const ParamStore& params,
                                    const ModelConfig& cfg, std::size_t count,
                                    std::uint64_t seed) {
  const EncodedScene enc = encode_scene(scene, params, cfg);
  Rng rng = Rng::stream(seed, scene.id);
  const DenseArray latents = draw_latents(enc, params, cfg, count, rng);
  WeightedPredictionSet out = select_direct(enc, params, cfg, latents, count);
  out.seed = seed;
  return out;
}

std::string predictions_to_csv(
    const std::vector<std::pair<std::uint64_t, WeightedPredictionSet>>& sets) {
  std::ostringstream out;
  out << "scene_id,sample_j,weight,step,x,y\n";
  for (const auto& [id, set] : sets) {
    for (std::size_t j = 0; j < set.entries.size(); ++j) {
      const auto& e = set.entries[j];
      for (std::size_t k = 0; k < e.traj.size(); ++k) {
        out << id << "," << j << "," << format_double(e.weight) << "," << k << ","
            << format_double(e.traj.pts[k].x) << "," << format_double(e.traj.pts[k].y) << "\n";
      }
    }
  }
  return out.str();
}

std::string latents_to_csv(const std::vector<std::pair<std::uint64_t, WeightedPredictionSet>>& sets,
                           std::size_t d_h) {
  std::ostringstream out;
  out << "scene_id,sample_j";
  for (std::size_t i = 1; i <= d_h; ++i) out << ",zH_" << i;
  out << "\n";
  for (const auto& [id, set] : sets) {
    for (std::size_t j = 0; j < set.entries.size(); ++j) {
      out << id << "," << j;
      for (std::size_t i = 0; i < d_h; ++i) {
        out << "," << format_double(set.entries[j].latent.z_h.at(i));
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace trajdiv
