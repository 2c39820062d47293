#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "trajdiv/baselines.hpp"
#include "trajdiv/datagen.hpp"
#include "trajdiv/net.hpp"
#include "trajdiv/sampler.hpp"

namespace trajdiv {

// Independent minima of ADE and FDE over the prediction set.
std::pair<double, double> mon_eval(const WeightedPredictionSet& set, const Trajectory& truth);

// Number of distinct semantic codings among the predicted futures.
std::size_t coverage_count(const WeightedPredictionSet& set, const std::vector<Polyline>& lanes);

// Shannon entropy (nats) and modal fraction of a coding-key histogram.
struct NeighborhoodStats {
  double entropy = 0.0;
  double majority_frac = 1.0;
};
NeighborhoodStats histogram_entropy(const std::vector<int>& coding_keys);

struct KnnEntropyResult {
  double mean_entropy = 0.0;
  double std_entropy = 0.0;
  double majority_pct = 100.0;  // mean modal-coding percentage
  std::size_t neighborhoods = 0;
};

// Draw S latents for the scene, pick S' anchors, take each anchor's k
// nearest neighbors in z_H, decode and classify them, and report entropy
// statistics over the neighborhoods.
KnnEntropyResult knn_entropy(const ParamStore& params, const ModelConfig& cfg, const Scene& scene,
                             std::size_t s, std::size_t s_prime, std::size_t k,
                             std::uint64_t seed);

struct ProtocolConfig {
  std::size_t n_min = 1;
  std::size_t n_max = 8;
  std::size_t n_all = 200;
  bool rare_only = true;
  std::size_t knn_s = 1000;
  std::size_t knn_sprime = 30;
  std::size_t knn_k = 40;
  std::size_t knn_scenes = 20;  // 0 disables the entropy section
  std::uint64_t seed = 0;
  int workers = 1;
};

struct EvalReport {
  std::vector<std::size_t> n_values;
  // Indexed [n_index][arm]; arm 0 = fps, arm 1 = direct.
  std::vector<std::array<double, 2>> mon_ade;
  std::vector<std::array<double, 2>> mon_fde;
  std::vector<std::array<double, 2>> mean_distinct;
  KnnEntropyResult knn;
  std::size_t scene_count = 0;
  std::uint64_t seed = 0;
};

// Matched-seed sweep over N: both arms consume the same n_all latent draws
// per scene (direct takes the first N, FPS selects from all). Scenes are
// evaluated independently and reduced in index order, so results do not
// depend on the worker count.
EvalReport run_experiment(const std::vector<Scene>& scenes, const ParamStore& params,
                          const ModelConfig& cfg, const ProtocolConfig& pcfg);

std::string figure3a_csv(const EvalReport& report);
std::string figure3b_csv(const EvalReport& report);
std::string report_to_json(const EvalReport& report);

// Table-style comparison at a fixed sample budget over a scene set:
// KF-CV, KF-CA, deterministic decoder, direct sampling, FPS sampling.
struct ComparisonRow {
  std::string model;
  std::string subset;  // "all" or "rare"
  double mon_ade = 0.0;
  double mon_fde = 0.0;
  std::size_t scenes = 0;
};

std::vector<ComparisonRow> comparison_table(const std::vector<Scene>& scenes,
                                            const ParamStore& params, const ModelConfig& cfg,
                                            const KfConfig& kf_cv, const KfConfig& kf_ca,
                                            std::size_t n, std::size_t n_all, std::uint64_t seed,
                                            int workers = 1);

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows);

}  // namespace trajdiv
