#pragma once

#include <cstdint>
#include <vector>

#include "trajdiv/net.hpp"

namespace trajdiv {

// Greedy max-min selection result. selected holds point indices in
// selection order; assignment maps every input point to a position in
// selected (its nearest representative); covering_radius is the final
// max point-to-representative distance.
struct FpsResult {
  std::vector<std::size_t> selected;
  std::vector<std::size_t> assignment;
  double covering_radius = 0.0;
};

// Farthest point sampling over the rows of points (N_all x d). The start is
// the point nearest the empirical centroid; distance ties break toward the
// lowest point index. The min-distance update is the data-parallel kernel;
// results are identical for any worker count.
FpsResult fps(const DenseArray& points, std::size_t count, int workers = 1);

// Serial reference the parallel kernel is tested against.
FpsResult fps_serial(const DenseArray& points, std::size_t count);

// w_j = |cell j| / N_all over the assignment; sums to 1.
std::vector<double> voronoi_weights(const FpsResult& result);

struct WeightedPrediction {
  Trajectory traj;
  LatentSample latent;
  double weight = 0.0;
};

struct WeightedPredictionSet {
  std::vector<WeightedPrediction> entries;
  std::size_t n_all = 0;
  std::uint64_t seed = 0;
};

// Shared-draw selection stages (matched-seed evaluation uses these so both
// arms consume the same latents).
WeightedPredictionSet select_fps(const EncodedScene& enc, const ParamStore& params,
                                 const ModelConfig& cfg, const DenseArray& latents,
                                 std::size_t count);
// First `count` rows, uniform weights.
WeightedPredictionSet select_direct(const EncodedScene& enc, const ParamStore& params,
                                    const ModelConfig& cfg, const DenseArray& latents,
                                    std::size_t count);

// Draw n_all latents, run FPS on the z_h block only, decode the selected
// pairs, attach Voronoi weights.
WeightedPredictionSet semantic_sample(const Scene& scene, const ParamStore& params,
                                      const ModelConfig& cfg, std::size_t n_all, std::size_t count,
                                      std::uint64_t seed);

// n independent draws with uniform weights 1/n.
WeightedPredictionSet direct_sample(const Scene& scene, const ParamStore& params,
                                    const ModelConfig& cfg, std::size_t count, std::uint64_t seed);

// Prediction CSV: scene_id,sample_j,weight,step,x,y
// Latent sidecar: scene_id,sample_j,zH_1..zH_dH
std::string predictions_to_csv(const std::vector<std::pair<std::uint64_t, WeightedPredictionSet>>& sets);
std::string latents_to_csv(const std::vector<std::pair<std::uint64_t, WeightedPredictionSet>>& sets,
                           std::size_t d_h);

}  // namespace trajdiv
