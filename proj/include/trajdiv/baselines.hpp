#pragma once

#include <vector>

#include "trajdiv/array.hpp"
#include "trajdiv/geom.hpp"
#include "trajdiv/rng.hpp"

namespace trajdiv {

enum class MotionModel { cv, ca };

struct KfConfig {
  MotionModel model = MotionModel::cv;
  double q = 0.5;   // process noise spectral density
  double r = 0.04;  // measurement noise variance (m^2)
  double dt = 0.1;

  std::size_t state_dim() const { return model == MotionModel::cv ? 4 : 6; }

  void validate() const;
};

// State ordering: (x, y, vx, vy[, ax, ay]).
struct GaussianState {
  DenseArray mean;  // (d)
  DenseArray cov;   // (d x d), symmetric PSD
};

// Forward Kalman filter plus RTS smoother over the observed positions;
// returns the smoothed state at the last observation.
GaussianState kf_fit(const Trajectory& past, const KfConfig& cfg);

// Deterministic motion-model rollout from the state mean.
Trajectory kf_mean_rollout(const GaussianState& state, const KfConfig& cfg, std::size_t t_pred);

// n draws from the terminal Gaussian, each rolled out deterministically
// (process noise off during rollout: samples encode state uncertainty only).
std::vector<Trajectory> kf_predict_samples(const GaussianState& state, const KfConfig& cfg,
                                           std::size_t t_pred, std::size_t n, Rng& rng);

}  // namespace trajdiv
