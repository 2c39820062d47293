#pragma once

#include <string>
#include <vector>

#include "trajdiv/datagen.hpp"
#include "trajdiv/net.hpp"
#include "trajdiv/optim.hpp"
#include "trajdiv/semantics.hpp"
#include "trajdiv/tape.hpp"

namespace trajdiv {

// Coefficients for the combined generator objective, in the order
// displacement / adversarial / independence / latent-moment / embedding.
struct LossWeights {
  double l1 = 4.0;
  double l2 = 1.0;
  double l3 = 100.0;
  double l4 = 2.0;
  double l5 = 50.0;
};

enum class EmbMode {
  literal,  // signed pairwise-distance sum, exactly as written
  margin,   // hinge on repulsive pairs, mean over active pair-labels
};

namespace losses {

using ad::Tape;
using ad::Var;

// Per-row ADE between predicted step positions and constant truth steps;
// returns an (R x 1) column. truth_steps[k] must match pred_steps[k] rows.
Var ade_column(Tape& t, const std::vector<Var>& pred_steps,
               const std::vector<DenseArray>& truth_steps);

// Best-of-n reduction over a sample-major ADE column (row j*scenes + i is
// sample j of scene i). Gradient flows only through each scene's argmin.
Var min_over_samples(Tape& t, Var ade_col, std::size_t scenes, std::size_t samples);

struct GanVars {
  Var d_loss;
  Var g_loss;
};

// Binary cross entropy on probability columns; the generator term uses the
// non-saturating form -log D(fake).
GanVars gan_losses(Tape& t, Var d_real, Var d_fake);

// Mean over rows of (sum_i zh_i * sum_j zl_j)^2.
Var ind_loss(Tape& t, Var z_h, Var z_l);

// ||Sigma - I||_F^2 + ||mu||^2 for both latent blocks, batch moments with
// 1/B normalization. Requires at least 2 rows.
Var lat_loss(Tape& t, Var z_h, Var z_l);

// Metric-learning loss over unordered row pairs of z_h, signed per label by
// coding agreement; undefined labels contribute nothing.
Var emb_loss(Tape& t, Var z_h, const std::vector<TernaryCoding>& codings, EmbMode mode,
             double margin);

Var total_g(Tape& t, const LossWeights& w, Var mon, Var gan_g, Var ind, Var lat, Var emb);

}  // namespace losses

// Value-level wrappers over the tape implementations (single source of
// truth; unit tests pin these to hand-computed values).
double mon_loss(const std::vector<Trajectory>& samples, const Trajectory& truth);
std::pair<double, double> gan_losses_value(double d_real, double d_fake);
double ind_loss_value(const DenseArray& z_h, const DenseArray& z_l);
double lat_loss_value(const DenseArray& z_h, const DenseArray& z_l);
double emb_loss_value(const DenseArray& z_h, const std::vector<TernaryCoding>& codings,
                      EmbMode mode, double margin);
double total_g_value(const LossWeights& w, double mon, double gan_g, double ind, double lat,
                     double emb);

struct TrainConfig {
  std::size_t batch = 16;
  std::size_t mon_n = 5;
  std::size_t epochs = 30;
  AdamConfig adam{};
  LossWeights weights{};
  EmbMode emb_mode = EmbMode::margin;
  double emb_margin = 2.0;
  double val_fraction = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;
  double mon_ade = 0, mon_fde = 0, gan_d = 0, gan_g = 0, ind = 0, lat = 0, emb = 0, total_g = 0;
};

struct TrainResult {
  ParamStore best_params;
  std::size_t best_epoch = 0;
  double best_val_mon_ade = 0.0;
  std::vector<EpochMetrics> log;
  ParamStore final_params;
};

// Alternating discriminator/generator steps per batch; checkpoint selection
// by minimum validation MoN ADE. Deterministic per (dataset, configs, seed).
TrainResult train(const std::vector<Scene>& dataset, const ModelConfig& mcfg,
                  const TrainConfig& tcfg);

// metrics.csv: epoch,split,mon_ade,mon_fde,gan_d,gan_g,ind,lat,emb,total_g
std::string metrics_to_csv(const std::vector<EpochMetrics>& log);

}  // namespace trajdiv
