#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trajdiv/datagen.hpp"
#include "trajdiv/geom.hpp"
#include "trajdiv/lstm.hpp"
#include "trajdiv/optim.hpp"
#include "trajdiv/rng.hpp"
#include "trajdiv/tape.hpp"

namespace trajdiv {

// Position inputs are scaled to decameters before entering any network;
// decoder outputs stay in meters.
inline constexpr double kPosScale = 0.1;

struct ModelConfig {
  std::size_t traj_w1 = 32, traj_w2 = 32;
  std::array<std::size_t, 4> map_widths = {64, 32, 16, 32};
  std::size_t hidden = 64;
  std::size_t noise_dim = 10;
  std::size_t d_h = 2;
  std::size_t d_l = 72;
  std::array<std::size_t, 2> disc_head = {64, 16};  // final layer is 1 wide
  std::size_t lane_slots = 3;
  double dropout = 0.0;
  double leaky_slope = 0.2;
  std::size_t t_obs = 20;
  std::size_t t_pred = 30;
  std::uint64_t init_seed = 1;
  double lane_fit_window = 15.0;
  double lane_fit_step = 1.0;

  std::size_t map_feat_dim() const { return lane_slots * 8; }
  std::size_t map_out() const { return map_widths[3]; }

  void validate() const;
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json);

// Fresh generator ("g.*") and discriminator ("d.*") parameters, uniform
// fan-in init from cfg.init_seed.
ParamStore init_params(const ModelConfig& cfg);

struct LatentSample {
  std::vector<double> z_h;
  std::vector<double> z_l;
};

// Scene rebased into the canonical frame: origin at the last observed
// position, heading along the last observed displacement. Removes global
// pose before anything touches the networks.
struct ScenePrep {
  RigidFrame world_from_local;
  std::vector<Vec2> past_local;
  std::vector<Vec2> future_local;  // empty when the scene has no future
  DenseArray map_feats;            // (1 x lane_slots*8)
  double dt = 0.1;
};

ScenePrep prep_scene(const Scene& scene, const ModelConfig& cfg);

// Map feature row for one prepared scene: per slot
// (ox, oy, tx, ty, a0, a1, a2, presence), nearest lanes first, zero-padded.
DenseArray lane_features(const std::vector<Polyline>& lanes, const RigidFrame& frame,
                         const ModelConfig& cfg);

// --- Single-scene forward surface (values in, values out) ----------------

// Two stacked embedding layers applied per step; pts are canonical-frame
// coordinates. Output is (T x traj_w2).
DenseArray embed_trajectory(const std::vector<Vec2>& pts, const ParamStore& params,
                            const ModelConfig& cfg);

// Four-layer map network over slot features derived from fitted curves
// (canonical frame). Output is (1 x map_out()).
DenseArray embed_map(const std::vector<LaneCurve>& curves, const ParamStore& params,
                     const ModelConfig& cfg);

// Recurrent encoder over per-step trajectory embeddings with the map vector
// concatenated at every step. Output is (1 x hidden).
DenseArray encode(const DenseArray& step_embeddings, const DenseArray& map_vec,
                  const ParamStore& params, const ModelConfig& cfg);

// Two affine heads over concat(encoder state, noise).
LatentSample latent_split(const DenseArray& enc_state, const std::vector<double>& noise,
                          const ParamStore& params, const ModelConfig& cfg);

// Recurrent rollout of t_pred position deltas accumulated from `anchor`
// (canonical frame).
Trajectory decode(const LatentSample& z, const DenseArray& map_vec, const ParamStore& params,
                  const ModelConfig& cfg, double dt, Vec2 anchor = {0.0, 0.0});

double discriminate(const Scene& scene, const Trajectory& future_world, const ParamStore& params,
                    const ModelConfig& cfg);

// --- Batched evaluation pipeline ------------------------------------------

struct EncodedScene {
  ScenePrep prep;
  DenseArray enc;      // (1 x hidden)
  DenseArray map_vec;  // (1 x map_out)
};

EncodedScene encode_scene(const Scene& scene, const ParamStore& params, const ModelConfig& cfg);

// count rows of (z_h | z_l), each from an independent standard-normal noise
// draw through the latent heads. deterministic=true forces the noise to 0.
DenseArray draw_latents(const EncodedScene& enc, const ParamStore& params, const ModelConfig& cfg,
                        std::size_t count, Rng& rng, bool deterministic = false);

std::vector<Trajectory> decode_latents(const EncodedScene& enc, const ParamStore& params,
                                       const ModelConfig& cfg, const DenseArray& latents);

LatentSample latent_row(const DenseArray& latents, std::size_t row, const ModelConfig& cfg);

// n independent draws through the full pipeline, world-frame trajectories.
std::vector<std::pair<LatentSample, Trajectory>> generate(const Scene& scene,
                                                          const ParamStore& params,
                                                          const ModelConfig& cfg, Rng& rng,
                                                          std::size_t n,
                                                          bool deterministic = false);

// --- Tape-level building blocks (training path, gradient checks) ----------

namespace netops {

// One generator trajectory-embedding step: (B x 2) scaled positions in,
// (B x traj_w2) out. side is "g" or "d".
ad::Var traj_embed_step(ad::Tape& t, const BoundParams& p, const ModelConfig& cfg, ad::Var pos,
                        const std::string& side, Rng* dropout_rng = nullptr);
ad::Var map_embed(ad::Tape& t, const BoundParams& p, const ModelConfig& cfg, ad::Var feats,
                  const std::string& side, Rng* dropout_rng = nullptr);
ad::Var encode_seq(ad::Tape& t, const BoundParams& p, const ModelConfig& cfg,
                   const std::vector<ad::Var>& pos_steps, ad::Var map_vec,
                   const std::string& side, Rng* dropout_rng = nullptr);

struct LatentVars {
  ad::Var z_h;
  ad::Var z_l;
};

LatentVars latent_heads(ad::Tape& t, const BoundParams& p, const ModelConfig& cfg,
                        ad::Var enc_rows, ad::Var noise_rows);

// Local-frame positions per future step, each (R x 2).
std::vector<ad::Var> decode_steps(ad::Tape& t, const BoundParams& p, const ModelConfig& cfg,
                                  ad::Var z_h, ad::Var z_l, ad::Var map_rows);

// Discriminator probability column (R x 1) over past+future step positions.
ad::Var discriminate_prob(ad::Tape& t, const BoundParams& p, const ModelConfig& cfg,
                          const std::vector<ad::Var>& past_steps,
                          const std::vector<ad::Var>& future_steps, ad::Var map_feats);

}  // namespace netops

}  // namespace trajdiv
