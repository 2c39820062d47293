#include "trajdiv/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace trajdiv {

using ad::Tape;
using ad::Var;

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw std::invalid_argument(std::string("model config: ") + what + " must be positive");
  };
  positive(traj_w1, "traj_w1");
  positive(traj_w2, "traj_w2");
  for (auto w : map_widths) positive(w, "map width");
  positive(hidden, "hidden");
  positive(noise_dim, "noise_dim");
  positive(d_h, "d_h");
  positive(d_l, "d_l");
  positive(lane_slots, "lane_slots");
  positive(t_obs, "t_obs");
  positive(t_pred, "t_pred");
  if (d_h * 4 >= d_l) {
    throw std::invalid_argument("model config: requires d_h << d_l (d_h < d_l/4)");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("model config: bad dropout");
}

std::string model_config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["traj_w1"] = cfg.traj_w1;
  j["traj_w2"] = cfg.traj_w2;
  j["map_widths"] = cfg.map_widths;
  j["hidden"] = cfg.hidden;
  j["noise_dim"] = cfg.noise_dim;
  j["d_h"] = cfg.d_h;
  j["d_l"] = cfg.d_l;
  j["disc_head"] = cfg.disc_head;
  j["lane_slots"] = cfg.lane_slots;
  j["dropout"] = cfg.dropout;
  j["leaky_slope"] = cfg.leaky_slope;
  j["t_obs"] = cfg.t_obs;
  j["t_pred"] = cfg.t_pred;
  j["init_seed"] = cfg.init_seed;
  j["lane_fit_window"] = cfg.lane_fit_window;
  j["lane_fit_step"] = cfg.lane_fit_step;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& json) {
  const auto j = nlohmann::json::parse(json);
  ModelConfig cfg;
  cfg.traj_w1 = j.at("traj_w1").get<std::size_t>();
  cfg.traj_w2 = j.at("traj_w2").get<std::size_t>();
  cfg.map_widths = j.at("map_widths").get<std::array<std::size_t, 4>>();
  cfg.hidden = j.at("hidden").get<std::size_t>();
  cfg.noise_dim = j.at("noise_dim").get<std::size_t>();
  cfg.d_h = j.at("d_h").get<std::size_t>();
  cfg.d_l = j.at("d_l").get<std::size_t>();
  cfg.disc_head = j.at("disc_head").get<std::array<std::size_t, 2>>();
  cfg.lane_slots = j.at("lane_slots").get<std::size_t>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.leaky_slope = j.at("leaky_slope").get<double>();
  cfg.t_obs = j.at("t_obs").get<std::size_t>();
  cfg.t_pred = j.at("t_pred").get<std::size_t>();
  cfg.init_seed = j.at("init_seed").get<std::uint64_t>();
  cfg.lane_fit_window = j.at("lane_fit_window").get<double>();
  cfg.lane_fit_step = j.at("lane_fit_step").get<double>();
  cfg.validate();
  return cfg;
}

namespace {

DenseArray uniform_init(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  DenseArray a({rows, cols});
  for (std::size_t i = 0; i < a.numel(); ++i) a[i] = rng.uniform(-bound, bound);
  return a;
}

void add_linear(ParamStore& ps, Rng& rng, const std::string& name, std::size_t in,
                std::size_t out, bool with_ln) {
  ps.emplace(name + ".w", uniform_init(rng, in, out, in));
  ps.emplace(name + ".b", DenseArray({1, out}));
  if (with_ln) {
    DenseArray gain({1, out});
    gain.fill(1.0);
    ps.emplace(name + ".ln.g", std::move(gain));
    ps.emplace(name + ".ln.b", DenseArray({1, out}));
  }
}

void add_lstm(ParamStore& ps, Rng& rng, const std::string& name, std::size_t in,
              std::size_t hidden) {
  ps.emplace(name + ".wx", uniform_init(rng, in, 4 * hidden, in));
  ps.emplace(name + ".wh", uniform_init(rng, hidden, 4 * hidden, hidden));
  ps.emplace(name + ".b", DenseArray({1, 4 * hidden}));
}

}  // namespace

ParamStore init_params(const ModelConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.init_seed);
  ParamStore ps;
  // Draw order is fixed by this construction order, independent of map
  // iteration, so the same seed always yields the same parameters.
  add_linear(ps, rng, "g.traj.l1", 2, cfg.traj_w1, true);
  add_linear(ps, rng, "g.traj.l2", cfg.traj_w1, cfg.traj_w2, true);
  std::size_t in = cfg.map_feat_dim();
  for (int i = 0; i < 4; ++i) {
    add_linear(ps, rng, "g.map.l" + std::to_string(i + 1), in, cfg.map_widths[static_cast<std::size_t>(i)], true);
    in = cfg.map_widths[static_cast<std::size_t>(i)];
  }
  add_lstm(ps, rng, "g.enc", cfg.traj_w2 + cfg.map_out(), cfg.hidden);
  add_linear(ps, rng, "g.lat.h", cfg.hidden + cfg.noise_dim, cfg.d_h, false);
  add_linear(ps, rng, "g.lat.l", cfg.hidden + cfg.noise_dim, cfg.d_l, false);
  add_lstm(ps, rng, "g.dec", cfg.d_h + cfg.d_l + cfg.map_out() + 2, cfg.hidden);
  add_linear(ps, rng, "g.dec.out", cfg.hidden, 2, false);

  add_linear(ps, rng, "d.traj.l1", 2, cfg.traj_w1, false);
  add_linear(ps, rng, "d.traj.l2", cfg.traj_w1, cfg.traj_w2, false);
  in = cfg.map_feat_dim();
  for (int i = 0; i < 4; ++i) {
    add_linear(ps, rng, "d.map.l" + std::to_string(i + 1), in, cfg.map_widths[static_cast<std::size_t>(i)], false);
    in = cfg.map_widths[static_cast<std::size_t>(i)];
  }
  add_lstm(ps, rng, "d.enc", cfg.traj_w2 + cfg.map_out(), cfg.hidden);
  add_linear(ps, rng, "d.head.l1", cfg.hidden, cfg.disc_head[0], false);
  add_linear(ps, rng, "d.head.l2", cfg.disc_head[0], cfg.disc_head[1], false);
  add_linear(ps, rng, "d.head.l3", cfg.disc_head[1], 1, false);
  return ps;
}

ScenePrep prep_scene(const Scene& scene, const ModelConfig& cfg) {
  ScenePrep prep;
  prep.dt = scene.past.dt;
  const auto& past = scene.past.pts;
  const Vec2 origin = past.back();
  Vec2 heading = past[past.size() - 1] - past[past.size() - 2];
  RigidFrame frame;
  frame.t = origin;
  if (heading.norm() > 1e-9) {
    heading = heading * (1.0 / heading.norm());
    frame.c = heading.x;
    frame.s = heading.y;
  }
  prep.world_from_local = frame;
  prep.past_local.reserve(past.size());
  for (auto p : past) prep.past_local.push_back(frame.invert(p));
  for (auto p : scene.future.pts) prep.future_local.push_back(frame.invert(p));
  prep.map_feats = lane_features(scene.lanes, frame, cfg);
  return prep;
}

DenseArray lane_features(const std::vector<Polyline>& lanes, const RigidFrame& frame,
                         const ModelConfig& cfg) {
  struct Slot {
    double dist;
    std::array<double, 8> feats;
  };
  std::vector<Slot> slots;
  for (const auto& lane : lanes) {
    LaneCurve curve;
    try {
      curve = fit_lane_curve(lane, frame.t, cfg.lane_fit_window, cfg.lane_fit_step);
    } catch (const std::invalid_argument&) {
      continue;  // lane too short for a stable fit; leave the slot empty
    }
    const Vec2 o = frame.invert(curve.origin);
    const Vec2 tan = frame.invert_rot(curve.tangent);
    Slot s;
    s.dist = o.norm();
    s.feats = {o.x * kPosScale, o.y * kPosScale, tan.x, tan.y,
               curve.a0 * kPosScale, curve.a1, curve.a2, 1.0};
    slots.push_back(s);
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.dist < b.dist; });

  DenseArray out({1, cfg.map_feat_dim()});
  for (std::size_t k = 0; k < cfg.lane_slots && k < slots.size(); ++k) {
    for (std::size_t f = 0; f < 8; ++f) out[k * 8 + f] = slots[k].feats[f];
  }
  return out;
}

namespace netops {

namespace {

Var maybe_dropout(Tape& t, Var x, const ModelConfig& cfg, Rng* rng) {
  if (rng == nullptr || cfg.dropout <= 0.0) return x;
  const auto& v = t.value(x);
  DenseArray mask(v.shape());
  const double keep = 1.0 - cfg.dropout;
  for (std::size_t i = 0; i < mask.numel(); ++i) {
    mask[i] = rng->uniform() < keep ? 1.0 / keep : 0.0;
  }
  return t.mul(x, t.constant(std::move(mask)));
}

// Generator block: affine -> feature standardization -> relu -> dropout.
Var gen_layer(Tape& t, const BoundParams& p, const ModelConfig& cfg, Var x,
              const std::string& name, Rng* rng) {
  Var y = t.affine(x, p.at(name + ".w"), p.at(name + ".b"));
  y = t.layer_norm(y, p.at(name + ".ln.g"), p.at(name + ".ln.b"));
  return maybe_dropout(t, t.relu(y), cfg, rng);
}

// Discriminator block: affine -> leaky relu.
Var disc_layer(Tape& t, const BoundParams& p, const ModelConfig& cfg, Var x,
               const std::string& name) {
  return t.leaky_relu(t.affine(x, p.at(name + ".w"), p.at(name + ".b")), cfg.leaky_slope);
}

ad::LstmCell bind_lstm(const BoundParams& p, const std::string& name, std::size_t hidden) {
  return ad::LstmCell{p.at(name + ".wx"), p.at(name + ".wh"), p.at(name + ".b"), hidden};
}

}  // namespace

Var traj_embed_step(Tape& t, const BoundParams& p, const ModelConfig& cfg, Var pos,
                    const std::string& side, Rng* rng) {
  if (t.value(pos).cols() != 2) {
    throw std::invalid_argument("traj_embed_step: expected (B,2) positions, got " +
                                t.value(pos).shape_str());
  }
  Var x = t.scale(pos, kPosScale);
  if (side == "g") {
    x = gen_layer(t, p, cfg, x, "g.traj.l1", rng);
    return gen_layer(t, p, cfg, x, "g.traj.l2", rng);
  }
  x = disc_layer(t, p, cfg, x, "d.traj.l1");
  return disc_layer(t, p, cfg, x, "d.traj.l2");
}

Var map_embed(Tape& t, const BoundParams& p, const ModelConfig& cfg, Var feats,
              const std::string& side, Rng* rng) {
  if (t.value(feats).cols() != cfg.map_feat_dim()) {
    throw std::invalid_argument("map_embed: expected (B," + std::to_string(cfg.map_feat_dim()) +
                                ") features, got " + t.value(feats).shape_str());
  }
  Var x = feats;
  for (int i = 1; i <= 4; ++i) {
    const std::string name = side + ".map.l" + std::to_string(i);
    x = side == "g" ? gen_layer(t, p, cfg, x, name, rng) : disc_layer(t, p, cfg, x, name);
  }
  return x;
}

Var encode_seq(Tape& t, const BoundParams& p, const ModelConfig& cfg,
               const std::vector<Var>& pos_steps, Var map_vec, const std::string& side,
               Rng* rng) {
  const ad::LstmCell cell = bind_lstm(p, side + ".enc", cfg.hidden);
  const std::size_t batch = t.value(pos_steps.at(0)).rows();
  auto state = ad::LstmCell::zero_state(t, batch, cfg.hidden);
  for (Var pos : pos_steps) {
    Var emb = traj_embed_step(t, p, cfg, pos, side, rng);
    state = cell.step(t, t.concat_cols({emb, map_vec}), state);
  }
  return state.h;
}

LatentVars latent_heads(Tape& t, const BoundParams& p, const ModelConfig& cfg, Var enc_rows,
                        Var noise_rows) {
  if (t.value(noise_rows).cols() != cfg.noise_dim) {
    throw std::invalid_argument("latent_heads: expected noise dim " +
                                std::to_string(cfg.noise_dim) + ", got " +
                                t.value(noise_rows).shape_str());
  }
  Var joint = t.concat_cols({enc_rows, noise_rows});
  return {t.affine(joint, p.at("g.lat.h.w"), p.at("g.lat.h.b")),
          t.affine(joint, p.at("g.lat.l.w"), p.at("g.lat.l.b"))};
}

std::vector<Var> decode_steps(Tape& t, const BoundParams& p, const ModelConfig& cfg, Var z_h,
                              Var z_l, Var map_rows) {
  const ad::LstmCell cell = bind_lstm(p, "g.dec", cfg.hidden);
  const std::size_t rows = t.value(z_h).rows();
  auto state = ad::LstmCell::zero_state(t, rows, cfg.hidden);
  Var pos = t.constant(DenseArray::zeros(rows, 2));  // canonical origin
  std::vector<Var> out;
  out.reserve(cfg.t_pred);
  for (std::size_t k = 0; k < cfg.t_pred; ++k) {
    Var in = t.concat_cols({z_h, z_l, map_rows, t.scale(pos, kPosScale)});
    state = cell.step(t, in, state);
    Var delta = t.affine(state.h, p.at("g.dec.out.w"), p.at("g.dec.out.b"));
    pos = t.add(pos, delta);
    out.push_back(pos);
  }
  return out;
}

Var discriminate_prob(Tape& t, const BoundParams& p, const ModelConfig& cfg,
                      const std::vector<Var>& past_steps, const std::vector<Var>& future_steps,
                      Var map_feats) {
  Var map_vec = map_embed(t, p, cfg, map_feats, "d");
  const ad::LstmCell cell = bind_lstm(p, "d.enc", cfg.hidden);
  const std::size_t batch = t.value(past_steps.at(0)).rows();
  auto state = ad::LstmCell::zero_state(t, batch, cfg.hidden);
  auto feed = [&](const std::vector<Var>& steps) {
    for (Var pos : steps) {
      Var emb = traj_embed_step(t, p, cfg, pos, "d");
      state = cell.step(t, t.concat_cols({emb, map_vec}), state);
    }
  };
  feed(past_steps);
  feed(future_steps);
  Var x = disc_layer(t, p, cfg, state.h, "d.head.l1");
  x = disc_layer(t, p, cfg, x, "d.head.l2");
  Var logit = t.affine(x, p.at("d.head.l3.w"), p.at("d.head.l3.b"));
  return t.sigmoid(logit);
}

}  // namespace netops

// --- Single-scene surface --------------------------------------------------

DenseArray embed_trajectory(const std::vector<Vec2>& pts, const ParamStore& params,
                            const ModelConfig& cfg) {
  if (pts.empty()) throw std::invalid_argument("embed_trajectory: empty input");
  Tape t;
  BoundParams bound = bind_params(t, params);
  std::vector<double> flat;
  flat.reserve(pts.size() * 2);
  for (auto p : pts) {
    flat.push_back(p.x);
    flat.push_back(p.y);
  }
  Var pos = t.constant(DenseArray({pts.size(), 2}, std::move(flat)));
  Var emb = netops::traj_embed_step(t, bound, cfg, pos, "g");
  return t.value(emb);
}

DenseArray embed_map(const std::vector<LaneCurve>& curves, const ParamStore& params,
                     const ModelConfig& cfg) {
  DenseArray feats({1, cfg.map_feat_dim()});
  for (std::size_t k = 0; k < cfg.lane_slots && k < curves.size(); ++k) {
    const LaneCurve& c = curves[k];
    const double vals[8] = {c.origin.x * kPosScale, c.origin.y * kPosScale,
                            c.tangent.x, c.tangent.y,
                            c.a0 * kPosScale, c.a1, c.a2, 1.0};
    for (std::size_t f = 0; f < 8; ++f) feats[k * 8 + f] = vals[f];
  }
  Tape t;
  BoundParams bound = bind_params(t, params);
  Var out = netops::map_embed(t, bound, cfg, t.constant(std::move(feats)), "g");
  return t.value(out);
}

DenseArray encode(const DenseArray& step_embeddings, const DenseArray& map_vec,
                  const ParamStore& params, const ModelConfig& cfg) {
  if (step_embeddings.rows() != cfg.t_obs) {
    throw std::invalid_argument("encode: expected t_obs=" + std::to_string(cfg.t_obs) +
                                " embedding rows, got " + step_embeddings.shape_str());
  }
  Tape t;
  BoundParams bound = bind_params(t, params);
  const ad::LstmCell enc_cell{bound.at("g.enc.wx"), bound.at("g.enc.wh"), bound.at("g.enc.b"),
                              cfg.hidden};
  auto state = ad::LstmCell::zero_state(t, 1, cfg.hidden);
  Var map_v = t.constant(map_vec);
  for (std::size_t step = 0; step < step_embeddings.rows(); ++step) {
    std::vector<double> row(step_embeddings.cols());
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = step_embeddings.at(step, j);
    Var emb = t.constant(DenseArray({1, row.size()}, std::move(row)));
    state = enc_cell.step(t, t.concat_cols({emb, map_v}), state);
  }
  return t.value(state.h);
}

LatentSample latent_split(const DenseArray& enc_state, const std::vector<double>& noise,
                          const ParamStore& params, const ModelConfig& cfg) {
  if (noise.size() != cfg.noise_dim) {
    throw std::invalid_argument("latent_split: expected noise dim " +
                                std::to_string(cfg.noise_dim) + ", got " +
                                std::to_string(noise.size()));
  }
  Tape t;
  BoundParams bound = bind_params(t, params);
  Var enc = t.constant(enc_state);
  Var nz = t.constant(DenseArray({1, noise.size()}, noise));
  auto lat = netops::latent_heads(t, bound, cfg, enc, nz);
  const auto& zh = t.value(lat.z_h);
  const auto& zl = t.value(lat.z_l);
  return {{zh.data(), zh.data() + zh.numel()}, {zl.data(), zl.data() + zl.numel()}};
}

Trajectory decode(const LatentSample& z, const DenseArray& map_vec, const ParamStore& params,
                  const ModelConfig& cfg, double dt, Vec2 anchor) {
  if (z.z_h.size() != cfg.d_h || z.z_l.size() != cfg.d_l) {
    throw std::invalid_argument("decode: latent dims do not match model config");
  }
  Tape t;
  BoundParams bound = bind_params(t, params);
  Var zh = t.constant(DenseArray({1, cfg.d_h}, z.z_h));
  Var zl = t.constant(DenseArray({1, cfg.d_l}, z.z_l));
  Var map_v = t.constant(map_vec);
  auto steps = netops::decode_steps(t, bound, cfg, zh, zl, map_v);
  std::vector<Vec2> pts;
  pts.reserve(steps.size());
  for (Var s : steps) {
    const auto& v = t.value(s);
    pts.push_back(anchor + Vec2{v[0], v[1]});
  }
  return make_trajectory(dt, std::move(pts));
}

double discriminate(const Scene& scene, const Trajectory& future_world, const ParamStore& params,
                    const ModelConfig& cfg) {
  if (scene.past.size() != cfg.t_obs || future_world.size() != cfg.t_pred) {
    throw std::invalid_argument("discriminate: past/future lengths do not match model config");
  }
  const ScenePrep prep = prep_scene(scene, cfg);
  Tape t;
  BoundParams bound = bind_params(t, params);
  auto step_vars = [&](const std::vector<Vec2>& pts) {
    std::vector<Var> out;
    out.reserve(pts.size());
    for (auto p : pts) out.push_back(t.constant(DenseArray({1, 2}, {p.x, p.y})));
    return out;
  };
  std::vector<Vec2> future_local;
  future_local.reserve(future_world.size());
  for (auto p : future_world.pts) future_local.push_back(prep.world_from_local.invert(p));
  Var prob = netops::discriminate_prob(t, bound, cfg, step_vars(prep.past_local),
                                       step_vars(future_local), t.constant(prep.map_feats));
  return t.value(prob)[0];
}

// --- Batched evaluation pipeline -------------------------------------------

EncodedScene encode_scene(const Scene& scene, const ParamStore& params, const ModelConfig& cfg) {
  if (scene.past.size() != cfg.t_obs) {
    throw std::invalid_argument("encode_scene: past length " + std::to_string(scene.past.size()) +
                                " does not match t_obs " + std::to_string(cfg.t_obs));
  }
  EncodedScene out;
  out.prep = prep_scene(scene, cfg);
  Tape t;
  BoundParams bound = bind_params(t, params);
  std::vector<Var> steps;
  steps.reserve(out.prep.past_local.size());
  for (auto p : out.prep.past_local) steps.push_back(t.constant(DenseArray({1, 2}, {p.x, p.y})));
  Var map_v = netops::map_embed(t, bound, cfg, t.constant(out.prep.map_feats), "g");
  Var enc = netops::encode_seq(t, bound, cfg, steps, map_v, "g");
  out.enc = t.value(enc);
  out.map_vec = t.value(map_v);
  return out;
}

DenseArray draw_latents(const EncodedScene& enc, const ParamStore& params, const ModelConfig& cfg,
                        std::size_t count, Rng& rng, bool deterministic) {
  if (count < 1) throw std::invalid_argument("draw_latents: count must be >= 1");
  DenseArray noise({count, cfg.noise_dim});
  if (!deterministic) {
    for (std::size_t i = 0; i < noise.numel(); ++i) noise[i] = rng.normal();
  }
  Tape t;
  BoundParams bound = bind_params(t, params);
  std::vector<Var> enc_tiles(count, t.constant(enc.enc));
  Var enc_rows = count == 1 ? enc_tiles[0] : t.concat_rows(enc_tiles);
  auto lat = netops::latent_heads(t, bound, cfg, enc_rows, t.constant(std::move(noise)));
  Var z = t.concat_cols({lat.z_h, lat.z_l});
  return t.value(z);
}

LatentSample latent_row(const DenseArray& latents, std::size_t row, const ModelConfig& cfg) {
  LatentSample s;
  s.z_h.assign(latents.data() + row * latents.cols(), latents.data() + row * latents.cols() + cfg.d_h);
  s.z_l.assign(latents.data() + row * latents.cols() + cfg.d_h,
               latents.data() + (row + 1) * latents.cols());
  return s;
}

std::vector<Trajectory> decode_latents(const EncodedScene& enc, const ParamStore& params,
                                       const ModelConfig& cfg, const DenseArray& latents) {
  const std::size_t rows = latents.rows();
  if (latents.cols() != cfg.d_h + cfg.d_l) {
    throw std::invalid_argument("decode_latents: latent width does not match model config");
  }
  Tape t;
  BoundParams bound = bind_params(t, params);
  Var z = t.constant(latents);
  Var z_h = t.slice_cols(z, 0, cfg.d_h);
  Var z_l = t.slice_cols(z, cfg.d_h, cfg.d_l);
  std::vector<Var> map_tiles(rows, t.constant(enc.map_vec));
  Var map_rows = rows == 1 ? map_tiles[0] : t.concat_rows(map_tiles);
  auto steps = netops::decode_steps(t, bound, cfg, z_h, z_l, map_rows);

  std::vector<Trajectory> out;
  out.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<Vec2> pts;
    pts.reserve(steps.size());
    for (Var s : steps) {
      const auto& v = t.value(s);
      pts.push_back(enc.prep.world_from_local.apply({v.at(r, 0), v.at(r, 1)}));
    }
    out.push_back(make_trajectory(enc.prep.dt, std::move(pts)));
  }
  return out;
}

std::vector<std::pair<LatentSample, Trajectory>> generate(const Scene& scene,
                                                          const ParamStore& params,
                                                          const ModelConfig& cfg, Rng& rng,
                                                          std::size_t n, bool deterministic) {
  if (n < 1) throw std::invalid_argument("generate: n must be >= 1");
  const EncodedScene enc = encode_scene(scene, params, cfg);
  const DenseArray latents = draw_latents(enc, params, cfg, n, rng, deterministic);
  auto trajs = decode_latents(enc, params, cfg, latents);
  std::vector<std::pair<LatentSample, Trajectory>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(latent_row(latents, i, cfg), std::move(trajs[i]));
  }
  return out;
}

}  // namespace trajdiv
