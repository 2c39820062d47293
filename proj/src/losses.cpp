#include "trajdiv/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "trajdiv/io_util.hpp"

namespace trajdiv {

namespace losses {

namespace {
constexpr double kProbFloor = 1e-12;
}

Var ade_column(Tape& t, const std::vector<Var>& pred_steps,
               const std::vector<DenseArray>& truth_steps) {
  if (pred_steps.empty() || pred_steps.size() != truth_steps.size()) {
    throw std::invalid_argument("ade_column: step count mismatch");
  }
  Var acc;
  for (std::size_t k = 0; k < pred_steps.size(); ++k) {
    Var diff = t.sub(pred_steps[k], t.constant(truth_steps[k]));
    Var d = t.sqrt(t.sum_cols(t.square(diff)));
    acc = k == 0 ? d : t.add(acc, d);
  }
  return t.scale(acc, 1.0 / static_cast<double>(pred_steps.size()));
}

Var min_over_samples(Tape& t, Var ade_col, std::size_t scenes, std::size_t samples) {
  const auto& v = t.value(ade_col);
  if (v.cols() != 1 || v.rows() != scenes * samples) {
    throw std::invalid_argument("min_over_samples: expected (" + std::to_string(scenes * samples) +
                                ",1) column, got " + v.shape_str());
  }
  std::vector<Var> mins;
  mins.reserve(scenes);
  for (std::size_t i = 0; i < scenes; ++i) {
    std::size_t best = i;
    for (std::size_t j = 1; j < samples; ++j) {
      if (v[j * scenes + i] < v[best]) best = j * scenes + i;
    }
    mins.push_back(t.slice_rows(ade_col, best, 1));
  }
  return t.mean(mins.size() == 1 ? mins[0] : t.concat_rows(mins));
}

GanVars gan_losses(Tape& t, Var d_real, Var d_fake) {
  Var real_term = t.mean(t.log(t.clamp_min(d_real, kProbFloor)));
  Var fake_term = t.mean(t.log(t.clamp_min(t.sub(t.constant_scalar(1.0), d_fake), kProbFloor)));
  Var gen_term = t.mean(t.log(t.clamp_min(d_fake, kProbFloor)));
  GanVars out;
  out.d_loss = t.scale(t.add(real_term, fake_term), -1.0);
  out.g_loss = t.scale(gen_term, -1.0);
  return out;
}

Var ind_loss(Tape& t, Var z_h, Var z_l) {
  if (t.value(z_h).rows() != t.value(z_l).rows()) {
    throw std::invalid_argument("ind_loss: row mismatch");
  }
  Var prod = t.mul(t.sum_cols(z_h), t.sum_cols(z_l));
  return t.mean(t.square(prod));
}

namespace {

Var moment_penalty(Tape& t, Var z) {
  const std::size_t b = t.value(z).rows();
  const std::size_t d = t.value(z).cols();
  const double inv_b = 1.0 / static_cast<double>(b);
  Var mu = t.scale(t.sum_rows(z), inv_b);                       // (1 x d)
  Var centered = t.add_rowvec(z, t.scale(mu, -1.0));            // (b x d)
  Var cov = t.scale(t.matmul(t.transpose(centered), centered), inv_b);
  DenseArray eye({d, d});
  for (std::size_t i = 0; i < d; ++i) eye[i * d + i] = 1.0;
  Var dev = t.sub(cov, t.constant(std::move(eye)));
  return t.add(t.sum(t.square(dev)), t.sum(t.square(mu)));
}

}  // namespace

Var lat_loss(Tape& t, Var z_h, Var z_l) {
  if (t.value(z_h).rows() < 2) {
    throw std::invalid_argument("lat_loss: needs a batch of at least 2 rows");
  }
  if (t.value(z_h).rows() != t.value(z_l).rows()) {
    throw std::invalid_argument("lat_loss: row mismatch");
  }
  return t.add(moment_penalty(t, z_h), moment_penalty(t, z_l));
}

Var emb_loss(Tape& t, Var z_h, const std::vector<TernaryCoding>& codings, EmbMode mode,
             double margin) {
  const std::size_t b = t.value(z_h).rows();
  if (codings.size() != b) {
    throw std::invalid_argument("emb_loss: codings size does not match batch rows");
  }
  if (b < 2) throw std::invalid_argument("emb_loss: needs a batch of at least 2 rows");

  Var total = t.constant_scalar(0.0);
  std::size_t active_pair_labels = 0;
  for (std::size_t m = 0; m < b; ++m) {
    for (std::size_t n = m + 1; n < b; ++n) {
      int attract = 0, repulse = 0;
      for (int l = 0; l < 6; ++l) {
        const int s = coding_sign(codings[m].bits[static_cast<std::size_t>(l)],
                                  codings[n].bits[static_cast<std::size_t>(l)]);
        if (s > 0) ++attract;
        if (s < 0) ++repulse;
      }
      if (attract == 0 && repulse == 0) continue;
      active_pair_labels += static_cast<std::size_t>(attract + repulse);
      Var diff = t.sub(t.slice_rows(z_h, m, 1), t.slice_rows(z_h, n, 1));
      Var dist = t.sqrt(t.sum(t.square(diff)));
      if (mode == EmbMode::literal) {
        const int s = attract - repulse;
        if (s != 0) total = t.add(total, t.scale(dist, static_cast<double>(s)));
      } else {
        if (attract > 0) total = t.add(total, t.scale(dist, static_cast<double>(attract)));
        if (repulse > 0) {
          Var hinge = t.relu(t.sub(t.constant_scalar(margin), dist));
          total = t.add(total, t.scale(hinge, static_cast<double>(repulse)));
        }
      }
    }
  }
  if (mode == EmbMode::margin && active_pair_labels > 0) {
    total = t.scale(total, 1.0 / static_cast<double>(active_pair_labels));
  }
  return total;
}

Var total_g(Tape& t, const LossWeights& w, Var mon, Var gan_g, Var ind, Var lat, Var emb) {
  Var out = t.scale(mon, w.l1);
  out = t.add(out, t.scale(gan_g, w.l2));
  out = t.add(out, t.scale(ind, w.l3));
  out = t.add(out, t.scale(lat, w.l4));
  return t.add(out, t.scale(emb, w.l5));
}

}  // namespace losses

double mon_loss(const std::vector<Trajectory>& samples, const Trajectory& truth) {
  if (samples.empty()) throw std::invalid_argument("mon_loss: needs at least one sample");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) best = std::min(best, ade(s, truth));
  return best;
}

std::pair<double, double> gan_losses_value(double d_real, double d_fake) {
  ad::Tape t;
  auto g = losses::gan_losses(t, t.constant_scalar(d_real), t.constant_scalar(d_fake));
  return {t.value(g.d_loss)[0], t.value(g.g_loss)[0]};
}

double ind_loss_value(const DenseArray& z_h, const DenseArray& z_l) {
  ad::Tape t;
  return t.value(losses::ind_loss(t, t.constant(z_h), t.constant(z_l)))[0];
}

double lat_loss_value(const DenseArray& z_h, const DenseArray& z_l) {
  ad::Tape t;
  return t.value(losses::lat_loss(t, t.constant(z_h), t.constant(z_l)))[0];
}

double emb_loss_value(const DenseArray& z_h, const std::vector<TernaryCoding>& codings,
                      EmbMode mode, double margin) {
  ad::Tape t;
  return t.value(losses::emb_loss(t, t.constant(z_h), codings, mode, margin))[0];
}

double total_g_value(const LossWeights& w, double mon, double gan_g, double ind, double lat,
                     double emb) {
  ad::Tape t;
  return t.value(losses::total_g(t, w, t.constant_scalar(mon), t.constant_scalar(gan_g),
                                 t.constant_scalar(ind), t.constant_scalar(lat),
                                 t.constant_scalar(emb)))[0];
}

void TrainConfig::validate() const {
  if (batch < 2) throw std::invalid_argument("train config: batch must be >= 2");
  if (mon_n < 1) throw std::invalid_argument("train config: mon_n must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("train config: val_fraction must be in (0,1)");
  }
  if (weights.l1 < 0 || weights.l2 < 0 || weights.l3 < 0 || weights.l4 < 0 || weights.l5 < 0) {
    throw std::invalid_argument("train config: loss weights must be non-negative");
  }
}

namespace {

using ad::Tape;
using ad::Var;

struct PreppedScene {
  const Scene* scene = nullptr;
  ScenePrep prep;
};

// Constant (B x 2) position matrices per step for a batch of scenes.
std::vector<DenseArray> stack_steps(const std::vector<const PreppedScene*>& batch,
                                    bool future, std::size_t tile) {
  const std::size_t steps = future ? batch[0]->prep.future_local.size()
                                   : batch[0]->prep.past_local.size();
  const std::size_t b = batch.size();
  std::vector<DenseArray> out;
  out.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    DenseArray m({b * tile, 2});
    for (std::size_t j = 0; j < tile; ++j) {
      for (std::size_t i = 0; i < b; ++i) {
        const Vec2 p = future ? batch[i]->prep.future_local[k] : batch[i]->prep.past_local[k];
        m.at(j * b + i, 0) = p.x;
        m.at(j * b + i, 1) = p.y;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

DenseArray stack_map_feats(const std::vector<const PreppedScene*>& batch, std::size_t feat_dim,
                           std::size_t tile = 1) {
  DenseArray m({batch.size() * tile, feat_dim});
  for (std::size_t j = 0; j < tile; ++j) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t f = 0; f < feat_dim; ++f) {
        m.at(j * batch.size() + i, f) = batch[i]->prep.map_feats[f];
      }
    }
  }
  return m;
}

DenseArray gaussian_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  DenseArray m({rows, cols});
  for (std::size_t i = 0; i < m.numel(); ++i) m[i] = rng.normal();
  return m;
}

struct GenGraph {
  Var map_vec;                  // (B x map_out)
  netops::LatentVars lat;       // (R x d_h), (R x d_l)
  std::vector<Var> pred_steps;  // t_pred x (R x 2)
  Var ade_col;                  // (R x 1)
};

// Full generator forward for one batch: encode, draw R = B*n latents,
// decode, and score against the ground-truth future.
GenGraph gen_forward(Tape& t, const BoundParams& bound, const ModelConfig& mcfg,
                     const std::vector<const PreppedScene*>& batch, std::size_t n,
                     const DenseArray& noise, Rng* dropout_rng) {
  GenGraph g;
  const std::size_t b = batch.size();
  auto past_steps_data = stack_steps(batch, false, 1);
  std::vector<Var> past_steps;
  past_steps.reserve(past_steps_data.size());
  for (auto& m : past_steps_data) past_steps.push_back(t.constant(std::move(m)));

  Var map_feats = t.constant(stack_map_feats(batch, mcfg.map_feat_dim()));
  g.map_vec = netops::map_embed(t, bound, mcfg, map_feats, "g", dropout_rng);
  Var enc = netops::encode_seq(t, bound, mcfg, past_steps, g.map_vec, "g", dropout_rng);

  Var enc_rows = enc;
  Var map_rows = g.map_vec;
  if (n > 1) {
    std::vector<Var> enc_tiles(n, enc);
    std::vector<Var> map_tiles(n, g.map_vec);
    enc_rows = t.concat_rows(enc_tiles);
    map_rows = t.concat_rows(map_tiles);
  }
  g.lat = netops::latent_heads(t, bound, mcfg, enc_rows, t.constant(noise));
  g.pred_steps = netops::decode_steps(t, bound, mcfg, g.lat.z_h, g.lat.z_l, map_rows);
  g.ade_col = losses::ade_column(t, g.pred_steps, stack_steps(batch, true, n));
  (void)b;
  return g;
}

// Minimum-over-samples FDE from decoded values (metric only, no gradient).
double mon_fde_value(Tape& t, const GenGraph& g,
                     const std::vector<const PreppedScene*>& batch, std::size_t n) {
  const auto& last = t.value(g.pred_steps.back());
  const std::size_t b = batch.size();
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const Vec2 truth = batch[i]->prep.future_local.back();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t r = j * b + i;
      best = std::min(best, (Vec2{last.at(r, 0), last.at(r, 1)} - truth).norm());
    }
    total += best;
  }
  return total / static_cast<double>(b);
}

struct BatchLosses {
  double mon_ade = 0, mon_fde = 0, gan_d = 0, gan_g = 0, ind = 0, lat = 0, emb = 0, total = 0;
};

}  // namespace

TrainResult train(const std::vector<Scene>& dataset, const ModelConfig& mcfg,
                  const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate();
  if (dataset.size() < 4) throw std::invalid_argument("train: needs at least 4 scenes");

  std::vector<PreppedScene> prepped(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Scene& s = dataset[i];
    if (s.past.size() != mcfg.t_obs || s.future.size() != mcfg.t_pred) {
      throw std::invalid_argument("train: scene " + std::to_string(s.id) +
                                  " horizons do not match model config");
    }
    prepped[i] = {&s, prep_scene(s, mcfg)};
  }

  // Deterministic split: shuffle once, validation takes the tail.
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  {
    Rng split_rng = Rng::stream(tcfg.seed, 9001);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[split_rng.uniform_u64(i)]);
    }
  }
  std::size_t n_val = static_cast<std::size_t>(std::round(tcfg.val_fraction * static_cast<double>(order.size())));
  n_val = std::clamp<std::size_t>(n_val, 2, order.size() - 2);
  std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());

  TrainResult result;
  ParamStore params = init_params(mcfg);
  result.best_params = params;
  result.best_val_mon_ade = std::numeric_limits<double>::infinity();

  Adam opt_g(tcfg.adam), opt_d(tcfg.adam);
  Rng d_noise_rng = Rng::stream(tcfg.seed, 7);
  Rng g_noise_rng = Rng::stream(tcfg.seed, 8);
  Rng dropout_rng = Rng::stream(tcfg.seed, 11);
  Rng* drop = mcfg.dropout > 0.0 ? &dropout_rng : nullptr;

  auto make_batches = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::vector<const PreppedScene*>> batches;
    for (std::size_t start = 0; start < idx.size(); start += tcfg.batch) {
      const std::size_t end = std::min(idx.size(), start + tcfg.batch);
      if (end - start < 2) break;  // pairwise losses need at least 2 scenes
      std::vector<const PreppedScene*> b;
      for (std::size_t i = start; i < end; ++i) b.push_back(&prepped[idx[i]]);
      batches.push_back(std::move(b));
    }
    return batches;
  };

  auto batch_codings = [](const std::vector<const PreppedScene*>& batch) {
    std::vector<TernaryCoding> c;
    c.reserve(batch.size());
    for (const auto* p : batch) c.push_back(p->scene->coding);
    return c;
  };

  // Shared by the G-step and the validation pass (validation skips backward).
  auto run_generator_losses = [&](Tape& t, const BoundParams& bound,
                                  const std::vector<const PreppedScene*>& batch, Rng& noise_rng,
                                  Rng* drop_rng, BatchLosses& out) -> Var {
    const std::size_t b = batch.size();
    const std::size_t rows = b * tcfg.mon_n;
    const DenseArray noise = gaussian_rows(noise_rng, rows, mcfg.noise_dim);
    GenGraph g = gen_forward(t, bound, mcfg, batch, tcfg.mon_n, noise, drop_rng);

    Var mon = losses::min_over_samples(t, g.ade_col, b, tcfg.mon_n);

    // Adversarial term on the first sample of each scene.
    std::vector<Var> fake_steps;
    fake_steps.reserve(g.pred_steps.size());
    for (Var s : g.pred_steps) fake_steps.push_back(t.slice_rows(s, 0, b));
    auto past_data = stack_steps(batch, false, 1);
    std::vector<Var> past_steps;
    for (auto& m : past_data) past_steps.push_back(t.constant(std::move(m)));
    Var map_feats = t.constant(stack_map_feats(batch, mcfg.map_feat_dim()));
    Var d_fake = netops::discriminate_prob(t, bound, mcfg, past_steps, fake_steps, map_feats);
    Var gan_g = t.scale(t.mean(t.log(t.clamp_min(d_fake, 1e-12))), -1.0);

    Var ind = losses::ind_loss(t, g.lat.z_h, g.lat.z_l);
    Var lat = losses::lat_loss(t, g.lat.z_h, g.lat.z_l);
    Var z_h0 = t.slice_rows(g.lat.z_h, 0, b);
    Var emb = losses::emb_loss(t, z_h0, batch_codings(batch), tcfg.emb_mode, tcfg.emb_margin);
    Var total = losses::total_g(t, tcfg.weights, mon, gan_g, ind, lat, emb);

    out.mon_ade = t.value(mon)[0];
    out.mon_fde = mon_fde_value(t, g, batch, tcfg.mon_n);
    out.gan_g = t.value(gan_g)[0];
    out.ind = t.value(ind)[0];
    out.lat = t.value(lat)[0];
    out.emb = t.value(emb)[0];
    out.total = t.value(total)[0];
    return total;
  };

  auto run_disc_losses = [&](Tape& t, const BoundParams& bound,
                             const std::vector<const PreppedScene*>& batch,
                             const std::vector<DenseArray>& fake_steps_data,
                             BatchLosses& out) -> Var {
    auto past_data = stack_steps(batch, false, 1);
    std::vector<Var> past_steps;
    for (auto& m : past_data) past_steps.push_back(t.constant(std::move(m)));
    Var map_feats = t.constant(stack_map_feats(batch, mcfg.map_feat_dim()));

    auto real_data = stack_steps(batch, true, 1);
    std::vector<Var> real_steps, fake_steps;
    for (auto& m : real_data) real_steps.push_back(t.constant(std::move(m)));
    for (const auto& m : fake_steps_data) fake_steps.push_back(t.constant(m));

    Var d_real = netops::discriminate_prob(t, bound, mcfg, past_steps, real_steps, map_feats);
    Var d_fake = netops::discriminate_prob(t, bound, mcfg, past_steps, fake_steps, map_feats);
    auto gan = losses::gan_losses(t, d_real, d_fake);
    out.gan_d = t.value(gan.d_loss)[0];
    return gan.d_loss;
  };

  for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
    std::vector<std::size_t> shuffled = train_idx;
    {
      Rng epoch_rng = Rng::stream(tcfg.seed, 100 + epoch);
      for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[epoch_rng.uniform_u64(i)]);
      }
    }

    BatchLosses epoch_acc;
    std::size_t batches_done = 0;
    for (const auto& batch : make_batches(shuffled)) {
      try {
        const std::size_t b = batch.size();
        // Discriminator step: fakes generated without gradient and fed back
        // as constants, so backward stops at the discriminator.
        std::vector<DenseArray> fake_data;
        {
          Tape t;
          BoundParams bound = bind_params(t, params);
          const DenseArray noise = gaussian_rows(d_noise_rng, b, mcfg.noise_dim);
          GenGraph g = gen_forward(t, bound, mcfg, batch, 1, noise, drop);
          fake_data.reserve(g.pred_steps.size());
          for (Var s : g.pred_steps) fake_data.push_back(t.value(s));
        }
        BatchLosses stats{};
        {
          Tape t;
          BoundParams bound = bind_params(t, params);
          Var d_loss = run_disc_losses(t, bound, batch, fake_data, stats);
          t.backward(d_loss);
          opt_d.step(params, collect_grads(t, bound, "d."));
        }
        {
          Tape t;
          BoundParams bound = bind_params(t, params);
          Var total = run_generator_losses(t, bound, batch, g_noise_rng, drop, stats);
          t.backward(total);
          opt_g.step(params, collect_grads(t, bound, "g."));
        }
        epoch_acc.mon_ade += stats.mon_ade;
        epoch_acc.mon_fde += stats.mon_fde;
        epoch_acc.gan_d += stats.gan_d;
        epoch_acc.gan_g += stats.gan_g;
        epoch_acc.ind += stats.ind;
        epoch_acc.lat += stats.lat;
        epoch_acc.emb += stats.emb;
        epoch_acc.total += stats.total;
        ++batches_done;
      } catch (const std::exception& e) {
        throw std::runtime_error("train: epoch " + std::to_string(epoch) + " batch " +
                                 std::to_string(batches_done) + ": " + e.what());
      }
    }

    auto log_row = [&](const std::string& split, const BatchLosses& acc, std::size_t count) {
      EpochMetrics m;
      m.epoch = epoch;
      m.split = split;
      const double inv = count > 0 ? 1.0 / static_cast<double>(count) : 0.0;
      m.mon_ade = acc.mon_ade * inv;
      m.mon_fde = acc.mon_fde * inv;
      m.gan_d = acc.gan_d * inv;
      m.gan_g = acc.gan_g * inv;
      m.ind = acc.ind * inv;
      m.lat = acc.lat * inv;
      m.emb = acc.emb * inv;
      m.total_g = acc.total * inv;
      result.log.push_back(m);
      return m;
    };
    log_row("train", epoch_acc, batches_done);

    // Validation pass: same losses, fresh per-epoch noise stream, no update.
    BatchLosses val_acc;
    std::size_t val_batches = 0;
    Rng val_rng = Rng::stream(tcfg.seed, 50000 + epoch);
    for (const auto& batch : make_batches(val_idx)) {
      BatchLosses stats{};
      {
        Tape t;
        BoundParams bound = bind_params(t, params);
        const std::size_t b = batch.size();
        const DenseArray noise = gaussian_rows(val_rng, b, mcfg.noise_dim);
        GenGraph g = gen_forward(t, bound, mcfg, batch, 1, noise, nullptr);
        std::vector<DenseArray> fake_data;
        for (Var s : g.pred_steps) fake_data.push_back(t.value(s));
        run_disc_losses(t, bound, batch, fake_data, stats);
      }
      {
        Tape t;
        BoundParams bound = bind_params(t, params);
        run_generator_losses(t, bound, batch, val_rng, nullptr, stats);
      }
      val_acc.mon_ade += stats.mon_ade;
      val_acc.mon_fde += stats.mon_fde;
      val_acc.gan_d += stats.gan_d;
      val_acc.gan_g += stats.gan_g;
      val_acc.ind += stats.ind;
      val_acc.lat += stats.lat;
      val_acc.emb += stats.emb;
      val_acc.total += stats.total;
      ++val_batches;
    }
    const EpochMetrics vm = log_row("val", val_acc, val_batches);
    if (vm.mon_ade < result.best_val_mon_ade) {
      result.best_val_mon_ade = vm.mon_ade;
      result.best_epoch = epoch;
      result.best_params = params;
    }
  }

  result.final_params = params;
  return result;
}

std::string metrics_to_csv(const std::vector<EpochMetrics>& log) {
  std::ostringstream out;
  out << "epoch,split,mon_ade,mon_fde,gan_d,gan_g,ind,lat,emb,total_g\n";
  for (const auto& m : log) {
    out << m.epoch << "," << m.split << "," << format_double(m.mon_ade) << ","
        << format_double(m.mon_fde) << "," << format_double(m.gan_d) << ","
        << format_double(m.gan_g) << "," << format_double(m.ind) << "," << format_double(m.lat)
        << "," << format_double(m.emb) << "," << format_double(m.total_g) << "\n";
  }
  return out.str();
}

}  // namespace trajdiv
