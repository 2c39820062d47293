#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "trajdiv/losses.hpp"

using namespace trajdiv;
using trajdiv::testing::check_gradients;
using trajdiv::testing::random_array;

namespace {

Trajectory offset_traj(const Trajectory& base, Vec2 offset) {
  std::vector<Vec2> pts;
  for (auto p : base.pts) pts.push_back(p + offset);
  return make_trajectory(base.dt, pts);
}

Trajectory zero_traj(std::size_t steps) {
  return make_trajectory(0.1, std::vector<Vec2>(steps, Vec2{0, 0}));
}

}  // namespace

TEST_CASE("mon_loss: examples") {
  const Trajectory truth = zero_traj(6);
  SUBCASE("a sample equal to truth attains zero") {
    CHECK(mon_loss({offset_traj(truth, {3, 1}), truth, offset_traj(truth, {-2, 5})}, truth) == 0.0);
  }
  SUBCASE("n=1 equals plain ade") {
    const Trajectory p = offset_traj(truth, {3, 4});
    CHECK(mon_loss({p}, truth) == doctest::Approx(ade(p, truth)));
  }
  SUBCASE("constructed ADEs {2.0, 0.7, 1.3} give 0.7") {
    const double val = mon_loss({offset_traj(truth, {2.0, 0}), offset_traj(truth, {0, 0.7}),
                                 offset_traj(truth, {1.3, 0})},
                                truth);
    CHECK(val == doctest::Approx(0.7));
  }
  SUBCASE("monotone non-increasing when samples are added") {
    Rng rng(3);
    std::vector<Trajectory> samples;
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 8; ++i) {
      samples.push_back(offset_traj(truth, {rng.uniform(-3, 3), rng.uniform(-3, 3)}));
      const double cur = mon_loss(samples, truth);
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
  }
}

TEST_CASE("gan_losses: analytic values") {
  const auto [d_half, g_half] = gan_losses_value(0.5, 0.5);
  CHECK(d_half == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(g_half == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Perfect discriminator: loss goes to zero.
  const auto [d_good, g_good] = gan_losses_value(1.0 - 1e-9, 1e-9);
  CHECK(d_good < 1e-8);
  CHECK(g_good > 10.0);
}

TEST_CASE("gan_losses: gradients match finite differences") {
  auto build_d = [](ad::Tape& t, const std::vector<ad::Var>& v) {
    return losses::gan_losses(t, v[0], v[1]).d_loss;
  };
  auto build_g = [](ad::Tape& t, const std::vector<ad::Var>& v) {
    return losses::gan_losses(t, v[0], v[1]).g_loss;
  };
  Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    std::vector<DenseArray> probs = {random_array(rng, 3, 1, 0.05, 0.95),
                                     random_array(rng, 3, 1, 0.05, 0.95)};
    CHECK(check_gradients(build_d, probs).max_rel_err < 1e-4);
    CHECK(check_gradients(build_g, probs).max_rel_err < 1e-4);
  }
}

TEST_CASE("ind_loss: examples") {
  SUBCASE("zero z_h annihilates") {
    CHECK(ind_loss_value(DenseArray({1, 2}), DenseArray({1, 3}, {1, 2, 3})) == 0.0);
  }
  SUBCASE("zero-sum z_l annihilates") {
    const DenseArray zh({1, 2}, {1, 1});
    const DenseArray zl({1, 4}, {2, -2, 1.5, -1.5});
    CHECK(ind_loss_value(zh, zl) == doctest::Approx(0.0));
  }
  SUBCASE("hand evaluation of the double sum") {
    // z_h=[1,2], z_l=[3] -> (sum_h * sum_l)^2 = (3*3)^2 = 81.
    CHECK(ind_loss_value(DenseArray({1, 2}, {1, 2}), DenseArray({1, 1}, {3})) ==
          doctest::Approx(81.0));
  }
  SUBCASE("batch mean") {
    const DenseArray zh({2, 2}, {1, 2, 0, 0});
    const DenseArray zl({2, 1}, {3, 5});
    CHECK(ind_loss_value(zh, zl) == doctest::Approx(81.0 / 2.0));
  }
}

TEST_CASE("lat_loss: examples") {
  SUBCASE("constructed whitened batch gives zero") {
    // Two points at +-1 per dimension: mean 0, covariance (1/B)*sum = I.
    const DenseArray zh({2, 2}, {1, 1, -1, -1});
    // Orthogonal sign patterns keep the off-diagonals zero.
    const DenseArray zl({2, 2}, {1, -1, -1, 1});
    CHECK(lat_loss_value(zh, zh) < 1e-9 + 4.0);  // zh alone is not whitened (off-diag = 1)
    // Build an exactly whitened pair of 2x2 batches.
    const DenseArray w1({2, 2}, {1, 1, -1, -1});
    const DenseArray w2({2, 2}, {1, -1, -1, 1});
    ad::Tape t;
    const double v = t.value(losses::lat_loss(t, t.constant(w2), t.constant(w2)))[0];
    // cov(w2) with 1/B: columns are (1,-1)/(-1,1): variance 1, covariance -1.
    CHECK(v == doctest::Approx(2.0 * (1.0 + 1.0)));
    (void)zl;
  }
  SUBCASE("identical samples: covariance zero, penalty d per block plus mean term") {
    // All rows equal to (a, b): Sigma = 0 -> ||-I||_F^2 = d; mu = (a,b).
    const double a = 0.3, b = -0.7;
    const DenseArray zh({3, 2}, {a, b, a, b, a, b});
    const DenseArray zl({3, 2}, {a, b, a, b, a, b});
    const double expect_block = 2.0 + (a * a + b * b);
    CHECK(lat_loss_value(zh, zl) == doctest::Approx(2.0 * expect_block));
  }
  SUBCASE("invariant under batch permutation") {
    Rng rng(9);
    const DenseArray zh = random_array(rng, 4, 2);
    const DenseArray zl = random_array(rng, 4, 3);
    DenseArray zh_p({4, 2}), zl_p({4, 3});
    const std::size_t perm[4] = {2, 0, 3, 1};
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 2; ++j) zh_p.at(i, j) = zh.at(perm[i], j);
      for (std::size_t j = 0; j < 3; ++j) zl_p.at(i, j) = zl.at(perm[i], j);
    }
    CHECK(lat_loss_value(zh, zl) == doctest::Approx(lat_loss_value(zh_p, zl_p)).epsilon(1e-12));
  }
  SUBCASE("single row is rejected") {
    CHECK_THROWS(lat_loss_value(DenseArray({1, 2}), DenseArray({1, 3})));
  }
}

TEST_CASE("emb_loss: examples") {
  SUBCASE("identical codings and identical latents give zero in both modes") {
    const DenseArray z({2, 2}, {0.5, 1.0, 0.5, 1.0});
    const std::vector<TernaryCoding> c = {coding_from_string("TFFFTF"),
                                          coding_from_string("TFFFTF")};
    CHECK(emb_loss_value(z, c, EmbMode::literal, 2.0) == 0.0);
    // Margin mode: attractive pairs at distance 0 contribute 0; no
    // repulsive pairs exist.
    CHECK(emb_loss_value(z, c, EmbMode::margin, 2.0) == 0.0);
  }
  SUBCASE("all-undefined pair contributes nothing regardless of distance") {
    const DenseArray z({2, 2}, {100.0, 0.0, -100.0, 0.0});
    const std::vector<TernaryCoding> c = {coding_from_string("UUUUUU"),
                                          coding_from_string("UUUUUU")};
    CHECK(emb_loss_value(z, c, EmbMode::literal, 2.0) == 0.0);
    CHECK(emb_loss_value(z, c, EmbMode::margin, 2.0) == 0.0);
  }
  SUBCASE("worked literal pair: (2*(+1) + 1*(-1)) * 3 = 3, exactly") {
    // Agree on 2 labels, disagree on 1, rest undefined; ||dz|| = 3.
    const DenseArray z({2, 2}, {0.0, 0.0, 3.0, 0.0});
    const std::vector<TernaryCoding> c = {coding_from_string("TTFUUU"),
                                          coding_from_string("TTTUUU")};
    CHECK(emb_loss_value(z, c, EmbMode::literal, 2.0) == 3.0);
  }
  SUBCASE("literal mode can be negative; margin mode cannot") {
    const DenseArray z({2, 2}, {0.0, 0.0, 5.0, 0.0});
    const std::vector<TernaryCoding> c = {coding_from_string("TUUUUU"),
                                          coding_from_string("FUUUUU")};
    CHECK(emb_loss_value(z, c, EmbMode::literal, 2.0) == -5.0);
    CHECK(emb_loss_value(z, c, EmbMode::margin, 2.0) == 0.0);  // beyond the margin
    const DenseArray close({2, 2}, {0.0, 0.0, 0.5, 0.0});
    CHECK(emb_loss_value(close, c, EmbMode::margin, 2.0) == doctest::Approx(1.5));
  }
  SUBCASE("margin mode normalizes by active pair-labels") {
    const DenseArray z({2, 2}, {0.0, 0.0, 1.0, 0.0});
    const std::vector<TernaryCoding> c = {coding_from_string("TTUUUU"),
                                          coding_from_string("TTUUUU")};
    // Two attractive labels at distance 1 -> (1+1)/2 = 1.
    CHECK(emb_loss_value(z, c, EmbMode::margin, 2.0) == doctest::Approx(1.0));
  }
  SUBCASE("gradients match finite differences in both modes") {
    Rng rng(13);
    const std::vector<TernaryCoding> c = {coding_from_string("TFUFTF"),
                                          coding_from_string("TTFUTF"),
                                          coding_from_string("FFUFTT")};
    for (EmbMode mode : {EmbMode::literal, EmbMode::margin}) {
      auto build = [&](ad::Tape& t, const std::vector<ad::Var>& v) {
        return losses::emb_loss(t, v[0], c, mode, 2.0);
      };
      CHECK(check_gradients(build, {random_array(rng, 3, 2)}).max_rel_err < 1e-4);
    }
  }
}

TEST_CASE("total generator loss: lambda weighting") {
  const LossWeights w;
  CHECK(total_g_value(w, 1, 1, 1, 1, 1) == doctest::Approx(4 + 1 + 100 + 2 + 50));
  const LossWeights zero{0, 0, 0, 0, 0};
  CHECK(total_g_value(zero, 3, 5, 7, 9, 11) == 0.0);

  SUBCASE("linear in lambda: superposition on fixed components") {
    Rng rng(7);
    const double comps[5] = {rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2),
                             rng.uniform(0, 2), rng.uniform(0, 2)};
    LossWeights a{1.0, 0.5, 2.0, 0.25, 3.0};
    LossWeights b{0.5, 1.5, 0.0, 1.0, 2.0};
    LossWeights ab{a.l1 + b.l1, a.l2 + b.l2, a.l3 + b.l3, a.l4 + b.l4, a.l5 + b.l5};
    const double va = total_g_value(a, comps[0], comps[1], comps[2], comps[3], comps[4]);
    const double vb = total_g_value(b, comps[0], comps[1], comps[2], comps[3], comps[4]);
    const double vab = total_g_value(ab, comps[0], comps[1], comps[2], comps[3], comps[4]);
    CHECK(vab == doctest::Approx(va + vb).epsilon(1e-12));
  }
}

TEST_CASE("loss components are non-negative except literal emb") {
  Rng rng(23);
  for (int i = 0; i < 10; ++i) {
    const DenseArray zh = random_array(rng, 4, 2, -2, 2);
    const DenseArray zl = random_array(rng, 4, 5, -2, 2);
    CHECK(ind_loss_value(zh, zl) >= 0.0);
    CHECK(lat_loss_value(zh, zl) >= 0.0);
    std::vector<TernaryCoding> c;
    for (int m = 0; m < 4; ++m) {
      TernaryCoding tc;
      for (int l = 0; l < 6; ++l) {
        const double u = rng.uniform();
        tc.bits[static_cast<std::size_t>(l)] =
            u < 0.33 ? Ternary::False : (u < 0.66 ? Ternary::True : Ternary::Undefined);
      }
      c.push_back(tc);
    }
    CHECK(emb_loss_value(zh, c, EmbMode::margin, 2.0) >= 0.0);
  }
}

TEST_CASE("mon and ade tape paths match finite differences") {
  Rng rng(29);
  const std::size_t scenes = 2, samples = 3, steps = 4;
  std::vector<DenseArray> truth;
  for (std::size_t k = 0; k < steps; ++k) truth.push_back(random_array(rng, scenes * samples, 2));

  auto build = [&](ad::Tape& t, const std::vector<ad::Var>& v) {
    std::vector<ad::Var> preds(v.begin(), v.end());
    ad::Var col = losses::ade_column(t, preds, truth);
    return losses::min_over_samples(t, col, scenes, samples);
  };
  std::vector<DenseArray> preds;
  for (std::size_t k = 0; k < steps; ++k) preds.push_back(random_array(rng, scenes * samples, 2));
  CHECK(check_gradients(build, preds).max_rel_err < 1e-4);
}

TEST_CASE("training: zero epochs returns initial params and empty log") {
  ModelConfig mcfg;
  mcfg.traj_w1 = 4;
  mcfg.traj_w2 = 4;
  mcfg.map_widths = {4, 4, 4, 4};
  mcfg.hidden = 6;
  mcfg.noise_dim = 2;
  mcfg.d_h = 2;
  mcfg.d_l = 10;
  mcfg.t_obs = 4;
  mcfg.t_pred = 4;
  DatasetConfig dcfg;
  dcfg.t_obs = 4;
  dcfg.t_pred = 4;
  dcfg.seed = 3;
  const auto scenes = generate_dataset(dcfg, 12);
  TrainConfig tcfg;
  tcfg.epochs = 0;
  tcfg.batch = 4;
  tcfg.mon_n = 2;
  const TrainResult res = train(scenes, mcfg, tcfg);
  CHECK(res.log.empty());
  const ParamStore init = init_params(mcfg);
  for (const auto& [name, arr] : init) {
    const DenseArray& got = res.best_params.at(name);
    for (std::size_t i = 0; i < arr.numel(); ++i) CHECK(got[i] == arr[i]);
  }
}

TEST_CASE("training: fixed seed reproduces the metrics log bit-exactly") {
  ModelConfig mcfg;
  mcfg.traj_w1 = 4;
  mcfg.traj_w2 = 4;
  mcfg.map_widths = {4, 4, 4, 4};
  mcfg.hidden = 6;
  mcfg.noise_dim = 2;
  mcfg.d_h = 2;
  mcfg.d_l = 10;
  mcfg.t_obs = 4;
  mcfg.t_pred = 4;
  DatasetConfig dcfg;
  dcfg.t_obs = 4;
  dcfg.t_pred = 4;
  dcfg.seed = 5;
  const auto scenes = generate_dataset(dcfg, 16);
  TrainConfig tcfg;
  tcfg.epochs = 2;
  tcfg.batch = 4;
  tcfg.mon_n = 2;
  tcfg.seed = 77;
  const TrainResult a = train(scenes, mcfg, tcfg);
  const TrainResult b = train(scenes, mcfg, tcfg);
  CHECK(metrics_to_csv(a.log) == metrics_to_csv(b.log));
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(!a.log.empty());
}
