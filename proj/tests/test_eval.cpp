#include <doctest.h>

#include <cmath>
#include <set>

#include "trajdiv/eval.hpp"
#include "trajdiv/losses.hpp"

using namespace trajdiv;

namespace {

ModelConfig tiny_model() {
  ModelConfig cfg;
  cfg.traj_w1 = 4;
  cfg.traj_w2 = 4;
  cfg.map_widths = {4, 4, 4, 4};
  cfg.hidden = 6;
  cfg.noise_dim = 2;
  cfg.d_h = 2;
  cfg.d_l = 10;
  cfg.t_obs = 4;
  cfg.t_pred = 5;
  return cfg;
}

std::vector<Scene> tiny_dataset(std::size_t n, std::uint64_t seed) {
  DatasetConfig dcfg;
  dcfg.t_obs = 4;
  dcfg.t_pred = 5;
  dcfg.sigma = 0.05;
  dcfg.seed = seed;
  return generate_dataset(dcfg, n);
}

WeightedPredictionSet set_of(std::vector<Trajectory> trajs) {
  WeightedPredictionSet s;
  const double w = 1.0 / static_cast<double>(trajs.size());
  for (auto& t : trajs) s.entries.push_back({std::move(t), {}, w});
  s.n_all = s.entries.size();
  return s;
}

Trajectory offset_traj(const Trajectory& base, Vec2 offset) {
  std::vector<Vec2> pts;
  for (auto p : base.pts) pts.push_back(p + offset);
  return make_trajectory(base.dt, pts);
}

}  // namespace

TEST_CASE("mon_eval: independent minima") {
  const Trajectory truth = make_trajectory(0.1, std::vector<Vec2>(5, Vec2{0, 0}));
  SUBCASE("set containing the truth attains zero in both metrics") {
    auto s = set_of({offset_traj(truth, {2, 0}), truth});
    const auto [a, f] = mon_eval(s, truth);
    CHECK(a == 0.0);
    CHECK(f == 0.0);
  }
  SUBCASE("singleton returns its own errors") {
    auto s = set_of({offset_traj(truth, {3, 4})});
    const auto [a, f] = mon_eval(s, truth);
    CHECK(a == doctest::Approx(5.0));
    CHECK(f == doctest::Approx(5.0));
  }
  SUBCASE("ADE and FDE minima can come from different samples") {
    // Sample 1: uniform offset 1.0 (ADE 1.0, FDE 1.0).
    // Sample 2: large early error, tiny final error (ADE > 1, FDE 0.1).
    std::vector<Vec2> crossing(5, Vec2{4.0, 0.0});
    crossing[4] = {0.1, 0.0};
    auto s = set_of({offset_traj(truth, {1.0, 0.0}), make_trajectory(0.1, crossing)});
    const auto [a, f] = mon_eval(s, truth);
    CHECK(a == doctest::Approx(1.0));
    CHECK(f == doctest::Approx(0.1));
  }
  SUBCASE("monotone non-increasing in the sample set") {
    auto s1 = set_of({offset_traj(truth, {2, 2})});
    auto s2 = set_of({offset_traj(truth, {2, 2}), offset_traj(truth, {1, 0})});
    CHECK(mon_eval(s2, truth).first <= mon_eval(s1, truth).first);
  }
}

TEST_CASE("coverage_count: identical and distinct codings") {
  const auto lanes = std::vector<Polyline>{make_polyline({{-50, 0}, {50, 0}})};
  auto straight = [&](double v) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({v * 0.1 * i, 0.0});
    return make_trajectory(0.1, pts);
  };
  SUBCASE("identical trajectories count one") {
    auto s = set_of({straight(10), straight(10), straight(10)});
    CHECK(coverage_count(s, lanes) == 1);
  }
  SUBCASE("distinct maneuvers count separately") {
    // Straight vs strong accelerating run: different codings.
    std::vector<Vec2> accel;
    for (int i = 0; i < 12; ++i) {
      const double tau = 0.1 * i;
      accel.push_back({10 * tau + 0.5 * 4.0 * tau * tau, 0.0});
    }
    auto s = set_of({straight(10), make_trajectory(0.1, accel)});
    CHECK(coverage_count(s, lanes) == 2);
  }
}

TEST_CASE("histogram entropy: analytic values") {
  SUBCASE("single coding: zero entropy, full majority") {
    const NeighborhoodStats st = histogram_entropy({7, 7, 7, 7});
    CHECK(st.entropy == 0.0);
    CHECK(st.majority_frac == 1.0);
  }
  SUBCASE("two codings 50/50: ln 2, majority one half") {
    const NeighborhoodStats st = histogram_entropy({1, 2, 1, 2});
    CHECK(st.entropy == doctest::Approx(std::log(2.0)));
    CHECK(st.majority_frac == doctest::Approx(0.5));
  }
  SUBCASE("uniform over four codings: ln 4") {
    const NeighborhoodStats st = histogram_entropy({1, 2, 3, 4, 1, 2, 3, 4});
    CHECK(st.entropy == doctest::Approx(std::log(4.0)));
    CHECK(st.majority_frac == doctest::Approx(0.25));
  }
  SUBCASE("entropy bounded by log of distinct codings; zero iff majority 100%") {
    Rng rng(3);
    for (int inst = 0; inst < 50; ++inst) {
      std::vector<int> keys;
      const std::size_t distinct = 1 + rng.uniform_u64(5);
      for (int i = 0; i < 30; ++i) keys.push_back(static_cast<int>(rng.uniform_u64(distinct)));
      const NeighborhoodStats st = histogram_entropy(keys);
      std::set<int> uniq(keys.begin(), keys.end());
      CHECK(st.entropy >= 0.0);
      CHECK(st.entropy <= std::log(static_cast<double>(uniq.size())) + 1e-12);
      CHECK((st.entropy == 0.0) == (st.majority_frac == 1.0));
    }
  }
}

TEST_CASE("knn_entropy: bounds and determinism") {
  const ModelConfig cfg = tiny_model();
  const ParamStore params = init_params(cfg);
  const auto scenes = tiny_dataset(3, 19);
  const KnnEntropyResult a = knn_entropy(params, cfg, scenes[0], 60, 5, 8, 3);
  const KnnEntropyResult b = knn_entropy(params, cfg, scenes[0], 60, 5, 8, 3);
  CHECK(a.mean_entropy == b.mean_entropy);
  CHECK(a.majority_pct == b.majority_pct);
  CHECK(a.mean_entropy >= 0.0);
  CHECK(a.majority_pct >= 100.0 / 8.0);
  CHECK(a.majority_pct <= 100.0);
  CHECK_THROWS(knn_entropy(params, cfg, scenes[0], 10, 5, 10, 3));  // k >= S
  CHECK_THROWS(knn_entropy(params, cfg, scenes[0], 10, 11, 2, 3));  // S' > S
}

TEST_CASE("run_experiment: reproducible, worker-invariant, matched draws") {
  const ModelConfig cfg = tiny_model();
  const ParamStore params = init_params(cfg);
  const auto scenes = tiny_dataset(12, 23);

  ProtocolConfig pcfg;
  pcfg.n_min = 1;
  pcfg.n_max = 4;
  pcfg.n_all = 16;
  pcfg.rare_only = false;
  pcfg.knn_scenes = 2;
  pcfg.knn_s = 40;
  pcfg.knn_sprime = 4;
  pcfg.knn_k = 6;
  pcfg.seed = 5;

  const EvalReport a = run_experiment(scenes, params, cfg, pcfg);
  const EvalReport b = run_experiment(scenes, params, cfg, pcfg);
  ProtocolConfig pw = pcfg;
  pw.workers = 4;
  const EvalReport c = run_experiment(scenes, params, cfg, pw);

  REQUIRE(a.n_values.size() == 4);
  for (std::size_t ni = 0; ni < a.n_values.size(); ++ni) {
    for (std::size_t arm = 0; arm < 2; ++arm) {
      CHECK(a.mon_ade[ni][arm] == b.mon_ade[ni][arm]);
      CHECK(a.mon_ade[ni][arm] == c.mon_ade[ni][arm]);  // bit-identical across workers
      CHECK(a.mean_distinct[ni][arm] == c.mean_distinct[ni][arm]);
      CHECK(a.mon_ade[ni][arm] >= 0.0);
      CHECK(a.mean_distinct[ni][arm] >= 1.0);
    }
  }
  CHECK(a.knn.mean_entropy == c.knn.mean_entropy);
  CHECK(a.scene_count == 12);
}

TEST_CASE("run_experiment: degenerate N=1 with n_all=1 makes the arms coincide") {
  const ModelConfig cfg = tiny_model();
  const ParamStore params = init_params(cfg);
  const auto scenes = tiny_dataset(6, 29);
  ProtocolConfig pcfg;
  pcfg.n_min = 1;
  pcfg.n_max = 1;
  pcfg.n_all = 1;
  pcfg.rare_only = false;
  pcfg.knn_scenes = 0;
  pcfg.seed = 7;
  const EvalReport r = run_experiment(scenes, params, cfg, pcfg);
  CHECK(r.mon_ade[0][0] == r.mon_ade[0][1]);
  CHECK(r.mon_fde[0][0] == r.mon_fde[0][1]);
}

TEST_CASE("run_experiment: rare filter") {
  const ModelConfig cfg = tiny_model();
  const ParamStore params = init_params(cfg);
  DatasetConfig dcfg;
  dcfg.t_obs = 4;
  dcfg.t_pred = 5;
  dcfg.sigma = 0.0;
  dcfg.seed = 31;
  dcfg.mixture = {0.5, 0.5, 0, 0, 0, 0};
  const auto scenes = generate_dataset(dcfg, 30);
  ProtocolConfig pcfg;
  pcfg.n_max = 2;
  pcfg.n_all = 8;
  pcfg.knn_scenes = 0;
  pcfg.seed = 3;
  pcfg.rare_only = true;
  const EvalReport r = run_experiment(scenes, params, cfg, pcfg);
  std::size_t rare = 0;
  for (const auto& s : scenes) rare += s.coding == straight_coding() ? 0 : 1;
  CHECK(r.scene_count == rare);
  CHECK(r.scene_count < scenes.size());
}

TEST_CASE("figure csv emitters") {
  EvalReport r;
  r.n_values = {1, 2};
  r.mon_ade = {{0.5, 0.6}, {0.4, 0.55}};
  r.mon_fde = {{1.0, 1.1}, {0.9, 1.0}};
  r.mean_distinct = {{1.0, 1.0}, {1.5, 1.2}};
  const std::string a = figure3a_csv(r);
  CHECK(a.rfind("N,arm,mon_ade\n", 0) == 0);
  CHECK(a.find("1,fps,0.5") != std::string::npos);
  CHECK(a.find("2,direct,0.55") != std::string::npos);
  const std::string b = figure3b_csv(r);
  CHECK(b.rfind("N,arm,mean_distinct_codings\n", 0) == 0);
  CHECK(b.find("2,fps,1.5") != std::string::npos);
  const std::string j = report_to_json(r);
  CHECK(j.find("\"mon_ade\"") != std::string::npos);
}

TEST_CASE("comparison table covers all five models on both subsets") {
  const ModelConfig cfg = tiny_model();
  const ParamStore params = init_params(cfg);
  const auto scenes = tiny_dataset(10, 37);
  KfConfig cv;
  KfConfig ca;
  ca.model = MotionModel::ca;
  const auto rows = comparison_table(scenes, params, cfg, cv, ca, 3, 8, 11);
  CHECK(rows.size() == 10);
  std::set<std::string> models;
  for (const auto& r : rows) {
    models.insert(r.model);
    CHECK((r.subset == "all" || r.subset == "rare"));
    if (r.scenes > 0) CHECK(r.mon_ade >= 0.0);
  }
  CHECK(models == std::set<std::string>{"kf_cv", "kf_ca", "deterministic", "direct", "fps"});
  // Worker invariance.
  const auto rows4 = comparison_table(scenes, params, cfg, cv, ca, 3, 8, 11, 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].mon_ade == rows4[i].mon_ade);
  }
  const std::string csv = comparison_to_csv(rows);
  CHECK(csv.rfind("model,subset,scenes,mon_ade,mon_fde\n", 0) == 0);
}
