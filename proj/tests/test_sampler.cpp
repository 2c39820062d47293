#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "trajdiv/sampler.hpp"

using namespace trajdiv;
using trajdiv::testing::random_array;

namespace {

DenseArray points_1d(std::initializer_list<double> xs) {
  DenseArray p({xs.size(), 1});
  std::size_t i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

// Exhaustive k-center oracle: best covering radius over all C(n, k) subsets.
double brute_force_radius(const DenseArray& pts, std::size_t k) {
  const std::size_t n = pts.rows();
  const std::size_t d = pts.cols();
  std::vector<std::size_t> pick(k);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == k) {
      double radius = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t j : pick) {
          double d2 = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            const double diff = pts.at(i, c) - pts.at(j, c);
            d2 += diff * diff;
          }
          nearest = std::min(nearest, d2);
        }
        radius = std::max(radius, nearest);
      }
      best = std::min(best, std::sqrt(radius));
      return;
    }
    for (std::size_t i = start; i + (k - depth) <= n; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

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

Scene tiny_scene(std::uint64_t id = 0, std::uint64_t seed = 3) {
  DatasetConfig dcfg;
  dcfg.t_obs = 4;
  dcfg.t_pred = 5;
  dcfg.seed = seed;
  return generate_scene(dcfg, id);
}

}  // namespace

TEST_CASE("fps: selecting every point gives zero covering radius") {
  Rng rng(3);
  const DenseArray pts = random_array(rng, 7, 2);
  const FpsResult r = fps(pts, 7);
  CHECK(r.covering_radius == 0.0);
  std::set<std::size_t> sel(r.selected.begin(), r.selected.end());
  CHECK(sel.size() == 7);
}

TEST_CASE("fps: hand-traced greedy max-min on a line") {
  // Points {0, 1, 10}: centroid 11/3, start = point 1; farthest = 10;
  // covering radius = distance from 0 to its representative 1.
  const FpsResult r = fps(points_1d({0.0, 1.0, 10.0}), 2);
  REQUIRE(r.selected.size() == 2);
  CHECK(r.selected[0] == 1);
  CHECK(r.selected[1] == 2);
  CHECK(r.covering_radius == doctest::Approx(1.0));
  CHECK(r.assignment[0] == 0);  // nearest representative of point 0 is selected[0]=point 1
  CHECK(r.assignment[1] == 0);
  CHECK(r.assignment[2] == 1);
}

TEST_CASE("fps: 2-approximation against the brute-force k-center oracle") {
  Rng rng(41);
  for (int inst = 0; inst < 50; ++inst) {
    const DenseArray pts = random_array(rng, 12, 2, -5, 5);
    const FpsResult r = fps(pts, 3);
    const double opt = brute_force_radius(pts, 3);
    CHECK(r.covering_radius <= 2.0 * opt + 1e-12);
  }
}

TEST_CASE("fps: selected point set is permutation invariant") {
  Rng rng(43);
  for (int inst = 0; inst < 10; ++inst) {
    const DenseArray pts = random_array(rng, 15, 2);
    const FpsResult base = fps(pts, 4);
    std::vector<std::size_t> perm(15);
    for (std::size_t i = 0; i < 15; ++i) perm[i] = i;
    for (std::size_t i = 15; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_u64(i)]);
    DenseArray shuffled({15, 2});
    for (std::size_t i = 0; i < 15; ++i) {
      shuffled.at(i, 0) = pts.at(perm[i], 0);
      shuffled.at(i, 1) = pts.at(perm[i], 1);
    }
    const FpsResult moved = fps(shuffled, 4);
    auto key = [](const DenseArray& p, const std::vector<std::size_t>& sel) {
      std::vector<std::pair<double, double>> pts_sel;
      for (auto i : sel) pts_sel.emplace_back(p.at(i, 0), p.at(i, 1));
      std::sort(pts_sel.begin(), pts_sel.end());
      return pts_sel;
    };
    CHECK(key(pts, base.selected) == key(shuffled, moved.selected));
    CHECK(base.covering_radius == doctest::Approx(moved.covering_radius).epsilon(1e-12));
  }
}

TEST_CASE("fps: min pairwise distance of the selected set is non-increasing in N") {
  Rng rng(47);
  const DenseArray pts = random_array(rng, 20, 2);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n = 2; n <= 10; ++n) {
    const FpsResult r = fps(pts, n);
    double min_pair = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const double dx = pts.at(r.selected[a], 0) - pts.at(r.selected[b], 0);
        const double dy = pts.at(r.selected[a], 1) - pts.at(r.selected[b], 1);
        min_pair = std::min(min_pair, std::hypot(dx, dy));
      }
    }
    CHECK(min_pair <= prev + 1e-12);
    prev = min_pair;
  }
}

TEST_CASE("fps: parallel kernel equals the serial reference bit-exactly") {
  Rng rng(53);
  const DenseArray pts = random_array(rng, 500, 2);
  const FpsResult serial = fps_serial(pts, 16);
  const FpsResult parallel = fps(pts, 16, 4);
  CHECK(serial.selected == parallel.selected);
  CHECK(serial.assignment == parallel.assignment);
  CHECK(serial.covering_radius == parallel.covering_radius);
}

TEST_CASE("fps: count out of range raises") {
  Rng rng(59);
  const DenseArray pts = random_array(rng, 5, 2);
  CHECK_THROWS(fps(pts, 6));
  CHECK_THROWS(fps(pts, 0));
}

TEST_CASE("voronoi weights: examples and partition property") {
  SUBCASE("single representative takes everything") {
    Rng rng(61);
    const FpsResult r = fps(random_array(rng, 9, 2), 1);
    const auto w = voronoi_weights(r);
    REQUIRE(w.size() == 1);
    CHECK(w[0] == 1.0);
  }
  SUBCASE("counts 150/30/20 of 200 give 0.75/0.15/0.10") {
    FpsResult r;
    r.selected = {0, 1, 2};
    r.assignment.assign(150, 0);
    r.assignment.insert(r.assignment.end(), 30, 1);
    r.assignment.insert(r.assignment.end(), 20, 2);
    const auto w = voronoi_weights(r);
    CHECK(w[0] == doctest::Approx(0.75));
    CHECK(w[1] == doctest::Approx(0.15));
    CHECK(w[2] == doctest::Approx(0.10));
  }
  SUBCASE("weights always sum to 1") {
    Rng rng(67);
    for (int inst = 0; inst < 20; ++inst) {
      const FpsResult r = fps(random_array(rng, 30, 2), 1 + rng.uniform_u64(10));
      const auto w = voronoi_weights(r);
      double total = 0.0;
      for (double x : w) {
        CHECK(x > 0.0);
        total += x;
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("voronoi weights match an independent nearest-representative recount") {
  Rng rng(71);
  for (int inst = 0; inst < 30; ++inst) {
    const DenseArray pts = random_array(rng, 40, 2);
    const std::size_t n = 2 + rng.uniform_u64(6);
    const FpsResult r = fps(pts, n);
    const auto w = voronoi_weights(r);
    std::vector<double> recount(n, 0.0);
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      std::size_t best = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        const double dx = pts.at(i, 0) - pts.at(r.selected[j], 0);
        const double dy = pts.at(i, 1) - pts.at(r.selected[j], 1);
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {  // ties toward the earlier selection, as in fps
          best_d2 = d2;
          best = j;
        }
      }
      recount[best] += 1.0 / static_cast<double>(pts.rows());
    }
    for (std::size_t j = 0; j < n; ++j) CHECK(w[j] == doctest::Approx(recount[j]).epsilon(1e-12));
  }
}

TEST_CASE("semantic_sample: single draw, weight one, determinism") {
  const ModelConfig cfg = tiny_model();
  const ParamStore params = init_params(cfg);
  const Scene scene = tiny_scene();

  const WeightedPredictionSet one = semantic_sample(scene, params, cfg, 1, 1, 5);
  REQUIRE(one.entries.size() == 1);
  CHECK(one.entries[0].weight == 1.0);

  const WeightedPredictionSet a = semantic_sample(scene, params, cfg, 40, 5, 5);
  const WeightedPredictionSet b = semantic_sample(scene, params, cfg, 40, 5, 5);
  REQUIRE(a.entries.size() == 5);
  double total = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    total += a.entries[j].weight;
    for (std::size_t k = 0; k < a.entries[j].traj.size(); ++k) {
      CHECK(a.entries[j].traj.pts[k].x == b.entries[j].traj.pts[k].x);
    }
  }
  CHECK(std::abs(total - 1.0) < 1e-9);
  CHECK_THROWS(semantic_sample(scene, params, cfg, 4, 5, 5));
}

TEST_CASE("direct_sample: uniform weights and determinism") {
  const ModelConfig cfg = tiny_model();
  const ParamStore params = init_params(cfg);
  const Scene scene = tiny_scene(1);
  const WeightedPredictionSet a = direct_sample(scene, params, cfg, 5, 9);
  const WeightedPredictionSet b = direct_sample(scene, params, cfg, 5, 9);
  REQUIRE(a.entries.size() == 5);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(a.entries[j].weight == doctest::Approx(0.2));
    CHECK(a.entries[j].traj.pts.back().x == b.entries[j].traj.pts.back().x);
  }
}

TEST_CASE("weighted representative mean approximates the full-sample z_h mean") {
  const ModelConfig cfg = tiny_model();
  const ParamStore params = init_params(cfg);
  const Scene scene = tiny_scene(2);
  const EncodedScene enc = encode_scene(scene, params, cfg);
  Rng rng(13);
  const DenseArray latents = draw_latents(enc, params, cfg, 200, rng);

  DenseArray zh({200, cfg.d_h});
  for (std::size_t i = 0; i < 200; ++i) {
    for (std::size_t j = 0; j < cfg.d_h; ++j) zh.at(i, j) = latents.at(i, j);
  }
  const FpsResult r = fps(zh, 8);
  const auto w = voronoi_weights(r);

  double full_mean[2] = {0, 0}, weighted[2] = {0, 0};
  for (std::size_t i = 0; i < 200; ++i) {
    full_mean[0] += zh.at(i, 0) / 200.0;
    full_mean[1] += zh.at(i, 1) / 200.0;
  }
  for (std::size_t j = 0; j < 8; ++j) {
    weighted[0] += w[j] * zh.at(r.selected[j], 0);
    weighted[1] += w[j] * zh.at(r.selected[j], 1);
  }
  // Each point's representative is within the covering radius, so the
  // weighted mean cannot drift farther than that.
  const double err = std::hypot(weighted[0] - full_mean[0], weighted[1] - full_mean[1]);
  CHECK(err <= r.covering_radius + 1e-12);
}

TEST_CASE("prediction csv serialization") {
  const ModelConfig cfg = tiny_model();
  const ParamStore params = init_params(cfg);
  const Scene scene = tiny_scene(3);
  const auto set = semantic_sample(scene, params, cfg, 20, 3, 7);
  const std::string csv = predictions_to_csv({{scene.id, set}});
  CHECK(csv.rfind("scene_id,sample_j,weight,step,x,y\n", 0) == 0);
  std::size_t rows = 0;
  for (char c : csv) rows += c == '\n' ? 1 : 0;
  CHECK(rows == 1 + 3 * cfg.t_pred);
  const std::string lat = latents_to_csv({{scene.id, set}}, cfg.d_h);
  CHECK(lat.rfind("scene_id,sample_j,zH_1,zH_2\n", 0) == 0);
}
