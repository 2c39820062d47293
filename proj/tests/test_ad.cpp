#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "trajdiv/array.hpp"
#include "trajdiv/lstm.hpp"
#include "trajdiv/optim.hpp"
#include "trajdiv/tape.hpp"

using namespace trajdiv;
using trajdiv::testing::check_gradients;
using trajdiv::testing::random_array;

TEST_CASE("DenseArray invariants") {
  CHECK_THROWS(DenseArray({2, 2}, {1.0, 2.0, 3.0}));  // wrong length
  CHECK_THROWS(DenseArray({2}, {1.0, std::nan("")}));
  CHECK_THROWS(DenseArray({2}, {1.0, std::numeric_limits<double>::infinity()}));
  CHECK_THROWS(DenseArray(std::vector<std::size_t>{0}));
  const DenseArray a({2, 3});
  CHECK(a.numel() == 6);
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
}

TEST_CASE("forward op examples") {
  ad::Tape t;
  auto a = t.leaf(DenseArray({2}, {1.0, 2.0}));
  auto b = t.leaf(DenseArray({2}, {3.0, 4.0}));
  auto sum = t.add(a, b);
  CHECK(t.value(sum)[0] == 4.0);
  CHECK(t.value(sum)[1] == 6.0);

  auto eye = t.leaf(DenseArray({2, 2}, {1.0, 0.0, 0.0, 1.0}));
  auto m = t.leaf(DenseArray({2, 2}, {5.0, 6.0, 7.0, 8.0}));
  auto prod = t.matmul(eye, m);
  for (std::size_t i = 0; i < 4; ++i) CHECK(t.value(prod)[i] == t.value(m)[i]);

  auto zero = t.leaf(DenseArray::scalar(0.0));
  CHECK(t.value(t.sigmoid(zero))[0] == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_WITH_AS(t.add(a, m), doctest::Contains("(2)"), std::invalid_argument);
  CHECK_THROWS(t.matmul(m, t.leaf(DenseArray({3, 2}))));
}

TEST_CASE("scalar broadcast only") {
  ad::Tape t;
  auto a = t.leaf(DenseArray({2, 2}, {1, 2, 3, 4}));
  auto s = t.leaf(DenseArray::scalar(10.0));
  CHECK(t.value(t.add(a, s))[3] == 14.0);
  CHECK(t.value(t.mul(s, a))[0] == 10.0);
  auto row = t.leaf(DenseArray({1, 2}, {1, 1}));
  CHECK_THROWS(t.add(a, row));  // row broadcast is a separate op
}

TEST_CASE("backward analytic examples") {
  ad::Tape t;
  auto x = t.leaf(DenseArray({3}, {1.0, 2.0, 3.0}));
  auto root = t.sum(t.mul(x, x));
  t.backward(root);
  CHECK(t.grad(x)[0] == doctest::Approx(2.0));
  CHECK(t.grad(x)[1] == doctest::Approx(4.0));
  CHECK(t.grad(x)[2] == doctest::Approx(6.0));

  ad::Tape t2;
  auto y = t2.leaf(DenseArray({4}, {1.0, -1.0, 2.0, 0.5}));
  auto m = t2.mean(y);
  t2.backward(m);
  for (int i = 0; i < 4; ++i) CHECK(t2.grad(y)[static_cast<std::size_t>(i)] == doctest::Approx(0.25));
}

TEST_CASE("backward requires scalar root") {
  ad::Tape t;
  auto x = t.leaf(DenseArray({2}, {1.0, 2.0}));
  CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
}

TEST_CASE("shared subexpression accumulates like the expanded tree") {
  // root = sum(x*x + x*x) built two ways.
  const DenseArray x0({3}, {0.5, -1.5, 2.0});
  ad::Tape t1;
  auto x1 = t1.leaf(x0);
  auto sq1 = t1.mul(x1, x1);
  auto root1 = t1.sum(t1.add(sq1, sq1));  // shared node
  t1.backward(root1);

  ad::Tape t2;
  auto x2 = t2.leaf(x0);
  auto root2 = t2.sum(t2.add(t2.mul(x2, x2), t2.mul(x2, x2)));  // expanded
  t2.backward(root2);

  for (std::size_t i = 0; i < 3; ++i) CHECK(t1.grad(x1)[i] == doctest::Approx(t2.grad(x2)[i]));
}

TEST_CASE("every registered op matches finite differences on random values") {
  Rng rng(20240807);
  double worst = 0.0;
  std::size_t instances = 0;

  auto run = [&](const trajdiv::testing::GraphBuilder& build, std::vector<DenseArray> inputs) {
    const auto rep = check_gradients(build, std::move(inputs));
    worst = std::max(worst, rep.max_rel_err);
    ++instances;
  };

  for (int iter = 0; iter < 7; ++iter) {
    const std::size_t m = 1 + rng.uniform_u64(3);
    const std::size_t n = 1 + rng.uniform_u64(3);
    const std::size_t k = 1 + rng.uniform_u64(3);

    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.add(v[0], v[1])); },
        {random_array(rng, m, n), random_array(rng, m, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.sub(v[0], v[1])); },
        {random_array(rng, m, n), random_array(rng, m, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.mul(v[0], v[1])); },
        {random_array(rng, m, n), random_array(rng, m, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.matmul(v[0], v[1])); },
        {random_array(rng, m, k), random_array(rng, k, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.mean(t.square(v[0])); },
        {random_array(rng, m, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.sqrt(v[0])); },
        {random_array(rng, m, n, 0.1, 2.0)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.rsqrt(v[0])); },
        {random_array(rng, m, n, 0.3, 2.0)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.exp(v[0])); },
        {random_array(rng, m, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.log(v[0])); },
        {random_array(rng, m, n, 0.2, 3.0)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.tanh(v[0])); },
        {random_array(rng, m, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.sigmoid(v[0])); },
        {random_array(rng, m, n)});
    // Kinked ops: keep values away from the kink so the FD stencil is valid.
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.relu(v[0])); },
        {random_array(rng, m, n, 0.2, 1.0)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.relu(v[0])); },
        {random_array(rng, m, n, -1.0, -0.2)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.leaky_relu(v[0], 0.17)); },
        {random_array(rng, m, n, 0.2, 1.0)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.leaky_relu(v[0], 0.17)); },
        {random_array(rng, m, n, -1.0, -0.2)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.clamp_min(v[0], 0.0)); },
        {random_array(rng, m, n, 0.2, 1.2)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.concat_cols({v[0], v[1]}));
        },
        {random_array(rng, m, n), random_array(rng, m, k)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.square(t.concat_rows({v[0], v[1]})));
        },
        {random_array(rng, m, n), random_array(rng, k, n)});
    run([n](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.square(t.slice_cols(v[0], 0, n)));
        },
        {random_array(rng, m, n + 1)});
    run([m](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.square(t.slice_rows(v[0], 1, m)));
        },
        {random_array(rng, m + 1, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.square(t.transpose(v[0])));
        },
        {random_array(rng, m, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(t.sum_cols(v[0])); },
        {random_array(rng, m, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.square(t.sum_rows(v[0])));
        },
        {random_array(rng, m, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.square(t.add_rowvec(v[0], v[1])));
        },
        {random_array(rng, m, n), random_array(rng, 1, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.square(t.mul_rowvec(v[0], v[1])));
        },
        {random_array(rng, m, n), random_array(rng, 1, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.square(t.add_colvec(v[0], v[1])));
        },
        {random_array(rng, m, n), random_array(rng, m, 1)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.square(t.mul_colvec(v[0], v[1])));
        },
        {random_array(rng, m, n), random_array(rng, m, 1)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.layer_norm(v[0], v[1], v[2]));
        },
        {random_array(rng, m, 4), random_array(rng, 1, 4), random_array(rng, 1, 4)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) { return t.mean(t.scale(v[0], -2.5)); },
        {random_array(rng, m, n)});
    run([](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.sum(t.square(t.add_scalar(v[0], 1.3)));
        },
        {random_array(rng, m, n)});
  }

  CHECK(instances >= 100);
  CHECK(worst < 1e-4);
}

TEST_CASE("ops are deterministic across repeated evaluation") {
  auto run_once = [] {
    Rng rng(99);
    ad::Tape t;
    auto a = t.leaf(random_array(rng, 4, 4));
    auto b = t.leaf(random_array(rng, 4, 4));
    auto root = t.sum(t.tanh(t.matmul(a, b)));
    t.backward(root);
    return std::pair{t.value(root)[0], t.grad(a)[5]};
  };
  const auto r1 = run_once();
  const auto r2 = run_once();
  CHECK(r1.first == r2.first);  // bit-identical
  CHECK(r1.second == r2.second);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamStore params;
  params.emplace("w", DenseArray({2, 2}, {1.0, 2.0, 3.0, 4.0}));
  ParamStore grads;
  grads.emplace("w", DenseArray({2, 2}));
  Adam opt;
  opt.step(params, grads);
  CHECK(params.at("w")[0] == 1.0);
  CHECK(params.at("w")[3] == 4.0);
}

TEST_CASE("adam: first step moves by about -lr*sign(g)") {
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.clip_norm = 0.0;
  ParamStore params;
  params.emplace("w", DenseArray({2}, {1.0, -2.0}));
  ParamStore grads;
  grads.emplace("w", DenseArray({2}, {0.3, -0.7}));
  Adam opt(cfg);
  opt.step(params, grads);
  // step 1: mhat = g, vhat = g^2 -> update = -lr * g/(|g|+eps)
  CHECK(params.at("w")[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
  CHECK(params.at("w")[1] == doctest::Approx(-2.0 + 0.1).epsilon(1e-6));
}

TEST_CASE("adam: identical calls with same state give identical results") {
  auto run = [] {
    AdamConfig cfg;
    ParamStore params;
    params.emplace("w", DenseArray({3}, {0.1, 0.2, 0.3}));
    Adam opt(cfg);
    for (int i = 0; i < 5; ++i) {
      ParamStore grads;
      grads.emplace("w", DenseArray({3}, {0.01 * (i + 1), -0.02, 0.005}));
      opt.step(params, grads);
    }
    return params.at("w")[0];
  };
  CHECK(run() == run());
}

TEST_CASE("adam: non-finite gradient raises") {
  ParamStore params;
  params.emplace("w", DenseArray({1}, {1.0}));
  ParamStore grads;
  grads.emplace("w", DenseArray({1}, {1.0}));
  grads.at("w")[0] = std::numeric_limits<double>::quiet_NaN();
  Adam opt;
  CHECK_THROWS_AS(opt.step(params, grads), std::runtime_error);
}

TEST_CASE("lstm cell: zero weights, zero bias, zero state give zero output") {
  const std::size_t hidden = 3, in = 2, batch = 2;
  ad::Tape t;
  ad::LstmCell cell{t.leaf(DenseArray({in, 4 * hidden})), t.leaf(DenseArray({hidden, 4 * hidden})),
                    t.leaf(DenseArray({1, 4 * hidden})), hidden};
  auto state = ad::LstmCell::zero_state(t, batch, hidden);
  auto next = cell.step(t, t.leaf(DenseArray({batch, in}, {1.0, -2.0, 0.5, 3.0})), state);
  for (std::size_t i = 0; i < batch * hidden; ++i) CHECK(t.value(next.h)[i] == 0.0);
}

TEST_CASE("lstm cell: gradient through a 5-step rollout matches finite differences") {
  Rng rng(7);
  const std::size_t hidden = 3, in = 2;
  const DenseArray wx = random_array(rng, in, 4 * hidden, -0.5, 0.5);
  const DenseArray wh = random_array(rng, hidden, 4 * hidden, -0.5, 0.5);
  const DenseArray b = random_array(rng, 1, 4 * hidden, -0.2, 0.2);
  const DenseArray x0 = random_array(rng, 1, in);

  auto build = [&](ad::Tape& t, const std::vector<ad::Var>& v) {
    ad::LstmCell cell{v[1], v[2], v[3], hidden};
    auto state = ad::LstmCell::zero_state(t, 1, hidden);
    ad::Var x = v[0];
    for (int step = 0; step < 5; ++step) {
      state = cell.step(t, x, state);
      x = t.slice_cols(state.h, 0, in);  // feed part of the state back in
    }
    return t.sum(state.h);
  };
  const auto rep = check_gradients(build, {x0, wx, wh, b});
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("lstm cell: same inputs give same outputs") {
  Rng rng(8);
  const DenseArray wx = random_array(rng, 2, 12);
  const DenseArray wh = random_array(rng, 3, 12);
  const DenseArray b = random_array(rng, 1, 12);
  const DenseArray x = random_array(rng, 2, 2);
  auto run = [&] {
    ad::Tape t;
    ad::LstmCell cell{t.leaf(wx), t.leaf(wh), t.leaf(b), 3};
    auto s = ad::LstmCell::zero_state(t, 2, 3);
    s = cell.step(t, t.leaf(x), s);
    return t.value(s.h)[2];
  };
  CHECK(run() == run());
}

TEST_CASE("lstm cell: dimension mismatch raises") {
  ad::Tape t;
  ad::LstmCell cell{t.leaf(DenseArray({2, 12})), t.leaf(DenseArray({3, 12})),
                    t.leaf(DenseArray({1, 12})), 3};
  auto s = ad::LstmCell::zero_state(t, 1, 3);
  CHECK_THROWS(cell.step(t, t.leaf(DenseArray({1, 5})), s));
}
