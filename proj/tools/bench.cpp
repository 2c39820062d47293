// Benchmark comparing the serial reference kernels against their
// OpenMP-parallel counterparts, asserting bit-identical results as it goes.
// Build and run:  trajdiv_bench [--quick]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "trajdiv/datagen.hpp"
#include "trajdiv/kernels.hpp"
#include "trajdiv/rng.hpp"
#include "trajdiv/sampler.hpp"

using namespace trajdiv;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <class Fn>
double time_ms(Fn&& fn, int reps) {
  fn();  // warm up
  const double start = now_ms();
  for (int i = 0; i < reps; ++i) fn();
  return (now_ms() - start) / reps;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-28s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "bit-identical" : "MISMATCH");
}

bool equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  const int workers = kernels::hardware_workers();
  std::printf("openmp: %s, workers: %d%s\n\n", kernels::openmp_enabled() ? "on" : "off", workers,
              quick ? " (quick mode)" : "");

  bool all_ok = true;

  {  // dense matmul
    const std::size_t m = quick ? 64 : 384, k = quick ? 64 : 384, n = quick ? 64 : 384;
    Rng rng(1);
    std::vector<double> a(m * k), b(k * n), c_ref(m * n), c_par(m * n);
    for (auto& x : a) x = rng.uniform(-1, 1);
    for (auto& x : b) x = rng.uniform(-1, 1);
    const int reps = quick ? 3 : 10;
    const double t_ser =
        time_ms([&] { kernels::gemm_nn_ref(a.data(), b.data(), c_ref.data(), m, k, n); }, reps);
    const double t_par = time_ms(
        [&] { kernels::gemm_nn(a.data(), b.data(), c_par.data(), m, k, n, workers); }, reps);
    const bool ok = equal(c_ref, c_par);
    all_ok = all_ok && ok;
    report("gemm", t_ser, t_par, ok);
  }

  {  // farthest point sampling over a large latent cloud
    const std::size_t n_all = quick ? 5000 : 200000;
    const std::size_t count = quick ? 16 : 64;
    Rng rng(2);
    DenseArray pts({n_all, 2});
    for (std::size_t i = 0; i < pts.numel(); ++i) pts[i] = rng.uniform(-10, 10);
    FpsResult ser, par;
    const double t_ser = time_ms([&] { ser = fps_serial(pts, count); }, quick ? 2 : 3);
    const double t_par = time_ms([&] { par = fps(pts, count, workers); }, quick ? 2 : 3);
    const bool ok = ser.selected == par.selected && ser.assignment == par.assignment &&
                    ser.covering_radius == par.covering_radius;
    all_ok = all_ok && ok;
    report("fps", t_ser, t_par, ok);
  }

  {  // scene generation sharded by index
    DatasetConfig cfg;
    cfg.t_obs = 8;
    cfg.t_pred = 12;
    cfg.seed = 3;
    const std::size_t n = quick ? 500 : 20000;
    std::vector<Scene> ser, par;
    const double t_ser = time_ms([&] { ser = generate_dataset(cfg, n, 1); }, quick ? 2 : 3);
    const double t_par = time_ms([&] { par = generate_dataset(cfg, n, workers); }, quick ? 2 : 3);
    bool ok = ser.size() == par.size();
    for (std::size_t i = 0; ok && i < ser.size(); ++i) {
      ok = ser[i].tag == par[i].tag &&
           std::memcmp(ser[i].future.pts.data(), par[i].future.pts.data(),
                       ser[i].future.size() * sizeof(Vec2)) == 0;
    }
    all_ok = all_ok && ok;
    report("scene generation", t_ser, t_par, ok);
  }

  return all_ok ? 0 : 1;
}
