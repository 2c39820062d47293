#include "trajdiv/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "trajdiv/io_util.hpp"
#include "trajdiv/kernels.hpp"

namespace trajdiv {

std::pair<double, double> mon_eval(const WeightedPredictionSet& set, const Trajectory& truth) {
  if (set.entries.empty()) throw std::invalid_argument("mon_eval: empty prediction set");
  double best_ade = std::numeric_limits<double>::infinity();
  double best_fde = std::numeric_limits<double>::infinity();
  for (const auto& e : set.entries) {
    best_ade = std::min(best_ade, ade(e.traj, truth));
    best_fde = std::min(best_fde, fde(e.traj, truth));
  }
  return {best_ade, best_fde};
}

std::size_t coverage_count(const WeightedPredictionSet& set, const std::vector<Polyline>& lanes) {
  if (set.entries.empty()) throw std::invalid_argument("coverage_count: empty prediction set");
  std::set<int> keys;
  for (const auto& e : set.entries) keys.insert(coding_key(classify(e.traj, lanes)));
  return keys.size();
}

NeighborhoodStats histogram_entropy(const std::vector<int>& coding_keys) {
  if (coding_keys.empty()) throw std::invalid_argument("histogram_entropy: empty neighborhood");
  std::map<int, std::size_t> counts;
  for (int k : coding_keys) ++counts[k];
  const double total = static_cast<double>(coding_keys.size());
  NeighborhoodStats out;
  std::size_t modal = 0;
  double h = 0.0;
  for (const auto& [key, count] : counts) {
    const double p = static_cast<double>(count) / total;
    h -= p * std::log(p);
    modal = std::max(modal, count);
  }
  out.entropy = h;
  out.majority_frac = static_cast<double>(modal) / total;
  return out;
}

KnnEntropyResult knn_entropy(const ParamStore& params, const ModelConfig& cfg, const Scene& scene,
                             std::size_t s, std::size_t s_prime, std::size_t k,
                             std::uint64_t seed) {
  if (k >= s) throw std::invalid_argument("knn_entropy: k must be < S");
  if (s_prime > s) throw std::invalid_argument("knn_entropy: S' must be <= S");
  if (s_prime < 1) throw std::invalid_argument("knn_entropy: S' must be >= 1");

  const EncodedScene enc = encode_scene(scene, params, cfg);
  Rng rng = Rng::stream(seed, scene.id);
  const DenseArray latents = draw_latents(enc, params, cfg, s, rng);

  // Anchor subsample without replacement (partial Fisher-Yates).
  std::vector<std::size_t> pool(s);
  for (std::size_t i = 0; i < s; ++i) pool[i] = i;
  for (std::size_t i = 0; i < s_prime; ++i) {
    const std::size_t j = i + rng.uniform_u64(s - i);
    std::swap(pool[i], pool[j]);
  }

  // Decode each distinct neighbor once across neighborhoods.
  std::vector<std::vector<std::size_t>> hoods(s_prime);
  std::set<std::size_t> needed;
  for (std::size_t a = 0; a < s_prime; ++a) {
    const std::size_t anchor = pool[a];
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(s - 1);
    for (std::size_t i = 0; i < s; ++i) {
      if (i == anchor) continue;
      double d2 = 0.0;
      for (std::size_t j = 0; j < cfg.d_h; ++j) {
        const double diff = latents.at(i, j) - latents.at(anchor, j);
        d2 += diff * diff;
      }
      dist.emplace_back(d2, i);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    auto& hood = hoods[a];
    hood.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      hood.push_back(dist[i].second);
      needed.insert(dist[i].second);
    }
  }

  std::vector<std::size_t> order(needed.begin(), needed.end());
  DenseArray subset({order.size(), latents.cols()});
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = 0; j < latents.cols(); ++j) subset.at(i, j) = latents.at(order[i], j);
  }
  const auto trajs = decode_latents(enc, params, cfg, subset);
  std::map<std::size_t, int> key_of;
  for (std::size_t i = 0; i < order.size(); ++i) {
    key_of[order[i]] = coding_key(classify(trajs[i], scene.lanes));
  }

  KnnEntropyResult out;
  out.neighborhoods = s_prime;
  std::vector<double> entropies(s_prime);
  double majority_acc = 0.0;
  for (std::size_t a = 0; a < s_prime; ++a) {
    std::vector<int> keys;
    keys.reserve(k);
    for (std::size_t idx : hoods[a]) keys.push_back(key_of.at(idx));
    const NeighborhoodStats st = histogram_entropy(keys);
    entropies[a] = st.entropy;
    majority_acc += st.majority_frac;
  }
  double mean = 0.0;
  for (double e : entropies) mean += e;
  mean /= static_cast<double>(s_prime);
  double var = 0.0;
  for (double e : entropies) var += (e - mean) * (e - mean);
  var /= static_cast<double>(s_prime);
  out.mean_entropy = mean;
  out.std_entropy = std::sqrt(var);
  out.majority_pct = 100.0 * majority_acc / static_cast<double>(s_prime);
  return out;
}

namespace {

struct SceneResult {
  // [n_index][arm]
  std::vector<std::array<double, 2>> ade;
  std::vector<std::array<double, 2>> fde;
  std::vector<std::array<double, 2>> distinct;
};

}  // namespace

EvalReport run_experiment(const std::vector<Scene>& scenes, const ParamStore& params,
                          const ModelConfig& cfg, const ProtocolConfig& pcfg) {
  if (pcfg.n_min < 1 || pcfg.n_min > pcfg.n_max) {
    throw std::invalid_argument("run_experiment: bad N range");
  }
  if (pcfg.n_all < pcfg.n_max) {
    throw std::invalid_argument("run_experiment: n_all must be >= n_max");
  }
  std::vector<const Scene*> pool;
  for (const auto& s : scenes) {
    if (!pcfg.rare_only || !(s.coding == straight_coding())) pool.push_back(&s);
  }
  if (pool.empty()) throw std::invalid_argument("run_experiment: no scenes to evaluate");

  EvalReport report;
  report.seed = pcfg.seed;
  report.scene_count = pool.size();
  for (std::size_t n = pcfg.n_min; n <= pcfg.n_max; ++n) report.n_values.push_back(n);
  const std::size_t n_count = report.n_values.size();

  std::vector<SceneResult> results(pool.size());
  kernels::parallel_for(pool.size(), pcfg.workers, [&](std::size_t si) {
    const Scene& scene = *pool[si];
    const EncodedScene enc = encode_scene(scene, params, cfg);
    Rng rng = Rng::stream(pcfg.seed, scene.id);
    const DenseArray latents = draw_latents(enc, params, cfg, pcfg.n_all, rng);

    SceneResult res;
    res.ade.resize(n_count);
    res.fde.resize(n_count);
    res.distinct.resize(n_count);
    for (std::size_t ni = 0; ni < n_count; ++ni) {
      const std::size_t n = report.n_values[ni];
      const WeightedPredictionSet fps_set = select_fps(enc, params, cfg, latents, n);
      const WeightedPredictionSet dir_set = select_direct(enc, params, cfg, latents, n);
      const auto fps_m = mon_eval(fps_set, scene.future);
      const auto dir_m = mon_eval(dir_set, scene.future);
      res.ade[ni] = {fps_m.first, dir_m.first};
      res.fde[ni] = {fps_m.second, dir_m.second};
      res.distinct[ni] = {static_cast<double>(coverage_count(fps_set, scene.lanes)),
                          static_cast<double>(coverage_count(dir_set, scene.lanes))};
    }
    results[si] = std::move(res);
  });

  report.mon_ade.assign(n_count, {0.0, 0.0});
  report.mon_fde.assign(n_count, {0.0, 0.0});
  report.mean_distinct.assign(n_count, {0.0, 0.0});
  for (const auto& res : results) {  // index order: worker-count independent
    for (std::size_t ni = 0; ni < n_count; ++ni) {
      for (int arm = 0; arm < 2; ++arm) {
        const auto a = static_cast<std::size_t>(arm);
        report.mon_ade[ni][a] += res.ade[ni][a];
        report.mon_fde[ni][a] += res.fde[ni][a];
        report.mean_distinct[ni][a] += res.distinct[ni][a];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(pool.size());
  for (std::size_t ni = 0; ni < n_count; ++ni) {
    for (std::size_t a = 0; a < 2; ++a) {
      report.mon_ade[ni][a] *= inv;
      report.mon_fde[ni][a] *= inv;
      report.mean_distinct[ni][a] *= inv;
    }
  }

  if (pcfg.knn_scenes > 0) {
    const std::size_t count = std::min(pcfg.knn_scenes, pool.size());
    std::vector<KnnEntropyResult> knn_results(count);
    kernels::parallel_for(count, pcfg.workers, [&](std::size_t i) {
      knn_results[i] = knn_entropy(params, cfg, *pool[i], pcfg.knn_s, pcfg.knn_sprime, pcfg.knn_k,
                                   pcfg.seed + 1);
    });
    // Pool all neighborhoods: mean of means (equal S' per scene) and the
    // pooled std via the law of total variance.
    double mean = 0.0, m2 = 0.0, maj = 0.0;
    for (const auto& r : knn_results) {
      mean += r.mean_entropy;
      m2 += r.std_entropy * r.std_entropy + r.mean_entropy * r.mean_entropy;
      maj += r.majority_pct;
    }
    const double n = static_cast<double>(count);
    report.knn.mean_entropy = mean / n;
    report.knn.std_entropy = std::sqrt(std::max(0.0, m2 / n - (mean / n) * (mean / n)));
    report.knn.majority_pct = maj / n;
    report.knn.neighborhoods = count * pcfg.knn_sprime;
  }
  return report;
}

std::string figure3a_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "N,arm,mon_ade\n";
  for (std::size_t ni = 0; ni < report.n_values.size(); ++ni) {
    out << report.n_values[ni] << ",fps," << format_double(report.mon_ade[ni][0]) << "\n";
    out << report.n_values[ni] << ",direct," << format_double(report.mon_ade[ni][1]) << "\n";
  }
  return out.str();
}

std::string figure3b_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "N,arm,mean_distinct_codings\n";
  for (std::size_t ni = 0; ni < report.n_values.size(); ++ni) {
    out << report.n_values[ni] << ",fps," << format_double(report.mean_distinct[ni][0]) << "\n";
    out << report.n_values[ni] << ",direct," << format_double(report.mean_distinct[ni][1]) << "\n";
  }
  return out.str();
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["seed"] = report.seed;
  j["scene_count"] = report.scene_count;
  j["n_values"] = report.n_values;
  auto arm_table = [&](const std::vector<std::array<double, 2>>& rows) {
    nlohmann::json t;
    std::vector<double> fps_col, dir_col;
    for (const auto& r : rows) {
      fps_col.push_back(r[0]);
      dir_col.push_back(r[1]);
    }
    t["fps"] = fps_col;
    t["direct"] = dir_col;
    return t;
  };
  j["mon_ade"] = arm_table(report.mon_ade);
  j["mon_fde"] = arm_table(report.mon_fde);
  j["mean_distinct_codings"] = arm_table(report.mean_distinct);
  j["knn_entropy"] = {{"mean", report.knn.mean_entropy},
                      {"std", report.knn.std_entropy},
                      {"majority_pct", report.knn.majority_pct},
                      {"neighborhoods", report.knn.neighborhoods}};
  return j.dump(2) + "\n";
}

std::vector<ComparisonRow> comparison_table(const std::vector<Scene>& scenes,
                                            const ParamStore& params, const ModelConfig& cfg,
                                            const KfConfig& kf_cv, const KfConfig& kf_ca,
                                            std::size_t n, std::size_t n_all, std::uint64_t seed,
                                            int workers) {
  if (scenes.empty()) throw std::invalid_argument("comparison_table: no scenes");
  constexpr int kModels = 5;  // kf_cv, kf_ca, deterministic, direct, fps
  struct PerScene {
    std::array<double, kModels> ade{};
    std::array<double, kModels> fde{};
    bool rare = false;
  };
  std::vector<PerScene> rows(scenes.size());

  kernels::parallel_for(scenes.size(), workers, [&](std::size_t si) {
    const Scene& scene = scenes[si];
    PerScene row;
    row.rare = !(scene.coding == straight_coding());

    auto eval_kf = [&](const KfConfig& kcfg, int slot) {
      KfConfig local = kcfg;
      local.dt = scene.past.dt;
      const GaussianState st = kf_fit(scene.past, local);
      Rng rng = Rng::stream(seed + static_cast<std::uint64_t>(slot), scene.id);
      const auto samples = kf_predict_samples(st, local, scene.future.size(), n, rng);
      double best_ade = std::numeric_limits<double>::infinity();
      double best_fde = std::numeric_limits<double>::infinity();
      for (const auto& s : samples) {
        best_ade = std::min(best_ade, ade(s, scene.future));
        best_fde = std::min(best_fde, fde(s, scene.future));
      }
      row.ade[static_cast<std::size_t>(slot)] = best_ade;
      row.fde[static_cast<std::size_t>(slot)] = best_fde;
    };
    eval_kf(kf_cv, 0);
    eval_kf(kf_ca, 1);

    const EncodedScene enc = encode_scene(scene, params, cfg);
    {
      Rng zero_rng(0);
      const DenseArray lat = draw_latents(enc, params, cfg, 1, zero_rng, true);
      const auto trajs = decode_latents(enc, params, cfg, lat);
      row.ade[2] = ade(trajs[0], scene.future);
      row.fde[2] = fde(trajs[0], scene.future);
    }
    {
      Rng rng = Rng::stream(seed, scene.id);
      const DenseArray latents = draw_latents(enc, params, cfg, n_all, rng);
      const auto dir_m = mon_eval(select_direct(enc, params, cfg, latents, n), scene.future);
      const auto fps_m = mon_eval(select_fps(enc, params, cfg, latents, n), scene.future);
      row.ade[3] = dir_m.first;
      row.fde[3] = dir_m.second;
      row.ade[4] = fps_m.first;
      row.fde[4] = fps_m.second;
    }
    rows[si] = row;
  });

  const std::array<const char*, kModels> names = {"kf_cv", "kf_ca", "deterministic", "direct",
                                                  "fps"};
  std::vector<ComparisonRow> out;
  for (const char* subset : {"all", "rare"}) {
    const bool rare_only = std::string(subset) == "rare";
    for (int m = 0; m < kModels; ++m) {
      ComparisonRow r;
      r.model = names[static_cast<std::size_t>(m)];
      r.subset = subset;
      double acc_ade = 0.0, acc_fde = 0.0;
      std::size_t count = 0;
      for (const auto& row : rows) {
        if (rare_only && !row.rare) continue;
        acc_ade += row.ade[static_cast<std::size_t>(m)];
        acc_fde += row.fde[static_cast<std::size_t>(m)];
        ++count;
      }
      r.scenes = count;
      if (count > 0) {
        r.mon_ade = acc_ade / static_cast<double>(count);
        r.mon_fde = acc_fde / static_cast<double>(count);
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "model,subset,scenes,mon_ade,mon_fde\n";
  for (const auto& r : rows) {
    out << r.model << "," << r.subset << "," << r.scenes << "," << format_double(r.mon_ade) << ","
        << format_double(r.mon_fde) << "\n";
  }
  return out.str();
}

}  // namespace trajdiv
