#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "trajdiv/checkpoint.hpp"
#include "trajdiv/datagen.hpp"
#include "trajdiv/eval.hpp"
#include "trajdiv/io_util.hpp"
#include "trajdiv/losses.hpp"
#include "trajdiv/net.hpp"
#include "trajdiv/sampler.hpp"

using namespace trajdiv;

namespace {

// Every command must stay deterministic per (flags, seed): outputs are
// compared byte-for-byte across runs.

std::array<double, 6> parse_mixture(const std::string& s) {
  const auto cells = split(s, ',');
  if (cells.size() != 6) throw CLI::ValidationError("--mixture needs 6 comma-separated weights");
  std::array<double, 6> m{};
  for (std::size_t i = 0; i < 6; ++i) m[i] = parse_double(cells[i], "--mixture");
  return m;
}

void write_effective_config(CLI::App* cmd, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir + "/run_config.txt", cmd->config_to_str(true, false));
}

std::vector<Scene> select_scenes(std::vector<Scene> scenes, bool rare_only) {
  if (!rare_only) return scenes;
  return rare_subset(scenes);
}

struct LoadedModel {
  ParamStore params;
  ModelConfig cfg;
};

LoadedModel load_model(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  return {std::move(ck.params), model_config_from_json(ck.meta_json)};
}

int run(CLI::App& app) {
  CLI::App* gen = app.get_subcommand("gen-data");
  CLI::App* tr = app.get_subcommand("train");
  CLI::App* sa = app.get_subcommand("sample");
  CLI::App* ev = app.get_subcommand("eval");
  CLI::App* ba = app.get_subcommand("baseline");

  if (gen->parsed()) {
    DatasetConfig cfg;
    cfg.dt = gen->get_option("--dt")->as<double>();
    cfg.t_obs = gen->get_option("--t-obs")->as<std::size_t>();
    cfg.t_pred = gen->get_option("--t-pred")->as<std::size_t>();
    cfg.mixture = parse_mixture(gen->get_option("--mixture")->as<std::string>());
    cfg.sigma = gen->get_option("--sigma")->as<double>();
    cfg.speed_min = gen->get_option("--speed-min")->as<double>();
    cfg.speed_max = gen->get_option("--speed-max")->as<double>();
    cfg.seed = gen->get_option("--seed")->as<std::uint64_t>();
    const auto out = gen->get_option("--out")->as<std::string>();
    const auto scenes = generate_dataset(cfg, gen->get_option("--n")->as<std::size_t>(),
                                         gen->get_option("--workers")->as<int>());
    write_dataset(out, scenes, cfg);
    write_effective_config(gen, out);
    std::map<std::string, std::size_t> counts;
    for (const auto& sc : scenes) ++counts[sc.tag];
    std::cout << "wrote " << scenes.size() << " scenes to " << out << "\n";
    for (const auto& [tag, count] : counts) std::cout << "  " << tag << ": " << count << "\n";
    std::cout << "rare subset: " << rare_subset(scenes).size() << " scenes\n";
    return 0;
  }

  if (tr->parsed()) {
    const auto [scenes, dcfg] = read_dataset(tr->get_option("--data")->as<std::string>());
    ModelConfig mcfg;
    mcfg.hidden = tr->get_option("--hidden")->as<std::size_t>();
    mcfg.noise_dim = tr->get_option("--noise-dim")->as<std::size_t>();
    mcfg.d_h = tr->get_option("--dh")->as<std::size_t>();
    mcfg.d_l = tr->get_option("--dl")->as<std::size_t>();
    mcfg.lane_slots = tr->get_option("--lane-slots")->as<std::size_t>();
    mcfg.dropout = tr->get_option("--dropout")->as<double>();
    mcfg.t_obs = dcfg.t_obs;
    mcfg.t_pred = dcfg.t_pred;
    mcfg.init_seed = tr->get_option("--init-seed")->as<std::uint64_t>();

    TrainConfig tcfg;
    tcfg.epochs = tr->get_option("--epochs")->as<std::size_t>();
    tcfg.batch = tr->get_option("--batch")->as<std::size_t>();
    tcfg.mon_n = tr->get_option("--mon-n")->as<std::size_t>();
    tcfg.adam.lr = tr->get_option("--lr")->as<double>();
    tcfg.adam.clip_norm = tr->get_option("--clip")->as<double>();
    tcfg.val_fraction = tr->get_option("--val-frac")->as<double>();
    tcfg.seed = tr->get_option("--seed")->as<std::uint64_t>();
    tcfg.emb_mode = tr->get_option("--emb-mode")->as<std::string>() == "literal"
                        ? EmbMode::literal
                        : EmbMode::margin;
    tcfg.emb_margin = tr->get_option("--emb-margin")->as<double>();
    const auto lam = split(tr->get_option("--lambda")->as<std::string>(), ',');
    if (lam.size() != 5) throw CLI::ValidationError("--lambda needs 5 comma-separated values");
    tcfg.weights = {parse_double(lam[0], "--lambda"), parse_double(lam[1], "--lambda"),
                    parse_double(lam[2], "--lambda"), parse_double(lam[3], "--lambda"),
                    parse_double(lam[4], "--lambda")};
    if (!tr->get_option("--lambda5")->empty()) {
      tcfg.weights.l5 = tr->get_option("--lambda5")->as<double>();
    }

    const TrainResult result = train(scenes, mcfg, tcfg);

    const auto out = tr->get_option("--out")->as<std::string>();
    std::filesystem::create_directories(out);
    save_checkpoint(out + "/checkpoint.txt", result.best_params, model_config_to_json(mcfg));
    std::string metrics = "# lambda=" + format_double(tcfg.weights.l1) + "," +
                          format_double(tcfg.weights.l2) + "," + format_double(tcfg.weights.l3) +
                          "," + format_double(tcfg.weights.l4) + "," +
                          format_double(tcfg.weights.l5) + " seed=" + std::to_string(tcfg.seed) +
                          " best_epoch=" + std::to_string(result.best_epoch) + "\n";
    metrics += metrics_to_csv(result.log);
    write_text_file(out + "/metrics.csv", metrics);
    write_effective_config(tr, out);
    std::cout << "trained " << tcfg.epochs << " epochs on " << scenes.size() << " scenes\n";
    if (!result.log.empty()) {
      std::cout << "best validation mon_ade " << format_double(result.best_val_mon_ade)
                << " at epoch " << result.best_epoch << "\n";
    }
    return 0;
  }

  if (sa->parsed()) {
    const LoadedModel model = load_model(sa->get_option("--checkpoint")->as<std::string>());
    auto [scenes, dcfg] = read_dataset(sa->get_option("--data")->as<std::string>());
    const auto selected =
        select_scenes(std::move(scenes), sa->get_option("--rare-only")->as<bool>());
    const auto n_all = sa->get_option("--nall")->as<std::size_t>();
    const auto n = sa->get_option("--n")->as<std::size_t>();
    const auto seed = sa->get_option("--seed")->as<std::uint64_t>();
    const bool use_fps = sa->get_option("--mode")->as<std::string>() == "fps";
    std::vector<std::pair<std::uint64_t, WeightedPredictionSet>> sets;
    sets.reserve(selected.size());
    for (const auto& scene : selected) {
      sets.emplace_back(scene.id,
                        use_fps ? semantic_sample(scene, model.params, model.cfg, n_all, n, seed)
                                : direct_sample(scene, model.params, model.cfg, n, seed));
    }
    const auto out = sa->get_option("--out")->as<std::string>();
    std::filesystem::create_directories(out);
    write_text_file(out + "/predictions.csv", predictions_to_csv(sets));
    write_text_file(out + "/latents.csv", latents_to_csv(sets, model.cfg.d_h));
    write_effective_config(sa, out);
    std::cout << "sampled " << sets.size() << " scenes (" << (use_fps ? "fps" : "direct")
              << ", n=" << n << ", nall=" << n_all << ")\n";
    return 0;
  }

  if (ev->parsed()) {
    const LoadedModel model = load_model(ev->get_option("--checkpoint")->as<std::string>());
    const auto [scenes, dcfg] = read_dataset(ev->get_option("--data")->as<std::string>());
    ProtocolConfig pcfg;
    const auto range = split(ev->get_option("--N-range")->as<std::string>(), ':');
    if (range.size() != 2) throw CLI::ValidationError("--N-range must look like 1:8");
    pcfg.n_min = static_cast<std::size_t>(parse_int(range[0], "--N-range"));
    pcfg.n_max = static_cast<std::size_t>(parse_int(range[1], "--N-range"));
    pcfg.n_all = ev->get_option("--nall")->as<std::size_t>();
    pcfg.rare_only = !ev->get_option("--all-scenes")->as<bool>();
    pcfg.knn_s = ev->get_option("--knn-s")->as<std::size_t>();
    pcfg.knn_sprime = ev->get_option("--knn-sprime")->as<std::size_t>();
    pcfg.knn_k = ev->get_option("--knn-k")->as<std::size_t>();
    pcfg.knn_scenes = ev->get_option("--knn-scenes")->as<std::size_t>();
    pcfg.seed = ev->get_option("--seed")->as<std::uint64_t>();
    pcfg.workers = ev->get_option("--workers")->as<int>();

    const EvalReport report = run_experiment(scenes, model.params, model.cfg, pcfg);
    KfConfig cv;
    cv.q = ev->get_option("--kf-q")->as<double>();
    cv.r = ev->get_option("--kf-r")->as<double>();
    KfConfig ca = cv;
    ca.model = MotionModel::ca;
    const auto table = comparison_table(scenes, model.params, model.cfg, cv, ca,
                                        ev->get_option("--table-n")->as<std::size_t>(), pcfg.n_all,
                                        pcfg.seed, pcfg.workers);

    const auto out = ev->get_option("--out")->as<std::string>();
    std::filesystem::create_directories(out);
    write_text_file(out + "/figure3a.csv", figure3a_csv(report));
    write_text_file(out + "/figure3b.csv", figure3b_csv(report));
    write_text_file(out + "/report.json", report_to_json(report));
    write_text_file(out + "/comparison.csv", comparison_to_csv(table));
    write_effective_config(ev, out);
    std::cout << "evaluated " << report.scene_count << " scenes, N in [" << pcfg.n_min << ","
              << pcfg.n_max << "]\n";
    if (pcfg.knn_scenes > 0) {
      std::cout << "knn entropy " << format_double(report.knn.mean_entropy) << " (majority "
                << format_double(report.knn.majority_pct) << "%)\n";
    }
    return 0;
  }

  if (ba->parsed()) {
    auto [scenes, dcfg] = read_dataset(ba->get_option("--data")->as<std::string>());
    const auto selected =
        select_scenes(std::move(scenes), ba->get_option("--rare-only")->as<bool>());
    if (selected.empty()) throw std::runtime_error("baseline: no scenes selected");
    const auto model_name = ba->get_option("--model")->as<std::string>();
    KfConfig cfg;
    cfg.model = model_name == "cv" ? MotionModel::cv : MotionModel::ca;
    cfg.q = ba->get_option("--q")->as<double>();
    cfg.r = ba->get_option("--r")->as<double>();
    cfg.dt = dcfg.dt;
    const auto n = ba->get_option("--n")->as<std::size_t>();
    const auto seed = ba->get_option("--seed")->as<std::uint64_t>();

    std::vector<std::pair<std::uint64_t, WeightedPredictionSet>> sets;
    double acc_ade = 0.0, acc_fde = 0.0;
    for (const auto& scene : selected) {
      const GaussianState st = kf_fit(scene.past, cfg);
      Rng rng = Rng::stream(seed, scene.id);
      const auto samples = kf_predict_samples(st, cfg, scene.future.size(), n, rng);
      WeightedPredictionSet set;
      set.n_all = n;
      set.seed = seed;
      const double w = 1.0 / static_cast<double>(n);
      for (const auto& traj : samples) set.entries.push_back({traj, {}, w});
      const auto [a, f] = mon_eval(set, scene.future);
      acc_ade += a;
      acc_fde += f;
      sets.emplace_back(scene.id, std::move(set));
    }
    const auto out = ba->get_option("--out")->as<std::string>();
    std::filesystem::create_directories(out);
    write_text_file(out + "/predictions.csv", predictions_to_csv(sets));
    const double inv = 1.0 / static_cast<double>(selected.size());
    std::string summary = "model,subset,scenes,mon_ade,mon_fde\n";
    summary += model_name + std::string(",") +
               (ba->get_option("--rare-only")->as<bool>() ? "rare" : "all") + "," +
               std::to_string(selected.size()) + "," + format_double(acc_ade * inv) + "," +
               format_double(acc_fde * inv) + "\n";
    write_text_file(out + "/baseline_report.csv", summary);
    write_effective_config(ba, out);
    std::cout << "baseline " << model_name << " mon_ade " << format_double(acc_ade * inv)
              << " mon_fde " << format_double(acc_fde * inv) << " over " << selected.size()
              << " scenes\n";
    return 0;
  }

  return 0;
}

void build_interface(CLI::App& app) {
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file; flags override it");

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic scene dataset");
  gen->add_option("--n", "scene count")->default_val("1000");
  gen->add_option("--seed", "dataset seed")->required();
  gen->add_option("--out", "output directory")->required();
  gen->add_option("--mixture", "scenario mixture, 6 weights summing to 1")
      ->default_val("0.70,0.075,0.075,0.05,0.05,0.05");
  gen->add_option("--sigma", "position noise std (m)")->default_val("0.1");
  gen->add_option("--dt", "timestep (s)")->default_val("0.1");
  gen->add_option("--t-obs", "observed steps")->default_val("20");
  gen->add_option("--t-pred", "predicted steps")->default_val("30");
  gen->add_option("--speed-min")->default_val("6.0");
  gen->add_option("--speed-max")->default_val("12.0");
  gen->add_option("--workers", "generation shards")->default_val("1");

  auto* tr = app.add_subcommand("train", "train the generative model");
  tr->add_option("--data", "dataset directory")->required();
  tr->add_option("--out", "output directory")->required();
  tr->add_option("--seed", "training seed")->required();
  tr->add_option("--epochs")->default_val("30");
  tr->add_option("--batch")->default_val("16");
  tr->add_option("--mon-n", "samples for the best-of-n loss")->default_val("5");
  tr->add_option("--lr")->default_val("0.001");
  tr->add_option("--clip", "global gradient-norm clip")->default_val("5.0");
  tr->add_option("--val-frac")->default_val("0.2");
  tr->add_option("--lambda", "loss coefficients l1..l5")->default_val("4,1,100,2,50");
  tr->add_option("--lambda5", "override for the embedding coefficient");
  tr->add_option("--emb-mode")->check(CLI::IsMember({"margin", "literal"}))->default_val("margin");
  tr->add_option("--emb-margin")->default_val("2.0");
  tr->add_option("--dropout")->default_val("0.0");
  tr->add_option("--hidden")->default_val("64");
  tr->add_option("--noise-dim")->default_val("10");
  tr->add_option("--dh")->default_val("2");
  tr->add_option("--dl")->default_val("72");
  tr->add_option("--lane-slots")->default_val("3");
  tr->add_option("--init-seed")->default_val("1");

  auto* sa = app.add_subcommand("sample", "sample weighted prediction sets");
  sa->add_option("--checkpoint")->required();
  sa->add_option("--data", "dataset directory")->required();
  sa->add_option("--out", "output directory")->required();
  sa->add_option("--seed")->required();
  sa->add_option("--nall", "latent pool size")->default_val("200");
  sa->add_option("--n", "selected samples")->default_val("5");
  sa->add_option("--mode")->check(CLI::IsMember({"fps", "direct"}))->default_val("fps");
  sa->add_flag("--rare-only", "sample only rare-coded scenes");

  auto* ev = app.add_subcommand("eval", "run the accuracy/coverage experiment");
  ev->add_option("--checkpoint")->required();
  ev->add_option("--data")->required();
  ev->add_option("--out")->required();
  ev->add_option("--seed")->required();
  ev->add_option("--N-range", "sample budgets, e.g. 1:8")->default_val("1:8");
  ev->add_option("--nall")->default_val("200");
  ev->add_flag("--all-scenes", "evaluate every scene, not just the rare subset");
  ev->add_option("--knn-s")->default_val("1000");
  ev->add_option("--knn-sprime")->default_val("30");
  ev->add_option("--knn-k")->default_val("40");
  ev->add_option("--knn-scenes", "scenes in the entropy report (0 disables)")->default_val("20");
  ev->add_option("--workers")->default_val("1");
  ev->add_option("--table-n", "sample budget for comparison.csv")->default_val("5");
  ev->add_option("--kf-q")->default_val("0.5");
  ev->add_option("--kf-r")->default_val("0.04");

  auto* ba = app.add_subcommand("baseline", "Kalman-filter baselines");
  ba->add_option("--model")->check(CLI::IsMember({"cv", "ca"}))->default_val("cv");
  ba->add_option("--data")->required();
  ba->add_option("--out")->required();
  ba->add_option("--seed")->required();
  ba->add_option("--n", "samples per scene")->default_val("5");
  ba->add_option("--q", "process noise spectral density")->default_val("0.5");
  ba->add_option("--r", "measurement noise variance")->default_val("0.04");
  ba->add_flag("--rare-only");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diversity-aware trajectory prediction toolkit"};
  build_interface(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    return run(app);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
