#include "trajdiv/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "trajdiv/io_util.hpp"
#include "trajdiv/kernels.hpp"

namespace trajdiv {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLaneWidth = 3.5;

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

struct Frame {
  double c = 1.0, s = 0.0;
  Vec2 t;

  Vec2 apply(Vec2 p) const { return {c * p.x - s * p.y + t.x, s * p.x + c * p.y + t.y}; }
};

// Straight line segment sampled every `spacing` meters.
Polyline straight_lane(Vec2 a, Vec2 b, double spacing = 5.0) {
  const double len = (b - a).norm();
  const std::size_t n = std::max<std::size_t>(2, static_cast<std::size_t>(len / spacing) + 1);
  std::vector<Vec2> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n - 1);
    pts[i] = a + (b - a) * u;
  }
  return make_polyline(std::move(pts));
}

}  // namespace

void DatasetConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dataset config: dt must be positive");
  if (t_obs < 2 || t_pred < 4) {
    throw std::invalid_argument("dataset config: t_obs >= 2 and t_pred >= 4 required");
  }
  double total = 0.0;
  for (double p : mixture) {
    if (p < 0.0) throw std::invalid_argument("dataset config: negative mixture weight");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("dataset config: mixture must sum to 1, got " +
                                std::to_string(total));
  }
  if (sigma < 0.0) throw std::invalid_argument("dataset config: sigma must be >= 0");
  if (!(speed_min > 0.0) || !(speed_max >= speed_min)) {
    throw std::invalid_argument("dataset config: bad speed range");
  }
}

Scene generate_scene(const DatasetConfig& cfg, std::uint64_t scene_id) {
  cfg.validate();
  Rng rng = Rng::stream(cfg.seed, scene_id);

  // Draw order is fixed so every scenario consumes the stream identically
  // up to its own shape parameters.
  const double mix_u = rng.uniform();
  const double v0 = rng.uniform(cfg.speed_min, cfg.speed_max);
  const double shape_u = rng.uniform();
  const double rot = rng.uniform(0.0, 2.0 * kPi);
  const Vec2 shift{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)};

  Maneuver man = Maneuver::lane_change;
  double acc = 0.0;
  for (int i = 0; i < 6; ++i) {
    acc += cfg.mixture[static_cast<std::size_t>(i)];
    if (mix_u < acc) {
      man = static_cast<Maneuver>(i);
      break;
    }
  }

  const double horizon = static_cast<double>(cfg.t_pred) * cfg.dt;

  // Canonical frame: the past runs along +x at speed v0 and ends at the
  // origin at time 0; future sample k sits at tau = (k+1)*dt.
  std::vector<Vec2> past(cfg.t_obs);
  for (std::size_t i = 0; i < cfg.t_obs; ++i) {
    const double tau = (static_cast<double>(i) - static_cast<double>(cfg.t_obs - 1)) * cfg.dt;
    past[i] = {v0 * tau, 0.0};
  }

  std::vector<Vec2> future(cfg.t_pred);
  std::vector<Polyline> lanes;
  const double back = v0 * static_cast<double>(cfg.t_obs) * cfg.dt + 30.0;
  const double ahead = v0 * horizon + 30.0;

  switch (man) {
    case Maneuver::straight: {
      for (std::size_t k = 0; k < cfg.t_pred; ++k) {
        const double tau = static_cast<double>(k + 1) * cfg.dt;
        future[k] = {v0 * tau, 0.0};
      }
      const double side = shape_u < 0.5 ? 1.0 : -1.0;
      lanes.push_back(straight_lane({-back, 0.0}, {ahead, 0.0}));
      lanes.push_back(straight_lane({-back, side * kLaneWidth}, {ahead, side * kLaneWidth}));
      break;
    }
    case Maneuver::accelerate:
    case Maneuver::decelerate: {
      // Speed change of 3 m/s across the future; well past the decision
      // thresholds even when measured from half-trajectory chords.
      const double a = (man == Maneuver::accelerate ? 3.0 : -3.0) / horizon;
      for (std::size_t k = 0; k < cfg.t_pred; ++k) {
        const double tau = static_cast<double>(k + 1) * cfg.dt;
        future[k] = {v0 * tau + 0.5 * a * tau * tau, 0.0};
      }
      const double side = shape_u < 0.5 ? 1.0 : -1.0;
      lanes.push_back(straight_lane({-back, 0.0}, {ahead, 0.0}));
      lanes.push_back(straight_lane({-back, side * kLaneWidth}, {ahead, side * kLaneWidth}));
      break;
    }
    case Maneuver::turn_left:
    case Maneuver::turn_right: {
      // Quarter arc sized to finish inside the future window, followed by a
      // straight exit along the crossing lane.
      const double path = v0 * horizon;
      const double frac = 0.88 + 0.08 * shape_u;  // arc consumes most of the future
      const double radius = std::min(25.0, frac * path / (kPi / 2.0));
      const double side = man == Maneuver::turn_left ? 1.0 : -1.0;
      for (std::size_t k = 0; k < cfg.t_pred; ++k) {
        const double tau = static_cast<double>(k + 1) * cfg.dt;
        const double dist = v0 * tau;
        const double arc_len = radius * kPi / 2.0;
        if (dist <= arc_len) {
          const double th = dist / radius;
          future[k] = {radius * std::sin(th), side * radius * (1.0 - std::cos(th))};
        } else {
          future[k] = {radius, side * (radius + (dist - arc_len))};
        }
      }
      lanes.push_back(straight_lane({-back, 0.0}, {radius + 30.0, 0.0}));
      lanes.push_back(straight_lane({radius, side * -5.0}, {radius, side * (radius + ahead)}));
      break;
    }
    case Maneuver::lane_change: {
      const double side = shape_u < 0.5 ? 1.0 : -1.0;
      // Blend parameter runs 0..1 across the future samples themselves so
      // the S-curve is symmetric about the middle of the window.
      for (std::size_t k = 0; k < cfg.t_pred; ++k) {
        const double tau = static_cast<double>(k + 1) * cfg.dt;
        const double u = static_cast<double>(k) / static_cast<double>(cfg.t_pred - 1);
        future[k] = {v0 * tau, side * kLaneWidth * smoothstep(u)};
      }
      lanes.push_back(straight_lane({-back, 0.0}, {ahead, 0.0}));
      lanes.push_back(straight_lane({-back, side * kLaneWidth}, {ahead, side * kLaneWidth}));
      break;
    }
  }

  const Frame frame{std::cos(rot), std::sin(rot), shift};
  for (auto& p : past) p = frame.apply(p);
  for (auto& p : future) p = frame.apply(p);
  for (auto& lane : lanes) {
    for (auto& p : lane.pts) p = frame.apply(p);
  }
  if (cfg.sigma > 0.0) {
    for (auto& p : past) {
      p.x += rng.normal(0.0, cfg.sigma);
      p.y += rng.normal(0.0, cfg.sigma);
    }
    for (auto& p : future) {
      p.x += rng.normal(0.0, cfg.sigma);
      p.y += rng.normal(0.0, cfg.sigma);
    }
  }

  Scene s;
  s.id = scene_id;
  s.past = make_trajectory(cfg.dt, std::move(past));
  s.future = make_trajectory(cfg.dt, std::move(future));
  s.lanes = std::move(lanes);
  s.tag = kManeuverTags[static_cast<std::size_t>(man)];
  s.coding = classify(s.future, s.lanes);
  return s;
}

std::vector<Scene> generate_dataset(const DatasetConfig& cfg, std::size_t n, int workers) {
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
  cfg.validate();
  std::vector<Scene> out(n);
  kernels::parallel_for_static(n, workers, [&](std::size_t i) { out[i] = generate_scene(cfg, i); });
  return out;
}

std::vector<Scene> rare_subset(const std::vector<Scene>& scenes) {
  std::vector<Scene> out;
  for (const auto& s : scenes) {
    if (!(s.coding == straight_coding())) out.push_back(s);
  }
  return out;
}

std::string scenes_to_csv(const std::vector<Scene>& scenes) {
  std::ostringstream out;
  out << "scene_id,role,entity_index,step_index,x,y\n";
  auto emit = [&out](std::uint64_t id, const char* role, std::size_t entity, std::size_t step,
                     Vec2 p) {
    out << id << "," << role << "," << entity << "," << step << "," << format_double(p.x) << ","
        << format_double(p.y) << "\n";
  };
  for (const auto& s : scenes) {
    for (std::size_t i = 0; i < s.past.size(); ++i) emit(s.id, "past", 0, i, s.past.pts[i]);
    for (std::size_t i = 0; i < s.future.size(); ++i) emit(s.id, "future", 0, i, s.future.pts[i]);
    for (std::size_t l = 0; l < s.lanes.size(); ++l) {
      for (std::size_t i = 0; i < s.lanes[l].pts.size(); ++i) {
        emit(s.id, "lane", l, i, s.lanes[l].pts[i]);
      }
    }
  }
  return out.str();
}

std::vector<Scene> scenes_from_csv(const std::string& csv, const DatasetConfig& cfg,
                                   const std::vector<std::string>& tags) {
  struct Partial {
    std::vector<Vec2> past, future;
    std::vector<std::vector<Vec2>> lanes;
  };
  std::map<std::uint64_t, Partial> partials;
  std::istringstream in(csv);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "scene_id,role,entity_index,step_index,x,y") {
        throw std::runtime_error("scenes csv line 1: unexpected header '" + line + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    const std::string ctx = "scenes csv line " + std::to_string(line_no);
    if (cells.size() != 6) {
      throw std::runtime_error(ctx + ": expected 6 columns, got " + std::to_string(cells.size()));
    }
    const auto id = static_cast<std::uint64_t>(parse_int(cells[0], ctx));
    const auto entity = static_cast<std::size_t>(parse_int(cells[2], ctx));
    const auto step = static_cast<std::size_t>(parse_int(cells[3], ctx));
    const Vec2 p{parse_double(cells[4], ctx), parse_double(cells[5], ctx)};
    Partial& part = partials[id];
    auto append_checked = [&](std::vector<Vec2>& v) {
      if (step != v.size()) {
        throw std::runtime_error(ctx + ": out-of-order step_index " + std::to_string(step));
      }
      v.push_back(p);
    };
    if (cells[1] == "past") {
      append_checked(part.past);
    } else if (cells[1] == "future") {
      append_checked(part.future);
    } else if (cells[1] == "lane") {
      if (entity >= part.lanes.size()) part.lanes.resize(entity + 1);
      append_checked(part.lanes[entity]);
    } else {
      throw std::runtime_error(ctx + ": unknown role '" + cells[1] + "'");
    }
  }

  std::vector<Scene> out;
  out.reserve(partials.size());
  std::size_t idx = 0;
  for (auto& [id, part] : partials) {
    Scene s;
    s.id = id;
    s.past = make_trajectory(cfg.dt, std::move(part.past));
    s.future = make_trajectory(cfg.dt, std::move(part.future));
    for (auto& lane : part.lanes) s.lanes.push_back(make_polyline(std::move(lane)));
    s.tag = idx < tags.size() ? tags[idx] : "";
    s.coding = classify(s.future, s.lanes);
    out.push_back(std::move(s));
    ++idx;
  }
  return out;
}

void write_dataset(const std::string& dir, const std::vector<Scene>& scenes,
                   const DatasetConfig& cfg) {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/scenes.csv", scenes_to_csv(scenes));

  nlohmann::json j;
  j["dt"] = cfg.dt;
  j["t_obs"] = cfg.t_obs;
  j["t_pred"] = cfg.t_pred;
  j["mixture"] = cfg.mixture;
  j["sigma"] = cfg.sigma;
  j["speed_min"] = cfg.speed_min;
  j["speed_max"] = cfg.speed_max;
  j["seed"] = cfg.seed;
  std::vector<std::string> tags;
  tags.reserve(scenes.size());
  for (const auto& s : scenes) tags.push_back(s.tag);
  j["tags"] = tags;
  write_text_file(dir + "/dataset.json", j.dump(2) + "\n");
}

std::pair<std::vector<Scene>, DatasetConfig> read_dataset(const std::string& dir) {
  const auto j = nlohmann::json::parse(read_text_file(dir + "/dataset.json"));
  DatasetConfig cfg;
  cfg.dt = j.at("dt").get<double>();
  cfg.t_obs = j.at("t_obs").get<std::size_t>();
  cfg.t_pred = j.at("t_pred").get<std::size_t>();
  cfg.mixture = j.at("mixture").get<std::array<double, 6>>();
  cfg.sigma = j.at("sigma").get<double>();
  cfg.speed_min = j.at("speed_min").get<double>();
  cfg.speed_max = j.at("speed_max").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const auto tags = j.at("tags").get<std::vector<std::string>>();
  auto scenes = scenes_from_csv(read_text_file(dir + "/scenes.csv"), cfg, tags);
  return {std::move(scenes), cfg};
}

}  // namespace trajdiv
