#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "trajdiv/geom.hpp"
#include "trajdiv/rng.hpp"
#include "trajdiv/semantics.hpp"

namespace trajdiv {

// One prediction instance: observed past, ground-truth future, lane map,
// and the semantic coding of the future. The past ends one timestep before
// the future begins.
struct Scene {
  std::uint64_t id = 0;
  Trajectory past;
  Trajectory future;
  std::vector<Polyline> lanes;
  TernaryCoding coding;
  std::string tag;
};

enum class Maneuver : int {
  straight = 0,
  accelerate = 1,
  decelerate = 2,
  turn_left = 3,
  turn_right = 4,
  lane_change = 5,
};

inline constexpr std::array<const char*, 6> kManeuverTags = {
    "straight", "accelerate", "decelerate", "turn-left", "turn-right", "lane-change"};

struct DatasetConfig {
  double dt = 0.1;
  std::size_t t_obs = 20;
  std::size_t t_pred = 30;
  // Scenario mixture in kManeuverTags order; must sum to 1.
  std::array<double, 6> mixture = {0.70, 0.075, 0.075, 0.05, 0.05, 0.05};
  double sigma = 0.1;  // position noise std (m) on past+future
  double speed_min = 6.0;
  double speed_max = 12.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Builds scene `scene_id` of the dataset; depends only on (cfg.seed,
// scene_id), so sharded generation equals serial generation.
Scene generate_scene(const DatasetConfig& cfg, std::uint64_t scene_id);

std::vector<Scene> generate_dataset(const DatasetConfig& cfg, std::size_t n, int workers = 1);

// Scenes whose coding differs from plain straight lane-keeping.
std::vector<Scene> rare_subset(const std::vector<Scene>& scenes);

// scenes.csv schema (one header line, then):
//   scene_id,role,entity_index,step_index,x,y
// role is past|future|lane; entity_index is 0 for past/future and the lane
// index for lane vertices. dt / horizons / tags live in a JSON sidecar.
std::string scenes_to_csv(const std::vector<Scene>& scenes);
std::vector<Scene> scenes_from_csv(const std::string& csv, const DatasetConfig& cfg,
                                   const std::vector<std::string>& tags);

// Writes <dir>/scenes.csv and <dir>/dataset.json; read_dataset reverses it.
void write_dataset(const std::string& dir, const std::vector<Scene>& scenes,
                   const DatasetConfig& cfg);
std::pair<std::vector<Scene>, DatasetConfig> read_dataset(const std::string& dir);

}  // namespace trajdiv
