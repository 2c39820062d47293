#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "trajdiv/geom.hpp"

namespace trajdiv {

// Three-valued maneuver label. Undefined marks cases where no boolean answer
// makes sense (e.g. lane bits with no lane nearby) and drops the label from
// every similarity comparison.
enum class Ternary : std::int8_t { False = -1, Undefined = 0, True = 1 };

// Fixed label order: accelerate, decelerate, turn-left, turn-right,
// lane-follow, lane-change.
struct TernaryCoding {
  std::array<Ternary, 6> bits{Ternary::Undefined, Ternary::Undefined, Ternary::Undefined,
                              Ternary::Undefined, Ternary::Undefined, Ternary::Undefined};

  bool operator==(const TernaryCoding&) const = default;

  Ternary accelerate() const { return bits[0]; }
  Ternary decelerate() const { return bits[1]; }
  Ternary turn_left() const { return bits[2]; }
  Ternary turn_right() const { return bits[3]; }
  Ternary lane_follow() const { return bits[4]; }
  Ternary lane_change() const { return bits[5]; }
};

inline constexpr std::array<const char*, 6> kCodingLabels = {
    "accelerate", "decelerate", "turn-left", "turn-right", "lane-follow", "lane-change"};

// +1 if both defined and equal, -1 if both defined and different, 0 if
// either side is undefined.
int coding_sign(Ternary a, Ternary b);

// Injective key over the 3^6 coding space, for distinct-coding counts.
int coding_key(const TernaryCoding& c);

// 6 characters over {T,F,U} in the fixed label order.
std::string coding_to_string(const TernaryCoding& c);
TernaryCoding coding_from_string(const std::string& s);

struct ClassifierConfig {
  // Speed-change thresholds on dv (m/s): True at/above, False at/below.
  double accel_true = 1.0;
  double accel_false = 0.2;
  // Heading-change thresholds (degrees).
  double turn_true_deg = 30.0;
  double turn_false_deg = 5.0;
  // Lane geometry thresholds (m).
  double lane_change_disp = 1.75;  // half a 3.5 m lane width
  double lane_follow_drift = 0.5;
  double lane_radius = 10.0;
};

// Surrogate maneuver classifier. Speeds and headings come from
// half-trajectory chords, which keeps the features exact on noise-free
// constructions and usable under measurement noise. Trajectories shorter
// than 4 points classify as all-undefined rather than erroring.
TernaryCoding classify(const Trajectory& traj, const std::vector<Polyline>& lanes,
                       const ClassifierConfig& cfg = {});

// The coding of plain straight constant-speed lane driving; everything else
// counts as a rare event.
TernaryCoding straight_coding();

}  // namespace trajdiv
