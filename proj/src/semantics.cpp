#include "trajdiv/semantics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace trajdiv {

int coding_sign(Ternary a, Ternary b) {
  if (a == Ternary::Undefined || b == Ternary::Undefined) return 0;
  return a == b ? 1 : -1;
}

int coding_key(const TernaryCoding& c) {
  int key = 0;
  for (int l = 0; l < 6; ++l) {
    const int digit = static_cast<int>(c.bits[l]) + 1;  // F=0, U=1, T=2
    key = key * 3 + digit;
  }
  return key;
}

std::string coding_to_string(const TernaryCoding& c) {
  std::string s(6, 'U');
  for (int l = 0; l < 6; ++l) {
    if (c.bits[l] == Ternary::True) s[l] = 'T';
    if (c.bits[l] == Ternary::False) s[l] = 'F';
  }
  return s;
}

TernaryCoding coding_from_string(const std::string& s) {
  if (s.size() != 6) throw std::invalid_argument("coding string must have 6 characters: " + s);
  TernaryCoding c;
  for (int l = 0; l < 6; ++l) {
    switch (s[l]) {
      case 'T': c.bits[l] = Ternary::True; break;
      case 'F': c.bits[l] = Ternary::False; break;
      case 'U': c.bits[l] = Ternary::Undefined; break;
      default: throw std::invalid_argument("coding string: bad character in " + s);
    }
  }
  return c;
}

TernaryCoding straight_coding() {
  return coding_from_string("FFFFTF");
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// True at/above hi, False at/below lo, undefined in between.
Ternary threshold_bit(double feature, double t_true, double t_false) {
  if (feature >= t_true) return Ternary::True;
  if (feature <= t_false) return Ternary::False;
  return Ternary::Undefined;
}

struct LaneHit {
  bool found = false;
  std::size_t lane = 0;
  double signed_offset = 0.0;
};

LaneHit nearest_lane(const std::vector<Polyline>& lanes, Vec2 p, double radius) {
  LaneHit hit;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const PolylineProjection proj = project_point(lanes[i], p);
    if (proj.distance < best) {
      best = proj.distance;
      hit.lane = i;
      hit.signed_offset = proj.signed_offset;
    }
  }
  hit.found = best <= radius;
  return hit;
}

}  // namespace

TernaryCoding classify(const Trajectory& traj, const std::vector<Polyline>& lanes,
                       const ClassifierConfig& cfg) {
  TernaryCoding c;  // all undefined
  const std::size_t T = traj.size();
  if (T < 4) return c;

  const std::size_t segs = T - 1;
  const std::size_t m = std::min(segs, std::max<std::size_t>(2, segs / 2));
  const double span = static_cast<double>(m) * traj.dt;

  const Vec2 chord_start = traj.pts[m] - traj.pts[0];
  const Vec2 chord_end = traj.pts[T - 1] - traj.pts[T - 1 - m];

  const double v_start = chord_start.norm() / span;
  const double v_end = chord_end.norm() / span;
  const double dv = v_end - v_start;
  c.bits[0] = threshold_bit(dv, cfg.accel_true, cfg.accel_false);
  c.bits[1] = threshold_bit(-dv, cfg.accel_true, cfg.accel_false);

  if (chord_start.norm() > 1e-9 && chord_end.norm() > 1e-9) {
    double dpsi = std::atan2(chord_end.y, chord_end.x) - std::atan2(chord_start.y, chord_start.x);
    while (dpsi > kPi) dpsi -= 2.0 * kPi;
    while (dpsi < -kPi) dpsi += 2.0 * kPi;
    const double dpsi_deg = dpsi * 180.0 / kPi;
    c.bits[2] = threshold_bit(dpsi_deg, cfg.turn_true_deg, cfg.turn_false_deg);
    c.bits[3] = threshold_bit(-dpsi_deg, cfg.turn_true_deg, cfg.turn_false_deg);
  }

  if (!lanes.empty()) {
    const LaneHit start = nearest_lane(lanes, traj.pts.front(), cfg.lane_radius);
    const LaneHit end = nearest_lane(lanes, traj.pts.back(), cfg.lane_radius);
    if (start.found && end.found) {
      // Lateral displacement measured in the start lane's frame.
      const PolylineProjection end_on_start = project_point(lanes[start.lane], traj.pts.back());
      const double disp = std::abs(end_on_start.signed_offset - start.signed_offset);
      const bool moved = end.lane != start.lane;

      if (!moved && disp <= cfg.lane_follow_drift) c.bits[4] = Ternary::True;
      else if (moved || disp >= cfg.lane_change_disp) c.bits[4] = Ternary::False;

      if (moved && disp >= cfg.lane_change_disp) c.bits[5] = Ternary::True;
      else if (!moved && disp <= cfg.lane_follow_drift) c.bits[5] = Ternary::False;
    }
  }
  return c;
}

}  // namespace trajdiv
