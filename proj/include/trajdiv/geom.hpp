#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace trajdiv {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

// Ordered lane centerline vertices in meters. At least 2 points, consecutive
// points separated by more than 1e-9 m.
struct Polyline {
  std::vector<Vec2> pts;
};

Polyline make_polyline(std::vector<Vec2> pts);
double polyline_length(const Polyline& p);

// Fixed-rate 2D trajectory. T >= 2, dt > 0, finite coordinates.
struct Trajectory {
  double dt = 0.1;
  std::vector<Vec2> pts;

  std::size_t size() const { return pts.size(); }
};

Trajectory make_trajectory(double dt, std::vector<Vec2> pts);

// Rigid transform: world = R * local + t.
struct RigidFrame {
  double c = 1.0, s = 0.0;
  Vec2 t;

  Vec2 apply(Vec2 p) const { return {c * p.x - s * p.y + t.x, s * p.x + c * p.y + t.y}; }
  Vec2 apply_rot(Vec2 p) const { return {c * p.x - s * p.y, s * p.x + c * p.y}; }
  Vec2 invert(Vec2 p) const {
    const Vec2 d = p - t;
    return {c * d.x + s * d.y, -s * d.x + c * d.y};
  }
  Vec2 invert_rot(Vec2 p) const { return {c * p.x + s * p.y, -s * p.x + c * p.y}; }
};

// Local quadratic lane model: lateral offset of the centerline, measured in
// the tangent frame at the road point closest to the vehicle, as a function
// of signed arclength from that point. Positive offsets are to the left of
// the tangent direction.
struct LaneCurve {
  Vec2 origin;
  Vec2 tangent;  // unit
  double a0 = 0.0, a1 = 0.0, a2 = 0.0;
  double s_min = 0.0, s_max = 0.0;
};

// Equal arclength spacing; endpoints preserved, final segment may be short.
Polyline arclength_resample(const Polyline& p, double step);

LaneCurve fit_lane_curve(const Polyline& p, Vec2 vehicle_pos, double window,
                         double resample_step = 1.0);

// Nearest point on the polyline (exact over segments).
struct PolylineProjection {
  double distance = 0.0;
  double signed_offset = 0.0;  // positive left of travel direction
  double arclength = 0.0;      // along the polyline to the closest point
  Vec2 closest;
};

PolylineProjection project_point(const Polyline& p, Vec2 q);

double ade(const Trajectory& pred, const Trajectory& truth);
double fde(const Trajectory& pred, const Trajectory& truth);

}  // namespace trajdiv
