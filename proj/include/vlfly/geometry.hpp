#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace vlfly {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

inline constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Rotates a world-frame vector into a frame with the given heading.
inline Vec2 to_body(Vec2 world, double heading) {
  const double c = std::cos(heading), s = std::sin(heading);
  return {c * world.x + s * world.y, -s * world.x + c * world.y};
}

inline Vec2 to_world(Vec2 body, double heading) {
  const double c = std::cos(heading), s = std::sin(heading);
  return {c * body.x - s * body.y, s * body.x + c * body.y};
}

struct Rect {
  Vec2 min;
  Vec2 max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Convex polygon, vertices counter-clockwise.
struct Polygon {
  std::vector<Vec2> vertices;
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

Polygon make_box(Vec2 min, Vec2 max);

/// Counter-clockwise convex hull (monotone chain); collinear points dropped.
Polygon convex_hull(std::vector<Vec2> points);

bool contains(const Polygon& poly, Vec2 p);

Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b);

/// Closest point on the polygon boundary.
Vec2 closest_point_on_boundary(const Polygon& poly, Vec2 p);

/// Distance from p to the polygon; 0 when p is inside.
double distance_to_polygon(const Polygon& poly, Vec2 p);

double segment_distance(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1);

/// Minimum distance between segment [a, b] and the polygon (0 on overlap).
double segment_polygon_distance(Vec2 a, Vec2 b, const Polygon& poly);

/// Ray parameter t >= 0 of the first hit with segment [a, b], direction unit length.
std::optional<double> ray_segment(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b);

std::optional<double> ray_circle(Vec2 origin, Vec2 dir, Vec2 center, double radius);

std::optional<double> ray_polygon(Vec2 origin, Vec2 dir, const Polygon& poly);

}  // namespace vlfly
