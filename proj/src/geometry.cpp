#include "vlfly/geometry.hpp"

#include <algorithm>
#include <limits>

namespace vlfly {

double wrap_angle(double a) {
  if (a > -kPi && a <= kPi) return a;
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w <= 0.0) w += 2.0 * kPi;
  return w - kPi;
}

Polygon make_box(Vec2 min, Vec2 max) {
  return Polygon{{{min.x, min.y}, {max.x, min.y}, {max.x, max.y}, {min.x, max.y}}};
}

Polygon convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](Vec2 a, Vec2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) return Polygon{points};

  std::vector<Vec2> hull(2 * points.size());
  std::size_t k = 0;
  for (const Vec2& p : points) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    const Vec2 p = points[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return Polygon{std::move(hull)};
}

bool contains(const Polygon& poly, Vec2 p) {
  const auto& v = poly.vertices;
  if (v.size() < 3) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 a = v[i];
    const Vec2 b = v[(i + 1) % v.size()];
    if (cross(b - a, p - a) < 0.0) return false;
  }
  return true;
}

Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

Vec2 closest_point_on_boundary(const Polygon& poly, Vec2 p) {
  const auto& v = poly.vertices;
  Vec2 best = v.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 c = closest_point_on_segment(p, v[i], v[(i + 1) % v.size()]);
    const double d = distance(p, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double distance_to_polygon(const Polygon& poly, Vec2 p) {
  if (contains(poly, p)) return 0.0;
  return distance(p, closest_point_on_boundary(poly, p));
}

namespace {

bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  const double d1 = cross(a1 - a0, b0 - a0);
  const double d2 = cross(a1 - a0, b1 - a0);
  const double d3 = cross(b1 - b0, a0 - b0);
  const double d4 = cross(b1 - b0, a1 - b0);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 &&
         d3 != 0 && d4 != 0;
}

}  // namespace

double segment_distance(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  if (segments_intersect(a0, a1, b0, b1)) return 0.0;
  return std::min({distance(a0, closest_point_on_segment(a0, b0, b1)),
                   distance(a1, closest_point_on_segment(a1, b0, b1)),
                   distance(b0, closest_point_on_segment(b0, a0, a1)),
                   distance(b1, closest_point_on_segment(b1, a0, a1))});
}

double segment_polygon_distance(Vec2 a, Vec2 b, const Polygon& poly) {
  if (contains(poly, a) || contains(poly, b)) return 0.0;
  const auto& v = poly.vertices;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    best = std::min(best, segment_distance(a, b, v[i], v[(i + 1) % v.size()]));
    if (best == 0.0) break;
  }
  return best;
}

std::optional<double> ray_segment(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b) {
  const Vec2 e = b - a;
  const double denom = cross(dir, e);
  if (denom == 0.0) return std::nullopt;
  const Vec2 w = a - origin;
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

std::optional<double> ray_circle(Vec2 origin, Vec2 dir, Vec2 center, double radius) {
  const Vec2 oc = origin - center;
  const double b = dot(oc, dir);
  const double c = dot(oc, oc) - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  const double t0 = -b - s;
  if (t0 >= 0.0) return t0;
  const double t1 = -b + s;
  if (t1 >= 0.0) return 0.0;  // origin inside the disk
  return std::nullopt;
}

std::optional<double> ray_polygon(Vec2 origin, Vec2 dir, const Polygon& poly) {
  if (contains(poly, origin)) return 0.0;
  std::optional<double> best;
  const auto& v = poly.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (auto t = ray_segment(origin, dir, v[i], v[(i + 1) % v.size()])) {
      if (!best || *t < *best) best = t;
    }
  }
  return best;
}

}  // namespace vlfly
