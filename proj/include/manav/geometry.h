#pragma once

#include <algorithm>

#include "manav/vec2.h"

namespace manav {

// Closest point on segment [a, b] to p.
inline Point closest_point_on_segment(const Point& a, const Point& b, const Point& p) {
  const Vec2 ab = b - a;
  const double len_sq = norm_sq(ab);
  if (len_sq == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len_sq, 0.0, 1.0);
  return a + ab * t;
}

inline double dist_point_segment(const Point& p, const Point& a, const Point& b) {
  return distance(p, closest_point_on_segment(a, b, p));
}

inline bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double d1 = det(b - a, c - a);
  const double d2 = det(b - a, d - a);
  const double d3 = det(d - c, a - c);
  const double d4 = det(d - c, b - c);
  if (((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0))) return true;
  // Collinear / touching cases degrade to distance checks by the callers.
  return false;
}

inline double dist_segment_segment(const Point& a, const Point& b, const Point& c,
                                   const Point& d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  double best = dist_point_segment(a, c, d);
  best = std::min(best, dist_point_segment(b, c, d));
  best = std::min(best, dist_point_segment(c, a, b));
  best = std::min(best, dist_point_segment(d, a, b));
  return best;
}

struct Aabb {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  bool contains(const Point& p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

inline double dist_point_aabb(const Point& p, const Aabb& box) {
  const double dx = std::max({box.x0 - p.x, 0.0, p.x - box.x1});
  const double dy = std::max({box.y0 - p.y, 0.0, p.y - box.y1});
  return std::sqrt(dx * dx + dy * dy);
}

// Exact distance between a segment and an axis-aligned box (0 when they touch).
inline double dist_segment_aabb(const Point& a, const Point& b, const Aabb& box) {
  if (box.contains(a) || box.contains(b)) return 0.0;
  const Point c00{box.x0, box.y0}, c10{box.x1, box.y0}, c11{box.x1, box.y1}, c01{box.x0, box.y1};
  double best = dist_segment_segment(a, b, c00, c10);
  best = std::min(best, dist_segment_segment(a, b, c10, c11));
  best = std::min(best, dist_segment_segment(a, b, c11, c01));
  best = std::min(best, dist_segment_segment(a, b, c01, c00));
  return best;
}

// True iff the segment a->b passes through the open interior of the box with
// positive length; grazing an edge or touching a corner does not count.
inline bool segment_crosses_interior(const Point& a, const Point& b, const Aabb& box) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  auto clip = [&](double p, double q) {
    if (p == 0.0) return q >= 0.0;
    const double r = q / p;
    if (p < 0.0) {
      if (r > t1) return false;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return false;
      if (r < t1) t1 = r;
    }
    return true;
  };
  if (!clip(-d.x, a.x - box.x0)) return false;
  if (!clip(d.x, box.x1 - a.x)) return false;
  if (!clip(-d.y, a.y - box.y0)) return false;
  if (!clip(d.y, box.y1 - a.y)) return false;
  if (t1 <= t0) return false;
  const Point m = a + d * (0.5 * (t0 + t1));
  return m.x > box.x0 && m.x < box.x1 && m.y > box.y0 && m.y < box.y1;
}

}  // namespace manav
