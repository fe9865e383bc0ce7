#include "plume/geometry.hpp"

#include <algorithm>

namespace plume {

double distance_to_segment(Point2 p, const Segment& s) {
  const Point2 d = s.b - s.a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return distance(p, s.a);
  const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
  return distance(p, s.a + t * d);
}

bool segments_cross(const Segment& s, const Segment& t, double tol) {
  const double ls = s.length();
  const double lt = t.length();
  if (ls <= tol || lt <= tol) return false;
  const Point2 us = (1.0 / ls) * (s.b - s.a);
  const Point2 ut = (1.0 / lt) * (t.b - t.a);

  // signed distances of s endpoints from the line through t, and vice versa
  const double d1 = cross(ut, s.a - t.a);
  const double d2 = cross(ut, s.b - t.a);
  const double d3 = cross(us, t.a - s.a);
  const double d4 = cross(us, t.b - s.a);

  if (std::abs(d1) <= tol && std::abs(d2) <= tol) {
    double lo = dot(s.a - t.a, ut);
    double hi = dot(s.b - t.a, ut);
    if (lo > hi) std::swap(lo, hi);
    const double overlap = std::min(hi, lt) - std::max(lo, 0.0);
    return overlap > tol;
  }
  const bool s_straddles = (d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol);
  const bool t_straddles = (d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol);
  return s_straddles && t_straddles;
}

double polygon_area(std::span<const Point2> loop) {
  double a = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t k = 0; k < n; ++k) a += cross(loop[k], loop[(k + 1) % n]);
  return 0.5 * a;
}

Point2 polygon_centroid(std::span<const Point2> loop) {
  // shift to the first vertex to limit cancellation for far-from-origin cells
  const std::size_t n = loop.size();
  const Point2 o = loop.front();
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Point2 p = loop[k] - o;
    const Point2 q = loop[(k + 1) % n] - o;
    const double w = cross(p, q);
    a += w;
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  if (a == 0.0) return o;
  return {o.x + cx / (3.0 * a), o.y + cy / (3.0 * a)};
}

bool point_in_convex_polygon(Point2 p, std::span<const Point2> loop, double tol) {
  const std::size_t n = loop.size();
  if (n < 3) return false;
  const double orient = polygon_area(loop) >= 0.0 ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Point2 e = loop[(k + 1) % n] - loop[k];
    const double len = norm(e);
    if (len == 0.0) continue;
    if (orient * cross(e, p - loop[k]) / len < -tol) return false;
  }
  return true;
}

}  // namespace plume
