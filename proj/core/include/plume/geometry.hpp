#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace plume {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

struct Segment {
  Point2 a;
  Point2 b;

  double length() const { return distance(a, b); }
  Point2 midpoint() const { return 0.5 * (a + b); }
};

/// Axis-aligned domain [0, lx] x [0, ly].
struct Box {
  double lx = 0.0;
  double ly = 0.0;

  bool contains(Point2 p, double tol = 0.0) const {
    return p.x >= -tol && p.x <= lx + tol && p.y >= -tol && p.y <= ly + tol;
  }
  Point2 center() const { return {0.5 * lx, 0.5 * ly}; }
  double diameter() const { return std::hypot(lx, ly); }
};

double distance_to_segment(Point2 p, const Segment& s);

/// True when the two segments cross at an interior point or overlap
/// collinearly over a positive length. Touching at a single endpoint does
/// not count.
bool segments_cross(const Segment& s, const Segment& t, double tol);

/// Signed area (positive for counter-clockwise loops).
double polygon_area(std::span<const Point2> loop);
Point2 polygon_centroid(std::span<const Point2> loop);
bool point_in_convex_polygon(Point2 p, std::span<const Point2> loop, double tol = 0.0);

}  // namespace plume
