#include "plume/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "plume/error.hpp"

namespace plume::mesh {

namespace {

// Box sides, counter-clockwise from the bottom edge.
constexpr long kBottom = -1;
constexpr long kRight = -2;
constexpr long kTop = -3;
constexpr long kLeft = -4;

struct TaggedVertex {
  Point2 p;
  long tag;  // generator of the edge starting at p: neighbor seed (>= 0) or box side (< 0)
};

using Polygon = std::vector<TaggedVertex>;

Polygon box_polygon(Box box) {
  return {{{0.0, 0.0}, kBottom}, {{box.lx, 0.0}, kRight}, {{box.lx, box.ly}, kTop}, {{0.0, box.ly}, kLeft}};
}

// Keeps {x : (x - m).u <= tol}; edges created by the clip line get `tag`.
Polygon clip(const Polygon& poly, Point2 m, Point2 u, long tag, double tol) {
  Polygon out;
  out.reserve(poly.size() + 2);
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const TaggedVertex& a = poly[k];
    const TaggedVertex& b = poly[(k + 1) % n];
    const double da = dot(a.p - m, u);
    const double db = dot(b.p - m, u);
    const bool a_in = da <= tol;
    const bool b_in = db <= tol;
    auto cut = [&] {
      const double t = da / (da - db);
      return a.p + t * (b.p - a.p);
    };
    if (a_in && b_in) {
      out.push_back(a);
    } else if (a_in && !b_in) {
      out.push_back(a);
      if (da < -tol) out.push_back({cut(), tag});
      else out.back().tag = tag;  // a lies on the clip line
    } else if (!a_in && b_in) {
      if (db < -tol) out.push_back({cut(), a.tag});
    }
  }
  return out;
}

void merge_close_vertices(Polygon& poly, double tol) {
  bool changed = true;
  while (changed && poly.size() >= 3) {
    changed = false;
    const std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t next = (k + 1) % n;
      if (distance(poly[k].p, poly[next].p) <= tol) {
        // edge k -> next is degenerate; k inherits the edge leaving `next`
        poly[k].tag = poly[next].tag;
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(next));
        changed = true;
        break;
      }
    }
  }
}

Point2 outward_normal(Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len = norm(d);
  return {d.y / len, -d.x / len};
}

void flag_faults(Mesh& mesh, double tol) {
  for (Face& f : mesh.faces) {
    f.fault = std::any_of(mesh.faults.begin(), mesh.faults.end(),
                          [&](const Segment& s) { return segments_cross(f.segment, s, tol); });
  }
}

Face make_face(std::size_t left, std::size_t right, Point2 a, Point2 b) {
  Face f;
  f.left = left;
  f.right = right;
  f.segment = {a, b};
  f.area = distance(a, b) * kThickness;
  f.center = 0.5 * (a + b);
  f.normal = outward_normal(a, b);
  return f;
}

void finish_cell(Cell& c) {
  c.volume = polygon_area(c.vertices) * kThickness;
  c.centroid = polygon_centroid(c.vertices);
}

}  // namespace

std::vector<std::vector<std::size_t>> Mesh::cell_faces() const {
  std::vector<std::vector<std::size_t>> out(cells.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    out[faces[f].left].push_back(f);
    if (faces[f].is_interior()) out[faces[f].right].push_back(f);
  }
  return out;
}

double Mesh::total_volume() const {
  double v = 0.0;
  for (const Cell& c : cells) v += c.volume;
  return v;
}

Mesh build_cartesian_mesh(std::size_t nx, std::size_t ny, double lx, double ly,
                          const std::vector<Segment>& faults) {
  if (nx == 0 || ny == 0 || !(lx > 0.0) || !(ly > 0.0)) {
    throw InvalidArgument("build_cartesian_mesh: dimensions must be positive");
  }
  Mesh mesh;
  mesh.domain = {lx, ly};
  mesh.faults = faults;
  const double dx = lx / static_cast<double>(nx);
  const double dy = ly / static_cast<double>(ny);
  auto id = [nx](std::size_t i, std::size_t j) { return j * nx + i; };
  auto xc = [&](std::size_t i) { return static_cast<double>(i) * dx; };
  auto yc = [&](std::size_t j) { return static_cast<double>(j) * dy; };
  // the last grid line is pinned to the domain edge to avoid round-off drift
  auto xg = [&](std::size_t i) { return i == nx ? lx : xc(i); };
  auto yg = [&](std::size_t j) { return j == ny ? ly : yc(j); };

  mesh.cells.resize(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      Cell& c = mesh.cells[id(i, j)];
      c.id = id(i, j);
      c.vertices = {{xg(i), yg(j)}, {xg(i + 1), yg(j)}, {xg(i + 1), yg(j + 1)}, {xg(i), yg(j + 1)}};
      c.volume = dx * dy * kThickness;
      c.centroid = {0.5 * (xg(i) + xg(i + 1)), 0.5 * (yg(j) + yg(j + 1))};
    }
  }
  // vertical faces (normal +x from left cell)
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i <= nx; ++i) {
      const Point2 lo{xg(i), yg(j)};
      const Point2 hi{xg(i), yg(j + 1)};
      if (i == 0) mesh.faces.push_back(make_face(id(0, j), kBoundary, hi, lo));
      else if (i == nx) mesh.faces.push_back(make_face(id(nx - 1, j), kBoundary, lo, hi));
      else mesh.faces.push_back(make_face(id(i - 1, j), id(i, j), lo, hi));
    }
  }
  // horizontal faces (normal +y from lower cell)
  for (std::size_t j = 0; j <= ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const Point2 lo{xg(i), yg(j)};
      const Point2 hi{xg(i + 1), yg(j)};
      if (j == 0) mesh.faces.push_back(make_face(id(i, 0), kBoundary, lo, hi));
      else if (j == ny) mesh.faces.push_back(make_face(id(i, ny - 1), kBoundary, hi, lo));
      else mesh.faces.push_back(make_face(id(i, j - 1), id(i, j), hi, lo));
    }
  }
  flag_faults(mesh, 1e-9 * mesh.domain.diameter());
  return mesh;
}

std::vector<Point2> jittered_grid_seeds(Box domain, std::size_t nx, std::size_t ny,
                                        double jitter, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double dx = domain.lx / static_cast<double>(nx);
  const double dy = domain.ly / static_cast<double>(ny);
  std::vector<Point2> pts;
  pts.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = (static_cast<double>(i) + 0.5 + jitter * u(rng)) * dx;
      const double y = (static_cast<double>(j) + 0.5 + jitter * u(rng)) * dy;
      pts.push_back({x, y});
    }
  }
  return pts;
}

Mesh build_voronoi_mesh(const std::vector<Point2>& seeds, Box domain,
                        const std::vector<Segment>& faults, Point2 well,
                        const VoronoiOptions& options, std::size_t* well_cell) {
  if (!(domain.lx > 0.0) || !(domain.ly > 0.0)) {
    throw InvalidArgument("build_voronoi_mesh: domain must have positive extent");
  }
  if (seeds.empty()) throw InvalidArgument("build_voronoi_mesh: no seed points");
  const double tol = 1e-9 * domain.diameter();
  if (!domain.contains(well, tol)) throw InvalidArgument("build_voronoi_mesh: well outside domain");

  for (std::size_t k = 0; k < seeds.size(); ++k) {
    if (!domain.contains(seeds[k], tol)) {
      std::ostringstream msg;
      msg << "seed " << k << " (" << seeds[k].x << ", " << seeds[k].y << ") lies outside the domain";
      throw MeshingFailure(msg.str());
    }
  }
  {
    // duplicate detection on a sorted copy
    std::vector<std::size_t> order(seeds.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return seeds[a].x < seeds[b].x || (seeds[a].x == seeds[b].x && seeds[a].y < seeds[b].y);
    });
    for (std::size_t a = 0; a < order.size(); ++a) {
      for (std::size_t b = a + 1; b < order.size(); ++b) {
        if (seeds[order[b]].x - seeds[order[a]].x > tol) break;
        if (distance(seeds[order[a]], seeds[order[b]]) <= tol) {
          std::ostringstream msg;
          msg << "duplicate seed " << std::max(order[a], order[b]) << " at ("
              << seeds[order[b]].x << ", " << seeds[order[b]].y << ")";
          throw MeshingFailure(msg.str());
        }
      }
    }
  }

  const double spacing = options.fault_spacing > 0.0
                             ? options.fault_spacing
                             : std::sqrt(domain.lx * domain.ly / static_cast<double>(seeds.size()));
  const double radius = std::max(0.0, options.refine_radius);
  const double fine = spacing / std::sqrt(std::max(1.0, options.refine_density));

  auto near_fault = [&](Point2 p, double d, const Segment* skip = nullptr) {
    for (const Segment& s : faults) {
      if (&s == skip) continue;
      if (distance_to_segment(p, s) < d) return true;
    }
    return false;
  };

  std::vector<Point2> pts;
  pts.reserve(seeds.size() + 64);
  for (const Point2& p : seeds) {
    if (near_fault(p, spacing)) continue;
    if (radius > 0.0 && distance(p, well) < radius) continue;
    pts.push_back(p);
  }
  const std::size_t generated_begin = pts.size();
  auto add_generated = [&](Point2 p, double min_gap) {
    if (!domain.contains(p, tol)) return;
    for (std::size_t k = generated_begin; k < pts.size(); ++k) {
      if (distance(pts[k], p) < min_gap) return;
    }
    pts.push_back(p);
  };

  // mirrored pairs: the bisector of each pair lies on the fault line
  for (const Segment& s : faults) {
    const double len = s.length();
    if (len <= tol) continue;
    const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing)));
    const double step = len / static_cast<double>(n);
    const Point2 u = (1.0 / len) * (s.b - s.a);
    const Point2 nrm{-u.y, u.x};
    const double offset = 0.5 * step;
    for (std::size_t k = 0; k < n; ++k) {
      const Point2 c = s.a + ((static_cast<double>(k) + 0.5) * step) * u;
      for (double side : {1.0, -1.0}) {
        const Point2 p = c + (side * offset) * nrm;
        if (near_fault(p, 0.99 * offset, &s)) continue;
        if (distance(p, well) < 0.25 * fine) continue;
        add_generated(p, 1e-3 * step);
      }
    }
  }

  if (radius > 0.0) {
    const long reach = static_cast<long>(std::floor(radius / fine));
    for (long j = -reach; j <= reach; ++j) {
      for (long i = -reach; i <= reach; ++i) {
        if (i == 0 && j == 0) continue;
        const Point2 p = well + Point2{static_cast<double>(i) * fine, static_cast<double>(j) * fine};
        if (distance(p, well) > radius) continue;
        if (near_fault(p, 0.5 * fine)) continue;
        add_generated(p, 0.25 * fine);
      }
    }
  }

  std::size_t well_index = pts.size();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (distance(pts[k], well) <= tol) {
      well_index = k;
      break;
    }
  }
  if (well_index == pts.size()) pts.push_back(well);

  // Voronoi cells by successive half-plane clipping of the box
  const std::size_t n = pts.size();
  std::vector<Polygon> polys(n);
  std::vector<std::size_t> order(n);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t j = 0; j < n; ++j) dist[j] = distance(pts[i], pts[j]);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    Polygon poly = box_polygon(domain);
    double reach = 0.0;
    for (const auto& v : poly) reach = std::max(reach, distance(v.p, pts[i]));
    for (std::size_t j : order) {
      if (j == i) continue;
      if (0.5 * dist[j] > reach + tol) break;
      const Point2 u = pts[j] - pts[i];
      const double ulen = norm(u);
      const Point2 m = 0.5 * (pts[i] + pts[j]);
      poly = clip(poly, m, (1.0 / ulen) * u, static_cast<long>(j), tol);
      merge_close_vertices(poly, tol);
      if (poly.size() < 3) break;
      reach = 0.0;
      for (const auto& v : poly) reach = std::max(reach, distance(v.p, pts[i]));
    }
    if (poly.size() < 3) {
      std::ostringstream msg;
      msg << "seed " << i << " (" << pts[i].x << ", " << pts[i].y << ") produced a degenerate cell";
      throw MeshingFailure(msg.str());
    }
    polys[i] = std::move(poly);
  }

  Mesh mesh;
  mesh.domain = domain;
  mesh.faults = faults;
  mesh.cells.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Cell& c = mesh.cells[i];
    c.id = i;
    for (const auto& v : polys[i]) c.vertices.push_back(v.p);
    finish_cell(c);
    if (!(c.volume > 0.0)) {
      std::ostringstream msg;
      msg << "seed " << i << " (" << pts[i].x << ", " << pts[i].y << ") produced a zero-area cell";
      throw MeshingFailure(msg.str());
    }
  }

  // Pair edges across neighbors. Each interior face is taken from the lower
  // cell id when both sides saw it, from whichever side did otherwise.
  struct EdgeRef {
    std::size_t cell;
    Point2 a, b;
  };
  std::map<std::pair<std::size_t, std::size_t>, std::vector<EdgeRef>> shared;
  for (std::size_t i = 0; i < n; ++i) {
    const Polygon& poly = polys[i];
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Point2 a = poly[k].p;
      const Point2 b = poly[(k + 1) % poly.size()].p;
      if (distance(a, b) <= tol) continue;
      const long tag = poly[k].tag;
      if (tag < 0) {
        mesh.faces.push_back(make_face(i, kBoundary, a, b));
      } else {
        const auto j = static_cast<std::size_t>(tag);
        shared[{std::min(i, j), std::max(i, j)}].push_back({i, a, b});
      }
    }
  }
  for (const auto& [key, refs] : shared) {
    const EdgeRef* pick = &refs.front();
    for (const EdgeRef& r : refs) {
      if (r.cell == key.first) pick = &r;
    }
    const std::size_t other = pick->cell == key.first ? key.second : key.first;
    mesh.faces.push_back(make_face(pick->cell, other, pick->a, pick->b));
  }
  flag_faults(mesh, tol);
  if (well_cell) *well_cell = well_index;
  return mesh;
}

TransmissibilityMap compute_transmissibilities(const Mesh& mesh, const std::vector<double>& perm) {
  if (perm.size() != mesh.num_cells()) {
    throw InvalidArgument("compute_transmissibilities: permeability size does not match cell count");
  }
  for (double k : perm) {
    if (!(k > 0.0)) throw InvalidArgument("compute_transmissibilities: permeability must be positive");
  }
  const double tiny = 1e-12 * mesh.domain.diameter();
  auto half = [&](std::size_t cell, const Face& f, double sign) {
    const Point2 d = f.center - mesh.cells[cell].centroid;
    const double d2 = dot(d, d);
    if (std::sqrt(d2) <= tiny) {
      std::ostringstream msg;
      msg << "face center coincides with centroid of cell " << cell;
      throw DegenerateGeometry(msg.str());
    }
    return perm[cell] * f.area * std::max(0.0, sign * dot(d, f.normal)) / d2;
  };
  TransmissibilityMap out;
  out.values.assign(mesh.num_faces(), 0.0);
  for (std::size_t fi = 0; fi < mesh.num_faces(); ++fi) {
    const Face& f = mesh.faces[fi];
    if (f.is_boundary() || f.fault) continue;
    const double al = half(f.left, f, 1.0);
    const double ar = half(f.right, f, -1.0);
    out.values[fi] = (al > 0.0 && ar > 0.0) ? 1.0 / (1.0 / al + 1.0 / ar) : 0.0;
  }
  return out;
}

std::size_t locate_cell(const Mesh& mesh, Point2 p) {
  const double tol = 1e-9 * mesh.domain.diameter();
  for (const Cell& c : mesh.cells) {
    if (point_in_convex_polygon(p, c.vertices, tol)) return c.id;
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Cell& c : mesh.cells) {
    const double d = distance(c.centroid, p);
    if (d < best_d) {
      best_d = d;
      best = c.id;
    }
  }
  return best;
}

}  // namespace plume::mesh
