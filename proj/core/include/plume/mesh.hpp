#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "plume/geometry.hpp"

namespace plume::mesh {

/// Cells are extruded with unit thickness, so volumes are polygon areas
/// times 1 m and face areas are edge lengths times 1 m.
inline constexpr double kThickness = 1.0;
inline constexpr std::size_t kBoundary = std::numeric_limits<std::size_t>::max();

struct Cell {
  std::size_t id = 0;
  std::vector<Point2> vertices;  // counter-clockwise loop
  Point2 centroid;
  double volume = 0.0;
};

struct Face {
  std::size_t left = 0;
  std::size_t right = kBoundary;
  Segment segment;
  double area = 0.0;
  Point2 center;
  Point2 normal;  // unit, outward from `left`
  bool fault = false;

  bool is_boundary() const { return right == kBoundary; }
  bool is_interior() const { return right != kBoundary; }
};

struct Mesh {
  Box domain;
  std::vector<Cell> cells;
  std::vector<Face> faces;
  std::vector<Segment> faults;

  std::size_t num_cells() const { return cells.size(); }
  std::size_t num_faces() const { return faces.size(); }
  /// Face indices touching each cell.
  std::vector<std::vector<std::size_t>> cell_faces() const;
  double total_volume() const;
};

/// Geometric part of the TPFA transmissibility k*A/d per face, in m^3.
/// Boundary faces carry 0.
struct TransmissibilityMap {
  std::vector<double> values;

  double operator[](std::size_t face) const { return values[face]; }
  std::size_t size() const { return values.size(); }
};

Mesh build_cartesian_mesh(std::size_t nx, std::size_t ny, double lx, double ly,
                          const std::vector<Segment>& faults = {});

struct VoronoiOptions {
  /// Spacing of the mirrored seed pairs placed along each fault; <= 0 picks
  /// the mean spacing of the supplied seeds.
  double fault_spacing = 0.0;
  /// Seeds within this radius of the well are replaced by a finer lattice.
  double refine_radius = 100.0;
  /// Seed density multiplier inside refine_radius (4 halves the spacing).
  double refine_density = 4.0;
};

/// Clipped Voronoi mesh of the supplied seeds, with mirrored seed pairs along
/// faults and a refined lattice around the well. Cell 0..n-1 ordering follows
/// the final seed list; `well_cell` (if non-null) receives the cell whose seed
/// is the well point.
Mesh build_voronoi_mesh(const std::vector<Point2>& seeds, Box domain,
                        const std::vector<Segment>& faults, Point2 well,
                        const VoronoiOptions& options = {},
                        std::size_t* well_cell = nullptr);

/// Jittered lattice of roughly nx*ny seeds; deterministic in `seed`.
std::vector<Point2> jittered_grid_seeds(Box domain, std::size_t nx, std::size_t ny,
                                        double jitter, unsigned long long seed);

TransmissibilityMap compute_transmissibilities(const Mesh& mesh,
                                               const std::vector<double>& perm);

/// Index of the cell containing `p`, falling back to the nearest centroid.
std::size_t locate_cell(const Mesh& mesh, Point2 p);

// Plain-text mesh format, see README ("Mesh text format").
void write_mesh_text(std::ostream& out, const Mesh& mesh);
Mesh read_mesh_text(std::istream& in);

/// Legacy-VTK POLYDATA export with optional per-cell scalar fields.
void write_mesh_vtk(std::ostream& out, const Mesh& mesh,
                    const std::map<std::string, std::vector<double>>& cell_fields = {});

}  // namespace plume::mesh
