#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "plume/mesh.hpp"

namespace plume::geo {

inline constexpr double kMilliDarcy = 9.869233e-16;  // m^2

/// One-hot column order used for node features.
enum class CellType : int { interior = 0, injector = 1, fault_adjacent = 2, boundary = 3 };
inline constexpr std::size_t kNumCellTypes = 4;

struct LogPermParams {
  double mean_ln = 3.912;  // ln(mD)
  double std_ln = 0.5;     // ln(mD)
  double corr_len = 200.0; // m, exponential covariance
};

struct GeoModel {
  std::vector<double> perm;      // m^2
  std::vector<double> porosity;  // fraction
  std::size_t well_cell = 0;
  Point2 well;
  std::vector<CellType> cell_type;

  std::vector<double> perm_md() const;
  std::array<double, kNumCellTypes> one_hot(std::size_t cell) const;
};

/// ln k (mD) drawn from a Gaussian field with exponential covariance,
/// factorized in a canonical centroid ordering so the field does not depend
/// on cell numbering. Returns permeability in m^2.
std::vector<double> sample_log_perm_field(const mesh::Mesh& mesh, const LogPermParams& params,
                                          std::uint64_t seed);

/// Uniform draw from the centered 200 m x 200 m box.
Point2 sample_well_location(Box domain, std::uint64_t seed);

/// Priority: injector > fault-adjacent > boundary > interior.
std::vector<CellType> assign_cell_types(const mesh::Mesh& mesh, std::size_t well_cell);

GeoModel make_geomodel(const mesh::Mesh& mesh, std::size_t well_cell, Point2 well,
                       std::vector<double> perm, double porosity = 0.2);

}  // namespace plume::geo
