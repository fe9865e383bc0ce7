#include "plume/geomodel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "plume/error.hpp"

namespace plume::geo {

std::vector<double> GeoModel::perm_md() const {
  std::vector<double> out(perm.size());
  std::transform(perm.begin(), perm.end(), out.begin(), [](double k) { return k / kMilliDarcy; });
  return out;
}

std::array<double, kNumCellTypes> GeoModel::one_hot(std::size_t cell) const {
  std::array<double, kNumCellTypes> v{};
  v[static_cast<std::size_t>(cell_type.at(cell))] = 1.0;
  return v;
}

std::vector<double> sample_log_perm_field(const mesh::Mesh& mesh, const LogPermParams& params,
                                          std::uint64_t seed) {
  if (!(params.std_ln >= 0.0)) throw InvalidArgument("sample_log_perm_field: std_ln must be >= 0");
  if (!(params.corr_len > 0.0)) throw InvalidArgument("sample_log_perm_field: corr_len must be > 0");
  const std::size_t n = mesh.num_cells();
  std::vector<double> perm(n, std::exp(params.mean_ln) * kMilliDarcy);
  if (params.std_ln == 0.0 || n == 0) return perm;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Point2 pa = mesh.cells[a].centroid;
    const Point2 pb = mesh.cells[b].centroid;
    return pa.x < pb.x || (pa.x == pb.x && pa.y < pb.y);
  });

  const double var = params.std_ln * params.std_ln;
  Eigen::MatrixXd cov(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      const double d = distance(mesh.cells[order[a]].centroid, mesh.cells[order[b]].centroid);
      cov(a, b) = cov(b, a) = var * std::exp(-d / params.corr_len);
    }
    cov(a, a) += 1e-10 * var;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw FactorizationFailure("sample_log_perm_field: covariance is not positive definite");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (std::size_t a = 0; a < n; ++a) z(a) = normal(rng);
  const Eigen::VectorXd field = llt.matrixL() * z;
  for (std::size_t a = 0; a < n; ++a) {
    perm[order[a]] = std::exp(params.mean_ln + field(a)) * kMilliDarcy;
  }
  return perm;
}

Point2 sample_well_location(Box domain, std::uint64_t seed) {
  if (domain.lx < 200.0 || domain.ly < 200.0) {
    throw InvalidArgument("sample_well_location: domain smaller than the 200 m well box");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  const Point2 c = domain.center();
  const double x = c.x + u(rng);
  const double y = c.y + u(rng);
  return {x, y};
}

std::vector<CellType> assign_cell_types(const mesh::Mesh& mesh, std::size_t well_cell) {
  if (well_cell >= mesh.num_cells()) throw InvalidArgument("assign_cell_types: invalid well cell id");
  std::vector<CellType> types(mesh.num_cells(), CellType::interior);
  std::vector<bool> on_fault(mesh.num_cells(), false);
  std::vector<bool> on_boundary(mesh.num_cells(), false);
  for (const mesh::Face& f : mesh.faces) {
    if (f.is_boundary()) {
      on_boundary[f.left] = true;
      if (f.fault) on_fault[f.left] = true;
    } else if (f.fault) {
      on_fault[f.left] = true;
      on_fault[f.right] = true;
    }
  }
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (i == well_cell) types[i] = CellType::injector;
    else if (on_fault[i]) types[i] = CellType::fault_adjacent;
    else if (on_boundary[i]) types[i] = CellType::boundary;
  }
  return types;
}

GeoModel make_geomodel(const mesh::Mesh& mesh, std::size_t well_cell, Point2 well,
                       std::vector<double> perm, double porosity) {
  if (!(porosity > 0.0 && porosity < 1.0)) throw InvalidArgument("make_geomodel: porosity must be in (0,1)");
  if (perm.size() != mesh.num_cells()) throw InvalidArgument("make_geomodel: permeability size mismatch");
  GeoModel g;
  g.perm = std::move(perm);
  g.porosity.assign(mesh.num_cells(), porosity);
  g.well_cell = well_cell;
  g.well = well;
  g.cell_type = assign_cell_types(mesh, well_cell);
  return g;
}

}  // namespace plume::geo
