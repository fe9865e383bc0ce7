#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "plume/error.hpp"
#include "plume/geomodel.hpp"

namespace geo = plume::geo;
namespace mesh = plume::mesh;

TEST(PermField, ZeroStdGivesFiftyMilliDarcy) {
  const auto m = mesh::build_cartesian_mesh(5, 5, 1000, 1000);
  geo::LogPermParams p;
  p.std_ln = 0.0;
  const auto k = geo::sample_log_perm_field(m, p, 3);
  for (double v : k) EXPECT_NEAR(v / geo::kMilliDarcy, std::exp(3.912), 1e-9);
  EXPECT_NEAR(k.front() / geo::kMilliDarcy, 50.0, 0.01);
}

TEST(PermField, DeterministicInSeed) {
  const auto m = mesh::build_cartesian_mesh(8, 8, 1000, 1000);
  EXPECT_EQ(geo::sample_log_perm_field(m, {}, 42), geo::sample_log_perm_field(m, {}, 42));
  EXPECT_NE(geo::sample_log_perm_field(m, {}, 42), geo::sample_log_perm_field(m, {}, 43));
}

TEST(PermField, IndependentOfCellNumbering) {
  auto m = mesh::build_cartesian_mesh(6, 6, 1000, 1000);
  const auto k = geo::sample_log_perm_field(m, {}, 5);
  mesh::Mesh r = m;
  std::reverse(r.cells.begin(), r.cells.end());
  for (std::size_t i = 0; i < r.cells.size(); ++i) r.cells[i].id = i;
  const auto kr = geo::sample_log_perm_field(r, {}, 5);
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_DOUBLE_EQ(kr[k.size() - 1 - i], k[i]);
}

TEST(PermField, MeanOfLogPermMatchesDeclaredMoments) {
  const auto m = mesh::build_cartesian_mesh(25, 20, 1000, 1000);
  const geo::LogPermParams p;
  const std::size_t n = m.num_cells();
  // effective sample count of the mean under exponential covariance
  double cov_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cov_sum += std::exp(-plume::distance(m.cells[i].centroid, m.cells[j].centroid) / p.corr_len);
    }
  }
  const double n_eff = static_cast<double>(n * n) / cov_sum;
  const int seeds = 20;
  double grand = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto k = geo::sample_log_perm_field(m, p, static_cast<std::uint64_t>(s));
    double mean = 0.0;
    for (double v : k) mean += std::log(v / geo::kMilliDarcy);
    mean /= static_cast<double>(n);
    EXPECT_LT(std::abs(mean - p.mean_ln), 4.0 * p.std_ln / std::sqrt(n_eff));
    grand += mean / seeds;
  }
  EXPECT_LT(std::abs(grand - p.mean_ln), 3.0 * p.std_ln / std::sqrt(n_eff * seeds));
}

TEST(WellLocation, InsideCentralBox) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const plume::Point2 w = geo::sample_well_location({1000, 1000}, s);
    EXPECT_LE(std::abs(w.x - 500.0), 100.0);
    EXPECT_LE(std::abs(w.y - 500.0), 100.0);
  }
  EXPECT_EQ(geo::sample_well_location({1000, 1000}, 9), geo::sample_well_location({1000, 1000}, 9));
}

TEST(WellLocation, DrawsSpanTheBox) {
  double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const plume::Point2 w = geo::sample_well_location({1000, 1000}, s);
    xmin = std::min(xmin, w.x);
    xmax = std::max(xmax, w.x);
    ymin = std::min(ymin, w.y);
    ymax = std::max(ymax, w.y);
  }
  EXPECT_LT(xmin, 402.0);
  EXPECT_GT(xmax, 598.0);
  EXPECT_LT(ymin, 402.0);
  EXPECT_GT(ymax, 598.0);
}

TEST(CellTypes, SingleCellIsInjector) {
  const auto m = mesh::build_cartesian_mesh(1, 1, 1, 1);
  EXPECT_EQ(geo::assign_cell_types(m, 0)[0], geo::CellType::injector);
}

TEST(CellTypes, TwoByOne) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  const auto t = geo::assign_cell_types(m, 0);
  EXPECT_EQ(t[0], geo::CellType::injector);
  EXPECT_EQ(t[1], geo::CellType::boundary);
}

TEST(CellTypes, FaultBeatsBoundary) {
  const auto m = mesh::build_cartesian_mesh(3, 1, 3, 1, {{{2.0, -1.0}, {2.0, 2.0}}});
  const auto t = geo::assign_cell_types(m, 0);
  EXPECT_EQ(t[1], geo::CellType::fault_adjacent);
  EXPECT_EQ(t[2], geo::CellType::fault_adjacent);
}

TEST(CellTypes, InteriorCellsOfCartesianGrid) {
  const auto m = mesh::build_cartesian_mesh(3, 3, 3, 3);
  const auto t = geo::assign_cell_types(m, 0);
  EXPECT_EQ(t[4], geo::CellType::interior);
  EXPECT_EQ(std::count(t.begin(), t.end(), geo::CellType::boundary), 7);
}

TEST(GeoModel, OneHotMatchesType) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  const auto g = geo::make_geomodel(m, 0, m.cells[0].centroid, {1e-13, 1e-13});
  EXPECT_EQ(g.one_hot(0)[1], 1.0);
  EXPECT_EQ(g.one_hot(1)[3], 1.0);
  EXPECT_DOUBLE_EQ(g.porosity[1], 0.2);
  EXPECT_NEAR(g.perm_md()[0], 1e-13 / geo::kMilliDarcy, 1e-9);
}

TEST(GeoModel, RejectsBadWellCell) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  EXPECT_THROW(geo::assign_cell_types(m, 5), plume::InvalidArgument);
}
