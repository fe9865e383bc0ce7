#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "plume/error.hpp"
#include "plume/mesh.hpp"

namespace mesh = plume::mesh;
using plume::Point2;
using plume::Segment;

namespace {

std::size_t count_boundary(const mesh::Mesh& m) {
  std::size_t n = 0;
  for (const auto& f : m.faces) n += f.is_boundary() ? 1 : 0;
  return n;
}

mesh::Mesh desk_mesh(unsigned long long seed) {
  const plume::Box box{1000, 1000};
  const std::vector<Segment> faults{{{100, 300}, {400, 600}}, {{400, 500}, {800, 800}}};
  const auto seeds = mesh::jittered_grid_seeds(box, 16, 16, 0.3, seed);
  return mesh::build_voronoi_mesh(seeds, box, faults, {520, 480});
}

}  // namespace

TEST(CartesianMesh, SingleCell) {
  const auto m = mesh::build_cartesian_mesh(1, 1, 1, 1);
  ASSERT_EQ(m.num_cells(), 1u);
  EXPECT_DOUBLE_EQ(m.cells[0].volume, 1.0);
  EXPECT_EQ(m.num_faces(), 4u);
  EXPECT_EQ(count_boundary(m), 4u);
}

TEST(CartesianMesh, TwoCellsShareOneFace) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  ASSERT_EQ(m.num_cells(), 2u);
  std::size_t interior = 0;
  for (const auto& f : m.faces) {
    if (!f.is_interior()) continue;
    ++interior;
    EXPECT_DOUBLE_EQ(f.area, 1.0);
    EXPECT_DOUBLE_EQ(plume::distance(m.cells[f.left].centroid, m.cells[f.right].centroid), 1.0);
  }
  EXPECT_EQ(interior, 1u);
}

TEST(CartesianMesh, HundredCells) {
  const auto m = mesh::build_cartesian_mesh(10, 10, 1000, 1000);
  ASSERT_EQ(m.num_cells(), 100u);
  for (const auto& c : m.cells) EXPECT_DOUBLE_EQ(c.volume, 10000.0);
}

TEST(CartesianMesh, RejectsZeroDimensions) {
  EXPECT_THROW(mesh::build_cartesian_mesh(0, 1, 1, 1), plume::InvalidArgument);
  EXPECT_THROW(mesh::build_cartesian_mesh(1, 1, -1, 1), plume::InvalidArgument);
}

TEST(CartesianMesh, NormalsPointOutOfLeftCell) {
  const auto m = mesh::build_cartesian_mesh(3, 2, 3, 2);
  for (const auto& f : m.faces) {
    const Point2 d = f.center - m.cells[f.left].centroid;
    EXPECT_GT(plume::dot(d, f.normal), 0.0);
    EXPECT_NEAR(plume::norm(f.normal), 1.0, 1e-14);
  }
}

TEST(VoronoiMesh, FourSymmetricSeeds) {
  const std::vector<Point2> seeds{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  mesh::VoronoiOptions opt;
  opt.refine_radius = 0.0;
  std::size_t well = 99;
  const auto m = mesh::build_voronoi_mesh(seeds, {1, 1}, {}, {0.25, 0.25}, opt, &well);
  ASSERT_EQ(m.num_cells(), 4u);
  EXPECT_EQ(well, 0u);
  for (const auto& c : m.cells) EXPECT_NEAR(c.volume, 0.25, 1e-14);
  EXPECT_NEAR(m.total_volume(), 1.0, 1e-14);
}

TEST(VoronoiMesh, TilesTheDomain) {
  for (unsigned long long seed : {1ULL, 2ULL, 3ULL}) {
    const auto m = desk_mesh(seed);
    EXPECT_NEAR(m.total_volume(), 1e6, 1e-6);
    for (const auto& c : m.cells) EXPECT_GT(c.volume, 0.0);
  }
}

TEST(VoronoiMesh, DeskSizeIsAboutThreeHundredCells) {
  const auto m = desk_mesh(7);
  EXPECT_GT(m.num_cells(), 220u);
  EXPECT_LT(m.num_cells(), 380u);
}

TEST(VoronoiMesh, FaceAreasMatchCellPerimeters) {
  const auto m = desk_mesh(4);
  std::vector<double> perim(m.num_cells(), 0.0);
  for (const auto& f : m.faces) {
    perim[f.left] += f.area;
    if (f.is_interior()) perim[f.right] += f.area;
  }
  for (std::size_t i = 0; i < m.num_cells(); ++i) {
    double p = 0.0;
    const auto& v = m.cells[i].vertices;
    for (std::size_t k = 0; k < v.size(); ++k) p += plume::distance(v[k], v[(k + 1) % v.size()]);
    EXPECT_NEAR(perim[i], p, 1e-8 * p);
  }
}

TEST(VoronoiMesh, FaultCrossingBoxFlagsFaces) {
  const plume::Box box{1, 1};
  const auto seeds = mesh::jittered_grid_seeds(box, 6, 6, 0.2, 3);
  mesh::VoronoiOptions opt;
  opt.refine_radius = 0.0;
  const auto m = mesh::build_voronoi_mesh(seeds, box, {{{0.0, 0.1}, {1.0, 0.9}}}, {0.1, 0.9}, opt);
  std::size_t flagged = 0;
  for (const auto& f : m.faces) flagged += f.fault ? 1 : 0;
  EXPECT_GE(flagged, 1u);
}

TEST(VoronoiMesh, RefinesNearWell) {
  const plume::Box box{1000, 1000};
  const auto seeds = mesh::jittered_grid_seeds(box, 10, 10, 0.0, 1);
  std::size_t well = 0;
  const auto m = mesh::build_voronoi_mesh(seeds, box, {}, {505, 495}, {}, &well);
  EXPECT_GT(m.num_cells(), 100u);
  EXPECT_LT(m.cells[well].volume, 0.5 * 1e6 / 100.0);
}

TEST(VoronoiMesh, DuplicateSeedIsMeshingFailure) {
  const std::vector<Point2> seeds{{0.2, 0.2}, {0.7, 0.7}, {0.2, 0.2}};
  mesh::VoronoiOptions opt;
  opt.refine_radius = 0.0;
  EXPECT_THROW(mesh::build_voronoi_mesh(seeds, {1, 1}, {}, {0.7, 0.7}, opt), plume::MeshingFailure);
}

TEST(VoronoiMesh, DeterministicInSeed) {
  const auto a = desk_mesh(11);
  const auto b = desk_mesh(11);
  std::ostringstream sa, sb;
  mesh::write_mesh_text(sa, a);
  mesh::write_mesh_text(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Transmissibility, UnitCubesEqualPerm) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  const auto t = mesh::compute_transmissibilities(m, {1.0, 1.0});
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    EXPECT_DOUBLE_EQ(t[f], m.faces[f].is_interior() ? 1.0 : 0.0);
  }
}

TEST(Transmissibility, HarmonicMean) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  const auto t = mesh::compute_transmissibilities(m, {1.0, 3.0});
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    if (m.faces[f].is_interior()) {
      EXPECT_DOUBLE_EQ(t[f], 1.5);
    }
  }
}

TEST(Transmissibility, FaultFaceIsSealed) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1, {{{1.0, -0.5}, {1.0, 1.5}}});
  const auto t = mesh::compute_transmissibilities(m, {1.0, 1.0});
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    if (m.faces[f].is_interior()) {
      EXPECT_TRUE(m.faces[f].fault);
      EXPECT_EQ(t[f], 0.0);
    }
  }
}

TEST(Transmissibility, ScalesLinearlyWithPermeability) {
  const auto m = desk_mesh(5);
  std::vector<double> k(m.num_cells());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = 1.0 + 0.01 * static_cast<double>(i % 17);
  std::vector<double> k3 = k;
  for (double& v : k3) v *= 3.0;
  const auto t = mesh::compute_transmissibilities(m, k);
  const auto t3 = mesh::compute_transmissibilities(m, k3);
  for (std::size_t f = 0; f < m.num_faces(); ++f) EXPECT_NEAR(t3[f], 3.0 * t[f], 1e-14 * std::abs(t3[f]));
}

TEST(Transmissibility, InvariantUnderSwappingCells) {
  auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  const auto t = mesh::compute_transmissibilities(m, {1.0, 3.0});
  for (auto& f : m.faces) {
    if (!f.is_interior()) continue;
    std::swap(f.left, f.right);
    f.normal = -1.0 * f.normal;
  }
  const auto ts = mesh::compute_transmissibilities(m, {1.0, 3.0});
  for (std::size_t f = 0; f < m.num_faces(); ++f) EXPECT_DOUBLE_EQ(t[f], ts[f]);
}

TEST(Transmissibility, RejectsNonPositivePermeability) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  EXPECT_THROW(mesh::compute_transmissibilities(m, {1.0, 0.0}), plume::InvalidArgument);
}

TEST(MeshIo, TextRoundTrip) {
  const auto m = desk_mesh(9);
  std::stringstream ss;
  mesh::write_mesh_text(ss, m);
  const auto r = mesh::read_mesh_text(ss);
  ASSERT_EQ(r.num_cells(), m.num_cells());
  ASSERT_EQ(r.num_faces(), m.num_faces());
  for (std::size_t i = 0; i < m.num_cells(); ++i) {
    EXPECT_EQ(r.cells[i].volume, m.cells[i].volume);
    EXPECT_EQ(r.cells[i].centroid, m.cells[i].centroid);
  }
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    EXPECT_EQ(r.faces[f].left, m.faces[f].left);
    EXPECT_EQ(r.faces[f].right, m.faces[f].right);
    EXPECT_EQ(r.faces[f].fault, m.faces[f].fault);
    EXPECT_EQ(r.faces[f].area, m.faces[f].area);
  }
  EXPECT_EQ(r.faults.size(), 2u);
}

TEST(MeshIo, BadHeaderIsFormatError) {
  std::istringstream in("not-a-mesh 1\n");
  EXPECT_THROW(mesh::read_mesh_text(in), plume::FormatError);
}

TEST(MeshIo, VtkHasCellData) {
  const auto m = mesh::build_cartesian_mesh(2, 2, 2, 2);
  std::ostringstream out;
  mesh::write_mesh_vtk(out, m, {{"k", {1, 2, 3, 4}}});
  const std::string s = out.str();
  EXPECT_NE(s.find("POLYGONS 4"), std::string::npos);
  EXPECT_NE(s.find("CELL_DATA 4"), std::string::npos);
  EXPECT_NE(s.find("SCALARS k double"), std::string::npos);
}

TEST(LocateCell, FindsContainingCell) {
  const auto m = mesh::build_cartesian_mesh(4, 4, 4, 4);
  const std::size_t c = mesh::locate_cell(m, {2.5, 1.5});
  EXPECT_TRUE(plume::point_in_convex_polygon({2.5, 1.5}, m.cells[c].vertices));
}
