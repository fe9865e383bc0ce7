#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "plume/error.hpp"
#include "plume/mesh.hpp"

namespace plume::mesh {

namespace {

void expect_keyword(std::istream& in, const std::string& want) {
  std::string got;
  if (!(in >> got) || got != want) {
    throw FormatError("mesh text: expected '" + want + "', found '" + got + "'");
  }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw FormatError(std::string("mesh text: could not read ") + what);
  return v;
}

}  // namespace

void write_mesh_text(std::ostream& out, const Mesh& mesh) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "plume-mesh 1\n";
  out << "domain " << mesh.domain.lx << ' ' << mesh.domain.ly << '\n';
  out << "cells " << mesh.cells.size() << '\n';
  for (const Cell& c : mesh.cells) {
    out << c.id << ' ' << c.vertices.size();
    for (const Point2& p : c.vertices) out << ' ' << p.x << ' ' << p.y;
    out << ' ' << c.centroid.x << ' ' << c.centroid.y << ' ' << c.volume << '\n';
  }
  out << "faces " << mesh.faces.size() << '\n';
  for (const Face& f : mesh.faces) {
    out << f.left << ' ' << (f.is_boundary() ? -1 : static_cast<long long>(f.right)) << ' ' << f.area
        << ' ' << f.segment.a.x << ' ' << f.segment.a.y << ' ' << f.segment.b.x << ' '
        << f.segment.b.y << ' ' << f.center.x << ' ' << f.center.y << ' ' << f.normal.x << ' '
        << f.normal.y << ' ' << (f.fault ? 1 : 0) << '\n';
  }
  out << "faults " << mesh.faults.size() << '\n';
  for (const Segment& s : mesh.faults) {
    out << s.a.x << ' ' << s.a.y << ' ' << s.b.x << ' ' << s.b.y << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

Mesh read_mesh_text(std::istream& in) {
  Mesh mesh;
  expect_keyword(in, "plume-mesh");
  if (read_value<int>(in, "version") != 1) throw FormatError("mesh text: unsupported version");
  expect_keyword(in, "domain");
  mesh.domain.lx = read_value<double>(in, "domain lx");
  mesh.domain.ly = read_value<double>(in, "domain ly");
  expect_keyword(in, "cells");
  const auto nc = read_value<std::size_t>(in, "cell count");
  mesh.cells.resize(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    Cell& c = mesh.cells[i];
    c.id = read_value<std::size_t>(in, "cell id");
    const auto nv = read_value<std::size_t>(in, "vertex count");
    c.vertices.resize(nv);
    for (Point2& p : c.vertices) {
      p.x = read_value<double>(in, "vertex x");
      p.y = read_value<double>(in, "vertex y");
    }
    c.centroid.x = read_value<double>(in, "centroid x");
    c.centroid.y = read_value<double>(in, "centroid y");
    c.volume = read_value<double>(in, "volume");
  }
  expect_keyword(in, "faces");
  const auto nf = read_value<std::size_t>(in, "face count");
  mesh.faces.resize(nf);
  for (Face& f : mesh.faces) {
    f.left = read_value<std::size_t>(in, "face left");
    const auto right = read_value<long long>(in, "face right");
    f.right = right < 0 ? kBoundary : static_cast<std::size_t>(right);
    f.area = read_value<double>(in, "face area");
    f.segment.a.x = read_value<double>(in, "face ax");
    f.segment.a.y = read_value<double>(in, "face ay");
    f.segment.b.x = read_value<double>(in, "face bx");
    f.segment.b.y = read_value<double>(in, "face by");
    f.center.x = read_value<double>(in, "face cx");
    f.center.y = read_value<double>(in, "face cy");
    f.normal.x = read_value<double>(in, "face nx");
    f.normal.y = read_value<double>(in, "face ny");
    f.fault = read_value<int>(in, "fault flag") != 0;
    if (f.left >= nc || (f.is_interior() && f.right >= nc)) {
      throw FormatError("mesh text: face references unknown cell");
    }
  }
  expect_keyword(in, "faults");
  const auto nflt = read_value<std::size_t>(in, "fault count");
  mesh.faults.resize(nflt);
  for (Segment& s : mesh.faults) {
    s.a.x = read_value<double>(in, "fault ax");
    s.a.y = read_value<double>(in, "fault ay");
    s.b.x = read_value<double>(in, "fault bx");
    s.b.y = read_value<double>(in, "fault by");
  }
  return mesh;
}

void write_mesh_vtk(std::ostream& out, const Mesh& mesh,
                    const std::map<std::string, std::vector<double>>& cell_fields) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  std::size_t npts = 0;
  for (const Cell& c : mesh.cells) npts += c.vertices.size();
  out << "# vtk DataFile Version 3.0\n";
  out << "plume mesh\n";
  out << "ASCII\n";
  out << "DATASET POLYDATA\n";
  out << "POINTS " << npts << " double\n";
  for (const Cell& c : mesh.cells) {
    for (const Point2& p : c.vertices) out << p.x << ' ' << p.y << " 0\n";
  }
  out << "POLYGONS " << mesh.cells.size() << ' ' << npts + mesh.cells.size() << '\n';
  std::size_t base = 0;
  for (const Cell& c : mesh.cells) {
    out << c.vertices.size();
    for (std::size_t k = 0; k < c.vertices.size(); ++k) out << ' ' << base + k;
    out << '\n';
    base += c.vertices.size();
  }
  out << "CELL_DATA " << mesh.cells.size() << '\n';
  out << "SCALARS volume double 1\nLOOKUP_TABLE default\n";
  for (const Cell& c : mesh.cells) out << c.volume << '\n';
  for (const auto& [name, values] : cell_fields) {
    if (values.size() != mesh.cells.size()) {
      throw InvalidArgument("write_mesh_vtk: field '" + name + "' has wrong length");
    }
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) out << v << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

}  // namespace plume::mesh
