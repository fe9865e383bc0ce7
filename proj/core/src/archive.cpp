#include "plume/archive.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "plume/error.hpp"

namespace plume::io {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfig("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::uint64_t feature_hash(graph::FeatureConfig features, graph::Variable variable) {
  std::ostringstream s;
  s << "features=" << graph::to_string(features) << ";variable=" << graph::to_string(variable)
    << ";n_M=" << graph::kStaticChannels << ";n_N=" << graph::node_input_width(features)
    << ";n_E=" << graph::edge_input_width(features);
  return fnv1a64(s.str());
}

namespace {

// ---------------------------------------------------------------- binary primitives

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) {
    std::array<unsigned char, 4> b{};
    for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
    bytes(b.data(), b.size());
  }
  void u64(std::uint64_t v) {
    std::array<unsigned char, 8> b{};
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
    bytes(b.data(), b.size());
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void point(Point2 p) {
    f64(p.x);
    f64(p.y);
  }
  void reals(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, const char* what) : in_(in), what_(what) {}

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError(std::string(what_) + ": truncated file");
  }
  std::uint32_t u32() {
    std::array<unsigned char, 4> b{};
    bytes(b.data(), b.size());
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    std::array<unsigned char, 8> b{};
    bytes(b.data(), b.size());
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
  }
  /// u64 used as a count; bounded to catch corrupt files before allocating.
  std::size_t count(std::uint64_t limit = (1ull << 32)) {
    const std::uint64_t v = u64();
    if (v > limit) throw FormatError(std::string(what_) + ": implausible count " + std::to_string(v));
    return static_cast<std::size_t>(v);
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::string str() {
    std::string s(count(1ull << 28), '\0');
    bytes(s.data(), s.size());
    return s;
  }
  Point2 point() {
    Point2 p;
    p.x = f64();
    p.y = f64();
    return p;
  }
  std::vector<double> reals() {
    std::vector<double> v(count());
    for (double& x : v) x = f64();
    return v;
  }
  void magic(const char* want) {
    char got[4];
    bytes(got, 4);
    if (std::memcmp(got, want, 4) != 0) throw FormatError(std::string(what_) + ": bad magic bytes");
  }

 private:
  std::istream& in_;
  const char* what_;
};

// ---------------------------------------------------------------- blocks

void write_mesh(Writer& w, const mesh::Mesh& m) {
  w.f64(m.domain.lx);
  w.f64(m.domain.ly);
  w.u64(m.cells.size());
  for (const mesh::Cell& c : m.cells) {
    w.u64(c.id);
    w.u64(c.vertices.size());
    for (const Point2& p : c.vertices) w.point(p);
    w.point(c.centroid);
    w.f64(c.volume);
  }
  w.u64(m.faces.size());
  for (const mesh::Face& f : m.faces) {
    w.u64(f.left);
    w.u64(f.is_boundary() ? ~0ull : static_cast<std::uint64_t>(f.right));
    w.f64(f.area);
    w.point(f.segment.a);
    w.point(f.segment.b);
    w.point(f.center);
    w.point(f.normal);
    w.u8(f.fault ? 1 : 0);
  }
  w.u64(m.faults.size());
  for (const Segment& s : m.faults) {
    w.point(s.a);
    w.point(s.b);
  }
}

mesh::Mesh read_mesh(Reader& r) {
  mesh::Mesh m;
  m.domain.lx = r.f64();
  m.domain.ly = r.f64();
  m.cells.resize(r.count());
  for (mesh::Cell& c : m.cells) {
    c.id = r.count(~0ull);
    c.vertices.resize(r.count());
    for (Point2& p : c.vertices) p = r.point();
    c.centroid = r.point();
    c.volume = r.f64();
  }
  m.faces.resize(r.count());
  for (mesh::Face& f : m.faces) {
    f.left = r.count(~0ull);
    const std::uint64_t right = r.u64();
    f.right = right == ~0ull ? mesh::kBoundary : static_cast<std::size_t>(right);
    f.area = r.f64();
    f.segment.a = r.point();
    f.segment.b = r.point();
    f.center = r.point();
    f.normal = r.point();
    f.fault = r.u8() != 0;
    if (f.left >= m.cells.size() || (f.is_interior() && f.right >= m.cells.size())) {
      throw FormatError("dataset: face references unknown cell");
    }
  }
  m.faults.resize(r.count());
  for (Segment& s : m.faults) {
    s.a = r.point();
    s.b = r.point();
  }
  return m;
}

void write_geomodel(Writer& w, const geo::GeoModel& g) {
  w.reals(g.perm);
  w.reals(g.porosity);
  w.u64(g.well_cell);
  w.point(g.well);
  w.u64(g.cell_type.size());
  for (geo::CellType t : g.cell_type) w.u8(static_cast<std::uint8_t>(t));
}

geo::GeoModel read_geomodel(Reader& r) {
  geo::GeoModel g;
  g.perm = r.reals();
  g.porosity = r.reals();
  g.well_cell = r.count(~0ull);
  g.well = r.point();
  g.cell_type.resize(r.count());
  for (geo::CellType& t : g.cell_type) {
    const std::uint8_t v = r.u8();
    if (v >= geo::kNumCellTypes) throw FormatError("dataset: invalid cell type");
    t = static_cast<geo::CellType>(v);
  }
  return g;
}

json props_json(const sim::FluidProps& p) {
  return {{"rho_g", p.rho_g}, {"rho_a", p.rho_a}, {"mu_g", p.mu_g},       {"mu_a", p.mu_a},
          {"s_a_min", p.s_a_min}, {"s_g_max", p.s_g_max}, {"krg_end", p.krg_end}};
}

sim::FluidProps props_from(const json& j) {
  sim::FluidProps p;
  p.rho_g = j.at("rho_g").get<double>();
  p.rho_a = j.at("rho_a").get<double>();
  p.mu_g = j.at("mu_g").get<double>();
  p.mu_a = j.at("mu_a").get<double>();
  p.s_a_min = j.at("s_a_min").get<double>();
  p.s_g_max = j.at("s_g_max").get<double>();
  p.krg_end = j.at("krg_end").get<double>();
  return p;
}

json parse_block(Reader& r, const char* what) {
  const std::string text = r.str();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": malformed JSON block: " + e.what());
  }
}

void write_moments(Writer& w, const std::vector<graph::Moments>& ms) {
  w.u64(ms.size());
  for (const graph::Moments& m : ms) {
    w.f64(m.mean);
    w.f64(m.std);
  }
}

std::vector<graph::Moments> read_moments(Reader& r) {
  std::vector<graph::Moments> ms(r.count(1u << 20));
  for (graph::Moments& m : ms) {
    m.mean = r.f64();
    m.std = r.f64();
  }
  return ms;
}

template <typename Fn>
auto wrap_json_errors(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": bad config block: " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------- dataset

void write_dataset(std::ostream& out, const Dataset& data) {
  Writer w(out);
  w.bytes("MGNL", 4);
  w.u32(kDatasetVersion);
  const DatasetInfo& i = data.info;
  const json info = {{"split", i.split},
                     {"seed", i.seed},
                     {"n_steps", i.n_steps},
                     {"features", graph::to_string(i.features)},
                     {"variable", graph::to_string(i.variable)},
                     {"initial_pressure", i.initial_pressure},
                     {"fluid", props_json(i.props)},
                     {"feature_hash", hex64(feature_hash(i.features, i.variable))}};
  w.str(info.dump());
  w.u64(data.samples.size());
  for (const Realization& s : data.samples) {
    w.u64(s.id);
    write_mesh(w, s.mesh);
    write_geomodel(w, s.geomodel);
    w.u64(s.snapshots.size());
    for (const sim::SimState& st : s.snapshots) {
      w.f64(st.t);
      w.reals(st.p);
      w.reals(st.s_g);
    }
  }
  if (!out) throw Error("write_dataset: stream write failed");
}

Dataset read_dataset(std::istream& in) {
  Reader r(in, "dataset");
  r.magic("MGNL");
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) throw FormatError("dataset: unsupported version " + std::to_string(version));
  const json info = parse_block(r, "dataset");
  Dataset d;
  wrap_json_errors("dataset", [&] {
    d.info.split = info.at("split").get<std::string>();
    d.info.seed = info.at("seed").get<std::uint64_t>();
    d.info.n_steps = info.at("n_steps").get<std::size_t>();
    d.info.features = graph::parse_feature_config(info.at("features").get<std::string>());
    d.info.variable = graph::parse_variable(info.at("variable").get<std::string>());
    d.info.initial_pressure = info.at("initial_pressure").get<double>();
    d.info.props = props_from(info.at("fluid"));
    return 0;
  });
  d.samples.resize(r.count(1u << 24));
  for (Realization& s : d.samples) {
    s.id = r.u64();
    s.mesh = read_mesh(r);
    s.geomodel = read_geomodel(r);
    s.snapshots.resize(r.count(1u << 20));
    for (sim::SimState& st : s.snapshots) {
      st.t = r.f64();
      st.p = r.reals();
      st.s_g = r.reals();
    }
    const std::size_t n = s.mesh.num_cells();
    if (s.geomodel.perm.size() != n || s.geomodel.cell_type.size() != n) {
      throw FormatError("dataset: geomodel does not match mesh in sample " + std::to_string(s.id));
    }
  }
  return d;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidConfig("cannot write '" + path + "'");
  write_dataset(out, data);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfig("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

std::vector<graph::GraphSample> to_graph_samples(const Dataset& data) {
  std::vector<graph::GraphSample> out;
  out.reserve(data.samples.size());
  for (const Realization& s : data.samples) {
    const mesh::TransmissibilityMap trans = mesh::compute_transmissibilities(s.mesh, s.geomodel.perm);
    out.push_back(graph::mesh_to_graph(s.mesh, &trans, s.geomodel, s.snapshots, data.info.features,
                                       data.info.variable, data.info.props));
  }
  return out;
}

// ---------------------------------------------------------------- checkpoint

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  Writer w(out);
  w.bytes("MGNW", 4);
  w.u32(kCheckpointVersion);
  const json cfg = {{"model",
                     {{"latent", c.config.latent},
                      {"layers", c.config.layers},
                      {"cheb_order", c.config.cheb_order},
                      {"node_in", c.config.node_in},
                      {"edge_in", c.config.edge_in},
                      {"variant", model::to_string(c.config.variant)}}},
                    {"features", graph::to_string(c.features)},
                    {"variable", graph::to_string(c.variable)},
                    {"feature_hash", hex64(c.feature_hash)},
                    {"n_steps_train", c.n_steps_train}};
  w.str(cfg.dump());
  const graph::NormStats& s = c.stats;
  w.u64(s.n_steps_train);
  write_moments(w, s.node_static);
  write_moments(w, s.edge);
  write_moments(w, s.dynamic);
  write_moments(w, {s.dynamic_pooled});
  write_moments(w, s.relperm);
  write_moments(w, {s.relperm_pooled});
  w.u64(c.params.size());
  for (std::size_t k = 0; k < c.params.size(); ++k) {
    const ad::Matrix& m = c.params.value(k);
    w.str(c.params.name(k));
    w.u64(static_cast<std::uint64_t>(m.rows()));
    w.u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.size(); ++j) w.f64(m.data()[j]);
  }
  if (!out) throw Error("write_checkpoint: stream write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in, "checkpoint");
  r.magic("MGNW");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const json cfg = parse_block(r, "checkpoint");
  Checkpoint c;
  wrap_json_errors("checkpoint", [&] {
    const json& m = cfg.at("model");
    c.config.latent = m.at("latent").get<std::size_t>();
    c.config.layers = m.at("layers").get<std::size_t>();
    c.config.cheb_order = m.at("cheb_order").get<std::size_t>();
    c.config.node_in = m.at("node_in").get<std::size_t>();
    c.config.edge_in = m.at("edge_in").get<std::size_t>();
    c.config.variant = model::parse_variant(m.at("variant").get<std::string>());
    c.features = graph::parse_feature_config(cfg.at("features").get<std::string>());
    c.variable = graph::parse_variable(cfg.at("variable").get<std::string>());
    c.feature_hash = std::stoull(cfg.at("feature_hash").get<std::string>(), nullptr, 16);
    c.n_steps_train = cfg.at("n_steps_train").get<std::size_t>();
    return 0;
  });
  graph::NormStats& s = c.stats;
  s.n_steps_train = r.count();
  s.node_static = read_moments(r);
  s.edge = read_moments(r);
  s.dynamic = read_moments(r);
  auto pooled = read_moments(r);
  if (pooled.size() != 1) throw FormatError("checkpoint: malformed pooled statistics");
  s.dynamic_pooled = pooled[0];
  s.relperm = read_moments(r);
  pooled = read_moments(r);
  if (pooled.size() != 1) throw FormatError("checkpoint: malformed pooled statistics");
  s.relperm_pooled = pooled[0];
  const std::size_t np = r.count(1u << 20);
  for (std::size_t k = 0; k < np; ++k) {
    std::string name = r.str();
    const std::size_t rows = r.count(), cols = r.count();
    ad::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = r.f64();
    c.params.add(std::move(name), std::move(m));
  }
  // shape check against the declared architecture
  const model::ParamSet expect = model::init_params(c.config, 0);
  if (expect.size() != c.params.size()) throw FormatError("checkpoint: parameter count does not match its config");
  for (std::size_t k = 0; k < expect.size(); ++k) {
    if (!c.params.contains(expect.name(k))) throw FormatError("checkpoint: missing parameter " + expect.name(k));
    const ad::Matrix& got = c.params.at(expect.name(k));
    if (got.rows() != expect.value(k).rows() || got.cols() != expect.value(k).cols()) {
      throw FormatError("checkpoint: parameter " + expect.name(k) + " has the wrong shape");
    }
  }
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidConfig("cannot write '" + path + "'");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfig("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace plume::io
