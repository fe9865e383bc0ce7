#include "plume/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plume/error.hpp"

namespace plume::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config parsing

namespace {

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidConfig("config: '" + label() + "' must be an object");
  }

  template <typename T>
  bool get(const char* key, T& dst) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw InvalidConfig("config: '" + label(key) + "' has the wrong type");
    }
    return true;
  }

  std::optional<Section> child(const char* key) {
    if (!j_.contains(key)) return std::nullopt;
    seen_.insert(key);
    return Section(j_.at(key), label(key));
  }

  const json* raw(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw InvalidConfig("config: unknown key '" + label(it.key()) + "'");
    }
  }

  std::string label(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename T>
void positive(const char* what, T v) {
  if (!(v > 0)) throw InvalidConfig(std::string("config: ") + what + " must be > 0");
}

}  // namespace

void RunConfig::validate() const {
  positive("mesh.lx", mesh.lx);
  positive("mesh.ly", mesh.ly);
  positive("mesh.nx", mesh.nx);
  positive("mesh.ny", mesh.ny);
  if (!(mesh.jitter >= 0.0 && mesh.jitter < 0.5)) throw InvalidConfig("config: mesh.jitter must be in [0, 0.5)");
  positive("mesh.refine_density", mesh.voronoi.refine_density);
  if (!(mesh.voronoi.refine_radius >= 0.0)) throw InvalidConfig("config: mesh.refine_radius must be >= 0");
  if (!(geomodel.perm.std_ln >= 0.0)) throw InvalidConfig("config: geomodel.std_ln must be >= 0");
  positive("geomodel.corr_len", geomodel.perm.corr_len);
  if (!(geomodel.porosity > 0.0 && geomodel.porosity < 1.0)) throw InvalidConfig("config: porosity must be in (0,1)");
  try {
    fluid.validate();
    schedule.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidConfig(std::string("config: ") + e.what());
  }
  positive("simulator.report_steps", schedule.report_steps);
  if (data.n_train < 2) throw InvalidConfig("config: data.n_train must be >= 2 (normalization needs two samples)");
  if (graph::uses_relperm(data.features) && data.variable == graph::Variable::pressure) {
    throw InvalidConfig("config: the relperm feature applies to the saturation model only");
  }
  model.validate();
  training.validate();
  if (training.n_steps > schedule.report_steps) {
    throw InvalidConfig("config: training.n_steps exceeds simulator.report_steps");
  }
  for (std::size_t h : eval.horizons) positive("eval.horizons entries", h);
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("config: not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(root, "");
  top.get("seed", c.seed);
  top.get("out", c.out);
  if (auto s = top.child("mesh")) {
    s->get("lx", c.mesh.lx);
    s->get("ly", c.mesh.ly);
    s->get("nx", c.mesh.nx);
    s->get("ny", c.mesh.ny);
    s->get("jitter", c.mesh.jitter);
    s->get("fault_spacing", c.mesh.voronoi.fault_spacing);
    s->get("refine_radius", c.mesh.voronoi.refine_radius);
    s->get("refine_density", c.mesh.voronoi.refine_density);
    std::vector<std::array<double, 4>> faults;
    if (s->get("faults", faults)) {
      c.mesh.faults.clear();
      for (const auto& f : faults) c.mesh.faults.push_back({{f[0], f[1]}, {f[2], f[3]}});
    }
    s->finish();
  }
  if (auto s = top.child("geomodel")) {
    s->get("mean_ln", c.geomodel.perm.mean_ln);
    s->get("std_ln", c.geomodel.perm.std_ln);
    s->get("corr_len", c.geomodel.perm.corr_len);
    s->get("porosity", c.geomodel.porosity);
    s->finish();
  }
  if (auto s = top.child("fluid")) {
    s->get("rho_g", c.fluid.rho_g);
    s->get("rho_a", c.fluid.rho_a);
    s->get("mu_g", c.fluid.mu_g);
    s->get("mu_a", c.fluid.mu_a);
    s->get("s_a_min", c.fluid.s_a_min);
    s->get("s_g_max", c.fluid.s_g_max);
    s->get("krg_end", c.fluid.krg_end);
    s->finish();
  }
  if (auto s = top.child("simulator")) {
    s->get("injection_rate", c.schedule.injection_rate);
    s->get("report_interval_days", c.schedule.report_interval_days);
    s->get("report_steps", c.schedule.report_steps);
    s->get("boundary_pressure", c.schedule.boundary_pressure);
    s->get("initial_pressure", c.schedule.initial_pressure);
    s->get("max_step_days", c.schedule.max_step_days);
    s->get("cfl", c.schedule.cfl);
    s->finish();
  }
  if (auto s = top.child("data")) {
    s->get("n_train", c.data.n_train);
    s->get("n_test", c.data.n_test);
    std::string text;
    if (s->get("features", text)) {
      c.data.features = graph::parse_feature_config(text);
      c.data.features_explicit = true;
    }
    if (s->get("variable", text)) c.data.variable = graph::parse_variable(text);
    s->finish();
  }
  bool node_in_set = false;
  if (auto s = top.child("model")) {
    s->get("latent", c.model.latent);
    s->get("layers", c.model.layers);
    s->get("cheb_order", c.model.cheb_order);
    node_in_set = s->get("node_in", c.model.node_in);
    std::string text;
    if (s->get("variant", text)) c.model.variant = model::parse_variant(text);
    s->finish();
  }
  if (!node_in_set) c.model.node_in = graph::node_input_width(c.data.features);
  c.model.edge_in = graph::edge_input_width(c.data.features);
  if (auto s = top.child("training")) {
    std::string preset;
    if (s->get("lr_preset", preset)) {
      if (preset == "table") {
        c.training.base_lr = 1e-3;
        c.training.floor_lr = 1e-6;
      } else if (preset == "text") {
        c.training.base_lr = 1e-4;
        c.training.floor_lr = 1e-6;
      } else {
        throw InvalidConfig("config: training.lr_preset must be 'table' or 'text'");
      }
    }
    s->get("epochs", c.training.epochs);
    s->get("batch_size", c.training.batch_size);
    s->get("base_lr", c.training.base_lr);
    s->get("floor_lr", c.training.floor_lr);
    s->get("weight_decay", c.training.weight_decay);
    s->get("clip_norm", c.training.clip_norm);
    s->get("noise_scale", c.training.noise_scale);
    s->get("val_fraction", c.training.val_fraction);
    s->get("teacher_forcing", c.training.teacher_forcing);
    s->get("n_steps", c.training.n_steps);
    s->finish();
  }
  if (auto s = top.child("eval")) {
    s->get("horizons", c.eval.horizons);
    s->get("export_fields", c.eval.export_fields);
    s->finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
  json faults = json::array();
  for (const Segment& s : c.mesh.faults) faults.push_back({s.a.x, s.a.y, s.b.x, s.b.y});
  const json j = {
      {"seed", c.seed},
      {"out", c.out},
      {"mesh",
       {{"lx", c.mesh.lx},
        {"ly", c.mesh.ly},
        {"nx", c.mesh.nx},
        {"ny", c.mesh.ny},
        {"jitter", c.mesh.jitter},
        {"faults", faults},
        {"fault_spacing", c.mesh.voronoi.fault_spacing},
        {"refine_radius", c.mesh.voronoi.refine_radius},
        {"refine_density", c.mesh.voronoi.refine_density}}},
      {"geomodel",
       {{"mean_ln", c.geomodel.perm.mean_ln},
        {"std_ln", c.geomodel.perm.std_ln},
        {"corr_len", c.geomodel.perm.corr_len},
        {"porosity", c.geomodel.porosity}}},
      {"fluid",
       {{"rho_g", c.fluid.rho_g},
        {"rho_a", c.fluid.rho_a},
        {"mu_g", c.fluid.mu_g},
        {"mu_a", c.fluid.mu_a},
        {"s_a_min", c.fluid.s_a_min},
        {"s_g_max", c.fluid.s_g_max},
        {"krg_end", c.fluid.krg_end}}},
      {"simulator",
       {{"injection_rate", c.schedule.injection_rate},
        {"report_interval_days", c.schedule.report_interval_days},
        {"report_steps", c.schedule.report_steps},
        {"boundary_pressure", c.schedule.boundary_pressure},
        {"initial_pressure", c.schedule.initial_pressure},
        {"max_step_days", c.schedule.max_step_days},
        {"cfl", c.schedule.cfl}}},
      {"data",
       {{"n_train", c.data.n_train},
        {"n_test", c.data.n_test},
        {"features", graph::to_string(c.data.features)},
        {"variable", graph::to_string(c.data.variable)}}},
      {"model",
       {{"latent", c.model.latent},
        {"layers", c.model.layers},
        {"cheb_order", c.model.cheb_order},
        {"node_in", c.model.node_in},
        {"variant", model::to_string(c.model.variant)}}},
      {"training",
       {{"epochs", c.training.epochs},
        {"batch_size", c.training.batch_size},
        {"base_lr", c.training.base_lr},
        {"floor_lr", c.training.floor_lr},
        {"weight_decay", c.training.weight_decay},
        {"clip_norm", c.training.clip_norm},
        {"noise_scale", c.training.noise_scale},
        {"val_fraction", c.training.val_fraction},
        {"teacher_forcing", c.training.teacher_forcing},
        {"n_steps", c.training.n_steps}}},
      {"eval", {{"horizons", c.eval.horizons}, {"export_fields", c.eval.export_fields}}}};
  return j.dump(2);
}

// ---------------------------------------------------------------- data generation

std::uint64_t realization_seed(std::uint64_t seed, std::uint64_t id, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ id) ^ (stream * 0x632be59bd9b4e019ull));
}

io::Realization generate_realization(const RunConfig& c, std::uint64_t id) {
  const Box domain{c.mesh.lx, c.mesh.ly};
  io::Realization r;
  r.id = id;
  const Point2 well = geo::sample_well_location(domain, realization_seed(c.seed, id, 0));
  const auto seeds = mesh::jittered_grid_seeds(domain, c.mesh.nx, c.mesh.ny, c.mesh.jitter,
                                               realization_seed(c.seed, id, 1));
  std::size_t well_cell = 0;
  r.mesh = mesh::build_voronoi_mesh(seeds, domain, c.mesh.faults, well, c.mesh.voronoi, &well_cell);
  auto perm = geo::sample_log_perm_field(r.mesh, c.geomodel.perm, realization_seed(c.seed, id, 2));
  r.geomodel = geo::make_geomodel(r.mesh, well_cell, well, std::move(perm), c.geomodel.porosity);
  r.snapshots = sim::run_simulation(r.mesh, r.geomodel, c.fluid, c.schedule).snapshots;
  return r;
}

namespace {

io::DatasetInfo dataset_info(const RunConfig& c, const std::string& split) {
  io::DatasetInfo info;
  info.split = split;
  info.seed = c.seed;
  info.n_steps = c.schedule.report_steps;
  info.features = c.data.features;
  info.variable = c.data.variable;
  info.props = c.fluid;
  info.initial_pressure = c.schedule.initial_pressure;
  return info;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidConfig("cannot create directory '" + dir + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidConfig("cannot write '" + path + "'");
  out << text;
}

}  // namespace

GenDataResult cmd_gen_data(const RunConfig& c, std::ostream& log) {
  c.validate();
  ensure_dir(c.out);
  GenDataResult res;
  io::Dataset train{dataset_info(c, "train"), {}};
  io::Dataset test{dataset_info(c, "test"), {}};
  const std::size_t total = c.data.n_train + c.data.n_test;
  for (std::uint64_t id = 0; id < total; ++id) {
    try {
      io::Realization r = generate_realization(c, id);
      log << "realization " << id << ": " << r.mesh.num_cells() << " cells, well cell " << r.geomodel.well_cell
          << '\n';
      (id < c.data.n_train ? train : test).samples.push_back(std::move(r));
    } catch (const NumericalError& e) {
      ++res.n_failed;
      log << "realization " << id << " skipped: " << e.what() << '\n';
      if (static_cast<double>(res.n_failed) > 0.1 * static_cast<double>(total)) {
        throw NumericalError("gen-data: more than 10% of realizations failed");
      }
    }
  }
  // fit graph samples once to validate the feature config end to end
  if (train.samples.size() >= 2) graph::detrend_fit(io::to_graph_samples(train), c.training.n_steps);

  res.train_path = (fs::path(c.out) / "train.mgnl").string();
  res.test_path = (fs::path(c.out) / "test.mgnl").string();
  res.manifest_path = (fs::path(c.out) / "manifest.json").string();
  io::save_dataset(res.train_path, train);
  io::save_dataset(res.test_path, test);
  res.n_train = train.samples.size();
  res.n_test = test.samples.size();

  std::size_t min_cells = ~std::size_t{0}, max_cells = 0, sum_cells = 0;
  for (const auto* d : {&train, &test}) {
    for (const auto& s : d->samples) {
      min_cells = std::min(min_cells, s.mesh.num_cells());
      max_cells = std::max(max_cells, s.mesh.num_cells());
      sum_cells += s.mesh.num_cells();
    }
  }
  const std::size_t n_all = res.n_train + res.n_test;
  const json manifest = {
      {"seed", c.seed},
      {"counts", {{"train", res.n_train}, {"test", res.n_test}, {"failed", res.n_failed}}},
      {"features", graph::to_string(c.data.features)},
      {"variable", graph::to_string(c.data.variable)},
      {"n_M", graph::kStaticChannels},
      {"n_N", graph::node_input_width(c.data.features)},
      {"n_E", graph::edge_input_width(c.data.features)},
      {"n_steps", c.schedule.report_steps},
      {"feature_hash", io::hex64(io::feature_hash(c.data.features, c.data.variable))},
      {"cells", {{"min", n_all ? min_cells : 0}, {"max", max_cells}, {"mean", n_all ? static_cast<double>(sum_cells) / static_cast<double>(n_all) : 0.0}}},
      {"files",
       {{"train", {{"path", "train.mgnl"}, {"fnv1a64", io::hex64(io::fnv1a64_file(res.train_path))}}},
        {"test", {{"path", "test.mgnl"}, {"fnv1a64", io::hex64(io::fnv1a64_file(res.test_path))}}}}}};
  write_text(res.manifest_path, manifest.dump(2) + "\n");
  write_text((fs::path(c.out) / "config.json").string(), dump_run_config(c) + "\n");
  log << "wrote " << res.n_train << " train and " << res.n_test << " test samples to " << c.out << '\n';
  return res;
}

// ---------------------------------------------------------------- training

model::ModelConfig model_config_for(const RunConfig& c, graph::FeatureConfig features) {
  model::ModelConfig m = c.model;
  const std::size_t want = graph::node_input_width(features);
  if (c.model.node_in != graph::node_input_width(c.data.features) || (c.data.features_explicit && c.model.node_in != want)) {
    if (c.model.node_in != want) {
      throw InvalidConfig("config: model.node_in = " + std::to_string(c.model.node_in) + " but feature config '" +
                          graph::to_string(features) + "' produces " + std::to_string(want) + " node channels");
    }
  }
  m.node_in = want;
  m.edge_in = graph::edge_input_width(features);
  return m;
}

TrainOutput train_on(const RunConfig& c, const io::Dataset& data, std::ostream* log) {
  c.validate();
  if (c.data.features_explicit && c.data.features != data.info.features) {
    throw InvalidConfig("train: dataset was built with features '" + graph::to_string(data.info.features) +
                        "' but the run requests '" + graph::to_string(c.data.features) + "'");
  }
  const auto samples = io::to_graph_samples(data);
  const std::size_t n_steps = c.training.n_steps;
  const graph::NormStats stats = graph::detrend_fit(samples, n_steps);
  std::vector<model::PreparedSample> prepared;
  prepared.reserve(samples.size());
  for (const auto& s : samples) prepared.push_back(model::prepare(s, stats));

  const model::ModelConfig mc = model_config_for(c, data.info.features);
  train::TrainConfig tc = c.training;
  tc.seed = c.seed;
  TrainOutput out;
  out.result = train::train_model(prepared, mc, tc, stats, log);
  out.checkpoint.config = mc;
  out.checkpoint.features = data.info.features;
  out.checkpoint.variable = data.info.variable;
  out.checkpoint.feature_hash = io::feature_hash(data.info.features, data.info.variable);
  out.checkpoint.n_steps_train = n_steps;
  out.checkpoint.stats = stats;
  out.checkpoint.params = out.result.params;
  return out;
}

TrainOutput cmd_train(const RunConfig& c, const std::string& dataset_path, std::ostream& log) {
  const io::Dataset data = io::load_dataset(dataset_path);
  log << "training " << model::to_string(c.model.variant) << " on " << data.samples.size() << " samples ("
      << graph::to_string(data.info.features) << ", " << graph::to_string(data.info.variable) << ")\n";
  TrainOutput out = train_on(c, data, &log);
  ensure_dir(c.out);
  const std::string stem = model::to_string(c.model.variant);
  out.checkpoint_path = (fs::path(c.out) / (stem + ".mgnw")).string();
  out.log_path = (fs::path(c.out) / (stem + "_train_log.csv")).string();
  io::save_checkpoint(out.checkpoint_path, out.checkpoint);
  std::ofstream csv(out.log_path);
  if (!csv) throw InvalidConfig("cannot write '" + out.log_path + "'");
  train::write_training_log(csv, out.result.history);
  if (c.model.variant == model::Variant::mgn) log << "noise std " << out.result.noise_std << '\n';
  log << "best epoch " << out.result.best_epoch << "; checkpoint " << out.checkpoint_path << '\n';
  return out;
}

// ---------------------------------------------------------------- evaluation

EvalReport evaluate(const io::Checkpoint& ckpt, const io::Dataset& data, std::size_t n_steps,
                    const std::vector<std::size_t>& horizons) {
  const std::uint64_t want = io::feature_hash(data.info.features, data.info.variable);
  if (ckpt.feature_hash != want) {
    throw InvalidConfig("checkpoint feature hash " + io::hex64(ckpt.feature_hash) + " (" +
                        graph::to_string(ckpt.features) + ", " + graph::to_string(ckpt.variable) +
                        ") does not match dataset hash " + io::hex64(want) + " (" +
                        graph::to_string(data.info.features) + ", " + graph::to_string(data.info.variable) + ")");
  }
  if (n_steps < 1) throw InvalidConfig("rollout-eval: --steps must be >= 1");
  EvalReport rep;
  rep.variable = data.info.variable;
  for (std::size_t h : horizons) {
    if (h <= n_steps) rep.horizons.push_back(h);
  }
  if (std::find(rep.horizons.begin(), rep.horizons.end(), n_steps) == rep.horizons.end()) {
    rep.horizons.push_back(n_steps);
  }
  std::sort(rep.horizons.begin(), rep.horizons.end());
  const auto samples = io::to_graph_samples(data);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].n_steps() < n_steps) {
      throw InvalidConfig("rollout-eval: sample " + std::to_string(data.samples[k].id) + " has only " +
                          std::to_string(samples[k].n_steps()) + " steps");
    }
    const model::PreparedSample s = model::prepare(samples[k], ckpt.stats);
    const model::Rollout r = model::rollout(ckpt.params, ckpt.config, s, ckpt.stats, n_steps);
    SampleEval ev;
    ev.sample_id = data.samples[k].id;
    ev.rollout.predicted = r.physical;
    ev.rollout.truth = s.states.middleRows(1, static_cast<Eigen::Index>(n_steps));
    ev.rollout.variable = rep.variable;
    for (std::size_t h : rep.horizons) {
      const metrics::RolloutResult head = ev.rollout.head(h);
      ev.delta[h] = rep.variable == graph::Variable::saturation
                        ? metrics::plume_saturation_error(head)
                        : metrics::pressure_relative_error(head, data.info.initial_pressure);
    }
    rep.samples.push_back(std::move(ev));
  }
  return rep;
}

namespace {

json summary_json(const metrics::Summary& s) {
  return {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

std::vector<double> deltas_at(const EvalReport& rep, std::size_t h) {
  std::vector<double> v;
  for (const auto& s : rep.samples) {
    const auto it = s.delta.find(h);
    if (it != s.delta.end()) v.push_back(it->second);
  }
  return v;
}

void export_fields(const std::string& dir, const io::Realization& real, const SampleEval& ev) {
  ensure_dir(dir);
  const std::string stem = (fs::path(dir) / ("sample_" + std::to_string(ev.sample_id))).string();
  std::ofstream csv(stem + "_fields.csv");
  if (!csv) throw InvalidConfig("cannot write '" + stem + "_fields.csv'");
  csv << std::setprecision(17) << "step,cell,truth,prediction,abs_error\n";
  const auto& t = ev.rollout.truth;
  const auto& p = ev.rollout.predicted;
  for (Eigen::Index n = 0; n < t.rows(); ++n) {
    for (Eigen::Index i = 0; i < t.cols(); ++i) {
      csv << n + 1 << ',' << i << ',' << t(n, i) << ',' << p(n, i) << ',' << std::abs(t(n, i) - p(n, i)) << '\n';
    }
  }
  for (Eigen::Index n = 0; n < t.rows(); ++n) {
    std::map<std::string, std::vector<double>> fields;
    std::vector<double> tv(static_cast<std::size_t>(t.cols())), pv(tv.size()), ev_(tv.size());
    for (Eigen::Index i = 0; i < t.cols(); ++i) {
      tv[static_cast<std::size_t>(i)] = t(n, i);
      pv[static_cast<std::size_t>(i)] = p(n, i);
      ev_[static_cast<std::size_t>(i)] = std::abs(t(n, i) - p(n, i));
    }
    fields["truth"] = std::move(tv);
    fields["prediction"] = std::move(pv);
    fields["abs_error"] = std::move(ev_);
    std::ofstream vtk(stem + "_step_" + std::to_string(n + 1) + ".vtk");
    if (!vtk) throw InvalidConfig("cannot write VTK export under '" + dir + "'");
    mesh::write_mesh_vtk(vtk, real.mesh, fields);
  }
}

}  // namespace

EvalReport cmd_rollout_eval(const RunConfig& c, const std::string& checkpoint_path, const std::string& dataset_path,
                            std::size_t n_steps, std::ostream& log) {
  const io::Checkpoint ckpt = io::load_checkpoint(checkpoint_path);
  const io::Dataset data = io::load_dataset(dataset_path);
  EvalReport rep = evaluate(ckpt, data, n_steps, c.eval.horizons);
  ensure_dir(c.out);
  const std::string var = rep.variable == graph::Variable::saturation ? "s_g" : "p_g";

  std::vector<metrics::SampleMetric> rows;
  for (const auto& s : rep.samples) {
    for (const auto& [h, d] : s.delta) rows.push_back({static_cast<std::size_t>(s.sample_id), rep.variable, h, d});
  }
  {
    std::ofstream csv((fs::path(c.out) / "metrics.csv").string());
    if (!csv) throw InvalidConfig("cannot write metrics.csv under '" + c.out + "'");
    metrics::write_metrics_csv(csv, rows);
  }
  json summary = {{"variable", var}, {"variant", model::to_string(ckpt.config.variant)}, {"horizons", json::object()}};
  for (std::size_t h : rep.horizons) {
    const auto v = deltas_at(rep, h);
    if (!v.empty()) summary["horizons"][std::to_string(h)] = summary_json(metrics::ensemble_summary(v));
  }
  write_text((fs::path(c.out) / "metrics_summary.json").string(), summary.dump(2) + "\n");
  for (std::size_t h : rep.horizons) {
    const auto v = deltas_at(rep, h);
    if (v.empty()) continue;
    const auto s = metrics::ensemble_summary(v);
    log << "delta_" << var << " at " << h << " steps: median " << s.median << " (min " << s.min << ", max " << s.max
        << ")\n";
  }
  if (c.eval.export_fields) {
    for (std::size_t k = 0; k < rep.samples.size(); ++k) {
      export_fields((fs::path(c.out) / "fields").string(), data.samples[k], rep.samples[k]);
    }
  }
  return rep;
}

CompareReport compare_reports(const EvalReport& lstm, const EvalReport& mgn) {
  CompareReport rep;
  std::vector<std::size_t> common;
  for (std::size_t h : lstm.horizons) {
    if (std::find(mgn.horizons.begin(), mgn.horizons.end(), h) != mgn.horizons.end()) common.push_back(h);
  }
  if (common.empty()) throw InvalidConfig("compare: the two evaluations share no horizon");
  double med_lstm = 0.0, med_mgn = 0.0;
  for (std::size_t h : common) {
    const auto a = metrics::ensemble_summary(deltas_at(lstm, h));
    const auto b = metrics::ensemble_summary(deltas_at(mgn, h));
    rep.rows.push_back({"mgn_lstm", h, a});
    rep.rows.push_back({"mgn", h, b});
    med_lstm = a.median;
    med_mgn = b.median;
  }
  rep.flag_horizon = common.back();
  rep.lstm_not_worse = med_lstm <= med_mgn;
  return rep;
}

std::string compare_json(const CompareReport& r) {
  json rows = json::array();
  for (const CompareRow& row : r.rows) {
    rows.push_back({{"variant", row.variant},
                    {"horizon", row.horizon},
                    {"min", row.summary.min},
                    {"q1", row.summary.q1},
                    {"median", row.summary.median},
                    {"q3", row.summary.q3},
                    {"max", row.summary.max}});
  }
  const json j = {{"rows", rows}, {"lstm_median_le_mgn", r.lstm_not_worse}, {"flag_horizon", r.flag_horizon}};
  return j.dump(2);
}

CompareReport cmd_compare(const RunConfig& c, const std::string& lstm_checkpoint, const std::string& mgn_checkpoint,
                          const std::string& dataset_path, std::ostream& log) {
  const io::Dataset data = io::load_dataset(dataset_path);
  const io::Checkpoint a = io::load_checkpoint(lstm_checkpoint);
  const io::Checkpoint b = io::load_checkpoint(mgn_checkpoint);
  const std::size_t n_steps = data.info.n_steps;
  const EvalReport ra = evaluate(a, data, n_steps, c.eval.horizons);
  const EvalReport rb = evaluate(b, data, n_steps, c.eval.horizons);
  CompareReport rep = compare_reports(ra, rb);
  ensure_dir(c.out);
  write_text((fs::path(c.out) / "compare.json").string(), compare_json(rep) + "\n");
  std::ofstream csv((fs::path(c.out) / "compare.csv").string());
  csv << std::setprecision(17) << "variant,horizon,min,q1,median,q3,max\n";
  for (const CompareRow& row : rep.rows) {
    csv << row.variant << ',' << row.horizon << ',' << row.summary.min << ',' << row.summary.q1 << ','
        << row.summary.median << ',' << row.summary.q3 << ',' << row.summary.max << '\n';
    log << std::left << std::setw(9) << row.variant << " h=" << std::setw(3) << row.horizon << " median "
        << row.summary.median << " [" << row.summary.min << ", " << row.summary.max << "]\n";
  }
  log << "median(mgn_lstm) <= median(mgn) at " << rep.flag_horizon << " steps: "
      << (rep.lstm_not_worse ? "yes" : "no") << '\n';
  return rep;
}

// ---------------------------------------------------------------- export

void write_snapshots_csv(std::ostream& out, const std::vector<sim::SimState>& snapshots) {
  const auto prec = out.precision();
  out << std::setprecision(17) << "step,cell,p,s_g\n";
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    for (std::size_t i = 0; i < snapshots[k].p.size(); ++i) {
      out << k << ',' << i << ',' << snapshots[k].p[i] << ',' << snapshots[k].s_g[i] << '\n';
    }
  }
  out.precision(prec);
}

void cmd_export_mesh(const RunConfig& c, std::uint64_t id, bool simulate, std::ostream& log) {
  c.validate();
  ensure_dir(c.out);
  const Box domain{c.mesh.lx, c.mesh.ly};
  const Point2 well = geo::sample_well_location(domain, realization_seed(c.seed, id, 0));
  const auto seeds = mesh::jittered_grid_seeds(domain, c.mesh.nx, c.mesh.ny, c.mesh.jitter,
                                               realization_seed(c.seed, id, 1));
  std::size_t well_cell = 0;
  const mesh::Mesh m = mesh::build_voronoi_mesh(seeds, domain, c.mesh.faults, well, c.mesh.voronoi, &well_cell);
  auto perm = geo::sample_log_perm_field(m, c.geomodel.perm, realization_seed(c.seed, id, 2));
  const geo::GeoModel g = geo::make_geomodel(m, well_cell, well, std::move(perm), c.geomodel.porosity);

  const std::string stem = (fs::path(c.out) / ("mesh_" + std::to_string(id))).string();
  {
    std::ofstream txt(stem + ".txt");
    if (!txt) throw InvalidConfig("cannot write '" + stem + ".txt'");
    mesh::write_mesh_text(txt, m);
  }
  std::vector<double> type(m.num_cells());
  for (std::size_t i = 0; i < m.num_cells(); ++i) type[i] = static_cast<double>(g.cell_type[i]);
  {
    std::ofstream vtk(stem + ".vtk");
    mesh::write_mesh_vtk(vtk, m, {{"perm_md", g.perm_md()}, {"cell_type", type}});
  }
  log << "mesh " << id << ": " << m.num_cells() << " cells, " << m.num_faces() << " faces, written to " << stem
      << ".{txt,vtk}\n";
  if (!simulate) return;
  const sim::SimResult res = sim::run_simulation(m, g, c.fluid, c.schedule);
  {
    std::ofstream csv(stem + "_snapshots.csv");
    write_snapshots_csv(csv, res.snapshots);
  }
  for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
    std::ofstream vtk(stem + "_step_" + std::to_string(k) + ".vtk");
    mesh::write_mesh_vtk(vtk, m, {{"p", res.snapshots[k].p}, {"s_g", res.snapshots[k].s_g}, {"perm_md", g.perm_md()}});
  }
  double worst = 0.0;
  for (const auto& b : res.balance) worst = std::max(worst, b.relative_error());
  log << "simulated " << res.snapshots.size() - 1 << " report steps; worst volume-balance error " << worst << '\n';
}

}  // namespace plume::pipeline
