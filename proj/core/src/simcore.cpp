#include "plume/simcore.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "plume/error.hpp"

namespace plume::sim {

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

void FluidProps::validate() const {
  if (!(rho_g > 0 && rho_a > 0 && mu_g > 0 && mu_a > 0)) {
    throw InvalidArgument("FluidProps: densities and viscosities must be positive");
  }
  if (!(s_a_min >= 0.0 && s_a_min < 1.0)) throw InvalidArgument("FluidProps: s_a_min must be in [0,1)");
  if (!(s_g_max > 0.0 && s_g_max <= 1.0 - s_a_min + 1e-15)) {
    throw InvalidArgument("FluidProps: s_g_max must be in (0, 1 - s_a_min]");
  }
  if (!(krg_end > 0.0)) throw InvalidArgument("FluidProps: krg_end must be positive");
}

void Schedule::validate() const {
  if (!(injection_rate >= 0.0)) throw InvalidArgument("Schedule: injection rate must be >= 0");
  if (!(report_interval_days > 0.0)) throw InvalidArgument("Schedule: report interval must be > 0");
  if (!(max_step_days > 0.0)) throw InvalidArgument("Schedule: max step must be > 0");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw InvalidArgument("Schedule: CFL must be in (0,1]");
}

double relperm(Phase phase, double s_g, const FluidProps& props) {
  if (phase == Phase::gas) {
    const double s = std::clamp(s_g, 0.0, props.s_g_max) / props.s_g_max;
    return props.krg_end * s * s;
  }
  const double s_a = 1.0 - s_g;
  const double se = std::clamp((s_a - props.s_a_min) / (1.0 - props.s_a_min), 0.0, 1.0);
  const double se2 = se * se;
  return se2 * se2 * se2;
}

double total_mobility(double s_g, const FluidProps& props) {
  return relperm(Phase::gas, s_g, props) / props.mu_g + relperm(Phase::aqueous, s_g, props) / props.mu_a;
}

double gas_fractional_flow(double s_g, const FluidProps& props) {
  const double lg = relperm(Phase::gas, s_g, props) / props.mu_g;
  const double la = relperm(Phase::aqueous, s_g, props) / props.mu_a;
  return lg / (lg + la);
}

double max_fractional_flow_slope(const FluidProps& props) {
  constexpr int kSamples = 4000;
  const double h = props.s_g_max / kSamples;
  double best = 0.0;
  for (int k = 0; k < kSamples; ++k) {
    const double s = k * h;
    const double slope = (gas_fractional_flow(s + h, props) - gas_fractional_flow(s, props)) / h;
    best = std::max(best, std::abs(slope));
  }
  return 1.05 * best;
}

DirichletSet boundary_dirichlet(const mesh::Mesh& mesh, const geo::GeoModel& geomodel, double pressure) {
  std::vector<bool> on_boundary(mesh.num_cells(), false);
  for (const mesh::Face& f : mesh.faces) {
    if (f.is_boundary()) on_boundary[f.left] = true;
  }
  DirichletSet d;
  for (std::size_t i = 0; i < mesh.num_cells(); ++i) {
    if (on_boundary[i] && i != geomodel.well_cell) {
      d.cells.push_back(i);
      d.pressure.push_back(pressure);
    }
  }
  return d;
}

FlowSystem make_flow_system(const mesh::Mesh& mesh, const geo::GeoModel& geomodel,
                            const FluidProps& props, const Schedule& schedule,
                            std::optional<DirichletSet> dirichlet) {
  props.validate();
  schedule.validate();
  FlowSystem sys;
  sys.mesh = &mesh;
  sys.trans = mesh::compute_transmissibilities(mesh, geomodel.perm);
  sys.pore_volume.resize(mesh.num_cells());
  for (std::size_t i = 0; i < mesh.num_cells(); ++i) {
    sys.pore_volume[i] = geomodel.porosity.at(i) * mesh.cells[i].volume;
  }
  sys.props = props;
  sys.well_cell = geomodel.well_cell;
  sys.well_rate = schedule.injection_rate / props.rho_g;
  sys.dirichlet = dirichlet ? std::move(*dirichlet)
                            : boundary_dirichlet(mesh, geomodel, schedule.boundary_pressure);
  if (sys.dirichlet.cells.size() != sys.dirichlet.pressure.size()) {
    throw InvalidArgument("make_flow_system: Dirichlet cell/pressure size mismatch");
  }
  sys.max_slope = max_fractional_flow_slope(props);
  sys.cfl = schedule.cfl;
  return sys;
}

PressureSolution solve_pressure(const FlowSystem& sys, const SimState& state) {
  const mesh::Mesh& mesh = *sys.mesh;
  const std::size_t n = mesh.num_cells();
  if (state.p.size() != n || state.s_g.size() != n) {
    throw InvalidArgument("solve_pressure: state size does not match mesh");
  }
  if (sys.dirichlet.cells.empty()) {
    throw IllPosedProblem("solve_pressure: no Dirichlet cells; the incompressible system is singular");
  }

  std::vector<double> source(n, 0.0);
  if (sys.well_cell) source[*sys.well_cell] += sys.well_rate;

  std::vector<int> fixed(n, 0);
  std::vector<double> target(n, 0.0);
  for (std::size_t k = 0; k < sys.dirichlet.cells.size(); ++k) {
    fixed[sys.dirichlet.cells[k]] = 1;
    target[sys.dirichlet.cells[k]] = sys.dirichlet.pressure[k];
  }

  // face coefficients T * lambda_t(upstream of the current pressure)
  std::vector<double> mobility(mesh.num_faces(), 0.0);
  std::vector<double> coef(mesh.num_faces(), 0.0);
  DisjointSets comps(n);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const mesh::Face& face = mesh.faces[f];
    if (face.is_boundary() || sys.trans[f] <= 0.0) continue;
    const std::size_t l = face.left, r = face.right;
    const double ll = total_mobility(state.s_g[l], sys.props);
    const double lr = total_mobility(state.s_g[r], sys.props);
    double lam;
    if (state.p[l] > state.p[r]) lam = ll;
    else if (state.p[r] > state.p[l]) lam = lr;
    else lam = std::max(ll, lr);
    mobility[f] = lam;
    coef[f] = sys.trans[f] * lam;
    comps.unite(l, r);
  }

  std::vector<int> comp_fixed(n, 0);
  std::vector<double> comp_source(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = comps.find(i);
    comp_fixed[c] |= fixed[i];
    comp_source[c] += source[i];
  }

  // unknown numbering: non-Dirichlet cells in components anchored by a Dirichlet cell
  std::vector<long> unknown(n, -1);
  long nu = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = comps.find(i);
    if (!comp_fixed[c]) {
      if (comp_source[c] != 0.0) {
        std::ostringstream msg;
        msg << "solve_pressure: cell " << i << " lies in a sealed region with a net source";
        throw IllPosedProblem(msg.str());
      }
      continue;
    }
    if (!fixed[i]) unknown[i] = nu++;
  }

  std::vector<double> dp(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (fixed[i]) dp[i] = target[i] - state.p[i];
  }

  if (nu > 0) {
    // residual of the current pressure: outflow - source
    std::vector<double> resid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) resid[i] = -source[i];
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * mesh.num_faces());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu);
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
      if (coef[f] == 0.0) continue;
      const std::size_t l = mesh.faces[f].left, r = mesh.faces[f].right;
      const double q = coef[f] * (state.p[l] - state.p[r]);
      resid[l] += q;
      resid[r] -= q;
      const long ul = unknown[l], ur = unknown[r];
      if (ul >= 0) {
        trip.emplace_back(ul, ul, coef[f]);
        if (ur >= 0) trip.emplace_back(ul, ur, -coef[f]);
        else rhs(ul) += coef[f] * dp[r];
      }
      if (ur >= 0) {
        trip.emplace_back(ur, ur, coef[f]);
        if (ul >= 0) trip.emplace_back(ur, ul, -coef[f]);
        else rhs(ur) += coef[f] * dp[l];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (unknown[i] >= 0) rhs(unknown[i]) -= resid[i];
    }
    Eigen::SparseMatrix<double> a(nu, nu);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
    if (solver.info() != Eigen::Success) {
      throw NumericalBlowup("solve_pressure: factorization of the pressure matrix failed");
    }
    Eigen::VectorXd x = solver.solve(rhs);
    const double scale = std::max(rhs.norm(), 1e-300);
    for (int it = 0; it < 3; ++it) {
      const Eigen::VectorXd r = rhs - a * x;
      if (!(r.norm() > 1e-10 * scale)) break;
      x += solver.solve(r);
    }
    const double rel = (rhs - a * x).norm() / scale;
    if (!std::isfinite(rel) || (rhs.norm() > 0.0 && rel > 1e-10)) {
      throw NumericalBlowup("solve_pressure: linear solve did not reach 1e-10 relative residual");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (unknown[i] >= 0) dp[i] = x(unknown[i]);
    }
  }

  PressureSolution sol;
  sol.p.resize(n);
  for (std::size_t i = 0; i < n; ++i) sol.p[i] = state.p[i] + dp[i];
  sol.face_mobility = std::move(mobility);
  sol.face_flux.assign(mesh.num_faces(), 0.0);
  std::vector<double> net_out(n, 0.0);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (coef[f] == 0.0) continue;
    const std::size_t l = mesh.faces[f].left, r = mesh.faces[f].right;
    const double q = coef[f] * (sol.p[l] - sol.p[r]);
    sol.face_flux[f] = q;
    net_out[l] += q;
    net_out[r] -= q;
  }
  sol.aquifer_outflow.assign(n, 0.0);
  for (std::size_t i : sys.dirichlet.cells) sol.aquifer_outflow[i] = source[i] - net_out[i];
  return sol;
}

SaturationReport advance_saturation(const FlowSystem& sys, SimState& state,
                                    const PressureSolution& flow, double dt) {
  const mesh::Mesh& mesh = *sys.mesh;
  const std::size_t n = mesh.num_cells();
  SaturationReport rep;
  if (!(dt > 0.0)) return rep;

  std::vector<double> throughput(n, 0.0);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const double q = flow.face_flux[f];
    if (q > 0.0) throughput[mesh.faces[f].right] += q;
    else if (q < 0.0) throughput[mesh.faces[f].left] -= q;
  }
  if (sys.well_cell) throughput[*sys.well_cell] += sys.well_rate;
  for (std::size_t i : sys.dirichlet.cells) {
    if (flow.aquifer_outflow[i] < 0.0) throughput[i] -= flow.aquifer_outflow[i];
  }
  const double slope = std::max(1.0, sys.max_slope);
  double dt_cfl = dt;
  for (std::size_t i = 0; i < n; ++i) {
    if (throughput[i] > 0.0) dt_cfl = std::min(dt_cfl, sys.cfl * sys.pore_volume[i] / (slope * throughput[i]));
  }

  std::vector<double> delta(n);
  double t = 0.0;
  while (t < dt) {
    double h = std::min(dt_cfl, dt - t);
    if (dt - (t + h) <= 1e-12 * dt) h = dt - t;
    std::fill(delta.begin(), delta.end(), 0.0);
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
      const double q = flow.face_flux[f];
      if (q == 0.0) continue;
      const mesh::Face& face = mesh.faces[f];
      const std::size_t up = q > 0.0 ? face.left : face.right;
      const std::size_t down = q > 0.0 ? face.right : face.left;
      const double g = gas_fractional_flow(state.s_g[up], sys.props) * std::abs(q);
      if (!std::isfinite(g)) {
        std::ostringstream msg;
        msg << "advance_saturation: non-finite gas flux on face " << f;
        throw NumericalBlowup(msg.str());
      }
      delta[up] -= g;
      delta[down] += g;
    }
    if (sys.well_cell) {
      delta[*sys.well_cell] += sys.well_rate;
      rep.injected += sys.well_rate * h;
    }
    for (std::size_t i : sys.dirichlet.cells) {
      const double out = flow.aquifer_outflow[i];
      if (out > 0.0) {
        const double g = gas_fractional_flow(state.s_g[i], sys.props) * out;
        delta[i] -= g;
        rep.to_aquifer += g * h;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (delta[i] == 0.0) continue;
      const double s_new = state.s_g[i] + h * delta[i] / sys.pore_volume[i];
      const double s_clamped = std::clamp(s_new, 0.0, sys.props.s_g_max);
      rep.clamped += (s_clamped - s_new) * sys.pore_volume[i];
      rep.stored += (s_clamped - state.s_g[i]) * sys.pore_volume[i];
      state.s_g[i] = s_clamped;
    }
    t += h;
    ++rep.substeps;
  }
  state.t += dt;
  return rep;
}

double StepBalance::relative_error() const {
  const double expected = injected - to_aquifer;
  const double scale = std::max({std::abs(injected), std::abs(to_aquifer), std::abs(stored), 1e-300});
  return std::abs(stored - expected) / scale;
}

SimResult run_simulation(const FlowSystem& sys, const Schedule& schedule) {
  schedule.validate();
  const std::size_t n = sys.mesh->num_cells();
  SimState state;
  state.p.assign(n, schedule.initial_pressure);
  state.s_g.assign(n, 0.0);
  state.t = 0.0;

  SimResult out;
  out.snapshots.push_back(state);
  const double interval = schedule.report_interval_days * kSecondsPerDay;
  const double max_dt = schedule.max_step_days * kSecondsPerDay;
  for (std::size_t step = 1; step <= schedule.report_steps; ++step) {
    const double t_end = static_cast<double>(step) * interval;
    StepBalance bal;
    while (t_end - state.t > 1e-9 * interval) {
      const double dt = std::min(max_dt, t_end - state.t);
      PressureSolution flow = solve_pressure(sys, state);
      state.p = flow.p;
      const SaturationReport rep = advance_saturation(sys, state, flow, dt);
      bal.injected += rep.injected;
      bal.to_aquifer += rep.to_aquifer;
      bal.stored += rep.stored;
    }
    state.t = t_end;
    state.p = solve_pressure(sys, state).p;
    out.snapshots.push_back(state);
    out.balance.push_back(bal);
  }
  return out;
}

SimResult run_simulation(const mesh::Mesh& mesh, const geo::GeoModel& geomodel,
                         const FluidProps& props, const Schedule& schedule) {
  const FlowSystem sys = make_flow_system(mesh, geomodel, props, schedule);
  return run_simulation(sys, schedule);
}

}  // namespace plume::sim
