#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "plume/geomodel.hpp"
#include "plume/mesh.hpp"

namespace plume::sim {

inline constexpr double kSecondsPerDay = 86400.0;

struct FluidProps {
  double rho_g = 700.0;   // kg/m^3
  double rho_a = 1000.0;  // kg/m^3
  double mu_g = 6e-5;     // Pa s
  double mu_a = 5e-4;     // Pa s
  double s_a_min = 0.2;
  double s_g_max = 0.8;
  double krg_end = 0.95;

  void validate() const;
};

enum class Phase { gas, aqueous };

/// Brooks-Corey: k_rg = krg_end (s_g/s_g,max)^2, k_ra = ((s_a - s_a,min)/(1 - s_a,min))^6,
/// both clamped to their physical range.
double relperm(Phase phase, double s_g, const FluidProps& props);
double total_mobility(double s_g, const FluidProps& props);
double gas_fractional_flow(double s_g, const FluidProps& props);
/// max over [0, s_g,max] of d f_g / d s_g, sampled.
double max_fractional_flow_slope(const FluidProps& props);

struct SimState {
  std::vector<double> p;    // gas-phase pressure, Pa
  std::vector<double> s_g;  // gas saturation
  double t = 0.0;           // s
};

struct Schedule {
  double injection_rate = 0.058;  // kg/s
  double report_interval_days = 50.0;
  std::size_t report_steps = 19;
  double boundary_pressure = 10e6;  // Pa
  double initial_pressure = 10e6;   // Pa
  double max_step_days = 5.0;       // pressure update interval
  double cfl = 0.5;

  void validate() const;
};

struct DirichletSet {
  std::vector<std::size_t> cells;
  std::vector<double> pressure;
};

/// Every cell owning a domain-boundary face, except the injector.
DirichletSet boundary_dirichlet(const mesh::Mesh& mesh, const geo::GeoModel& geomodel, double pressure);

struct FlowSystem {
  const mesh::Mesh* mesh = nullptr;
  mesh::TransmissibilityMap trans;
  std::vector<double> pore_volume;  // m^3
  FluidProps props;
  std::optional<std::size_t> well_cell;
  double well_rate = 0.0;  // m^3/s of gas
  DirichletSet dirichlet;
  double max_slope = 1.0;  // cached max d f_g / d s_g
  double cfl = 0.5;
};

FlowSystem make_flow_system(const mesh::Mesh& mesh, const geo::GeoModel& geomodel,
                            const FluidProps& props, const Schedule& schedule,
                            std::optional<DirichletSet> dirichlet = std::nullopt);

struct PressureSolution {
  std::vector<double> p;
  std::vector<double> face_flux;        // total volumetric flux left -> right, m^3/s
  std::vector<double> face_mobility;    // upstream total mobility used per face
  std::vector<double> aquifer_outflow;  // per Dirichlet cell, m^3/s leaving the domain
};

/// Incompressible total-flux pressure equation with upstream total mobility
/// taken from the current state's pressure. Solved as an increment on
/// state.p; floating (Dirichlet-free) components with zero net source keep
/// their pressure.
PressureSolution solve_pressure(const FlowSystem& system, const SimState& state);

struct SaturationReport {
  double injected = 0.0;    // gas volume in through the well, m^3
  double to_aquifer = 0.0;  // gas volume out through Dirichlet cells, m^3
  double stored = 0.0;      // sum of pore_volume * delta s_g, m^3
  double clamped = 0.0;     // pore volume removed or added by clamping, m^3
  std::size_t substeps = 0;
};

/// Explicit upstream saturation transport over dt with CFL sub-stepping at
/// frozen total fluxes.
SaturationReport advance_saturation(const FlowSystem& system, SimState& state,
                                    const PressureSolution& flow, double dt);

struct StepBalance {
  double injected = 0.0;
  double to_aquifer = 0.0;
  double stored = 0.0;

  double relative_error() const;
};

struct SimResult {
  std::vector<SimState> snapshots;   // snapshot 0 is the initial state
  std::vector<StepBalance> balance;  // one entry per report step
};

SimResult run_simulation(const FlowSystem& system, const Schedule& schedule);
SimResult run_simulation(const mesh::Mesh& mesh, const geo::GeoModel& geomodel,
                         const FluidProps& props, const Schedule& schedule);

}  // namespace plume::sim
