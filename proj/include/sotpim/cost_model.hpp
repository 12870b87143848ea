#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "sotpim/layout.hpp"
#include "sotpim/subarray.hpp"

// Latency/energy/area pricing. Latency primitives are per micro-op event
// (row reads and writes are column-parallel), energy primitives are per bit
// touched, search energy per word probed. The analytic add/mul polynomials
// are normative for reported costs; simulated event logs are reconciled
// against them within a configured tolerance.

namespace sotpim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CellParams {
  double r_on_ohm = 50e3;
  double r_off_ohm = 100e3;
  double v_b_volt = 0.6;
  double i_write_amp = 65e-6;
  double t_switch_ns = 2.0;
  double e_switch_fj = 12.0;
  void validate() const;
};

struct PeripheralParams {
  double write_overhead_ns = 0.2;
  double write_overhead_fj = 1.0;
  double t_read_ns = 0.3;
  double e_read_fj = 0.5;
  double t_search_ns = 0.4;
  double e_search_fj = 2.0;
  void validate() const;
};

struct PrimitiveCosts {
  double t_read_ns = 0;
  double t_write_ns = 0;
  double t_search_ns = 0;
  double e_read_fj = 0;
  double e_write_fj = 0;
  double e_search_fj = 0;
};

PrimitiveCosts derive_primitive_costs(const CellParams& cell,
                                      const PeripheralParams& peripheral);

// NOR-based digital PIM baseline, counted analytically. The per-cycle and
// per-op energies are calibrated numbers, not measurements.
struct BaselineParams {
  int fa_steps = 13;
  int fa_cells = 12;
  int mul_write_cells = 455; // intermediate-result cells per 32-bit multiply
  double write_vs_nor_energy_ratio = 100.0;
  double t_cycle_ns = 0.8126;
  double e_nor_fj = 1.7044;
  double align_quad_coeff = 0.5; // bit-by-bit alignment steps per n_m*(n_m+2)
  void validate() const;
};

struct PhaseCost {
  double latency_ns = 0;
  double energy_fj = 0;
};

struct CostReport {
  double latency_ns = 0;
  double energy_fj = 0;
  double area_mm2 = 0;
  std::map<std::string, PhaseCost> breakdown; // semantic phases
  std::map<std::string, PhaseCost> by_kind;   // read / write / search
};

// Analytic cost polynomials; the (n_e, n_m) overloads accept degenerate
// dimensions for closed-form checks.
CostReport analytic_add_cost(std::uint32_t n_e, std::uint32_t n_m,
                             const PrimitiveCosts& pc);
CostReport analytic_mul_cost(std::uint32_t n_e, std::uint32_t n_m,
                             const PrimitiveCosts& pc);
CostReport analytic_mac_cost(std::uint32_t n_e, std::uint32_t n_m,
                             const PrimitiveCosts& pc);
CostReport analytic_add_cost(const FloatLayout& ly, const PrimitiveCosts& pc);
CostReport analytic_mul_cost(const FloatLayout& ly, const PrimitiveCosts& pc);
CostReport analytic_mac_cost(const FloatLayout& ly, const PrimitiveCosts& pc);

CostReport baseline_mac_cost(std::uint32_t n_e, std::uint32_t n_m,
                             const BaselineParams& bp);

double area_estimate(double n_subarrays, double per_subarray_area_mm2);

double simulated_latency_ns(const LogSummary& s, const PrimitiveCosts& pc);
double simulated_energy_fj(const LogSummary& s, const PrimitiveCosts& pc);

enum class OpKind : std::uint8_t { Add, Mul, Mac };

struct ReconcileReport {
  OpKind op = OpKind::Add;
  double ops = 1;
  double analytic_latency_ns = 0;
  double simulated_latency_ns = 0;
  double latency_rel_dev = 0;
  double analytic_energy_fj = 0;
  double simulated_energy_fj = 0;
  double energy_rel_dev = 0;
  double tolerance = 0.30;
  bool flagged = false;
};

// Compare a simulated event summary (covering `ops` operations of the given
// kind) against the analytic polynomials.
ReconcileReport reconcile(const LogSummary& sim, OpKind op, std::uint32_t n_e,
                          std::uint32_t n_m, const PrimitiveCosts& pc,
                          double tolerance = 0.30, double ops = 1.0);

struct AreaParams {
  double proposed_subarray_area_mm2 = 0.35;
  double baseline_subarray_area_mm2 = 0.35;
  double workspace_factor_proposed = 3.0;
  double workspace_factor_baseline = 7.5;
  void validate() const;
};

struct Calibration {
  CellParams cell;
  PeripheralParams peripheral;
  BaselineParams baseline;
  AreaParams area;
  double fast_t_switch_ns = 0.575;
  double reconcile_tolerance = 0.30;
  std::uint32_t subarray_rows = 1024;
  std::uint32_t subarray_cols = 1024;
  double weight_traffic_fj_per_bit = 0.0;
  double weight_traffic_ns_per_bit = 0.0;

  void validate() const;
  // effective primitive costs; fast swaps in the fast-switching cell
  PrimitiveCosts primitives(bool fast_mram = false) const;
};

Calibration default_calibration();
Calibration load_calibration(const std::string& path);
std::string calibration_to_json(const Calibration& c);

} // namespace sotpim
