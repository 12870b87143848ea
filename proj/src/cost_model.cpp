#include "sotpim/cost_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sotpim {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void add_phase(CostReport& r, const std::string& name, double lat,
               double en) {
  auto& p = r.breakdown[name];
  p.latency_ns += lat;
  p.energy_fj += en;
  r.latency_ns += lat;
  r.energy_fj += en;
}

void add_kind(CostReport& r, const std::string& name, double lat, double en) {
  auto& p = r.by_kind[name];
  p.latency_ns += lat;
  p.energy_fj += en;
}

CostReport merge_reports(const CostReport& a, const std::string& pa,
                         const CostReport& b, const std::string& pb) {
  CostReport r;
  r.latency_ns = a.latency_ns + b.latency_ns;
  r.energy_fj = a.energy_fj + b.energy_fj;
  r.area_mm2 = std::max(a.area_mm2, b.area_mm2);
  for (const auto& [k, v] : a.breakdown) r.breakdown[pa + k] = v;
  for (const auto& [k, v] : b.breakdown) r.breakdown[pb + k] = v;
  for (const auto& [k, v] : a.by_kind) {
    r.by_kind[k].latency_ns += v.latency_ns;
    r.by_kind[k].energy_fj += v.energy_fj;
  }
  for (const auto& [k, v] : b.by_kind) {
    r.by_kind[k].latency_ns += v.latency_ns;
    r.by_kind[k].energy_fj += v.energy_fj;
  }
  return r;
}

} // namespace

void CellParams::validate() const {
  require(r_on_ohm > 0 && r_off_ohm > 0 && v_b_volt > 0 && i_write_amp > 0 &&
              t_switch_ns > 0 && e_switch_fj > 0,
          "cell params must be positive");
  require(r_off_ohm > r_on_ohm, "cell params: need r_off > r_on");
}

void PeripheralParams::validate() const {
  require(write_overhead_ns >= 0 && write_overhead_fj >= 0,
          "peripheral write overheads must be nonnegative");
  require(t_read_ns > 0 && e_read_fj > 0 && t_search_ns > 0 &&
              e_search_fj > 0,
          "peripheral read/search costs must be positive");
}

void BaselineParams::validate() const {
  require(fa_steps > 0 && fa_cells > 0 && mul_write_cells > 0,
          "baseline counts must be positive");
  require(write_vs_nor_energy_ratio > 0 && t_cycle_ns > 0 && e_nor_fj > 0 &&
              align_quad_coeff > 0,
          "baseline costs must be positive");
}

void AreaParams::validate() const {
  require(proposed_subarray_area_mm2 > 0 && baseline_subarray_area_mm2 > 0 &&
              workspace_factor_proposed > 0 && workspace_factor_baseline > 0,
          "area params must be positive");
}

PrimitiveCosts derive_primitive_costs(const CellParams& cell,
                                      const PeripheralParams& peripheral) {
  cell.validate();
  peripheral.validate();
  PrimitiveCosts pc;
  pc.t_write_ns = cell.t_switch_ns + peripheral.write_overhead_ns;
  pc.e_write_fj = cell.e_switch_fj + peripheral.write_overhead_fj;
  pc.t_read_ns = peripheral.t_read_ns;
  pc.e_read_fj = peripheral.e_read_fj;
  pc.t_search_ns = peripheral.t_search_ns;
  pc.e_search_fj = peripheral.e_search_fj;
  return pc;
}

CostReport analytic_add_cost(std::uint32_t n_e, std::uint32_t n_m,
                             const PrimitiveCosts& pc) {
  const double ne = n_e, nm = n_m;
  CostReport r;
  // T = (1 + 7Ne + 7Nm) Tr + (7Ne + 7Nm) Tw + 2(Nm + 2) Ts
  // E = (1 + 14Ne + 12Nm) Er + (14Ne + 12Nm) Ew + 2(Nm + 2) Es
  // Phase split is a fixed presentation choice; only the sums are normative.
  add_phase(r, "exponent",
            (7 * ne + 1) * pc.t_read_ns + 7 * ne * pc.t_write_ns,
            (14 * ne + 1) * pc.e_read_fj + 14 * ne * pc.e_write_fj);
  add_phase(r, "alignment_search", 2 * (nm + 2) * pc.t_search_ns,
            2 * (nm + 2) * pc.e_search_fj);
  add_phase(r, "mantissa", 5 * nm * (pc.t_read_ns + pc.t_write_ns),
            9 * nm * (pc.e_read_fj + pc.e_write_fj));
  add_phase(r, "normalization", 2 * nm * (pc.t_read_ns + pc.t_write_ns),
            3 * nm * (pc.e_read_fj + pc.e_write_fj));
  add_kind(r, "read", (1 + 7 * ne + 7 * nm) * pc.t_read_ns,
           (1 + 14 * ne + 12 * nm) * pc.e_read_fj);
  add_kind(r, "write", (7 * ne + 7 * nm) * pc.t_write_ns,
           (14 * ne + 12 * nm) * pc.e_write_fj);
  add_kind(r, "search", 2 * (nm + 2) * pc.t_search_ns,
           2 * (nm + 2) * pc.e_search_fj);
  return r;
}

CostReport analytic_mul_cost(std::uint32_t n_e, std::uint32_t n_m,
                             const PrimitiveCosts& pc) {
  const double ne = n_e, nm = n_m;
  CostReport r;
  // T = (2Nm^2 + 6.5Nm + 6Ne + 3)(Tr + Tw)
  // E = (4.5Nm^2 + 11.5Nm + 13.5Ne + 6.5)(Er + Ew)
  const double t_unit = pc.t_read_ns + pc.t_write_ns;
  const double e_unit = pc.e_read_fj + pc.e_write_fj;
  add_phase(r, "mantissa", (2 * nm * nm + 6.5 * nm) * t_unit,
            (4.5 * nm * nm + 11.5 * nm) * e_unit);
  add_phase(r, "exponent", (6 * ne + 2) * t_unit, (13.5 * ne + 5.5) * e_unit);
  add_phase(r, "normalization", 1 * t_unit, 1 * e_unit);
  const double t_coeff = 2 * nm * nm + 6.5 * nm + 6 * ne + 3;
  const double e_coeff = 4.5 * nm * nm + 11.5 * nm + 13.5 * ne + 6.5;
  add_kind(r, "read", t_coeff * pc.t_read_ns, e_coeff * pc.e_read_fj);
  add_kind(r, "write", t_coeff * pc.t_write_ns, e_coeff * pc.e_write_fj);
  return r;
}

CostReport analytic_mac_cost(std::uint32_t n_e, std::uint32_t n_m,
                             const PrimitiveCosts& pc) {
  return merge_reports(analytic_add_cost(n_e, n_m, pc), "add.",
                       analytic_mul_cost(n_e, n_m, pc), "mul.");
}

CostReport analytic_add_cost(const FloatLayout& ly, const PrimitiveCosts& pc) {
  return analytic_add_cost(ly.n_e, ly.n_m, pc);
}
CostReport analytic_mul_cost(const FloatLayout& ly, const PrimitiveCosts& pc) {
  return analytic_mul_cost(ly.n_e, ly.n_m, pc);
}
CostReport analytic_mac_cost(const FloatLayout& ly, const PrimitiveCosts& pc) {
  return analytic_mac_cost(ly.n_e, ly.n_m, pc);
}

CostReport baseline_mac_cost(std::uint32_t n_e, std::uint32_t n_m,
                             const BaselineParams& bp) {
  bp.validate();
  const double ne = n_e, nm = n_m;
  CostReport r;
  // FA chains: fa_steps cell switches per bit position.
  const double add_fa_cycles = bp.fa_steps * (nm + 1) + bp.fa_steps * ne;
  // bit-by-bit exponent alignment, quadratic in the mantissa width
  const double align_cycles = bp.align_quad_coeff * nm * (nm + 2);
  const double mul_fa_cycles =
      bp.fa_steps * (nm + 1) * (nm + 1) + (nm + 1);
  // intermediate-result cell writes, scaled from the 32-bit reference count
  const double mul_writes = bp.mul_write_cells * ((nm + 1) * (nm + 1) / 576.0);
  const double e_write = bp.write_vs_nor_energy_ratio * bp.e_nor_fj;

  add_phase(r, "fa_add", add_fa_cycles * bp.t_cycle_ns,
            add_fa_cycles * bp.e_nor_fj);
  add_phase(r, "alignment", align_cycles * bp.t_cycle_ns,
            align_cycles * e_write);
  add_phase(r, "fa_mul", mul_fa_cycles * bp.t_cycle_ns,
            mul_fa_cycles * bp.e_nor_fj);
  add_phase(r, "intermediate_writes", 0.0, mul_writes * e_write);
  add_kind(r, "nor", (add_fa_cycles + mul_fa_cycles) * bp.t_cycle_ns,
           (add_fa_cycles + mul_fa_cycles) * bp.e_nor_fj);
  add_kind(r, "write", align_cycles * bp.t_cycle_ns,
           (align_cycles + mul_writes) * e_write);
  return r;
}

double area_estimate(double n_subarrays, double per_subarray_area_mm2) {
  require(n_subarrays > 0 && per_subarray_area_mm2 > 0,
          "area estimate inputs must be positive");
  return n_subarrays * per_subarray_area_mm2;
}

double simulated_latency_ns(const LogSummary& s, const PrimitiveCosts& pc) {
  return static_cast<double>(s.reads) * pc.t_read_ns +
         static_cast<double>(s.writes) * pc.t_write_ns +
         static_cast<double>(s.searches) * pc.t_search_ns;
}

double simulated_energy_fj(const LogSummary& s, const PrimitiveCosts& pc) {
  return static_cast<double>(s.bits_read) * pc.e_read_fj +
         static_cast<double>(s.bits_written) * pc.e_write_fj +
         static_cast<double>(s.words_searched) * pc.e_search_fj;
}

ReconcileReport reconcile(const LogSummary& sim, OpKind op, std::uint32_t n_e,
                          std::uint32_t n_m, const PrimitiveCosts& pc,
                          double tolerance, double ops) {
  ReconcileReport r;
  r.op = op;
  r.ops = ops;
  r.tolerance = tolerance;
  CostReport an;
  switch (op) {
    case OpKind::Add: an = analytic_add_cost(n_e, n_m, pc); break;
    case OpKind::Mul: an = analytic_mul_cost(n_e, n_m, pc); break;
    case OpKind::Mac: an = analytic_mac_cost(n_e, n_m, pc); break;
  }
  r.analytic_latency_ns = an.latency_ns * ops;
  r.analytic_energy_fj = an.energy_fj * ops;
  r.simulated_latency_ns = simulated_latency_ns(sim, pc);
  r.simulated_energy_fj = simulated_energy_fj(sim, pc);
  r.latency_rel_dev =
      (r.simulated_latency_ns - r.analytic_latency_ns) / r.analytic_latency_ns;
  r.energy_rel_dev =
      (r.simulated_energy_fj - r.analytic_energy_fj) / r.analytic_energy_fj;
  r.flagged = sim.events() == 0 || std::fabs(r.latency_rel_dev) > tolerance ||
              std::fabs(r.energy_rel_dev) > tolerance;
  return r;
}

void Calibration::validate() const {
  cell.validate();
  peripheral.validate();
  baseline.validate();
  area.validate();
  require(fast_t_switch_ns > 0, "fast_t_switch_ns must be positive");
  require(reconcile_tolerance > 0, "reconcile_tolerance must be positive");
  require(subarray_rows > 0 && subarray_cols > 0,
          "subarray geometry must be positive");
  require(weight_traffic_fj_per_bit >= 0 && weight_traffic_ns_per_bit >= 0,
          "weight traffic costs must be nonnegative");
}

PrimitiveCosts Calibration::primitives(bool fast_mram) const {
  CellParams c = cell;
  if (fast_mram) c.t_switch_ns = fast_t_switch_ns;
  return derive_primitive_costs(c, peripheral);
}

Calibration default_calibration() { return Calibration{}; }

namespace {

using nlohmann::json;

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

Calibration load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open calibration file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("calibration parse error: " + std::string(e.what()));
  }
  Calibration c;
  try {
    if (j.contains("cell")) {
      const auto& v = j["cell"];
      get_if(v, "r_on_ohm", c.cell.r_on_ohm);
      get_if(v, "r_off_ohm", c.cell.r_off_ohm);
      get_if(v, "v_b_volt", c.cell.v_b_volt);
      get_if(v, "i_write_amp", c.cell.i_write_amp);
      get_if(v, "t_switch_ns", c.cell.t_switch_ns);
      get_if(v, "e_switch_fj", c.cell.e_switch_fj);
    }
    if (j.contains("peripheral")) {
      const auto& v = j["peripheral"];
      get_if(v, "write_overhead_ns", c.peripheral.write_overhead_ns);
      get_if(v, "write_overhead_fj", c.peripheral.write_overhead_fj);
      get_if(v, "t_read_ns", c.peripheral.t_read_ns);
      get_if(v, "e_read_fj", c.peripheral.e_read_fj);
      get_if(v, "t_search_ns", c.peripheral.t_search_ns);
      get_if(v, "e_search_fj", c.peripheral.e_search_fj);
    }
    if (j.contains("baseline")) {
      const auto& v = j["baseline"];
      get_if(v, "fa_steps", c.baseline.fa_steps);
      get_if(v, "fa_cells", c.baseline.fa_cells);
      get_if(v, "mul_write_cells", c.baseline.mul_write_cells);
      get_if(v, "write_vs_nor_energy_ratio",
             c.baseline.write_vs_nor_energy_ratio);
      get_if(v, "t_cycle_ns", c.baseline.t_cycle_ns);
      get_if(v, "e_nor_fj", c.baseline.e_nor_fj);
      get_if(v, "align_quad_coeff", c.baseline.align_quad_coeff);
    }
    if (j.contains("area")) {
      const auto& v = j["area"];
      get_if(v, "proposed_subarray_area_mm2",
             c.area.proposed_subarray_area_mm2);
      get_if(v, "baseline_subarray_area_mm2",
             c.area.baseline_subarray_area_mm2);
      get_if(v, "workspace_factor_proposed",
             c.area.workspace_factor_proposed);
      get_if(v, "workspace_factor_baseline",
             c.area.workspace_factor_baseline);
    }
    get_if(j, "fast_t_switch_ns", c.fast_t_switch_ns);
    get_if(j, "reconcile_tolerance", c.reconcile_tolerance);
    get_if(j, "subarray_rows", c.subarray_rows);
    get_if(j, "subarray_cols", c.subarray_cols);
    get_if(j, "weight_traffic_fj_per_bit", c.weight_traffic_fj_per_bit);
    get_if(j, "weight_traffic_ns_per_bit", c.weight_traffic_ns_per_bit);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("calibration field error: " + std::string(e.what()));
  }
  c.validate();
  return c;
}

std::string calibration_to_json(const Calibration& c) {
  json j;
  j["cell"] = {{"r_on_ohm", c.cell.r_on_ohm},
               {"r_off_ohm", c.cell.r_off_ohm},
               {"v_b_volt", c.cell.v_b_volt},
               {"i_write_amp", c.cell.i_write_amp},
               {"t_switch_ns", c.cell.t_switch_ns},
               {"e_switch_fj", c.cell.e_switch_fj}};
  j["peripheral"] = {{"write_overhead_ns", c.peripheral.write_overhead_ns},
                     {"write_overhead_fj", c.peripheral.write_overhead_fj},
                     {"t_read_ns", c.peripheral.t_read_ns},
                     {"e_read_fj", c.peripheral.e_read_fj},
                     {"t_search_ns", c.peripheral.t_search_ns},
                     {"e_search_fj", c.peripheral.e_search_fj}};
  j["baseline"] = {{"fa_steps", c.baseline.fa_steps},
                   {"fa_cells", c.baseline.fa_cells},
                   {"mul_write_cells", c.baseline.mul_write_cells},
                   {"write_vs_nor_energy_ratio",
                    c.baseline.write_vs_nor_energy_ratio},
                   {"t_cycle_ns", c.baseline.t_cycle_ns},
                   {"e_nor_fj", c.baseline.e_nor_fj},
                   {"align_quad_coeff", c.baseline.align_quad_coeff}};
  j["area"] = {{"proposed_subarray_area_mm2",
                c.area.proposed_subarray_area_mm2},
               {"baseline_subarray_area_mm2",
                c.area.baseline_subarray_area_mm2},
               {"workspace_factor_proposed", c.area.workspace_factor_proposed},
               {"workspace_factor_baseline",
                c.area.workspace_factor_baseline}};
  j["fast_t_switch_ns"] = c.fast_t_switch_ns;
  j["reconcile_tolerance"] = c.reconcile_tolerance;
  j["subarray_rows"] = c.subarray_rows;
  j["subarray_cols"] = c.subarray_cols;
  j["weight_traffic_fj_per_bit"] = c.weight_traffic_fj_per_bit;
  j["weight_traffic_ns_per_bit"] = c.weight_traffic_ns_per_bit;
  return j.dump(2);
}

} // namespace sotpim
