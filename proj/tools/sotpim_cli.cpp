// Command-line front end: evaluates analytic costs, runs bit-level MAC
// verification against the reference model, reconciles simulated event logs
// with the analytic formulas, estimates training-scale comparisons, and runs
// the tiny functional training loop.
//
// Exit codes: 0 success, 1 verification failure, 2 config error,
// 3 numerical divergence.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "sotpim/cost_model.hpp"
#include "sotpim/pim_arith.hpp"
#include "sotpim/report_io.hpp"
#include "sotpim/softfloat.hpp"
#include "sotpim/subarray.hpp"
#include "sotpim/workload.hpp"

namespace {

using nlohmann::json;
using namespace sotpim;

struct CommonOpts {
  std::string calibration_path;
  std::string layout_str = "8,23";
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool fast_mram = false;
};

FloatLayout parse_layout(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos)
    throw ConfigError("layout must be <n_e>,<n_m>");
  const int ne = std::stoi(s.substr(0, comma));
  const int nm = std::stoi(s.substr(comma + 1));
  return FloatLayout(static_cast<std::uint32_t>(ne),
                     static_cast<std::uint32_t>(nm));
}

Calibration load_cal(const CommonOpts& o) {
  if (o.calibration_path.empty()) return default_calibration();
  return load_calibration(o.calibration_path);
}

std::string out_path(const CommonOpts& o, const std::string& name) {
  return (std::filesystem::path(o.out_dir) / name).string();
}

std::uint64_t random_finite_bits(std::mt19937_64& rng, const FloatLayout& ly) {
  // random sign/mantissa, exponent uniform over the normal range
  const std::uint64_t mant = rng() & ly.mant_mask();
  const std::uint64_t exp =
      1 + (rng() % static_cast<std::uint64_t>(ly.exp_max()));
  const std::uint32_t sign = static_cast<std::uint32_t>(rng() & 1);
  return pack_float(ly, FloatFields{sign, exp, mant});
}

int cmd_cost(const CommonOpts& o) {
  const Calibration cal = load_cal(o);
  const FloatLayout ly = parse_layout(o.layout_str);
  const PrimitiveCosts pc = cal.primitives(false);
  const CostReport add = analytic_add_cost(ly, pc);
  const CostReport mul = analytic_mul_cost(ly, pc);
  CostReport mac = analytic_mac_cost(ly, pc);
  mac.area_mm2 = cal.area.proposed_subarray_area_mm2;
  CostReport base = baseline_mac_cost(ly.n_e, ly.n_m, cal.baseline);
  base.area_mm2 = cal.area.baseline_subarray_area_mm2;

  json j;
  j["schema"] = "sotpim.cost/1";
  j["layout"] = {{"n_e", ly.n_e}, {"n_m", ly.n_m}};
  j["fast_mram"] = o.fast_mram;
  j["proposed"] = {{"add", cost_report_to_json(add)},
                   {"mul", cost_report_to_json(mul)},
                   {"mac", cost_report_to_json(mac)}};
  j["baseline"] = {{"mac", cost_report_to_json(base)}};
  j["ratios"] = {{"energy", base.energy_fj / mac.energy_fj},
                 {"latency", base.latency_ns / mac.latency_ns}};
  std::ostringstream csv;
  csv << cost_csv_header();
  csv << cost_csv_row("add", "proposed", add);
  csv << cost_csv_row("mul", "proposed", mul);
  csv << cost_csv_row("mac", "proposed", mac);
  csv << cost_csv_row("mac", "baseline", base);
  if (o.fast_mram) {
    const PrimitiveCosts fast_pc = cal.primitives(true);
    const CostReport fast_mac = analytic_mac_cost(ly, fast_pc);
    j["fast"] = {{"mac", cost_report_to_json(fast_mac)},
                 {"latency_reduction_vs_default",
                  1.0 - fast_mac.latency_ns / mac.latency_ns}};
    csv << cost_csv_row("mac", "proposed-fast", fast_mac);
  }
  write_file_atomic(out_path(o, "cost.json"), j.dump(2) + "\n");
  write_file_atomic(out_path(o, "cost.csv"), csv.str());
  std::cout << "mac latency ratio (baseline/proposed): "
            << base.latency_ns / mac.latency_ns << "\n"
            << "mac energy ratio  (baseline/proposed): "
            << base.energy_fj / mac.energy_fj << "\n";
  if (o.fast_mram)
    std::cout << "fast-mram mac latency reduction: "
              << j["fast"]["latency_reduction_vs_default"].get<double>() * 100
              << "%\n";
  return 0;
}

int cmd_simulate_mac(const CommonOpts& o, std::uint64_t n_random,
                     bool inject_fault, const std::string& trace_path) {
  const Calibration cal = load_cal(o);
  const FloatLayout ly = parse_layout(o.layout_str);
  const PrimitiveCosts pc = cal.primitives(false);

  Subarray sa(cal.subarray_rows, cal.subarray_cols);
  sa.set_event_recording(!trace_path.empty());
  PimFloatUnit unit(sa, ly, 3);
  const std::uint32_t w = ly.total_bits();
  const StoredFloat acc = float_word(ly, 0, 0);
  const StoredFloat x = float_word(ly, 0, w + 2);
  const StoredFloat wgt = float_word(ly, 1, 0);
  const StoredFloat prod = float_word(ly, 1, w + 2);
  const StoredFloat dst = float_word(ly, 2, 0);

  std::mt19937_64 rng(o.seed);
  std::uint64_t mismatches = 0;
  json failures = json::array();
  LogSummary add_sum{}, mul_sum{};
  std::uint64_t searches_per_add = 0;

  for (std::uint64_t i = 0; i < n_random; ++i) {
    const std::uint64_t av = random_finite_bits(rng, ly);
    const std::uint64_t xv = random_finite_bits(rng, ly);
    const std::uint64_t wv = random_finite_bits(rng, ly);
    store_float(sa, ly, av, acc.loc.row, acc.loc.col0);
    store_float(sa, ly, xv, x.loc.row, x.loc.col0);
    store_float(sa, ly, wv, wgt.loc.row, wgt.loc.col0);

    LogSummary before = sa.summarize_log();
    const FloatVal pim_p = unit.mul(x, wgt, prod);
    LogSummary after_mul = sa.summarize_log();
    const FloatVal pim_s = unit.add(acc, prod, dst);
    LogSummary after_add = sa.summarize_log();
    mul_sum += after_mul - before;
    add_sum += after_add - after_mul;
    searches_per_add = (after_add - after_mul).searches;

    if (inject_fault && i == n_random / 2) {
      // test hook: flip one result cell and verify the check trips
      sa.poke(dst.loc.row, dst.loc.col0, 1 - sa.peek(dst.loc.row, dst.loc.col0));
    }
    const std::uint64_t got = peek_float(sa, ly, dst);
    const FloatVal ref_p = ref_mul(ly, xv, wv);
    const FloatVal want = ref_add(ly, av, ref_p.bits);
    if (got != want.bits || pim_p.bits != ref_p.bits ||
        pim_s.bits != want.bits) {
      ++mismatches;
      if (failures.size() < 16)
        failures.push_back({{"acc", av}, {"x", xv}, {"w", wv},
                            {"got", got}, {"want", want.bits}});
    }
  }

  const double n = static_cast<double>(n_random);
  LogSummary add_avg = add_sum, mul_avg = mul_sum;
  const ReconcileReport rec_add =
      reconcile(add_sum, OpKind::Add, ly.n_e, ly.n_m, pc,
                cal.reconcile_tolerance, n);
  const ReconcileReport rec_mul =
      reconcile(mul_sum, OpKind::Mul, ly.n_e, ly.n_m, pc,
                cal.reconcile_tolerance, n);
  (void)add_avg;
  (void)mul_avg;

  json j;
  j["schema"] = "sotpim.simulate/1";
  j["layout"] = {{"n_e", ly.n_e}, {"n_m", ly.n_m}};
  j["seed"] = o.seed;
  j["n_random"] = n_random;
  j["mismatches"] = mismatches;
  j["failures"] = failures;
  j["search_count_per_add"] = searches_per_add;
  j["reconcile"] = {{"add", reconcile_to_json(rec_add)},
                    {"mul", reconcile_to_json(rec_mul)}};
  write_file_atomic(out_path(o, "simulate_mac.json"), j.dump(2) + "\n");
  if (!trace_path.empty()) {
    std::ostringstream os;
    sa.write_trace_csv(os);
    write_file_atomic(trace_path, os.str());
  }
  std::cout << "macs=" << n_random << " mismatches=" << mismatches
            << " searches/add=" << searches_per_add << "\n";
  return mismatches == 0 ? 0 : 1;
}

int cmd_reconcile(const CommonOpts& o) {
  const Calibration cal = load_cal(o);
  const FloatLayout ly = parse_layout(o.layout_str);
  const PrimitiveCosts pc = cal.primitives(false);
  Subarray sa(cal.subarray_rows, cal.subarray_cols);
  PimFloatUnit unit(sa, ly, 3);
  const std::uint32_t w = ly.total_bits();
  const StoredFloat a = float_word(ly, 0, 0);
  const StoredFloat b = float_word(ly, 1, 0);
  const StoredFloat dst = float_word(ly, 2, 0);
  std::mt19937_64 rng(o.seed);

  store_float(sa, ly, random_finite_bits(rng, ly), 0, 0);
  store_float(sa, ly, random_finite_bits(rng, ly), 1, 0);
  sa.reset_log();
  unit.add(a, b, dst);
  const ReconcileReport rec_add =
      reconcile(sa.summarize_log(), OpKind::Add, ly.n_e, ly.n_m, pc,
                cal.reconcile_tolerance);
  store_float(sa, ly, random_finite_bits(rng, ly), 0, 0);
  store_float(sa, ly, random_finite_bits(rng, ly), 1, 0);
  sa.reset_log();
  unit.mul(a, b, dst);
  const ReconcileReport rec_mul =
      reconcile(sa.summarize_log(), OpKind::Mul, ly.n_e, ly.n_m, pc,
                cal.reconcile_tolerance);
  (void)w;

  json j;
  j["schema"] = "sotpim.reconcile/1";
  j["layout"] = {{"n_e", ly.n_e}, {"n_m", ly.n_m}};
  j["seed"] = o.seed;
  j["add"] = reconcile_to_json(rec_add);
  j["mul"] = reconcile_to_json(rec_mul);
  write_file_atomic(out_path(o, "reconcile.json"), j.dump(2) + "\n");
  std::cout << "add dev: latency " << rec_add.latency_rel_dev << " energy "
            << rec_add.energy_rel_dev << (rec_add.flagged ? " FLAGGED" : "")
            << "\n"
            << "mul dev: latency " << rec_mul.latency_rel_dev << " energy "
            << rec_mul.energy_rel_dev << (rec_mul.flagged ? " FLAGGED" : "")
            << "\n";
  return 0;
}

int cmd_estimate_train(const CommonOpts& o, const std::string& netspec,
                       std::uint64_t batch, std::uint64_t steps) {
  const Calibration cal = load_cal(o);
  const FloatLayout ly = parse_layout(o.layout_str);
  NetworkSpec net;
  if (std::filesystem::exists(netspec))
    net = load_network_spec(netspec);
  else
    net = NetworkSpec::preset(netspec);
  const TrainingPlan plan = make_training_plan(net, batch, steps, cal, ly);
  const TrainingComparison cmp = estimate_training(net, plan, cal, ly);

  json j = training_comparison_to_json(cmp);
  j["schema"] = "sotpim.train_estimate/1";
  j["network"] = net.name;
  j["total_params"] = net.total_params();
  j["macs_per_step"] = plan.per_step.total();
  j["steps"] = plan.steps;
  j["batch_size"] = plan.batch_size;
  write_file_atomic(out_path(o, "train_estimate.json"), j.dump(2) + "\n");
  std::ostringstream csv;
  csv << cost_csv_header();
  csv << cost_csv_row("training", "proposed", cmp.proposed);
  csv << cost_csv_row("training", "baseline", cmp.baseline);
  write_file_atomic(out_path(o, "train_estimate.csv"), csv.str());
  std::cout << "ratios baseline/proposed: area " << cmp.area_ratio
            << " latency " << cmp.latency_ratio << " energy "
            << cmp.energy_ratio << "\n";
  return 0;
}

int cmd_train_tiny(const CommonOpts& o, const std::string& preset,
                   std::uint32_t epochs, const std::string& arith) {
  if (preset != "xor-mlp")
    throw ConfigError("train-tiny: unknown preset " + preset);
  const FloatLayout ly = parse_layout(o.layout_str);
  TinyTrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = o.seed;
  cfg.layout = ly;
  const ArithBackend backend =
      arith == "oracle" ? ArithBackend::Oracle : ArithBackend::Pim;
  const TrainResult res = train_tiny_xor(backend, cfg);

  std::ostringstream csv;
  csv << "epoch,loss,accuracy\n";
  for (std::size_t i = 0; i < res.epochs.size(); ++i)
    csv << i << ',' << res.epochs[i].loss << ',' << res.epochs[i].accuracy
        << '\n';
  write_file_atomic(out_path(o, "train_tiny.csv"), csv.str());
  std::cout << "epochs=" << res.epochs.size()
            << " final_accuracy=" << res.final_accuracy * 100 << "%"
            << (res.diverged ? " DIVERGED" : "") << "\n";
  if (res.diverged) return 3;
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOT-MRAM digital PIM simulator and cost model"};
  app.require_subcommand(1);

  CommonOpts o;
  app.add_option("--calibration", o.calibration_path,
                 "calibration JSON file (built-in defaults when omitted)");
  app.add_option("--layout", o.layout_str, "float layout as <n_e>,<n_m>");
  app.add_option("--out", o.out_dir, "output directory");
  app.add_option("--seed", o.seed, "seed for all randomness");
  app.add_flag("--fast-mram", o.fast_mram, "use the fast-switching cell");

  auto* cost = app.add_subcommand("cost", "analytic add/mul/MAC costs");

  std::uint64_t n_random = 1000;
  bool inject_fault = false;
  std::string trace_path;
  auto* sim = app.add_subcommand(
      "simulate-mac", "bit-level MACs verified against the reference model");
  sim->add_option("--n", n_random, "number of random MACs");
  sim->add_flag("--inject-fault", inject_fault,
                "test hook: flip one result cell mid-run");
  sim->add_option("--trace", trace_path, "write micro-op trace CSV here");

  auto* rec = app.add_subcommand(
      "reconcile", "simulated vs analytic cost for one add and one mul");

  std::string netspec = "lenet5";
  std::uint64_t batch = 64, steps = 938;
  auto* est = app.add_subcommand("estimate-train",
                                 "training cost comparison vs baseline");
  est->add_option("netspec", netspec, "preset name or spec JSON path");
  est->add_option("--batch", batch, "batch size");
  est->add_option("--steps", steps, "optimizer steps");

  std::string preset = "xor-mlp";
  std::uint32_t epochs = 500;
  std::string arith = "pim";
  auto* tt = app.add_subcommand("train-tiny",
                                "functional bit-level training loop");
  tt->add_option("preset", preset, "dataset/model preset");
  tt->add_option("--epochs", epochs, "training epochs");
  tt->add_option("--arith", arith, "pim|oracle");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cost->parsed()) return cmd_cost(o);
    if (sim->parsed())
      return cmd_simulate_mac(o, n_random, inject_fault, trace_path);
    if (rec->parsed()) return cmd_reconcile(o);
    if (est->parsed()) return cmd_estimate_train(o, netspec, batch, steps);
    if (tt->parsed()) return cmd_train_tiny(o, preset, epochs, arith);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
