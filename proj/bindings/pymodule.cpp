#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sotpim/cost_model.hpp"
#include "sotpim/pim_arith.hpp"
#include "sotpim/report_io.hpp"
#include "sotpim/softfloat.hpp"
#include "sotpim/subarray.hpp"
#include "sotpim/workload.hpp"

namespace py = pybind11;
using namespace sotpim;

namespace {

// Convenience wrapper: one subarray, operand/result rows, a float unit.
class PimMachine {
 public:
  explicit PimMachine(std::uint32_t n_e = 8, std::uint32_t n_m = 23,
                      std::uint32_t rows = 16, std::uint32_t cols = 1024)
      : ly_(n_e, n_m), sa_(rows, cols), unit_(sa_, ly_, 3) {
    const std::uint32_t base = PimFloatUnit::scratch_cols_needed(ly_) + 4;
    if (base + ly_.total_bits() > cols)
      throw std::invalid_argument("subarray too narrow for this layout");
    a_ = float_word(ly_, 0, base);
    b_ = float_word(ly_, 1, base);
    prod_ = float_word(ly_, 1, 0);
    dst_ = float_word(ly_, 2, base);
  }

  std::uint64_t add(std::uint64_t a, std::uint64_t b) {
    store_float(sa_, ly_, a, a_.loc.row, a_.loc.col0);
    store_float(sa_, ly_, b, b_.loc.row, b_.loc.col0);
    return unit_.add(a_, b_, dst_).bits;
  }
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
    store_float(sa_, ly_, a, a_.loc.row, a_.loc.col0);
    store_float(sa_, ly_, b, b_.loc.row, b_.loc.col0);
    return unit_.mul(a_, b_, dst_).bits;
  }
  std::uint64_t mac(std::uint64_t acc, std::uint64_t x, std::uint64_t w) {
    store_float(sa_, ly_, x, a_.loc.row, a_.loc.col0);
    store_float(sa_, ly_, w, b_.loc.row, b_.loc.col0);
    unit_.mul(a_, b_, prod_);
    store_float(sa_, ly_, acc, a_.loc.row, a_.loc.col0);
    return unit_.add(a_, prod_, dst_).bits;
  }
  LogSummary summary() const { return sa_.summarize_log(); }
  void reset_log() { sa_.reset_log(); }

 private:
  FloatLayout ly_;
  Subarray sa_;
  PimFloatUnit unit_;
  StoredFloat a_, b_, prod_, dst_;
};

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "SOT-MRAM digital PIM simulator and cost model";

  py::enum_<LogicKind>(m, "LogicKind")
      .value("Copy", LogicKind::Copy)
      .value("And", LogicKind::And)
      .value("Or", LogicKind::Or)
      .value("Xor", LogicKind::Xor);

  m.def("apply_write",
        [](int stored, int applied, LogicKind kind) {
          return decode_cell(apply_write(encode_cell(stored),
                                         make_write_config(kind, applied)));
        },
        py::arg("stored"), py::arg("applied"), py::arg("kind"),
        "post-write cell state as a function of the stored and applied bits");
  m.def("read_cell", [](int stored) { return read_cell(encode_cell(stored)); });

  py::class_<LogSummary>(m, "LogSummary")
      .def_readonly("reads", &LogSummary::reads)
      .def_readonly("writes", &LogSummary::writes)
      .def_readonly("searches", &LogSummary::searches)
      .def_readonly("bits_read", &LogSummary::bits_read)
      .def_readonly("bits_written", &LogSummary::bits_written)
      .def_readonly("words_searched", &LogSummary::words_searched);

  py::class_<Subarray>(m, "Subarray")
      .def(py::init<std::uint32_t, std::uint32_t>(), py::arg("rows") = 1024,
           py::arg("cols") = 1024)
      .def("rows", &Subarray::rows)
      .def("cols", &Subarray::cols)
      .def("read_row",
           [](Subarray& sa, std::uint32_t row,
              const std::vector<std::uint32_t>& cols) {
             return sa.read_row(row, cols);
           })
      .def("write_row",
           [](Subarray& sa, std::uint32_t row,
              const std::vector<std::tuple<std::uint32_t, LogicKind, int>>&
                  ops) {
             std::vector<ColumnOp> v;
             for (const auto& [col, kind, bit] : ops)
               v.push_back({col, make_write_config(kind, bit)});
             sa.write_row(row, v);
           })
      .def("search",
           [](Subarray& sa, std::uint64_t key, std::uint32_t key_width,
              const std::vector<std::tuple<std::uint32_t, std::uint32_t>>&
                  words) {
             std::vector<WordLoc> region;
             for (const auto& [row, col0] : words)
               region.push_back({row, col0, key_width});
             return sa.search(key, key_width, region);
           })
      .def("peek", &Subarray::peek)
      .def("poke", &Subarray::poke)
      .def("reset_log", &Subarray::reset_log)
      .def("summarize_log", &Subarray::summarize_log)
      .def("trace_csv", [](const Subarray& sa) {
        std::ostringstream os;
        sa.write_trace_csv(os);
        return os.str();
      });

  py::class_<FloatLayout>(m, "FloatLayout")
      .def(py::init<std::uint32_t, std::uint32_t>(), py::arg("n_e") = 8,
           py::arg("n_m") = 23)
      .def_readonly("n_e", &FloatLayout::n_e)
      .def_readonly("n_m", &FloatLayout::n_m)
      .def_readonly("bias", &FloatLayout::bias)
      .def("total_bits", &FloatLayout::total_bits);

  m.def("encode_float",
        [](const FloatLayout& ly, double v) { return encode_float(ly, v).bits; });
  m.def("decode_float", &decode_float);
  m.def("ulp_distance", &ulp_distance);
  m.def("ref_add", [](const FloatLayout& ly, std::uint64_t a,
                      std::uint64_t b) { return ref_add(ly, a, b).bits; });
  m.def("ref_mul", [](const FloatLayout& ly, std::uint64_t a,
                      std::uint64_t b) { return ref_mul(ly, a, b).bits; });
  m.def("ref_mac",
        [](const FloatLayout& ly, std::uint64_t acc, std::uint64_t x,
           std::uint64_t w) { return ref_mac(ly, acc, x, w).bits; });

  py::class_<PimMachine>(m, "PimMachine")
      .def(py::init<std::uint32_t, std::uint32_t, std::uint32_t,
                    std::uint32_t>(),
           py::arg("n_e") = 8, py::arg("n_m") = 23, py::arg("rows") = 16,
           py::arg("cols") = 1024)
      .def("add", &PimMachine::add)
      .def("mul", &PimMachine::mul)
      .def("mac", &PimMachine::mac)
      .def("summary", &PimMachine::summary)
      .def("reset_log", &PimMachine::reset_log);

  py::class_<PrimitiveCosts>(m, "PrimitiveCosts")
      .def_readonly("t_read_ns", &PrimitiveCosts::t_read_ns)
      .def_readonly("t_write_ns", &PrimitiveCosts::t_write_ns)
      .def_readonly("t_search_ns", &PrimitiveCosts::t_search_ns)
      .def_readonly("e_read_fj", &PrimitiveCosts::e_read_fj)
      .def_readonly("e_write_fj", &PrimitiveCosts::e_write_fj)
      .def_readonly("e_search_fj", &PrimitiveCosts::e_search_fj);

  py::class_<CostReport>(m, "CostReport")
      .def_readonly("latency_ns", &CostReport::latency_ns)
      .def_readonly("energy_fj", &CostReport::energy_fj)
      .def_readonly("area_mm2", &CostReport::area_mm2);

  py::class_<Calibration>(m, "Calibration")
      .def(py::init(&default_calibration))
      .def("primitives", &Calibration::primitives,
           py::arg("fast_mram") = false);
  m.def("default_calibration", &default_calibration);
  m.def("load_calibration", &load_calibration);

  m.def("analytic_add_cost",
        [](std::uint32_t n_e, std::uint32_t n_m, const PrimitiveCosts& pc) {
          return analytic_add_cost(n_e, n_m, pc);
        });
  m.def("analytic_mul_cost",
        [](std::uint32_t n_e, std::uint32_t n_m, const PrimitiveCosts& pc) {
          return analytic_mul_cost(n_e, n_m, pc);
        });
  m.def("analytic_mac_cost",
        [](std::uint32_t n_e, std::uint32_t n_m, const PrimitiveCosts& pc) {
          return analytic_mac_cost(n_e, n_m, pc);
        });
  m.def("baseline_mac_cost",
        [](std::uint32_t n_e, std::uint32_t n_m, const BaselineParams& bp) {
          return baseline_mac_cost(n_e, n_m, bp);
        });
  py::class_<BaselineParams>(m, "BaselineParams").def(py::init<>());
  m.def("area_estimate", &area_estimate);

  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def_static("lenet5", &NetworkSpec::lenet5)
      .def_static("xor_mlp", &NetworkSpec::xor_mlp)
      .def("total_params", &NetworkSpec::total_params)
      .def("forward_macs", &NetworkSpec::forward_macs)
      .def_readonly("name", &NetworkSpec::name);

  py::class_<MacCounts>(m, "MacCounts")
      .def_readonly("forward", &MacCounts::forward)
      .def_readonly("backward", &MacCounts::backward)
      .def_readonly("update", &MacCounts::update)
      .def("total", &MacCounts::total);
  m.def("count_training_macs", &count_training_macs);

  py::class_<TrainingComparison>(m, "TrainingComparison")
      .def_readonly("proposed", &TrainingComparison::proposed)
      .def_readonly("baseline", &TrainingComparison::baseline)
      .def_readonly("area_ratio", &TrainingComparison::area_ratio)
      .def_readonly("latency_ratio", &TrainingComparison::latency_ratio)
      .def_readonly("energy_ratio", &TrainingComparison::energy_ratio);
  m.def("estimate_training_preset",
        [](const std::string& preset, std::uint64_t batch,
           std::uint64_t steps) {
          const Calibration cal = default_calibration();
          const FloatLayout ly = FloatLayout::f32();
          const NetworkSpec net = NetworkSpec::preset(preset);
          const TrainingPlan plan =
              make_training_plan(net, batch, steps, cal, ly);
          return estimate_training(net, plan, cal, ly);
        },
        py::arg("preset") = "lenet5", py::arg("batch") = 64,
        py::arg("steps") = 938);

  py::enum_<ArithBackend>(m, "ArithBackend")
      .value("Oracle", ArithBackend::Oracle)
      .value("Pim", ArithBackend::Pim);
  py::class_<EpochStat>(m, "EpochStat")
      .def_readonly("loss_bits", &EpochStat::loss_bits)
      .def_readonly("loss", &EpochStat::loss)
      .def_readonly("accuracy", &EpochStat::accuracy);
  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("epochs", &TrainResult::epochs)
      .def_readonly("final_accuracy", &TrainResult::final_accuracy)
      .def_readonly("first_full_accuracy_epoch",
                    &TrainResult::first_full_accuracy_epoch)
      .def_readonly("diverged", &TrainResult::diverged);
  m.def("train_tiny_xor",
        [](ArithBackend backend, std::uint32_t epochs, std::uint64_t seed) {
          TinyTrainConfig cfg;
          cfg.epochs = epochs;
          cfg.seed = seed;
          return train_tiny_xor(backend, cfg);
        },
        py::arg("backend") = ArithBackend::Pim, py::arg("epochs") = 500,
        py::arg("seed") = 1);
}
