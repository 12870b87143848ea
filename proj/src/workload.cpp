#include "sotpim/workload.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

#include "sotpim/pim_arith.hpp"
#include "sotpim/subarray.hpp"

namespace sotpim {

std::uint64_t LayerSpec::params() const {
  switch (kind) {
    case LayerKind::Conv:
      return static_cast<std::uint64_t>(out_channels) *
             (static_cast<std::uint64_t>(kernel) * kernel * in_channels +
              (bias ? 1 : 0));
    case LayerKind::Dense:
      return static_cast<std::uint64_t>(out_dim) * in_dim +
             (bias ? out_dim : 0);
    case LayerKind::Pool:
    case LayerKind::Activation:
      return 0;
  }
  return 0;
}

std::uint64_t LayerSpec::forward_macs() const {
  switch (kind) {
    case LayerKind::Conv: {
      const std::uint64_t oh = in_h - kernel + 1;
      const std::uint64_t ow = in_w - kernel + 1;
      return oh * ow * out_channels *
             (static_cast<std::uint64_t>(kernel) * kernel * in_channels);
    }
    case LayerKind::Dense:
      return static_cast<std::uint64_t>(in_dim) * out_dim;
    case LayerKind::Pool:
    case LayerKind::Activation:
      return 0;
  }
  return 0;
}

void LayerSpec::validate() const {
  switch (kind) {
    case LayerKind::Conv:
      if (in_h == 0 || in_w == 0 || in_channels == 0 || out_channels == 0 ||
          kernel == 0 || kernel > in_h || kernel > in_w)
        throw ConfigError("conv layer: malformed shape");
      break;
    case LayerKind::Dense:
      if (in_dim == 0 || out_dim == 0)
        throw ConfigError("dense layer: malformed shape");
      break;
    case LayerKind::Pool:
      if (pool == 0 || in_h == 0 || in_w == 0 || in_h % pool || in_w % pool)
        throw ConfigError("pool layer: malformed shape");
      break;
    case LayerKind::Activation:
      break;
  }
}

std::uint64_t NetworkSpec::total_params() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += l.params();
  return n;
}

std::uint64_t NetworkSpec::forward_macs() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += l.forward_macs();
  return n;
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw ConfigError("network spec: no layers");
  for (const auto& l : layers) l.validate();
}

NetworkSpec NetworkSpec::lenet5() {
  NetworkSpec n;
  n.name = "lenet5";
  LayerSpec c1;
  c1.kind = LayerKind::Conv;
  c1.in_h = 28; c1.in_w = 28; c1.in_channels = 1;
  c1.out_channels = 8; c1.kernel = 5; c1.bias = true;
  LayerSpec a1; a1.kind = LayerKind::Activation;
  LayerSpec p1;
  p1.kind = LayerKind::Pool;
  p1.in_h = 24; p1.in_w = 24; p1.in_channels = 8; p1.pool = 2;
  LayerSpec c2;
  c2.kind = LayerKind::Conv;
  c2.in_h = 12; c2.in_w = 12; c2.in_channels = 8;
  c2.out_channels = 11; c2.kernel = 5; c2.bias = true;
  LayerSpec a2; a2.kind = LayerKind::Activation;
  LayerSpec p2;
  p2.kind = LayerKind::Pool;
  p2.in_h = 8; p2.in_w = 8; p2.in_channels = 11; p2.pool = 2;
  LayerSpec f1;
  f1.kind = LayerKind::Dense;
  f1.in_dim = 176; f1.out_dim = 103; f1.bias = true;
  LayerSpec a3; a3.kind = LayerKind::Activation;
  LayerSpec f2;
  f2.kind = LayerKind::Dense;
  f2.in_dim = 103; f2.out_dim = 10; f2.bias = true;
  n.layers = {c1, a1, p1, c2, a2, p2, f1, a3, f2};
  return n;
}

NetworkSpec NetworkSpec::xor_mlp() {
  NetworkSpec n;
  n.name = "xor-mlp";
  LayerSpec f1;
  f1.kind = LayerKind::Dense;
  f1.in_dim = 2; f1.out_dim = 8; f1.bias = true;
  LayerSpec a1; a1.kind = LayerKind::Activation;
  LayerSpec f2;
  f2.kind = LayerKind::Dense;
  f2.in_dim = 8; f2.out_dim = 2; f2.bias = true;
  n.layers = {f1, a1, f2};
  return n;
}

NetworkSpec NetworkSpec::preset(const std::string& name) {
  if (name == "lenet5") return lenet5();
  if (name == "xor-mlp") return xor_mlp();
  throw ConfigError("unknown network preset: " + name);
}

namespace {

using nlohmann::json;

LayerKind layer_kind_from(const std::string& s) {
  if (s == "conv") return LayerKind::Conv;
  if (s == "dense") return LayerKind::Dense;
  if (s == "pool") return LayerKind::Pool;
  if (s == "activation") return LayerKind::Activation;
  throw ConfigError("unknown layer kind: " + s);
}

std::string layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Dense: return "dense";
    case LayerKind::Pool: return "pool";
    case LayerKind::Activation: return "activation";
  }
  return "?";
}

} // namespace

NetworkSpec load_network_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open network spec: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("network spec parse error: " + std::string(e.what()));
  }
  NetworkSpec net;
  try {
    net.name = j.value("name", "custom");
    for (const auto& lj : j.at("layers")) {
      LayerSpec l;
      l.kind = layer_kind_from(lj.at("kind").get<std::string>());
      l.in_h = lj.value("in_h", 0u);
      l.in_w = lj.value("in_w", 0u);
      l.in_channels = lj.value("in_channels", 0u);
      l.out_channels = lj.value("out_channels", 0u);
      l.kernel = lj.value("kernel", 0u);
      l.in_dim = lj.value("in_dim", 0u);
      l.out_dim = lj.value("out_dim", 0u);
      l.pool = lj.value("pool", 0u);
      l.bias = lj.value("bias", false);
      net.layers.push_back(l);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("network spec field error: " + std::string(e.what()));
  }
  net.validate();
  return net;
}

std::string network_spec_to_json(const NetworkSpec& net) {
  json j;
  j["name"] = net.name;
  j["layers"] = json::array();
  for (const auto& l : net.layers) {
    json lj;
    lj["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::Conv:
        lj["in_h"] = l.in_h;
        lj["in_w"] = l.in_w;
        lj["in_channels"] = l.in_channels;
        lj["out_channels"] = l.out_channels;
        lj["kernel"] = l.kernel;
        lj["bias"] = l.bias;
        break;
      case LayerKind::Dense:
        lj["in_dim"] = l.in_dim;
        lj["out_dim"] = l.out_dim;
        lj["bias"] = l.bias;
        break;
      case LayerKind::Pool:
        lj["in_h"] = l.in_h;
        lj["in_w"] = l.in_w;
        lj["in_channels"] = l.in_channels;
        lj["pool"] = l.pool;
        break;
      case LayerKind::Activation:
        break;
    }
    j["layers"].push_back(lj);
  }
  return j.dump(2);
}

MacCounts count_training_macs(const NetworkSpec& net, std::uint64_t batch) {
  net.validate();
  if (batch == 0) throw ConfigError("batch size must be positive");
  MacCounts m;
  m.forward = net.forward_macs() * batch;
  m.backward = 2 * m.forward;
  m.update = net.total_params() * batch;
  return m;
}

TrainingPlan make_training_plan(const NetworkSpec& net, std::uint64_t batch,
                                std::uint64_t steps, const Calibration& cal,
                                const FloatLayout& ly) {
  TrainingPlan p;
  p.batch_size = batch;
  p.steps = steps;
  p.per_step = count_training_macs(net, batch);
  const double cells =
      static_cast<double>(cal.subarray_rows) * cal.subarray_cols;
  const double storage_bits =
      static_cast<double>(net.total_params()) * ly.total_bits();
  p.subarrays_proposed =
      std::ceil(storage_bits * cal.area.workspace_factor_proposed / cells);
  p.subarrays_baseline =
      std::ceil(storage_bits * cal.area.workspace_factor_baseline / cells);
  return p;
}

TrainingComparison estimate_training(const NetworkSpec& net,
                                     const TrainingPlan& plan,
                                     const Calibration& cal,
                                     const FloatLayout& ly) {
  net.validate();
  cal.validate();
  const double macs = static_cast<double>(plan.per_step.total()) *
                      static_cast<double>(plan.steps);
  const PrimitiveCosts pc = cal.primitives();
  const CostReport mac_p = analytic_mac_cost(ly, pc);
  const CostReport mac_b = baseline_mac_cost(ly.n_e, ly.n_m, cal.baseline);

  // weight movement between subarrays, priced per bit (defaults to zero:
  // computation dominates small-model training)
  const double traffic_bits = static_cast<double>(net.total_params()) *
                              ly.total_bits() * 2.0 *
                              static_cast<double>(plan.steps);

  TrainingComparison out;
  out.proposed.latency_ns =
      macs * mac_p.latency_ns + traffic_bits * cal.weight_traffic_ns_per_bit;
  out.proposed.energy_fj =
      macs * mac_p.energy_fj + traffic_bits * cal.weight_traffic_fj_per_bit;
  out.proposed.area_mm2 = area_estimate(plan.subarrays_proposed,
                                        cal.area.proposed_subarray_area_mm2);
  for (const auto& [k, v] : mac_p.breakdown)
    out.proposed.breakdown[k] = {v.latency_ns * macs, v.energy_fj * macs};
  for (const auto& [k, v] : mac_p.by_kind)
    out.proposed.by_kind[k] = {v.latency_ns * macs, v.energy_fj * macs};

  out.baseline.latency_ns =
      macs * mac_b.latency_ns + traffic_bits * cal.weight_traffic_ns_per_bit;
  out.baseline.energy_fj =
      macs * mac_b.energy_fj + traffic_bits * cal.weight_traffic_fj_per_bit;
  out.baseline.area_mm2 = area_estimate(plan.subarrays_baseline,
                                        cal.area.baseline_subarray_area_mm2);
  for (const auto& [k, v] : mac_b.breakdown)
    out.baseline.breakdown[k] = {v.latency_ns * macs, v.energy_fj * macs};
  for (const auto& [k, v] : mac_b.by_kind)
    out.baseline.by_kind[k] = {v.latency_ns * macs, v.energy_fj * macs};

  out.area_ratio = out.baseline.area_mm2 / out.proposed.area_mm2;
  out.latency_ratio = out.baseline.latency_ns / out.proposed.latency_ns;
  out.energy_ratio = out.baseline.energy_fj / out.proposed.energy_fj;
  return out;
}

// --- functional training ---------------------------------------------------

namespace {

class ArithOps {
 public:
  virtual ~ArithOps() = default;
  virtual FloatVal add(std::uint64_t a, std::uint64_t b) = 0;
  virtual FloatVal mul(std::uint64_t a, std::uint64_t b) = 0;
};

class OracleOps final : public ArithOps {
 public:
  explicit OracleOps(const FloatLayout& ly) : ly_(ly) {}
  FloatVal add(std::uint64_t a, std::uint64_t b) override {
    return ref_add(ly_, a, b);
  }
  FloatVal mul(std::uint64_t a, std::uint64_t b) override {
    return ref_mul(ly_, a, b);
  }

 private:
  FloatLayout ly_;
};

class PimOps final : public ArithOps {
 public:
  explicit PimOps(const FloatLayout& ly)
      : ly_(ly),
        sa_(4, PimFloatUnit::scratch_cols_needed(ly) + 3 * ly.total_bits() + 8),
        unit_(sa_, ly, 3) {
    sa_.set_event_recording(false); // counters stay exact; no event vector
    const std::uint32_t w = ly.total_bits();
    const std::uint32_t base = PimFloatUnit::scratch_cols_needed(ly) + 4;
    a_ = float_word(ly, 0, base);
    b_ = float_word(ly, 1, base);
    dst_ = float_word(ly, 2, base);
    (void)w;
  }
  FloatVal add(std::uint64_t a, std::uint64_t b) override {
    store_float(sa_, ly_, a, a_.loc.row, a_.loc.col0);
    store_float(sa_, ly_, b, b_.loc.row, b_.loc.col0);
    return unit_.add(a_, b_, dst_);
  }
  FloatVal mul(std::uint64_t a, std::uint64_t b) override {
    store_float(sa_, ly_, a, a_.loc.row, a_.loc.col0);
    store_float(sa_, ly_, b, b_.loc.row, b_.loc.col0);
    return unit_.mul(a_, b_, dst_);
  }

 private:
  FloatLayout ly_;
  Subarray sa_;
  PimFloatUnit unit_;
  StoredFloat a_, b_, dst_;
};

} // namespace

TrainResult train_tiny_xor(ArithBackend backend, const TinyTrainConfig& cfg) {
  const FloatLayout& ly = cfg.layout;
  OracleOps oracle(ly);
  PimOps* pim = nullptr;
  PimOps pim_storage(ly);
  if (backend == ArithBackend::Pim) pim = &pim_storage;
  ArithOps& ops = pim ? static_cast<ArithOps&>(*pim)
                      : static_cast<ArithOps&>(oracle);

  const std::uint32_t H = cfg.hidden;
  TrainResult result;
  bool diverged = false;
  auto track = [&](const FloatVal& v) {
    if (v.flags.overflow) diverged = true;
    return v.bits;
  };
  auto fadd = [&](std::uint64_t a, std::uint64_t b) {
    return track(ops.add(a, b));
  };
  auto fmul = [&](std::uint64_t a, std::uint64_t b) {
    return track(ops.mul(a, b));
  };
  auto fneg = [&](std::uint64_t a) { return ref_neg(ly, a); };
  auto fsub = [&](std::uint64_t a, std::uint64_t b) {
    return fadd(a, fneg(b));
  };

  const std::uint64_t one = encode_float(ly, 1.0).bits;
  const std::uint64_t zero = encode_float(ly, 0.0).bits;
  const std::uint64_t two = encode_float(ly, 2.0).bits;
  const std::uint64_t slope = encode_float(ly, 0.125).bits; // leaky slope
  const std::uint64_t lr = encode_float(ly, cfg.learning_rate).bits;

  auto is_neg = [&](std::uint64_t v) {
    return !is_zero_bits(ly, v) && unpack_float(ly, v).sign != 0;
  };
  auto lrelu = [&](std::uint64_t z) {
    return is_neg(z) ? fmul(z, slope) : z;
  };
  auto lrelu_grad = [&](std::uint64_t z) { return is_neg(z) ? slope : one; };

  // deterministic init
  std::mt19937_64 rng(cfg.seed);
  auto init = [&]() {
    const double u =
        (static_cast<double>(rng() >> 11) / 9007199254740992.0) - 0.5;
    return encode_float(ly, u).bits;
  };
  std::vector<std::uint64_t> w1(H * 2), b1(H), w2(2 * H), b2(2);
  for (auto& w : w1) w = init();
  for (auto& w : b1) w = init();
  for (auto& w : w2) w = init();
  for (auto& w : b2) w = init();

  const std::uint64_t xs[4][2] = {{zero, zero}, {zero, one},
                                  {one, zero},  {one, one}};
  const int labels[4] = {0, 1, 1, 0};

  std::vector<std::uint64_t> z1(H), h(H), g1(H);
  std::uint64_t out[2], d[2];

  for (std::uint32_t epoch = 0; epoch < cfg.epochs && !diverged; ++epoch) {
    std::uint64_t loss = zero;
    int correct = 0;
    for (int s = 0; s < 4; ++s) {
      // forward
      for (std::uint32_t j = 0; j < H; ++j) {
        std::uint64_t acc = b1[j];
        for (int i = 0; i < 2; ++i)
          acc = fadd(acc, fmul(w1[j * 2 + i], xs[s][i]));
        z1[j] = acc;
        h[j] = lrelu(acc);
      }
      for (int k = 0; k < 2; ++k) {
        std::uint64_t acc = b2[k];
        for (std::uint32_t j = 0; j < H; ++j)
          acc = fadd(acc, fmul(w2[k * H + j], h[j]));
        out[k] = acc;
      }
      const int pred =
          float_ordinal(ly, out[1]) > float_ordinal(ly, out[0]) ? 1 : 0;
      if (pred == labels[s]) ++correct;
      // loss and output deltas
      for (int k = 0; k < 2; ++k) {
        const std::uint64_t target = (labels[s] == k) ? one : zero;
        const std::uint64_t e = fsub(out[k], target);
        loss = fadd(loss, fmul(e, e));
        d[k] = fmul(two, e);
      }
      // hidden deltas
      for (std::uint32_t j = 0; j < H; ++j) {
        std::uint64_t acc = zero;
        for (int k = 0; k < 2; ++k)
          acc = fadd(acc, fmul(w2[k * H + j], d[k]));
        g1[j] = fmul(acc, lrelu_grad(z1[j]));
      }
      // updates (per-sample SGD)
      for (int k = 0; k < 2; ++k) {
        const std::uint64_t step = fmul(lr, d[k]);
        for (std::uint32_t j = 0; j < H; ++j)
          w2[k * H + j] = fsub(w2[k * H + j], fmul(step, h[j]));
        b2[k] = fsub(b2[k], step);
      }
      for (std::uint32_t j = 0; j < H; ++j) {
        const std::uint64_t step = fmul(lr, g1[j]);
        for (int i = 0; i < 2; ++i)
          w1[j * 2 + i] = fsub(w1[j * 2 + i], fmul(step, xs[s][i]));
        b1[j] = fsub(b1[j], step);
      }
      if (diverged) break;
    }
    EpochStat st;
    st.loss_bits = loss;
    st.loss = decode_float(ly, loss);
    st.accuracy = correct / 4.0;
    result.epochs.push_back(st);
    if (st.accuracy == 1.0 && result.first_full_accuracy_epoch < 0)
      result.first_full_accuracy_epoch = static_cast<int>(epoch);
  }
  result.diverged = diverged;
  if (!result.epochs.empty())
    result.final_accuracy = result.epochs.back().accuracy;
  return result;
}

} // namespace sotpim
