#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sotpim/cost_model.hpp"
#include "sotpim/layout.hpp"
#include "sotpim/softfloat.hpp"

// DNN training workload mapping: MAC counting per phase, whole-training
// cost estimates against the baseline, and a desk-scale functional training
// loop in which every multiply and add runs through the bit-level float unit.

namespace sotpim {

enum class LayerKind : std::uint8_t { Conv, Dense, Pool, Activation };

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  // Conv: valid convolution, square kernel, unit stride.
  std::uint32_t in_h = 0, in_w = 0, in_channels = 0;
  std::uint32_t out_channels = 0, kernel = 0;
  // Dense
  std::uint32_t in_dim = 0, out_dim = 0;
  // Pool: non-overlapping window over in_h x in_w x in_channels
  std::uint32_t pool = 0;
  bool bias = false;

  std::uint64_t params() const;
  std::uint64_t forward_macs() const; // per sample
  void validate() const;
};

struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;

  std::uint64_t total_params() const;
  std::uint64_t forward_macs() const; // per sample
  void validate() const;

  // LeNet-type MNIST model, 21,690 parameters.
  static NetworkSpec lenet5();
  // 2-8-2 MLP for the four-point XOR task.
  static NetworkSpec xor_mlp();
  static NetworkSpec preset(const std::string& name); // throws ConfigError
};

NetworkSpec load_network_spec(const std::string& path);
std::string network_spec_to_json(const NetworkSpec& net);

struct MacCounts {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0; // 2x forward
  std::uint64_t update = 0;   // total_params per sample
  std::uint64_t total() const { return forward + backward + update; }
};

// Per-step MAC counts for one optimizer step over `batch` samples.
MacCounts count_training_macs(const NetworkSpec& net, std::uint64_t batch);

struct TrainingPlan {
  std::uint64_t batch_size = 64;
  std::uint64_t steps = 938;
  MacCounts per_step;
  double subarrays_proposed = 1;
  double subarrays_baseline = 1;
};

TrainingPlan make_training_plan(const NetworkSpec& net, std::uint64_t batch,
                                std::uint64_t steps, const Calibration& cal,
                                const FloatLayout& ly);

struct TrainingComparison {
  CostReport proposed;
  CostReport baseline;
  double area_ratio = 0;    // baseline / proposed
  double latency_ratio = 0; // baseline / proposed
  double energy_ratio = 0;  // baseline / proposed
};

TrainingComparison estimate_training(const NetworkSpec& net,
                                     const TrainingPlan& plan,
                                     const Calibration& cal,
                                     const FloatLayout& ly);

// --- functional training -------------------------------------------------

enum class ArithBackend : std::uint8_t { Oracle, Pim };

struct EpochStat {
  std::uint64_t loss_bits = 0;
  double loss = 0;
  double accuracy = 0;
};

struct TrainResult {
  std::vector<EpochStat> epochs;
  double final_accuracy = 0;
  int first_full_accuracy_epoch = -1; // -1 when never reached
  bool diverged = false;
};

struct TinyTrainConfig {
  std::uint32_t hidden = 8;
  std::uint32_t epochs = 500;
  std::uint64_t seed = 1;
  double learning_rate = 0.25;
  FloatLayout layout = FloatLayout::f32();
};

// Train the 2-hidden-2 MLP on the four XOR points with plain per-sample SGD.
// Every multiply/add goes through the selected arithmetic backend; with the
// same seed the Pim and Oracle runs must produce bit-identical loss curves.
TrainResult train_tiny_xor(ArithBackend backend, const TinyTrainConfig& cfg);

} // namespace sotpim
