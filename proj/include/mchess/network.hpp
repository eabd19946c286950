#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mchess/encoding.hpp"
#include "mchess/variant.hpp"

namespace mchess {

struct NetworkSpec {
  Geometry geometry;
  int input_channels = plane::kCount;
  int blocks = 3;
  int filters = 32;
  bool residual = false;
  int policy_size = 0;
  int value_hidden = 64;

  // Plain: one per conv layer. Residual: the stem, then one per block.
  int capture_points() const { return residual ? blocks + 1 : blocks; }
  std::vector<std::string> capture_names() const;
  int activation_size() const { return filters * geometry.squares(); }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// 4x5: plain, 3 blocks of 32 filters. Larger boards: residual, 6 blocks of 64.
NetworkSpec default_spec(const VariantConfig& config);
// Throws InvalidConfig.
void validate_spec(const NetworkSpec& spec);
std::string describe_spec(const NetworkSpec& spec);

struct ParamSlot {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool decayed = false;  // weight tensors; not biases or normalization terms
};

template <class T>
struct Trace {
  std::vector<T> policy_logits;
  T value = 0;
  // One flattened [filters][H][W] vector per capture point, if requested.
  std::vector<std::vector<T>> activations;
};

struct TrainingExample {
  InputPlanes planes;
  std::vector<int> legal;      // policy indices
  std::vector<float> target;   // probability per legal index, sums to 1
  float z = 0;                 // outcome from the mover's perspective
};

struct LossParts {
  double policy = 0;
  double value = 0;
  double decay = 0;
  double total() const { return policy + value + decay; }
};

constexpr double kBatchNormEpsilon = 1e-5;
constexpr double kBatchNormMomentum = 0.1;

// Policy/value network. Parameters live in one flat vector described by
// layout(); normalization running averages are kept separately and are not
// trained.
template <class T>
class BasicNetwork {
 public:
  BasicNetwork() = default;
  // Zero weights, unit normalization scales.
  explicit BasicNetwork(const NetworkSpec& spec);
  // Fan-in scaled uniform initialization, deterministic in seed.
  static BasicNetwork initialized(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<ParamSlot>& layout() const { return layout_; }
  const ParamSlot& slot(const std::string& name) const;
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  std::vector<T>& running_stats() { return running_; }
  const std::vector<T>& running_stats() const { return running_; }

  // Inference with running statistics. Throws ShapeMismatch.
  Trace<T> forward(const InputPlanes& planes, bool capture = false) const;
  std::vector<Trace<T>> forward_batch(const std::vector<const InputPlanes*>& batch, bool capture = false) const;

  // Batch-statistics forward plus reverse pass. Returns the mean loss
  // (policy cross-entropy + squared value error) plus (decay/2)*sum(w^2).
  // grad, when given, receives d loss / d params. With update_running the
  // normalization averages absorb this batch's statistics.
  LossParts train_loss(const std::vector<const TrainingExample*>& batch, double weight_decay,
                       std::vector<T>* grad, bool update_running = false);

  // On/off state of every ReLU under batch statistics. Finite-difference
  // checks use it to skip samples whose perturbation crosses a kink.
  std::vector<bool> relu_pattern(const std::vector<const TrainingExample*>& batch) const;

  template <class U>
  BasicNetwork<U> cast() const {
    BasicNetwork<U> out(spec_);
    out.params().assign(params_.begin(), params_.end());
    out.running_stats().assign(running_.begin(), running_.end());
    return out;
  }

 private:
  NetworkSpec spec_;
  std::vector<ParamSlot> layout_;
  std::vector<T> params_;
  std::vector<T> running_;  // per normalization layer: means then variances
};

using Network = BasicNetwork<float>;

// Masked softmax cross-entropy over the legal indices plus (v - z)^2 for one
// trace. Weight decay is not included.
template <class T>
LossParts example_loss(const Trace<T>& trace, const std::vector<int>& legal, const std::vector<float>& target,
                       float z);

// (decay/2) * sum of squared decayed weights.
template <class T>
double weight_decay_term(const BasicNetwork<T>& net, double decay);

// Softmax restricted to the given indices.
template <class T>
std::vector<double> masked_softmax(const std::vector<T>& logits, const std::vector<int>& indices);

// v <- momentum * v + g; params <- params - lr * v.
template <class T>
void sgd_step(std::vector<T>& params, std::vector<T>& velocity, const std::vector<T>& grad, double lr,
              double momentum);

}  // namespace mchess
