#pragma once
// Fully connected classifier with exact reverse-mode gradients.
//
// Layer indexing: activation layer 0 is the input x, layer l (1 <= l <= L) is
// the output of dense layer l, and layer L holds the K class logits. f_l maps
// the input to layer l; h_{l,k} maps a layer-l activation to logit k.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "cavlab/linalg.hpp"

namespace cavlab {

enum class Activation { Relu, Tanh, Identity };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::Identity;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }
};

class MlpModel {
 public:
  MlpModel() = default;
  /// Validates shapes and that the last layer is an identity (logit) layer.
  explicit MlpModel(std::vector<DenseLayer> layers, std::uint64_t seed = 0);

  /// Glorot-uniform weights, zero biases. `sizes` = {d0, d1, ..., K}; hidden
  /// layers use `hidden`, the output layer is identity.
  static MlpModel initialize(std::span<const std::size_t> sizes, Activation hidden,
                             std::uint64_t seed);

  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in_dim(); }
  std::size_t num_classes() const noexcept { return layers_.empty() ? 0 : layers_.back().out_dim(); }
  /// Width of activation layer l (0 <= l <= depth()).
  std::size_t layer_dim(std::size_t l) const;
  std::vector<std::size_t> sizes() const;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::uint64_t seed() const noexcept { return seed_; }

  friend bool operator==(const MlpModel& a, const MlpModel& b);

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t seed_ = 0;
};

/// Default toy architecture for series of length `input_dim`: 64 -> 32 -> 16 relu.
std::vector<std::size_t> default_architecture(std::size_t input_dim, std::size_t num_classes);

Vector forward_to_layer(const MlpModel& model, std::span<const double> x, std::size_t l);
Vector logits(const MlpModel& model, std::span<const double> x);
double head_logit(const MlpModel& model, std::span<const double> a, std::size_t l, std::size_t k);
/// Gradient of h_{l,k} at a. The relu derivative at 0 is taken as 0.
Vector grad_head_wrt_activation(const MlpModel& model, std::span<const double> a, std::size_t l,
                                std::size_t k);

/// Layer-l activations of each input column, as a d_l x n matrix.
Matrix layer_activations(const MlpModel& model, const Matrix& inputs, std::size_t l);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 40;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  MlpModel model;
  /// Mean softmax cross-entropy per epoch, measured on the batches as seen.
  std::vector<double> loss_trace;
};

/// Mini-batch SGD on mean softmax cross-entropy; the input model is not modified.
/// Throws Error{Diverged} if the loss becomes non-finite.
TrainResult train(const MlpModel& model, const ClassDataset& data, const TrainConfig& cfg);

double softmax_cross_entropy(std::span<const double> logits, int label);
double accuracy(const MlpModel& model, const ClassDataset& data);

/// <base>.json (architecture header) and <base>.cavm (weight, bias blocks per layer).
void save_model(const std::filesystem::path& base, const MlpModel& model);
MlpModel load_model(const std::filesystem::path& base);

}  // namespace cavlab
