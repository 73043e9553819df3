#include "cavlab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "cavlab/error.hpp"
#include "cavlab/io.hpp"
#include "cavlab/kernels.hpp"
#include "cavlab/rng.hpp"

namespace cavlab {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + std::string(name) + "'");
}

namespace {

double apply(Activation a, double z) noexcept {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Identity: return z;
  }
  return z;
}

// Derivative from the pre-activation z and the output y = act(z).
double derivative(Activation a, double z, double y) noexcept {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

void check_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": expected " +
                                                  std::to_string(want) + ", got " + std::to_string(got));
}

// pre = W a + b, out = act(pre)
void dense_forward(const DenseLayer& layer, std::span<const double> in, Vector& pre, Vector& out) {
  const std::size_t m = layer.out_dim();
  pre.resize(m);
  out.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    pre[i] = kernels::dot(layer.weight.row(i).data(), in.data(), in.size()) + layer.bias[i];
    out[i] = apply(layer.activation, pre[i]);
  }
}

struct Tape {
  std::vector<Vector> outputs;  // outputs[0] is the start activation
  std::vector<Vector> pre;
};

Tape run_from(const MlpModel& model, std::span<const double> a, std::size_t l) {
  Tape tape;
  tape.outputs.emplace_back(a.begin(), a.end());
  for (std::size_t i = l; i < model.depth(); ++i) {
    Vector pre, out;
    dense_forward(model.layers()[i], tape.outputs.back(), pre, out);
    tape.pre.push_back(std::move(pre));
    tape.outputs.push_back(std::move(out));
  }
  return tape;
}

// Backpropagates d(output)/d(start) seeded with `grad_out` through layers l..L-1.
// When weight_grads is non-null the parameter gradients are accumulated into it.
Vector backprop(const MlpModel& model, const Tape& tape, std::size_t l, Vector grad_out,
                std::vector<DenseLayer>* weight_grads) {
  Vector g = std::move(grad_out);
  for (std::size_t i = model.depth(); i-- > l;) {
    const DenseLayer& layer = model.layers()[i];
    const std::size_t t = i - l;
    const Vector& pre = tape.pre[t];
    const Vector& out = tape.outputs[t + 1];
    const Vector& in = tape.outputs[t];
    for (std::size_t j = 0; j < g.size(); ++j) g[j] *= derivative(layer.activation, pre[j], out[j]);
    if (weight_grads) {
      DenseLayer& acc = (*weight_grads)[i];
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] == 0.0) continue;
        kernels::axpy(g[j], in.data(), acc.weight.row(j).data(), in.size());
        acc.bias[j] += g[j];
      }
    }
    Vector prev(layer.in_dim(), 0.0);
    for (std::size_t j = 0; j < g.size(); ++j)
      kernels::axpy(g[j], layer.weight.row(j).data(), prev.data(), prev.size());
    g = std::move(prev);
  }
  return g;
}

}  // namespace

MlpModel::MlpModel(std::vector<DenseLayer> layers, std::uint64_t seed)
    : layers_(std::move(layers)), seed_(seed) {
  if (layers_.empty()) throw Error(ErrorCode::InvalidArgument, "model needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    check_dim(layers_[i].bias.size(), layers_[i].out_dim(), "bias length");
    if (i > 0) check_dim(layers_[i].in_dim(), layers_[i - 1].out_dim(), "layer input width");
  }
  if (layers_.back().activation != Activation::Identity)
    throw Error(ErrorCode::InvalidArgument, "final layer must be identity (logits)");
}

MlpModel MlpModel::initialize(std::span<const std::size_t> sizes, Activation hidden,
                              std::uint64_t seed) {
  if (sizes.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least input and output sizes");
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const std::size_t in = sizes[i], out = sizes[i + 1];
    if (in == 0 || out == 0) throw Error(ErrorCode::InvalidArgument, "layer sizes must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer{Matrix(out, in), Vector(out, 0.0),
                     i + 2 == sizes.size() ? Activation::Identity : hidden};
    for (std::size_t k = 0; k < layer.weight.size(); ++k) layer.weight.data()[k] = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers), seed);
}

std::size_t MlpModel::layer_dim(std::size_t l) const {
  if (l > depth())
    throw Error(ErrorCode::InvalidArgument, "layer " + std::to_string(l) + " out of range 0.." +
                                                std::to_string(depth()));
  return l == 0 ? input_dim() : layers_[l - 1].out_dim();
}

std::vector<std::size_t> MlpModel::sizes() const {
  std::vector<std::size_t> s;
  for (std::size_t l = 0; l <= depth(); ++l) s.push_back(layer_dim(l));
  return s;
}

bool operator==(const MlpModel& a, const MlpModel& b) {
  if (a.depth() != b.depth()) return false;
  for (std::size_t i = 0; i < a.depth(); ++i) {
    const auto &x = a.layers_[i], &y = b.layers_[i];
    if (!(x.weight == y.weight) || x.bias != y.bias || x.activation != y.activation) return false;
  }
  return true;
}

std::vector<std::size_t> default_architecture(std::size_t input_dim, std::size_t num_classes) {
  return {input_dim, 64, 32, 16, num_classes};
}

Vector forward_to_layer(const MlpModel& model, std::span<const double> x, std::size_t l) {
  check_dim(x.size(), model.input_dim(), "input width");
  model.layer_dim(l);  // range check
  Vector cur(x.begin(), x.end()), pre, out;
  for (std::size_t i = 0; i < l; ++i) {
    dense_forward(model.layers()[i], cur, pre, out);
    std::swap(cur, out);
  }
  return cur;
}

Vector logits(const MlpModel& model, std::span<const double> x) {
  return forward_to_layer(model, x, model.depth());
}

namespace {
void check_head(const MlpModel& model, std::span<const double> a, std::size_t l, std::size_t k) {
  if (l >= model.depth())
    throw Error(ErrorCode::InvalidArgument, "head layer must be < " + std::to_string(model.depth()));
  if (k >= model.num_classes())
    throw Error(ErrorCode::InvalidArgument, "class " + std::to_string(k) + " out of range");
  check_dim(a.size(), model.layer_dim(l), "activation width");
}
}  // namespace

double head_logit(const MlpModel& model, std::span<const double> a, std::size_t l, std::size_t k) {
  check_head(model, a, l, k);
  Vector cur(a.begin(), a.end()), pre, out;
  for (std::size_t i = l; i < model.depth(); ++i) {
    dense_forward(model.layers()[i], cur, pre, out);
    std::swap(cur, out);
  }
  return cur[k];
}

Vector grad_head_wrt_activation(const MlpModel& model, std::span<const double> a, std::size_t l,
                                std::size_t k) {
  check_head(model, a, l, k);
  const Tape tape = run_from(model, a, l);
  Vector seed(model.num_classes(), 0.0);
  seed[k] = 1.0;
  return backprop(model, tape, l, std::move(seed), nullptr);
}

Matrix layer_activations(const MlpModel& model, const Matrix& inputs, std::size_t l) {
  check_dim(inputs.rows(), model.input_dim(), "input width");
  Matrix out(model.layer_dim(l), inputs.cols());
  for (std::size_t c = 0; c < inputs.cols(); ++c) out.set_column(c, forward_to_layer(model, inputs.column(c), l));
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw Error(ErrorCode::InvalidArgument, "learning rate must be finite and >= 0");
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");
}

double softmax_cross_entropy(std::span<const double> z, int label) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - zmax);
  return std::log(s) + zmax - z[static_cast<std::size_t>(label)];
}

TrainResult train(const MlpModel& model, const ClassDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.count() == 0) throw Error(ErrorCode::InvalidArgument, "training set is empty");
  check_dim(data.inputs.rows(), model.input_dim(), "training input width");
  if (data.num_classes > model.num_classes())
    throw Error(ErrorCode::DimensionMismatch, "dataset has more classes than the model outputs");

  std::vector<DenseLayer> params = model.layers();
  std::vector<DenseLayer> grads = params;
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const Matrix inputs_t = transpose(data.inputs);  // one contiguous row per example

  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (auto& g : grads) {
        std::fill(g.weight.data(), g.weight.data() + g.weight.size(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
      }
      const MlpModel current(params, model.seed());
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        const int label = data.labels[idx];
        const Tape tape = run_from(current, inputs_t.row(idx), 0);
        const Vector& z = tape.outputs.back();
        epoch_loss += softmax_cross_entropy(z, label);
        // d(loss)/d(logits) = softmax(z) - onehot(label)
        const double zmax = *std::max_element(z.begin(), z.end());
        Vector p(z.size());
        double s = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) s += (p[j] = std::exp(z[j] - zmax));
        for (double& v : p) v /= s;
        p[static_cast<std::size_t>(label)] -= 1.0;
        backprop(current, tape, 0, std::move(p), &grads);
      }
      const double step = -cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < params.size(); ++i) {
        kernels::axpy(step, grads[i].weight.data(), params[i].weight.data(), params[i].weight.size());
        kernels::axpy(step, grads[i].bias.data(), params[i].bias.data(), params[i].bias.size());
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw Error(ErrorCode::Diverged, "diverged: non-finite loss at epoch " + std::to_string(epoch));
    result.loss_trace.push_back(epoch_loss);
  }
  result.model = MlpModel(std::move(params), model.seed());
  return result;
}

double accuracy(const MlpModel& model, const ClassDataset& data) {
  if (data.count() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t c = 0; c < data.count(); ++c) {
    const Vector z = logits(model, data.inputs.column(c));
    const auto best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    correct += (best == data.labels[c]);
  }
  return static_cast<double>(correct) / static_cast<double>(data.count());
}

void save_model(const std::filesystem::path& base_in, const MlpModel& model) {
  const auto base = io::dataset_base(base_in);
  io::json header;
  header["format"] = "cavlab-mlp";
  header["version"] = 1;
  header["sizes"] = model.sizes();
  std::vector<std::string> acts;
  for (const auto& layer : model.layers()) acts.emplace_back(to_string(layer.activation));
  header["activations"] = acts;
  header["seed"] = model.seed();
  header["rng"] = std::string(kRngAlgorithm);
  header["blocks"] = "weight (out x in) then bias (out x 1) for each layer, in order";
  io::write_json_file(base.string() + ".json", header);

  std::ofstream out(base.string() + ".cavm", std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + base.string() + ".cavm");
  for (const auto& layer : model.layers()) {
    io::write_cavm(out, layer.weight);
    io::write_cavm(out, Matrix(layer.bias.size(), 1, layer.bias));
  }
}

MlpModel load_model(const std::filesystem::path& base_in) {
  const auto base = io::dataset_base(base_in);
  const io::json header = io::read_json_file(base.string() + ".json");
  std::vector<std::size_t> sizes;
  std::vector<std::string> acts;
  std::uint64_t seed = 0;
  try {
    if (header.at("format").get<std::string>() != "cavlab-mlp")
      throw Error(ErrorCode::Format, "not a cavlab model header");
    sizes = header.at("sizes").get<std::vector<std::size_t>>();
    acts = header.at("activations").get<std::vector<std::string>>();
    seed = header.value("seed", std::uint64_t{0});
  } catch (const io::json::exception& e) {
    throw Error(ErrorCode::Format, std::string("model header: ") + e.what());
  }
  if (sizes.size() != acts.size() + 1) throw Error(ErrorCode::Format, "model header: sizes/activations mismatch");

  std::ifstream in(base.string() + ".cavm", std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open: " + base.string() + ".cavm");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    DenseLayer layer;
    layer.weight = io::read_cavm(in);
    const Matrix bias = io::read_cavm(in);
    if (layer.weight.rows() != sizes[i + 1] || layer.weight.cols() != sizes[i] ||
        bias.rows() != sizes[i + 1] || bias.cols() != 1)
      throw Error(ErrorCode::Format, "model block " + std::to_string(i) + " has the wrong shape");
    layer.bias = bias.values();
    layer.activation = activation_from_string(acts[i]);
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers), seed);
}

}  // namespace cavlab
