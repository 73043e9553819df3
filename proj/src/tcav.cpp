#include "cavlab/tcav.hpp"

#include <algorithm>
#include <cmath>

#include "cavlab/error.hpp"
#include "cavlab/kernels.hpp"

namespace cavlab {

std::string layer_name(std::size_t l) { return std::to_string(l); }

namespace {

void check_cav_layer(const Cav& cav, std::size_t l) {
  if (!cav.layer_id.empty() && cav.layer_id != layer_name(l))
    throw Error(ErrorCode::InvalidArgument,
                "CAV was fitted at layer '" + cav.layer_id + "', not layer " + layer_name(l));
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double sensitivity(const MlpModel& model, std::span<const double> x, const Cav& cav, std::size_t k,
                   std::size_t l) {
  check_cav_layer(cav, l);
  const Vector a = forward_to_layer(model, x, l);
  const Vector g = grad_head_wrt_activation(model, a, l, k);
  return dot(g, cav.w);
}

double positive_fraction(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "positive_fraction of an empty set");
  const auto positive = std::count_if(values.begin(), values.end(), [](double v) { return v > 0.0; });
  return static_cast<double>(positive) / static_cast<double>(values.size());
}

TcavReport tcav_q(const MlpModel& model, const Matrix& inputs, const Cav& cav, std::size_t k,
                  std::size_t l) {
  if (inputs.cols() == 0) throw Error(ErrorCode::InvalidArgument, "TCAV_Q needs at least one input");
  TcavReport report;
  report.class_k = k;
  report.layer = l;
  report.cav_layer = cav.layer_id;
  report.cav_method = cav.method;
  report.sensitivities.reserve(inputs.cols());
  for (std::size_t c = 0; c < inputs.cols(); ++c)
    report.sensitivities.push_back(sensitivity(model, inputs.column(c), cav, k, l));
  report.tcav_q = positive_fraction(report.sensitivities);
  return report;
}

Matrix gradient_rows(const MlpModel& model, const Matrix& inputs, std::size_t k, std::size_t l) {
  Matrix rows(inputs.cols(), model.layer_dim(l));
  for (std::size_t c = 0; c < inputs.cols(); ++c) {
    const Vector a = forward_to_layer(model, inputs.column(c), l);
    const Vector g = grad_head_wrt_activation(model, a, l, k);
    std::copy(g.begin(), g.end(), rows.row(c).begin());
  }
  return rows;
}

Matrix activation_rows(const MlpModel& model, const Matrix& inputs, std::size_t l) {
  return transpose(layer_activations(model, inputs, l));
}

std::string_view to_string(AttackMode m) noexcept {
  return m == AttackMode::GradientRows ? "gradient" : "activation";
}

AttackMode attack_mode_from_string(std::string_view name) {
  if (name == "gradient") return AttackMode::GradientRows;
  if (name == "activation") return AttackMode::ActivationRows;
  throw Error(ErrorCode::InvalidArgument, "unknown attack mode '" + std::string(name) + "'");
}

void AttackConfig::validate(std::size_t num_classes) const {
  if (signs.size() != num_classes)
    throw Error(ErrorCode::InvalidArgument, "attack needs one sign per class (" +
                                                std::to_string(num_classes) + "), got " +
                                                std::to_string(signs.size()));
  for (int s : signs)
    if (s != -1 && s != 1) throw Error(ErrorCode::InvalidArgument, "attack signs must be -1 or +1");
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be > 0");
  if (!(step_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "step_size must be > 0");
  if (!(prox_weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "prox_weight must be >= 0");
  if (!(stop_tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "stop_tol must be >= 0");
}

double smoothed_count(std::span<const double> z, int s, double beta) {
  double total = 0.0;
  for (double v : z) total += sigmoid(beta * (static_cast<double>(s) * v));
  return total;
}

double attack_loss(const std::vector<Matrix>& rows, const AttackConfig& cfg,
                   std::span<const double> w_init, std::span<const double> w, Vector* class_terms) {
  if (class_terms) class_terms->assign(rows.size(), 0.0);
  double loss = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Vector z = matvec(rows[k], w);
    const double term = smoothed_count(z, cfg.signs[k], cfg.beta) / static_cast<double>(z.size());
    if (class_terms) (*class_terms)[k] = term;
    loss += term;
  }
  if (cfg.prox_weight > 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) sq += (w[i] - w_init[i]) * (w[i] - w_init[i]);
    loss += cfg.prox_weight * sq;
  }
  return loss;
}

Vector attack_gradient(const std::vector<Matrix>& rows, const AttackConfig& cfg,
                       std::span<const double> w_init, std::span<const double> w) {
  Vector grad(w.size(), 0.0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double s = static_cast<double>(cfg.signs[k]);
    const double scale = cfg.beta * s / static_cast<double>(rows[k].rows());
    const Vector z = matvec(rows[k], w);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double sig = sigmoid(cfg.beta * (s * z[i]));
      const double coeff = scale * (sig * (1.0 - sig));
      if (coeff != 0.0) kernels::axpy(coeff, rows[k].row(i).data(), grad.data(), grad.size());
    }
  }
  if (cfg.prox_weight > 0.0)
    for (std::size_t i = 0; i < w.size(); ++i) grad[i] += 2.0 * cfg.prox_weight * (w[i] - w_init[i]);
  return grad;
}

namespace {

AttackIteration record(const std::vector<Matrix>& rows, const AttackConfig& cfg,
                       std::span<const double> w_init, const Vector& w, std::size_t iter, double step) {
  AttackIteration it;
  it.iter = iter;
  it.step = step;
  it.w = w;
  it.loss = attack_loss(rows, cfg, w_init, w, &it.class_loss);
  for (const Matrix& r : rows) it.tcav_q.push_back(positive_fraction(matvec(r, w)));
  return it;
}

}  // namespace

AttackTrace attack(const std::vector<Matrix>& rows, const Cav& init, const AttackConfig& cfg) {
  cfg.validate(rows.size());
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "attack needs at least one class");
  for (const Matrix& r : rows) {
    if (r.rows() == 0) throw Error(ErrorCode::InvalidArgument, "every class needs at least one row");
    if (r.cols() != init.w.size())
      throw Error(ErrorCode::DimensionMismatch, "attack rows have width " + std::to_string(r.cols()) +
                                                    ", CAV has " + std::to_string(init.w.size()));
  }
  if (norm2(init.w) == 0.0) throw Error(ErrorCode::Degenerate, "attack needs a nonzero initial CAV");

  const Vector& w0 = init.w;
  AttackTrace trace;
  Vector w = w0;
  trace.iterations.push_back(record(rows, cfg, w0, w, 0, 0.0));
  double loss = trace.iterations.back().loss;
  double step = cfg.step_size;

  for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
    const Vector grad = attack_gradient(rows, cfg, w0, w);
    Vector candidate;
    double cand_loss = loss;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      candidate = w;
      kernels::axpy(-step, grad.data(), candidate.data(), candidate.size());
      cand_loss = attack_loss(rows, cfg, w0, candidate);
      if (!std::isfinite(cand_loss))
        throw Error(ErrorCode::Diverged, "diverged: non-finite attack loss at iteration " + std::to_string(iter));
      if (cand_loss <= loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent direction left at machine precision
    const double change = loss - cand_loss;
    w = std::move(candidate);
    loss = cand_loss;
    trace.iterations.push_back(record(rows, cfg, w0, w, iter, step));
    trace.updates = iter;
    step *= 2.0;
    if (std::abs(change) < cfg.stop_tol) break;
  }

  trace.final_cav = init;
  trace.final_cav.w = w;
  trace.final_cav.method = CavMethod::Adversarial;
  trace.final_cav.eta = 0.0;
  trace.final_cav.degenerate = norm2(w) == 0.0;
  const double len = norm2(w);
  trace.final_unit = len > 0.0 ? (1.0 / len) * w : w;
  return trace;
}

}  // namespace cavlab
