#pragma once
// TCAV sensitivities, TCAV_Q, and the sign-targeted attack that moves a CAV so
// that class-wise sensitivity scores avoid chosen signs.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cavlab/cav.hpp"
#include "cavlab/linalg.hpp"
#include "cavlab/mlp.hpp"

namespace cavlab {

/// Layer id used for activations at layer l ("0" is the raw input).
std::string layer_name(std::size_t l);

/// <grad h_{l,k}(f_l(x)), cav.w>: the directional derivative of logit k at
/// layer l along the CAV.
double sensitivity(const MlpModel& model, std::span<const double> x, const Cav& cav, std::size_t k,
                   std::size_t l);

struct TcavReport {
  Vector sensitivities;
  double tcav_q = 0.0;
  std::size_t class_k = 0;
  std::size_t layer = 0;
  std::string cav_layer;
  CavMethod cav_method = CavMethod::Pattern;
};

/// Fraction of strictly positive entries (zero counts as non-positive).
double positive_fraction(std::span<const double> values);

/// Sensitivities of class-k inputs (columns of `inputs`) and their TCAV_Q.
TcavReport tcav_q(const MlpModel& model, const Matrix& inputs, const Cav& cav, std::size_t k,
                  std::size_t l);

/// Per-example rows grad h_{l,k}(f_l(x_i)), one row per input column (n x d_l).
Matrix gradient_rows(const MlpModel& model, const Matrix& inputs, std::size_t k, std::size_t l);
/// Per-example rows f_l(x_i) (n x d_l).
Matrix activation_rows(const MlpModel& model, const Matrix& inputs, std::size_t l);

enum class AttackMode { GradientRows, ActivationRows };
std::string_view to_string(AttackMode m) noexcept;
AttackMode attack_mode_from_string(std::string_view name);

struct AttackConfig {
  /// s_k: the sign the scores of class k should move away from.
  std::vector<int> signs;
  double beta = 10.0;
  double step_size = 0.1;
  std::size_t max_iters = 2000;
  double prox_weight = 0.0;
  double stop_tol = 1e-12;
  std::uint64_t seed = 0;
  AttackMode mode = AttackMode::GradientRows;

  void validate(std::size_t num_classes) const;
};

/// sum_i sigmoid(beta * s * z_i): the smoothed count of entries with s * z_i > 0.
double smoothed_count(std::span<const double> z, int s, double beta);

/// L(w) = sum_k mean_i sigmoid(beta s_k <r_i^(k), w>) + prox ||w - w_init||^2.
/// `rows[k]` holds the rows r_i^(k) of class k. When `class_terms` is given it
/// receives the per-class smoothed means.
double attack_loss(const std::vector<Matrix>& rows, const AttackConfig& cfg,
                   std::span<const double> w_init, std::span<const double> w,
                   Vector* class_terms = nullptr);
Vector attack_gradient(const std::vector<Matrix>& rows, const AttackConfig& cfg,
                       std::span<const double> w_init, std::span<const double> w);

struct AttackIteration {
  std::size_t iter = 0;
  double loss = 0.0;
  Vector class_loss;
  /// Fraction of rows with <r_i, w> > 0 per class (TCAV_Q in gradient-row mode).
  Vector tcav_q;
  /// Step length used to reach this iterate (0 for the initial point).
  double step = 0.0;
  Vector w;
};

struct AttackTrace {
  std::vector<AttackIteration> iterations;  // iterations[0] is the initial CAV
  Cav final_cav;
  Vector final_unit;
  std::size_t updates = 0;
};

/// Gradient descent on attack_loss. Each accepted step doubles the step length
/// for the next iteration; a step that raises the loss is halved and retried.
/// Stops after max_iters updates or when the loss changes by less than stop_tol.
/// Throws Error{Diverged} if the loss becomes non-finite.
AttackTrace attack(const std::vector<Matrix>& rows, const Cav& init, const AttackConfig& cfg);

}  // namespace cavlab
