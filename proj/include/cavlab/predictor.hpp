#pragma once
// Accuracy prediction for linear score classifiers g(x) = w.x / sqrt(n) whose
// class-conditional scores are Gaussian, plus the empirical counterparts.

#include <cstddef>
#include <span>

#include <json.hpp>

#include "cavlab/cav.hpp"
#include "cavlab/linalg.hpp"

namespace cavlab {

struct ScorePrediction {
  double m1 = 0.0, m2 = 0.0;
  double var1 = 0.0, var2 = 0.0;
  double c1 = 0.5, c2 = 0.5;
  double eta_star = 0.0;
  double epsilon = 0.0;
  std::size_t n = 0;
};

nlohmann::json to_json(const ScorePrediction& p);

/// Standard normal CDF, 0.5 * erfc(-x / sqrt 2).
double gaussian_cdf(double x);
double gaussian_pdf(double x, double mean, double var);

/// Score means m_l = w̄.mu_l / sqrt(n) and variances
/// var_l = (tr(Sw Sl) + mu_l' Sw mu_l + w̄' Sl w̄) / n. Threshold fields are
/// left at zero; see predict().
ScorePrediction predict_scores(const CavDistribution& wdist, const ClassStats& class1,
                               const ClassStats& class2, std::size_t n);

/// predict_scores followed by optimal_threshold with the class priors.
ScorePrediction predict(const CavDistribution& wdist, const ClassStats& class1,
                        const ClassStats& class2, std::size_t n);

struct Threshold {
  double eta = 0.0;
  double epsilon = 0.0;
};

/// c1 P(N(m1, var1) > eta) + c2 P(N(m2, var2) < eta)
double misclassification(double eta, double m1, double var1, double m2, double var2, double c1,
                         double c2);

/// Minimiser of misclassification(). Uses the weighted-density intersection
/// that is a local minimum; falls back to golden-section search on
/// [m1 - 6 s1, m2 + 6 s2] when no intersection beats the one-class limits.
Threshold optimal_threshold(double m1, double var1, double m2, double var2, double c1, double c2);

/// g(x) for every column of `data` using the CAV's training size as n.
Vector cav_scores(const Cav& cav, const Matrix& data);

/// Optimal threshold of per-class Gaussians fitted to the CAV's scores on
/// `acts`. Zero fitted variances are floored to a tiny positive value; throws
/// Degenerate when both are zero and the class means coincide.
double fit_threshold(const Cav& cav, const LabeledActivations& acts);

/// Fraction of `test` misclassified by "predict +1 iff g(x) > eta".
double empirical_error(const Cav& cav, const LabeledActivations& test);

}  // namespace cavlab
