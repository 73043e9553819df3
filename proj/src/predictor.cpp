#include "cavlab/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cavlab/error.hpp"
#include "cavlab/kernels.hpp"

namespace cavlab {

nlohmann::json to_json(const ScorePrediction& p) {
  return {{"m1", p.m1},   {"m2", p.m2},   {"var1", p.var1},           {"var2", p.var2},
          {"c1", p.c1},   {"c2", p.c2},   {"eta_star", p.eta_star},   {"epsilon", p.epsilon},
          {"n", p.n}};
}

double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double gaussian_pdf(double x, double mean, double var) {
  const double z = x - mean;
  return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

ScorePrediction predict_scores(const CavDistribution& wdist, const ClassStats& class1,
                               const ClassStats& class2, std::size_t n) {
  const std::size_t d = wdist.mean.size();
  if (wdist.cov.rows() != d || wdist.cov.cols() != d || class1.mean.size() != d ||
      class2.mean.size() != d || class1.cov.rows() != d || class2.cov.rows() != d)
    throw Error(ErrorCode::DimensionMismatch, "CAV distribution and class statistics disagree on dimension");
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "training size n must be >= 1");
  if (norm2(wdist.mean) == 0.0 && max_abs(wdist.cov) == 0.0)
    throw Error(ErrorCode::Degenerate, "degenerate predictor: zero mean and zero covariance");

  const double nn = static_cast<double>(n);
  const double inv_sqrt_n = 1.0 / std::sqrt(nn);
  auto variance = [&](const ClassStats& s) {
    const double t1 = trace_product_symmetric(wdist.cov, s.cov);
    const double t2 = quadratic_form(s.mean, wdist.cov, s.mean);
    const double t3 = quadratic_form(wdist.mean, s.cov, wdist.mean);
    return (t1 + t2 + t3) / nn;
  };
  ScorePrediction p;
  p.n = n;
  p.m1 = dot(wdist.mean, class1.mean) * inv_sqrt_n;
  p.m2 = dot(wdist.mean, class2.mean) * inv_sqrt_n;
  p.var1 = variance(class1);
  p.var2 = variance(class2);
  p.c1 = class1.prior;
  p.c2 = class2.prior;
  return p;
}

ScorePrediction predict(const CavDistribution& wdist, const ClassStats& class1,
                        const ClassStats& class2, std::size_t n) {
  ScorePrediction p = predict_scores(wdist, class1, class2, n);
  if (!(p.var1 > 0.0) || !(p.var2 > 0.0))
    throw Error(ErrorCode::Degenerate, "predicted score variance is zero");
  const Threshold t = optimal_threshold(p.m1, p.var1, p.m2, p.var2, p.c1, p.c2);
  p.eta_star = t.eta;
  p.epsilon = t.epsilon;
  return p;
}

double misclassification(double eta, double m1, double var1, double m2, double var2, double c1,
                         double c2) {
  const double above1 = gaussian_cdf(-(eta - m1) / std::sqrt(var1));
  const double below2 = gaussian_cdf((eta - m2) / std::sqrt(var2));
  return c1 * above1 + c2 * below2;
}

namespace {

Threshold golden_section(double lo, double hi, double m1, double var1, double m2, double var2,
                         double c1, double c2) {
  auto eps = [&](double eta) { return misclassification(eta, m1, var1, m2, var2, c1, c2); };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double tol = 1e-10 * std::max(1.0, hi - lo);
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = eps(x1), f2 = eps(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = eps(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = eps(x2);
    }
  }
  Threshold best{0.5 * (a + b), eps(0.5 * (a + b))};
  for (double edge : {lo, hi}) {
    const double e = eps(edge);
    if (e < best.epsilon) best = {edge, e};
  }
  return best;
}

}  // namespace

Threshold optimal_threshold(double m1, double var1, double m2, double var2, double c1, double c2) {
  for (double v : {m1, var1, m2, var2, c1, c2})
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "optimal_threshold: non-finite input");
  if (!(var1 > 0.0) || !(var2 > 0.0))
    throw Error(ErrorCode::InvalidArgument, "optimal_threshold: variances must be > 0");
  if (!(c1 > 0.0) || !(c2 > 0.0) || std::abs(c1 + c2 - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "optimal_threshold: priors must be positive and sum to 1");

  const double s1 = std::sqrt(var1), s2 = std::sqrt(var2);
  // Weighted densities intersect where a*eta^2 + b*eta + c = 0.
  const double rhs = std::log(c1 / s1) - std::log(c2 / s2);
  const double a = 0.5 / var1 - 0.5 / var2;
  const double b = m2 / var2 - m1 / var1;
  const double c = 0.5 * m1 * m1 / var1 - 0.5 * m2 * m2 / var2 - rhs;

  std::vector<double> roots;
  const double scale = std::max(0.5 / var1, 0.5 / var2);
  if (std::abs(a) <= 1e-14 * scale) {
    if (b != 0.0) roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      if (q != 0.0) {
        roots.push_back(q / a);
        roots.push_back(c / q);
      } else {
        roots.push_back(0.0);
      }
    }
  }
  // eps' = c2 f2 - c1 f1; keep roots where it crosses upward (local minima).
  // eps tends to c1 (eta -> -inf) and c2 (eta -> +inf), so a local minimum
  // below both limits is the global one.
  Threshold best{0.0, INFINITY};
  for (double r : roots) {
    const double f1 = c1 * gaussian_pdf(r, m1, var1), f2 = c2 * gaussian_pdf(r, m2, var2);
    const double curvature = -f2 * (r - m2) / var2 + f1 * (r - m1) / var1;
    if (!(curvature > 0.0)) continue;
    const double e = misclassification(r, m1, var1, m2, var2, c1, c2);
    if (e < best.epsilon) best = {r, e};
  }
  if (best.epsilon <= std::min(c1, c2)) return best;
  const double left = std::min(m1 - 6.0 * s1, m2 - 6.0 * s2);
  const double right = std::max(m1 + 6.0 * s1, m2 + 6.0 * s2);
  return golden_section(left, right, m1, var1, m2, var2, c1, c2);
}

Vector cav_scores(const Cav& cav, const Matrix& data) {
  if (data.rows() != cav.w.size())
    throw Error(ErrorCode::DimensionMismatch, "CAV dimension " + std::to_string(cav.w.size()) +
                                                  " vs data dimension " + std::to_string(data.rows()));
  if (cav.degenerate) throw Error(ErrorCode::Degenerate, "degenerate CAV (w = 0) cannot score data");
  const std::size_t n = cav.train_size > 0 ? cav.train_size : data.cols();
  Vector g = matvec_transposed(data, cav.w);
  kernels::scal(1.0 / std::sqrt(static_cast<double>(n)), g.data(), g.size());
  return g;
}

double fit_threshold(const Cav& cav, const LabeledActivations& acts) {
  acts.validate();
  const Vector g = cav_scores(cav, acts.data);
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int k = acts.labels[i] > 0;
    sum[k] += g[i];
    ++count[k];
  }
  if (count[0] == 0 || count[1] == 0)
    throw Error(ErrorCode::DegenerateClass, "degenerate class: threshold needs both labels");
  const double mean[2] = {sum[0] / static_cast<double>(count[0]), sum[1] / static_cast<double>(count[1])};
  double ss[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int k = acts.labels[i] > 0;
    ss[k] += (g[i] - mean[k]) * (g[i] - mean[k]);
  }
  double var[2];
  for (int k = 0; k < 2; ++k) var[k] = count[k] > 1 ? ss[k] / static_cast<double>(count[k] - 1) : 0.0;

  if (var[0] == 0.0 && var[1] == 0.0 && mean[0] == mean[1])
    throw Error(ErrorCode::Degenerate, "degenerate scores: both classes score identically");
  const double spread = std::max({std::abs(mean[1] - mean[0]), std::sqrt(var[0]), std::sqrt(var[1])});
  const double floor = 1e-12 * spread * spread;
  for (double& v : var) v = std::max(v, floor);

  const double n = static_cast<double>(count[0] + count[1]);
  return optimal_threshold(mean[0], var[0], mean[1], var[1], static_cast<double>(count[0]) / n,
                           static_cast<double>(count[1]) / n)
      .eta;
}

double empirical_error(const Cav& cav, const LabeledActivations& test) {
  test.validate();
  if (test.count() == 0) throw Error(ErrorCode::InvalidArgument, "empirical_error: empty test set");
  const Vector g = cav_scores(cav, test.data);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int predicted = g[i] > cav.eta ? 1 : -1;
    wrong += (predicted != test.labels[i]);
  }
  return static_cast<double>(wrong) / static_cast<double>(g.size());
}

}  // namespace cavlab
