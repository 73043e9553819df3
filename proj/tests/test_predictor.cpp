#include <doctest.h>

#include <cmath>

#include "cavlab/datagen.hpp"
#include "cavlab/error.hpp"
#include "cavlab/predictor.hpp"
#include "test_util.hpp"

using namespace cavlab;

namespace {

constexpr double kPhiMinusOne = 0.15865525393145707;

Cav make_cav(Vector w, double eta, std::size_t n) {
  Cav c;
  c.w = std::move(w);
  c.eta = eta;
  c.train_size = n;
  return c;
}

CavDistribution point_mass(Vector mean) {
  const std::size_t d = mean.size();
  return {std::move(mean), Matrix(d, d), DistributionSource::AnalyticPattern};
}

}  // namespace

TEST_CASE("Gaussian CDF reference values") {
  CHECK(gaussian_cdf(0.0) == 0.5);
  CHECK(gaussian_cdf(-1.0) == doctest::Approx(kPhiMinusOne).epsilon(1e-15));
  CHECK(gaussian_cdf(-10.0) == doctest::Approx(7.619853024160527e-24).epsilon(1e-12));
  CHECK(gaussian_cdf(1.0) + gaussian_cdf(-1.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("score moments") {
  ClassStats s1{Vector{2, 0}, Matrix::identity(2), 4, 0.5};
  ClassStats s2{Vector{-2, 0}, Matrix::identity(2), 4, 0.5};
  const ScorePrediction p = predict_scores(point_mass({1, 0}), s1, s2, 4);
  CHECK(p.m1 == 1.0);
  CHECK(p.m2 == -1.0);
  CHECK(p.var1 == 0.25);  // only the w-bar term survives

  const std::size_t d = 10;
  Vector mu(d, 0.0);
  mu[0] = 1;
  ClassStats c1{mu, Matrix::identity(d), d, 0.5};
  ClassStats c2{Vector(d, 0.0), Matrix::identity(d), d, 0.5};
  const CavDistribution iso{Vector(d, 0.0), Matrix::identity(d), DistributionSource::MonteCarlo};
  const ScorePrediction q = predict_scores(iso, c1, c2, d);
  CHECK(q.var1 == doctest::Approx((d + 1.0) / d).epsilon(1e-15));
  CHECK(q.var2 == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(predict_scores(point_mass({1, 0, 0}), s1, s2, 4), Error);
  try {
    predict_scores(point_mass({0, 0}), s1, s2, 4);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Degenerate);
  }
}

TEST_CASE("optimal threshold") {
  const Threshold sym = optimal_threshold(-1, 1, 1, 1, 0.5, 0.5);
  CHECK(std::abs(sym.eta) <= 1e-12);
  CHECK(sym.epsilon == doctest::Approx(kPhiMinusOne).epsilon(1e-12));

  CHECK(optimal_threshold(0.3, 2, 0.3, 2, 0.5, 0.5).epsilon == doctest::Approx(0.5).epsilon(1e-9));

  // Unequal priors push eta away from the likelier class.
  CHECK(optimal_threshold(-1, 1, 1, 1, 0.8, 0.2).eta > 0.0);
  // Expected closed form for equal variances: eta = var * log(c1/c2) / (m2 - m1).
  CHECK(optimal_threshold(-1, 1, 1, 1, 0.8, 0.2).eta == doctest::Approx(std::log(4.0) / 2).epsilon(1e-12));

  // Unequal variances: the returned eta beats a dense grid.
  const double m1 = -0.5, v1 = 0.3, m2 = 1.2, v2 = 2.0;
  const Threshold t = optimal_threshold(m1, v1, m2, v2, 0.4, 0.6);
  for (int i = 0; i <= 2000; ++i) {
    const double eta = -4.0 + 10.0 * i / 2000.0;
    CHECK(t.epsilon <= misclassification(eta, m1, v1, m2, v2, 0.4, 0.6) + 1e-15);
  }

  // Very unequal variances: the intersection between the means is a local
  // maximum of the error, not the minimiser.
  const Threshold wide = optimal_threshold(0.0, 4.0, 0.5, 0.25, 0.6, 0.4);
  for (int i = 0; i <= 2000; ++i) {
    const double eta = -12.0 + 15.0 * i / 2000.0;
    CHECK(wide.epsilon <= misclassification(eta, 0.0, 4.0, 0.5, 0.25, 0.6, 0.4) + 1e-15);
  }

  // Reversed means: no intersection between them, the search fallback still minimises.
  const Threshold rev = optimal_threshold(1, 1, -1, 1, 0.5, 0.5);
  CHECK(rev.epsilon <= misclassification(0.0, 1, 1, -1, 1, 0.5, 0.5));

  CHECK_THROWS_AS(optimal_threshold(0, 0, 1, 1, 0.5, 0.5), Error);
  CHECK_THROWS_AS(optimal_threshold(0, 1, 1, 1, 0.7, 0.7), Error);
  CHECK_THROWS_AS(optimal_threshold(NAN, 1, 1, 1, 0.5, 0.5), Error);
}

TEST_CASE("prediction is invariant to swapping the classes and flipping w") {
  Rng rng(1);
  const std::size_t d = 4;
  ClassStats s1{testing::random_vector(d, rng), Matrix::identity(d, 1.5), 30, 0.4};
  ClassStats s2{testing::random_vector(d, rng), Matrix::identity(d, 0.5), 45, 0.6};
  CavDistribution w = analytic_distribution(CavMethod::Pattern, s1, s2);
  const ScorePrediction a = predict(w, s1, s2, 75);
  w.mean = -1.0 * w.mean;
  const ScorePrediction b = predict(w, s2, s1, 75);
  CHECK(b.epsilon == doctest::Approx(a.epsilon).epsilon(1e-9));
  CHECK(b.eta_star == doctest::Approx(-a.eta_star).epsilon(1e-9));
}

TEST_CASE("fit_threshold") {
  // Scores -1,-1 vs +1,+1 (n = 4 so g = w.x / 2).
  LabeledActivations sep{Matrix(1, 4, {-2, -2, 2, 2}), {-1, -1, 1, 1}, ""};
  Cav c = make_cav({1}, 0.0, 4);
  c.eta = fit_threshold(c, sep);
  CHECK(c.eta > -1.0);
  CHECK(c.eta < 1.0);
  CHECK(empirical_error(c, sep) == 0.0);

  LabeledActivations flat{Matrix(1, 4, {3, 3, 3, 3}), {-1, -1, 1, 1}, ""};
  CHECK_THROWS_AS(fit_threshold(c, flat), Error);
}

TEST_CASE("fitted threshold agrees with the population optimum") {
  // Symmetric mixture: the population threshold is 0; average the fitted one
  // over independent training sets and compare within 3 standard errors.
  const std::size_t d = 50, per_class = 100, draws = 60;
  GmmSpec spec = GmmSpec::symmetric(d, 1.0, 1.0, per_class, per_class, 0);
  const ClassStats p1{spec.mu1, spec.sigma1, per_class, 0.5}, p2{spec.mu2, spec.sigma2, per_class, 0.5};
  const ScorePrediction pop = predict(analytic_distribution(CavMethod::Pattern, p1, p2), p1, p2, 2 * per_class);
  double s = 0, s2 = 0;
  for (std::size_t r = 0; r < draws; ++r) {
    spec.seed = 1000 + r;
    const double eta = pattern_cav(sample_gmm(spec)).eta;
    s += eta;
    s2 += eta * eta;
  }
  const double mean = s / draws;
  const double se = std::sqrt((s2 / draws - mean * mean) / (draws - 1));
  CHECK(std::abs(mean - pop.eta_star) < 3 * se);
}

TEST_CASE("empirical error") {
  GmmSpec zero = GmmSpec::symmetric(3, 1.0, 0.0, 5, 5, 0);
  const LabeledActivations clean = sample_gmm(zero);
  const Cav good = make_cav(zero.mu2 - zero.mu1, 0.0, 10);
  CHECK(empirical_error(good, clean) == 0.0);
  const Cav anti = make_cav(zero.mu1 - zero.mu2, 0.0, 10);
  CHECK(empirical_error(anti, clean) == 1.0);

  GmmSpec big = GmmSpec::symmetric(2, 1.0, 1.0, 50000, 50000, 3);
  const Cav c = make_cav({2, 0}, 0.0, 10);
  CHECK(std::abs(empirical_error(c, sample_gmm(big)) - kPhiMinusOne) < 0.004);

  Cav deg = good;
  deg.degenerate = true;
  CHECK_THROWS_AS(empirical_error(deg, clean), Error);
  CHECK_THROWS_AS(empirical_error(make_cav({1, 0}, 0, 10), clean), Error);
}

TEST_CASE("pattern and fast CAVs misclassify the same points") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GmmSpec train_spec = GmmSpec::symmetric(20, 0.4, 1.0, 60, 60, seed);
    const GmmSpec test_spec = GmmSpec::symmetric(20, 0.4, 1.0, 500, 500, seed + 100);
    const LabeledActivations train = sample_gmm(train_spec), test = sample_gmm(test_spec);
    CHECK(empirical_error(pattern_cav(train), test) == empirical_error(fast_cav(train), test));
  }
}

TEST_CASE("prediction JSON") {
  ScorePrediction p;
  p.epsilon = 0.25;
  p.n = 7;
  const auto j = to_json(p);
  CHECK(j.at("epsilon") == 0.25);
  CHECK(j.at("n") == 7);
}
