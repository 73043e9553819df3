#include <doctest.h>

#include <cmath>

#include "cavlab/datagen.hpp"
#include "cavlab/error.hpp"
#include "test_util.hpp"

using namespace cavlab;

namespace {

std::size_t zero_crossings(const Vector& y) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if ((y[i - 1] < 0) != (y[i] < 0)) ++n;
  return n;
}

double series_variance(std::span<const double> y) {
  double m = 0;
  for (double v : y) m += v;
  m /= static_cast<double>(y.size());
  double s = 0;
  for (double v : y) s += (v - m) * (v - m);
  return s / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("zero-covariance GMM reproduces the means") {
  GmmSpec spec;
  spec.mu1 = {1, 2};
  spec.mu2 = {-3, 4};
  spec.sigma1 = Matrix(2, 2);
  spec.sigma2 = Matrix(2, 2);
  spec.n1 = spec.n2 = 3;
  const LabeledActivations acts = sample_gmm(spec);
  CHECK(acts.labels == std::vector<int>{-1, -1, -1, 1, 1, 1});
  for (std::size_t c = 0; c < 3; ++c) CHECK(acts.data.column(c) == spec.mu1);
  for (std::size_t c = 3; c < 6; ++c) CHECK(acts.data.column(c) == spec.mu2);
}

TEST_CASE("GMM sampling is deterministic per seed") {
  const GmmSpec spec = GmmSpec::symmetric(5, 1.0, 1.0, 10, 12, 3);
  CHECK(sample_gmm(spec).data == sample_gmm(spec).data);
  GmmSpec other = spec;
  other.seed = 4;
  CHECK_FALSE(sample_gmm(other).data == sample_gmm(spec).data);
}

TEST_CASE("GMM moments converge at the 1/sqrt(n) rate") {
  const std::size_t n = 100000;
  const GmmSpec spec = GmmSpec::symmetric(50, 1.0, 1.0, n, n, 21);
  const LabeledActivations acts = sample_gmm(spec);
  const Vector m1 = row_means(acts.columns_with_label(-1));
  const Vector m2 = row_means(acts.columns_with_label(1));
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(std::abs(m1[i] - spec.mu1[i]) < 0.02);
    CHECK(std::abs(m2[i] - spec.mu2[i]) < 0.02);
  }
  // Largest of 50 coordinate deviations: below 4.5 standard errors.
  double worst = 0;
  for (std::size_t i = 0; i < 50; ++i) worst = std::max(worst, std::abs(m1[i] - spec.mu1[i]));
  CHECK(worst < 4.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("full-covariance GMM matches the requested covariance") {
  GmmSpec spec;
  spec.mu1 = {0, 0};
  spec.mu2 = {1, 1};
  spec.sigma1 = Matrix(2, 2, {2.0, 0.6, 0.6, 1.0});
  spec.sigma2 = Matrix::identity(2);
  spec.n1 = 50000;
  spec.n2 = 2;
  spec.seed = 8;
  const LabeledActivations acts = sample_gmm(spec);
  const Matrix c1 = acts.columns_with_label(-1);
  const Matrix cov = column_covariance(c1, row_means(c1));
  CHECK(cov(0, 0) == doctest::Approx(2.0).epsilon(0.03));
  CHECK(cov(0, 1) == doctest::Approx(0.6).epsilon(0.05));
  CHECK(cov(1, 1) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("GMM spec validation") {
  GmmSpec spec = GmmSpec::symmetric(3, 1.0, 1.0, 0, 4, 1);
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = GmmSpec::symmetric(2, 1.0, 1.0, 3, 3, 1);
  spec.sigma1 = Matrix(2, 2, {1, 2, 2, 1});
  CHECK_THROWS_AS(sample_gmm(spec), Error);
  spec = GmmSpec::symmetric(2, 1.0, 1.0, 3, 3, 1);
  spec.mu2 = {1};
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("GMM JSON round trip and shorthand") {
  const GmmSpec spec = GmmSpec::symmetric(3, 0.5, 2.0, 4, 6, 9);
  const GmmSpec back = gmm_spec_from_json(to_json(spec));
  CHECK(back.mu1 == spec.mu1);
  CHECK(back.sigma2 == spec.sigma2);
  CHECK(back.n2 == 6);
  const GmmSpec shorthand =
      gmm_spec_from_json(nlohmann::json{{"d", 3}, {"shift", 0.5}, {"sigma1", 2.0}, {"sigma2", 2.0}, {"n1", 4}, {"n2", 6}});
  CHECK(shorthand.mu2 == spec.mu2);
  CHECK(shorthand.sigma1 == spec.sigma1);
}

TEST_CASE("time series samples") {
  TimeSeriesParams p;
  p.amplitude = 0;
  p.noise_std = 0;
  for (double v : sample_timeseries(p, 1)) CHECK(v == 0.0);

  p = TimeSeriesParams{};
  p.amplitude = 1;
  p.frequency = 1;
  p.dt = 0.25;
  p.noise_std = 0;
  p.horizon = 9;
  const Vector y = sample_timeseries(p, 1);
  const double expected[] = {0, 1, 0, -1, 0, 1, 0, -1, 0};
  for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(y[i] - expected[i]) < 1e-12);

  p = TimeSeriesParams{};
  p.amplitude = 0;
  p.trend = 1;
  p.noise_std = 0;
  p.dt = 1;
  p.horizon = 20;
  const Vector t = sample_timeseries(p, 1);
  for (std::size_t i = 0; i < 20; ++i) CHECK(t[i] == static_cast<double>(i));

  p = TimeSeriesParams{};
  p.horizon = 1;
  CHECK_THROWS_AS(p.validate(), Error);
  p = TimeSeriesParams{};
  p.noise_std = -1;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("concept datasets") {
  TimeSeriesParams base;
  base.noise_std = 0;
  ConceptSpec freq = ConceptSpec::defaults(ConceptKind::Frequency, NonConceptMode::LowValue);
  const LabeledActivations f = build_concept_dataset(freq, base, 2, 5);
  CHECK(f.labels == std::vector<int>{-1, -1, 1, 1});
  CHECK(zero_crossings(f.data.column(2)) > zero_crossings(f.data.column(0)));

  const ConceptSpec noise = ConceptSpec::defaults(ConceptKind::Frequency, NonConceptMode::WhiteNoise);
  const LabeledActivations w = build_concept_dataset(noise, TimeSeriesParams{}, 4, 5);
  CHECK(w.labels == std::vector<int>{-1, -1, -1, -1, 1, 1, 1, 1});
  CHECK(w.dim() == 128);
  CHECK(w.layer_id == "0");

  CHECK_THROWS_AS(build_concept_dataset(noise, TimeSeriesParams{}, 1, 5), Error);
  ConceptSpec same = noise;
  same.low_value = same.high_value;
  CHECK_THROWS_AS(same.validate(), Error);
}

TEST_CASE("amplitude concept scales the series variance") {
  const ConceptSpec amp = ConceptSpec::defaults(ConceptKind::Amplitude, NonConceptMode::LowValue);
  CHECK(amp.high_value == 2.0);
  CHECK(amp.low_value == 0.5);
  const std::size_t n = 10000;
  const LabeledActivations d = build_concept_dataset(amp, TimeSeriesParams{}, n, 17);
  double v_low = 0, v_high = 0;
  for (std::size_t c = 0; c < n; ++c) v_low += series_variance(d.data.column(c));
  for (std::size_t c = n; c < 2 * n; ++c) v_high += series_variance(d.data.column(c));
  // Over whole periods the variance of A sin is A^2 / 2, plus the noise variance.
  const double expected = (2.0 + 0.01) / (0.125 + 0.01);
  CHECK(v_high / v_low == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("four-class training task") {
  const ClassDataset task = build_timeseries_task(TimeSeriesParams{}, 3, 4);
  task.validate();
  CHECK(task.num_classes == 4);
  CHECK(task.count() == 12);
  for (int k = 0; k < 4; ++k) CHECK(class_columns(task, k).cols() == 3);
  CHECK(build_timeseries_task(TimeSeriesParams{}, 3, 4).inputs == task.inputs);
}

TEST_CASE("null dataset is white noise in both classes") {
  const LabeledActivations d = build_null_dataset(64, 500, 2);
  CHECK(d.dim() == 64);
  CHECK(d.count_of(-1) == 500);
  const auto [s1, s2] = empirical_class_stats(d);
  CHECK(std::abs(s1.cov(3, 3) - 1.0) < 0.2);
  CHECK(std::abs(s2.mean[7]) < 0.2);
}

TEST_CASE("enum names round trip") {
  for (ConceptKind k : {ConceptKind::Amplitude, ConceptKind::Frequency, ConceptKind::Trend})
    CHECK(concept_kind_from_string(to_string(k)) == k);
  CHECK(non_concept_mode_from_string("low_value") == NonConceptMode::LowValue);
  CHECK_THROWS_AS(concept_kind_from_string("colour"), Error);
  const ConceptSpec spec = ConceptSpec::defaults(ConceptKind::Trend);
  CHECK(concept_spec_from_json(to_json(spec)).high_value == spec.high_value);
  const TimeSeriesParams p = timeseries_params_from_json(nlohmann::json{{"horizon", 64}});
  CHECK(p.horizon == 64);
  CHECK(to_json(p).at("horizon") == 64);
}
