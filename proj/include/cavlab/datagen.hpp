#pragma once

#include <cstdint>
#include <string_view>

#include <json.hpp>

#include "cavlab/linalg.hpp"
#include "cavlab/rng.hpp"

namespace cavlab {

/// Two-class Gaussian mixture. Class -1 ~ N(mu1, sigma1), class +1 ~ N(mu2, sigma2).
struct GmmSpec {
  Vector mu1, mu2;
  Matrix sigma1, sigma2;
  std::size_t n1 = 0, n2 = 0;
  std::uint64_t seed = 0;

  std::size_t dim() const noexcept { return mu1.size(); }
  void validate() const;

  /// mu2 = -mu1 = shift * e1, sigma_l = variance * I.
  static GmmSpec symmetric(std::size_t d, double shift, double variance, std::size_t n1,
                           std::size_t n2, std::uint64_t seed);
};

/// n1 columns from class -1 followed by n2 columns from class +1.
/// All-zero covariances are accepted and sample the mean exactly; any other
/// non-SPD covariance throws NotPositiveDefinite.
LabeledActivations sample_gmm(const GmmSpec& spec);

/// y(t_i) = A sin(2 pi f t_i) + trend * t_i + eps_i with t_i = i * dt.
struct TimeSeriesParams {
  double amplitude = 1.0;
  double frequency = 1.0;
  double trend = 0.0;
  double noise_std = 0.1;
  std::size_t horizon = 128;
  double dt = 1.0 / 128.0;

  void validate() const;
};

Vector sample_timeseries(const TimeSeriesParams& params, Rng& rng);
Vector sample_timeseries(const TimeSeriesParams& params, std::uint64_t seed);

enum class ConceptKind { Amplitude, Frequency, Trend };
enum class NonConceptMode { LowValue, WhiteNoise };

std::string_view to_string(ConceptKind kind) noexcept;
ConceptKind concept_kind_from_string(std::string_view name);
std::string_view to_string(NonConceptMode mode) noexcept;
NonConceptMode non_concept_mode_from_string(std::string_view name);

struct ConceptSpec {
  ConceptKind kind = ConceptKind::Frequency;
  double high_value = 5.0;
  double low_value = 1.0;
  NonConceptMode non_concept = NonConceptMode::WhiteNoise;

  void validate() const;
  /// Amplitude 2.0/0.5, frequency 5/1, trend 0.05/0.0.
  static ConceptSpec defaults(ConceptKind kind, NonConceptMode mode = NonConceptMode::WhiteNoise);
};

/// Returns `base` with the concept's parameter replaced by `value`.
TimeSeriesParams with_concept_value(TimeSeriesParams base, ConceptKind kind, double value);

/// n non-concept columns (label -1) followed by n concept columns (label +1);
/// each column is one series of length base.horizon. Needs n_per_class >= 2.
LabeledActivations build_concept_dataset(const ConceptSpec& spec, const TimeSeriesParams& base,
                                         std::size_t n_per_class, std::uint64_t seed);

/// Both classes are N(0, I) white noise: a concept that cannot be encoded.
LabeledActivations build_null_dataset(std::size_t horizon, std::size_t n_per_class,
                                      std::uint64_t seed);

/// Four-class time-series task used to train the toy classifier. Class ids:
/// 0 = (low A, low f), 1 = (low A, high f), 2 = (high A, low f), 3 = (high A, high f),
/// using the amplitude and frequency defaults of ConceptSpec. Columns are
/// class-blocked in id order.
ClassDataset build_timeseries_task(const TimeSeriesParams& base, std::size_t n_per_class,
                                   std::uint64_t seed);

/// Only the columns of `data` whose class id equals k.
Matrix class_columns(const ClassDataset& data, int k);

// JSON config documents -------------------------------------------------------

GmmSpec gmm_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const GmmSpec& spec);
TimeSeriesParams timeseries_params_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const TimeSeriesParams& params);
ConceptSpec concept_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ConceptSpec& spec);

}  // namespace cavlab
