#include "cavlab/datagen.hpp"

#include <cmath>
#include <numbers>

#include "cavlab/error.hpp"
#include "cavlab/kernels.hpp"

namespace cavlab {

namespace {

bool is_zero(const Matrix& m) {
  for (double v : m.values())
    if (v != 0.0) return false;
  return true;
}

bool is_diagonal(const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (r != c && m(r, c) != 0.0) return false;
  return true;
}

// Factor used to colour standard normals; zero covariance gives a zero factor.
Matrix sampling_factor(const Matrix& sigma) {
  if (is_zero(sigma)) return Matrix(sigma.rows(), sigma.cols());
  return cholesky(sigma);
}

void fill_class(Matrix& out, std::size_t first_col, std::size_t count, const Vector& mu,
                const Matrix& factor, Rng& rng) {
  const std::size_t d = mu.size();
  const bool diagonal = is_diagonal(factor);
  Vector z(d);
  for (std::size_t j = 0; j < count; ++j) {
    for (double& v : z) v = rng.normal();
    for (std::size_t r = 0; r < d; ++r) {
      const double noise =
          diagonal ? factor(r, r) * z[r] : kernels::dot(factor.row(r).data(), z.data(), r + 1);
      out(r, first_col + j) = mu[r] + noise;
    }
  }
}

}  // namespace

void GmmSpec::validate() const {
  const std::size_t d = dim();
  if (d == 0) throw Error(ErrorCode::InvalidArgument, "GMM dimension must be positive");
  if (mu2.size() != d || sigma1.rows() != d || sigma1.cols() != d || sigma2.rows() != d ||
      sigma2.cols() != d)
    throw Error(ErrorCode::DimensionMismatch, "GMM means/covariances disagree on dimension");
  if (n1 < 1 || n2 < 1) throw Error(ErrorCode::InvalidArgument, "GMM class counts must be >= 1");
}

GmmSpec GmmSpec::symmetric(std::size_t d, double shift, double variance, std::size_t n1,
                           std::size_t n2, std::uint64_t seed) {
  GmmSpec spec;
  spec.mu1.assign(d, 0.0);
  spec.mu2.assign(d, 0.0);
  if (d > 0) {
    spec.mu1[0] = -shift;
    spec.mu2[0] = shift;
  }
  spec.sigma1 = Matrix::identity(d, variance);
  spec.sigma2 = Matrix::identity(d, variance);
  spec.n1 = n1;
  spec.n2 = n2;
  spec.seed = seed;
  return spec;
}

LabeledActivations sample_gmm(const GmmSpec& spec) {
  spec.validate();
  const Matrix f1 = sampling_factor(spec.sigma1);
  const Matrix f2 = sampling_factor(spec.sigma2);
  LabeledActivations out{Matrix(spec.dim(), spec.n1 + spec.n2), {}, "gmm"};
  out.labels.assign(spec.n1, -1);
  out.labels.insert(out.labels.end(), spec.n2, 1);
  Rng rng(spec.seed);
  fill_class(out.data, 0, spec.n1, spec.mu1, f1, rng);
  fill_class(out.data, spec.n1, spec.n2, spec.mu2, f2, rng);
  return out;
}

void TimeSeriesParams::validate() const {
  if (horizon < 2) throw Error(ErrorCode::InvalidArgument, "time series horizon must be >= 2");
  if (!(noise_std >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_std must be >= 0");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  if (!std::isfinite(amplitude) || !std::isfinite(frequency) || !std::isfinite(trend))
    throw Error(ErrorCode::InvalidArgument, "time series parameters must be finite");
}

Vector sample_timeseries(const TimeSeriesParams& p, Rng& rng) {
  p.validate();
  Vector y(p.horizon);
  for (std::size_t i = 0; i < p.horizon; ++i) {
    const double t = static_cast<double>(i) * p.dt;
    const double signal = p.amplitude * std::sin(2.0 * std::numbers::pi * p.frequency * t) + p.trend * t;
    y[i] = p.noise_std > 0.0 ? signal + p.noise_std * rng.normal() : signal;
  }
  return y;
}

Vector sample_timeseries(const TimeSeriesParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return sample_timeseries(params, rng);
}

std::string_view to_string(ConceptKind kind) noexcept {
  switch (kind) {
    case ConceptKind::Amplitude: return "amplitude";
    case ConceptKind::Frequency: return "frequency";
    case ConceptKind::Trend: return "trend";
  }
  return "?";
}

ConceptKind concept_kind_from_string(std::string_view name) {
  if (name == "amplitude") return ConceptKind::Amplitude;
  if (name == "frequency") return ConceptKind::Frequency;
  if (name == "trend") return ConceptKind::Trend;
  throw Error(ErrorCode::InvalidArgument, "unknown concept '" + std::string(name) + "'");
}

std::string_view to_string(NonConceptMode mode) noexcept {
  return mode == NonConceptMode::LowValue ? "low_value" : "white_noise";
}

NonConceptMode non_concept_mode_from_string(std::string_view name) {
  if (name == "low_value") return NonConceptMode::LowValue;
  if (name == "white_noise") return NonConceptMode::WhiteNoise;
  throw Error(ErrorCode::InvalidArgument, "unknown non-concept mode '" + std::string(name) + "'");
}

void ConceptSpec::validate() const {
  if (high_value == low_value)
    throw Error(ErrorCode::InvalidArgument, "concept high and low values must differ");
}

ConceptSpec ConceptSpec::defaults(ConceptKind kind, NonConceptMode mode) {
  switch (kind) {
    case ConceptKind::Amplitude: return {kind, 2.0, 0.5, mode};
    case ConceptKind::Frequency: return {kind, 5.0, 1.0, mode};
    case ConceptKind::Trend: return {kind, 0.05, 0.0, mode};
  }
  return {};
}

TimeSeriesParams with_concept_value(TimeSeriesParams base, ConceptKind kind, double value) {
  switch (kind) {
    case ConceptKind::Amplitude: base.amplitude = value; break;
    case ConceptKind::Frequency: base.frequency = value; break;
    case ConceptKind::Trend: base.trend = value; break;
  }
  return base;
}

namespace {

void fill_white_noise(Matrix& out, std::size_t col, Rng& rng) {
  for (std::size_t r = 0; r < out.rows(); ++r) out(r, col) = rng.normal();
}

}  // namespace

LabeledActivations build_concept_dataset(const ConceptSpec& spec, const TimeSeriesParams& base,
                                         std::size_t n_per_class, std::uint64_t seed) {
  spec.validate();
  base.validate();
  if (n_per_class < 2) throw Error(ErrorCode::InvalidArgument, "n_per_class must be >= 2");
  const TimeSeriesParams high = with_concept_value(base, spec.kind, spec.high_value);
  const TimeSeriesParams low = with_concept_value(base, spec.kind, spec.low_value);

  LabeledActivations out{Matrix(base.horizon, 2 * n_per_class), {}, "0"};
  out.labels.assign(n_per_class, -1);
  out.labels.insert(out.labels.end(), n_per_class, 1);
  Rng rng(seed);
  for (std::size_t j = 0; j < n_per_class; ++j) {
    if (spec.non_concept == NonConceptMode::WhiteNoise)
      fill_white_noise(out.data, j, rng);
    else
      out.data.set_column(j, sample_timeseries(low, rng));
  }
  for (std::size_t j = 0; j < n_per_class; ++j)
    out.data.set_column(n_per_class + j, sample_timeseries(high, rng));
  return out;
}

LabeledActivations build_null_dataset(std::size_t horizon, std::size_t n_per_class,
                                      std::uint64_t seed) {
  if (n_per_class < 2) throw Error(ErrorCode::InvalidArgument, "n_per_class must be >= 2");
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  LabeledActivations out{Matrix(horizon, 2 * n_per_class), {}, "0"};
  out.labels.assign(n_per_class, -1);
  out.labels.insert(out.labels.end(), n_per_class, 1);
  Rng rng(seed);
  for (std::size_t j = 0; j < 2 * n_per_class; ++j) fill_white_noise(out.data, j, rng);
  return out;
}

ClassDataset build_timeseries_task(const TimeSeriesParams& base, std::size_t n_per_class,
                                   std::uint64_t seed) {
  base.validate();
  if (n_per_class < 1) throw Error(ErrorCode::InvalidArgument, "n_per_class must be >= 1");
  const ConceptSpec amp = ConceptSpec::defaults(ConceptKind::Amplitude);
  const ConceptSpec freq = ConceptSpec::defaults(ConceptKind::Frequency);
  ClassDataset out{Matrix(base.horizon, 4 * n_per_class), {}, 4};
  Rng rng(seed);
  std::size_t col = 0;
  for (int k = 0; k < 4; ++k) {
    TimeSeriesParams p = base;
    p.amplitude = (k & 2) ? amp.high_value : amp.low_value;
    p.frequency = (k & 1) ? freq.high_value : freq.low_value;
    for (std::size_t j = 0; j < n_per_class; ++j, ++col) {
      out.inputs.set_column(col, sample_timeseries(p, rng));
      out.labels.push_back(k);
    }
  }
  return out;
}

Matrix class_columns(const ClassDataset& data, int k) {
  std::size_t count = 0;
  for (int y : data.labels) count += (y == k);
  Matrix out(data.inputs.rows(), count);
  std::size_t j = 0;
  for (std::size_t c = 0; c < data.labels.size(); ++c) {
    if (data.labels[c] != k) continue;
    for (std::size_t r = 0; r < out.rows(); ++r) out(r, j) = data.inputs(r, c);
    ++j;
  }
  return out;
}

// JSON ----------------------------------------------------------------------

namespace {

using nlohmann::json;

Matrix covariance_from_json(const json& v, std::size_t d) {
  if (v.is_number()) return Matrix::identity(d, v.get<double>());
  auto rows = v.get<std::vector<Vector>>();
  Matrix m = Matrix::from_rows(rows);
  if (m.rows() != d || m.cols() != d)
    throw Error(ErrorCode::DimensionMismatch, "covariance must be " + std::to_string(d) + "x" +
                                                  std::to_string(d));
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(Vector(m.row(r).begin(), m.row(r).end()));
  return rows;
}

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": " + e.what());
  }
}

}  // namespace

GmmSpec gmm_spec_from_json(const json& doc) {
  return guarded("GMM config", [&] {
    GmmSpec spec;
    if (doc.contains("mu1")) {
      spec.mu1 = doc.at("mu1").get<Vector>();
      spec.mu2 = doc.at("mu2").get<Vector>();
    } else {
      const auto d = doc.at("d").get<std::size_t>();
      const double shift = doc.value("shift", 1.0);
      spec = GmmSpec::symmetric(d, shift, 1.0, 0, 0, 0);
    }
    const std::size_t d = spec.mu1.size();
    spec.sigma1 = covariance_from_json(doc.value("sigma1", doc.value("sigma", json(1.0))), d);
    spec.sigma2 = covariance_from_json(doc.value("sigma2", doc.value("sigma", json(1.0))), d);
    spec.n1 = doc.at("n1").get<std::size_t>();
    spec.n2 = doc.at("n2").get<std::size_t>();
    spec.seed = doc.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
  });
}

json to_json(const GmmSpec& spec) {
  return {{"mu1", spec.mu1},          {"mu2", spec.mu2}, {"sigma1", matrix_to_json(spec.sigma1)},
          {"sigma2", matrix_to_json(spec.sigma2)}, {"n1", spec.n1}, {"n2", spec.n2},
          {"seed", spec.seed}};
}

TimeSeriesParams timeseries_params_from_json(const json& doc) {
  return guarded("time series config", [&] {
    TimeSeriesParams p;
    p.amplitude = doc.value("amplitude", p.amplitude);
    p.frequency = doc.value("frequency", p.frequency);
    p.trend = doc.value("trend", p.trend);
    p.noise_std = doc.value("noise_std", p.noise_std);
    p.horizon = doc.value("horizon", p.horizon);
    p.dt = doc.value("dt", p.dt);
    p.validate();
    return p;
  });
}

json to_json(const TimeSeriesParams& p) {
  return {{"amplitude", p.amplitude}, {"frequency", p.frequency}, {"trend", p.trend},
          {"noise_std", p.noise_std}, {"horizon", p.horizon},     {"dt", p.dt}};
}

ConceptSpec concept_spec_from_json(const json& doc) {
  return guarded("concept config", [&] {
    const ConceptKind kind = concept_kind_from_string(doc.value("concept", std::string("frequency")));
    const NonConceptMode mode =
        non_concept_mode_from_string(doc.value("non_concept_mode", std::string("white_noise")));
    ConceptSpec spec = ConceptSpec::defaults(kind, mode);
    spec.high_value = doc.value("high_value", spec.high_value);
    spec.low_value = doc.value("low_value", spec.low_value);
    spec.validate();
    return spec;
  });
}

json to_json(const ConceptSpec& spec) {
  return {{"concept", std::string(to_string(spec.kind))},
          {"high_value", spec.high_value},
          {"low_value", spec.low_value},
          {"non_concept_mode", std::string(to_string(spec.non_concept))}};
}

}  // namespace cavlab
