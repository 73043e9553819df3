#include "cavlab/cav.hpp"

#include <cmath>

#include "cavlab/error.hpp"
#include "cavlab/io.hpp"
#include "cavlab/kernels.hpp"
#include "cavlab/predictor.hpp"
#include "cavlab/rng.hpp"

namespace cavlab {

std::string_view to_string(CavMethod m) noexcept {
  switch (m) {
    case CavMethod::Ridge: return "ridge";
    case CavMethod::Pattern: return "pattern";
    case CavMethod::Fast: return "fast";
    case CavMethod::Adversarial: return "adversarial";
  }
  return "?";
}

CavMethod cav_method_from_string(std::string_view name) {
  if (name == "ridge") return CavMethod::Ridge;
  if (name == "pattern") return CavMethod::Pattern;
  if (name == "fast") return CavMethod::Fast;
  if (name == "adversarial") return CavMethod::Adversarial;
  throw Error(ErrorCode::InvalidArgument, "unknown CAV method '" + std::string(name) + "'");
}

std::string_view to_string(DistributionSource s) noexcept {
  switch (s) {
    case DistributionSource::AnalyticPattern: return "analytic_pattern";
    case DistributionSource::AnalyticFast: return "analytic_fast";
    case DistributionSource::MonteCarlo: return "monte_carlo";
  }
  return "?";
}

void RidgeConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::InvalidArgument, "ridge lambda must be finite and > 0");
}

namespace {

struct ClassSums {
  Vector sum_neg, sum_pos;
  std::size_t n_neg = 0, n_pos = 0;
};

ClassSums class_sums(const LabeledActivations& acts) {
  acts.validate();
  ClassSums s;
  const Matrix neg = acts.columns_with_label(-1);
  const Matrix pos = acts.columns_with_label(1);
  s.n_neg = neg.cols();
  s.n_pos = pos.cols();
  if (s.n_neg == 0 || s.n_pos == 0)
    throw Error(ErrorCode::DegenerateClass, "degenerate class: CAV needs examples of both labels");
  s.sum_neg.resize(acts.dim());
  s.sum_pos.resize(acts.dim());
  for (std::size_t r = 0; r < acts.dim(); ++r) {
    s.sum_neg[r] = kernels::sum(neg.row(r).data(), s.n_neg);
    s.sum_pos[r] = kernels::sum(pos.row(r).data(), s.n_pos);
  }
  return s;
}

bool is_zero(const Vector& w) {
  for (double v : w)
    if (v != 0.0) return false;
  return true;
}

Cav finish(const LabeledActivations& acts, Vector w, CavMethod method, double lambda) {
  Cav cav;
  cav.w = std::move(w);
  cav.method = method;
  cav.layer_id = acts.layer_id;
  cav.lambda = lambda;
  cav.train_size = acts.count();
  cav.degenerate = is_zero(cav.w);
  if (!cav.degenerate) cav.eta = fit_threshold(cav, acts);
  return cav;
}

}  // namespace

Vector pattern_weights(const LabeledActivations& acts) {
  const ClassSums s = class_sums(acts);
  Vector w(acts.dim());
  const double inv_pos = 1.0 / static_cast<double>(s.n_pos);
  const double inv_neg = 1.0 / static_cast<double>(s.n_neg);
  for (std::size_t r = 0; r < w.size(); ++r) w[r] = s.sum_pos[r] * inv_pos - s.sum_neg[r] * inv_neg;
  return w;
}

Vector fast_weights(const LabeledActivations& acts) {
  const ClassSums s = class_sums(acts);
  Vector w(acts.dim());
  const double inv_pos = 1.0 / static_cast<double>(s.n_pos);
  const double inv_all = 1.0 / static_cast<double>(s.n_pos + s.n_neg);
  for (std::size_t r = 0; r < w.size(); ++r)
    w[r] = s.sum_pos[r] * inv_pos - (s.sum_neg[r] + s.sum_pos[r]) * inv_all;
  return w;
}

Vector ridge_weights(const LabeledActivations& acts, const RidgeConfig& cfg) {
  cfg.validate();
  acts.validate();
  const double n = static_cast<double>(acts.count());
  if (acts.count() == 0) throw Error(ErrorCode::InvalidArgument, "ridge CAV needs data");
  Matrix a = gram_rows(acts.data);
  kernels::scal(1.0 / n, a.data(), a.size());
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += cfg.lambda;
  const Vector y(acts.labels.begin(), acts.labels.end());
  Vector b = matvec(acts.data, y);
  kernels::scal(1.0 / std::sqrt(n), b.data(), b.size());
  return solve_spd(a, b);
}

Vector cav_weights(const LabeledActivations& acts, CavMethod method, const RidgeConfig& cfg) {
  switch (method) {
    case CavMethod::Pattern: return pattern_weights(acts);
    case CavMethod::Fast: return fast_weights(acts);
    case CavMethod::Ridge: return ridge_weights(acts, cfg);
    case CavMethod::Adversarial: break;
  }
  throw Error(ErrorCode::Unsupported, "adversarial CAVs come from the attack, not from data");
}

Cav pattern_cav(const LabeledActivations& acts) {
  return finish(acts, pattern_weights(acts), CavMethod::Pattern, 0.0);
}

Cav fast_cav(const LabeledActivations& acts) {
  return finish(acts, fast_weights(acts), CavMethod::Fast, 0.0);
}

Cav ridge_cav(const LabeledActivations& acts, const RidgeConfig& cfg) {
  return finish(acts, ridge_weights(acts, cfg), CavMethod::Ridge, cfg.lambda);
}

Cav fit_cav(const LabeledActivations& acts, CavMethod method, const RidgeConfig& cfg) {
  const double lambda = method == CavMethod::Ridge ? cfg.lambda : 0.0;
  return finish(acts, cav_weights(acts, method, cfg), method, lambda);
}

CavDistribution analytic_distribution(CavMethod method, const ClassStats& c1, const ClassStats& c2) {
  if (c1.mean.size() != c2.mean.size() || c1.cov.rows() != c1.mean.size() ||
      c2.cov.rows() != c2.mean.size())
    throw Error(ErrorCode::DimensionMismatch, "class statistics disagree on dimension");
  if (c1.count == 0 || c2.count == 0)
    throw Error(ErrorCode::InvalidArgument, "class statistics need positive counts");
  double scale = 1.0;
  DistributionSource source = DistributionSource::AnalyticPattern;
  if (method == CavMethod::Fast) {
    if (c1.count != c2.count)
      throw Error(ErrorCode::Unsupported,
                  "unsupported: proposition requires balanced classes (n1 == n2) for FastCAV");
    scale = 0.5;
    source = DistributionSource::AnalyticFast;
  } else if (method != CavMethod::Pattern) {
    throw Error(ErrorCode::Unsupported, "no closed-form distribution for " + std::string(to_string(method)));
  }
  CavDistribution out;
  out.source = source;
  out.mean = scale * (c2.mean - c1.mean);
  const double s2 = scale * scale;
  out.cov = (s2 / static_cast<double>(c1.count)) * c1.cov +
            (s2 / static_cast<double>(c2.count)) * c2.cov;
  return out;
}

DatasetSource gmm_source(GmmSpec spec) {
  return [spec = std::move(spec)](std::uint64_t seed) {
    GmmSpec s = spec;
    s.seed = seed;
    return sample_gmm(s);
  };
}

DatasetSource bootstrap_source(LabeledActivations data) {
  data.validate();
  std::vector<std::size_t> neg, pos;
  for (std::size_t c = 0; c < data.labels.size(); ++c) (data.labels[c] < 0 ? neg : pos).push_back(c);
  if (neg.empty() || pos.empty())
    throw Error(ErrorCode::DegenerateClass, "degenerate class: bootstrap needs both labels");
  return [data = std::move(data), neg = std::move(neg), pos = std::move(pos)](std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> pick;
    pick.reserve(neg.size() + pos.size());
    for (std::size_t i = 0; i < neg.size(); ++i) pick.push_back(neg[rng.below(neg.size())]);
    for (std::size_t i = 0; i < pos.size(); ++i) pick.push_back(pos[rng.below(pos.size())]);
    return data.subset(pick);
  };
}

CavDistribution monte_carlo_distribution(const DatasetSource& source, CavMethod method,
                                         const RidgeConfig& cfg, std::size_t reps,
                                         std::uint64_t seed) {
  if (reps < 2) throw Error(ErrorCode::InvalidArgument, "monte carlo needs at least 2 repetitions");
  if (method == CavMethod::Ridge) cfg.validate();
  std::vector<Vector> samples;
  samples.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) samples.push_back(cav_weights(source(seed + r), method, cfg));

  const std::size_t d = samples.front().size();
  CavDistribution out;
  out.source = DistributionSource::MonteCarlo;
  out.mean.assign(d, 0.0);
  for (const Vector& w : samples) kernels::axpy(1.0, w.data(), out.mean.data(), d);
  kernels::scal(1.0 / static_cast<double>(reps), out.mean.data(), d);

  // Centered samples as rows of a reps x d matrix; cov = C^T C / (reps - 1).
  Matrix centered_t(d, reps);
  for (std::size_t r = 0; r < reps; ++r)
    for (std::size_t i = 0; i < d; ++i) centered_t(i, r) = samples[r][i] - out.mean[i];
  out.cov = gram_rows(centered_t);
  kernels::scal(1.0 / static_cast<double>(reps - 1), out.cov.data(), out.cov.size());
  return out;
}

void save_cav(const std::filesystem::path& base_in, const Cav& cav) {
  const auto base = io::dataset_base(base_in);
  io::json doc;
  doc["method"] = std::string(to_string(cav.method));
  doc["lambda"] = cav.lambda;
  doc["eta"] = cav.eta;
  doc["layer"] = cav.layer_id;
  doc["seed"] = cav.seed;
  doc["train_size"] = cav.train_size;
  doc["degenerate"] = cav.degenerate;
  doc["dim"] = cav.w.size();
  doc["norm"] = norm2(cav.w);
  io::write_json_file(base.string() + ".json", doc);
  io::write_cavm_file(base.string() + ".cavm", Matrix(cav.w.size(), 1, cav.w));
}

Cav load_cav(const std::filesystem::path& base_in) {
  const auto base = io::dataset_base(base_in);
  const io::json doc = io::read_json_file(base.string() + ".json");
  Cav cav;
  try {
    cav.method = cav_method_from_string(doc.at("method").get<std::string>());
    cav.lambda = doc.value("lambda", 0.0);
    cav.eta = doc.value("eta", 0.0);
    cav.layer_id = doc.value("layer", std::string{});
    cav.seed = doc.value("seed", std::uint64_t{0});
    cav.train_size = doc.value("train_size", std::size_t{0});
    cav.degenerate = doc.value("degenerate", false);
  } catch (const io::json::exception& e) {
    throw Error(ErrorCode::Format, std::string("CAV sidecar: ") + e.what());
  }
  const Matrix w = io::read_cavm_file(base.string() + ".cavm");
  if (w.cols() != 1) throw Error(ErrorCode::Format, "CAV block must be a column vector");
  cav.w = w.values();
  return cav;
}

}  // namespace cavlab
