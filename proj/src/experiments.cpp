#include "cavlab/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "cavlab/error.hpp"
#include "cavlab/rng.hpp"

namespace cavlab {

Split stratified_split(const LabeledActivations& data, double train_fraction, std::uint64_t seed) {
  data.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "train fraction must lie in (0, 1)");
  Rng rng(seed);
  std::vector<std::size_t> train_cols, test_cols;
  for (int label : {-1, 1}) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < data.labels.size(); ++c)
      if (data.labels[c] == label) cols.push_back(c);
    if (cols.size() < 4)
      throw Error(ErrorCode::DegenerateClass,
                  "degenerate class: split needs at least 4 examples of label " + std::to_string(label));
    for (std::size_t i = cols.size(); i > 1; --i) std::swap(cols[i - 1], cols[rng.below(i)]);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(cols.size())));
    n_train = std::clamp<std::size_t>(n_train, 2, cols.size() - 2);
    // Keep columns in their original order inside each side.
    std::sort(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::sort(cols.begin() + static_cast<std::ptrdiff_t>(n_train), cols.end());
    train_cols.insert(train_cols.end(), cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_cols.insert(test_cols.end(), cols.begin() + static_cast<std::ptrdiff_t>(n_train), cols.end());
  }
  return {data.subset(train_cols), data.subset(test_cols)};
}

TheoryResult plug_in_theory(const LabeledActivations& train, CavMethod method, double lambda,
                            std::size_t reps, std::uint64_t seed) {
  if (method == CavMethod::Adversarial)
    throw Error(ErrorCode::Unsupported, "adversarial CAVs have no theory prediction");
  RidgeConfig rcfg;
  if (method == CavMethod::Ridge) rcfg.lambda = lambda;
  const auto [stats1, stats2] = empirical_class_stats(train);
  const bool analytic = method == CavMethod::Pattern ||
                        (method == CavMethod::Fast && stats1.count == stats2.count);
  TheoryResult out;
  out.wdist = analytic ? analytic_distribution(method, stats1, stats2)
                       : monte_carlo_distribution(bootstrap_source(train), method, rcfg, reps, seed);
  out.prediction = predict(out.wdist, stats1, stats2, train.count());
  return out;
}

MethodEval evaluate_method(const LabeledActivations& train, const LabeledActivations& test,
                           CavMethod method, double lambda, std::size_t reps, std::uint64_t seed) {
  if (method == CavMethod::Adversarial)
    throw Error(ErrorCode::Unsupported, "adversarial CAVs have no theory prediction");
  RidgeConfig rcfg;
  if (method == CavMethod::Ridge) {
    rcfg.lambda = lambda;
    rcfg.validate();
  }
  MethodEval out;
  out.method = method;
  out.lambda = method == CavMethod::Ridge ? lambda : 0.0;
  out.cav = fit_cav(train, method, rcfg);
  out.cav.seed = seed;
  out.eps_empirical = empirical_error(out.cav, test);

  const TheoryResult theory = plug_in_theory(train, method, lambda, reps, seed);
  out.source = theory.wdist.source;
  out.prediction = theory.prediction;
  out.eps_theory = out.prediction.epsilon;
  return out;
}

std::vector<SweepRow> lambda_sweep(const LabeledActivations& data, const SweepConfig& cfg) {
  if (cfg.lambdas.empty()) throw Error(ErrorCode::InvalidArgument, "lambda grid is empty");
  if (cfg.methods.empty()) throw Error(ErrorCode::InvalidArgument, "no CAV methods selected");
  for (double l : cfg.lambdas)
    if (!(l > 0.0) || !std::isfinite(l))
      throw Error(ErrorCode::InvalidArgument, "lambda grid values must be finite and > 0");
  std::vector<double> grid = cfg.lambdas;
  std::sort(grid.begin(), grid.end());

  const Split split = stratified_split(data, cfg.train_fraction, derive_seed(cfg.seed, 0));
  const std::uint64_t mc_seed = derive_seed(cfg.seed, 1);

  std::vector<MethodEval> fixed;
  for (CavMethod m : cfg.methods)
    if (m != CavMethod::Ridge) fixed.push_back(evaluate_method(split.train, split.test, m, 0.0, cfg.reps, mc_seed));

  std::vector<SweepRow> rows;
  for (double lambda : grid) {
    for (CavMethod m : cfg.methods) {
      if (m == CavMethod::Ridge) {
        const MethodEval e = evaluate_method(split.train, split.test, m, lambda, cfg.reps, mc_seed);
        rows.push_back({lambda, m, e.eps_theory, e.eps_empirical});
      } else {
        const auto it = std::find_if(fixed.begin(), fixed.end(), [m](const MethodEval& e) { return e.method == m; });
        rows.push_back({lambda, m, it->eps_theory, it->eps_empirical});
      }
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  io::CsvWriter csv({"lambda", "method", "eps_theory", "eps_empirical"});
  for (const SweepRow& r : rows) {
    csv.add(r.lambda).add(std::string(to_string(r.method))).add(r.eps_theory).add(r.eps_empirical);
    csv.end_row();
  }
  return csv.str();
}

LabeledActivations extract_layer(const MlpModel& model, const LabeledActivations& inputs, std::size_t l) {
  inputs.validate();
  if (inputs.dim() != model.input_dim())
    throw Error(ErrorCode::DimensionMismatch, "inputs have dimension " + std::to_string(inputs.dim()) +
                                                  ", model expects " + std::to_string(model.input_dim()));
  LabeledActivations out;
  out.data = layer_activations(model, inputs.data, l);
  out.labels = inputs.labels;
  out.layer_id = std::to_string(l);
  return out;
}

std::vector<LayerRow> layer_sweep(const MlpModel& model, const LabeledActivations& inputs,
                                  const LayerConfig& cfg) {
  if (cfg.layers.empty()) throw Error(ErrorCode::InvalidArgument, "layer list is empty");
  std::vector<std::size_t> layers = cfg.layers;
  for (std::size_t l : layers)
    if (l > model.depth())
      throw Error(ErrorCode::InvalidArgument, "invalid layer " + std::to_string(l) + " (model depth " +
                                                  std::to_string(model.depth()) + ")");
  std::sort(layers.begin(), layers.end());
  if (std::adjacent_find(layers.begin(), layers.end()) != layers.end())
    throw Error(ErrorCode::InvalidArgument, "layer list contains duplicates");

  const Split split = stratified_split(inputs, cfg.train_fraction, derive_seed(cfg.seed, 0));
  const std::uint64_t mc_seed = derive_seed(cfg.seed, 1);
  std::vector<LayerRow> rows;
  for (std::size_t l : layers) {
    const LabeledActivations train = extract_layer(model, split.train, l);
    const LabeledActivations test = extract_layer(model, split.test, l);
    const MethodEval e = evaluate_method(train, test, CavMethod::Ridge, cfg.lambda, cfg.reps, mc_seed);
    rows.push_back({l, train.dim(), e.eps_theory, e.eps_empirical});
  }
  return rows;
}

std::string layers_csv(const std::vector<LayerRow>& rows) {
  io::CsvWriter csv({"layer", "dim", "eps_theory", "eps_empirical"});
  for (const LayerRow& r : rows) {
    csv.add(static_cast<long long>(r.layer)).add(static_cast<long long>(r.dim)).add(r.eps_theory).add(r.eps_empirical);
    csv.end_row();
  }
  return csv.str();
}

std::vector<HistogramBin> histogram(std::span<const double> values, double lo, double hi,
                                    std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].left = lo + width * static_cast<double>(b);
    out[b].right = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double v : values) {
    if (!(v >= lo && v <= hi)) continue;
    auto b = static_cast<std::size_t>((v - lo) / width);
    b = std::min(b, bins - 1);
    // Floating-point edges: move to the bin whose half-open interval holds v.
    while (b > 0 && v < out[b].left) --b;
    while (b + 1 < bins && v >= out[b + 1].left) ++b;
    ++out[b].count;
  }
  return out;
}

namespace {

std::pair<double, double> value_range(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  return {*mn, *mx};
}

}  // namespace

std::string score_histogram_csv(const Vector& scores, const std::vector<int>& labels,
                                const ScorePrediction& prediction, std::size_t bins) {
  if (scores.size() != labels.size())
    throw Error(ErrorCode::DimensionMismatch, "scores and labels differ in length");
  const auto [lo, hi] = value_range(scores);
  io::CsvWriter csv({"class", "bin_left", "bin_right", "count", "density", "gaussian_pdf_at_center"});
  for (int label : {-1, 1}) {
    Vector mine;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (labels[i] == label) mine.push_back(scores[i]);
    const double mean = label < 0 ? prediction.m1 : prediction.m2;
    const double var = label < 0 ? prediction.var1 : prediction.var2;
    for (const HistogramBin& b : histogram(mine, lo, hi, bins)) {
      const double width = b.right - b.left;
      const double density =
          mine.empty() ? 0.0 : static_cast<double>(b.count) / (static_cast<double>(mine.size()) * width);
      csv.add(static_cast<long long>(label)).add(b.left).add(b.right).add(static_cast<long long>(b.count));
      csv.add(density).add(gaussian_pdf(0.5 * (b.left + b.right), mean, var));
      csv.end_row();
    }
  }
  return csv.str();
}

std::string sensitivity_histogram_csv(const std::vector<Vector>& per_class, std::size_t bins) {
  Vector all;
  for (const Vector& v : per_class) all.insert(all.end(), v.begin(), v.end());
  const auto [lo, hi] = value_range(all);
  io::CsvWriter csv({"class", "bin_left", "bin_right", "count"});
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    for (const HistogramBin& b : histogram(per_class[k], lo, hi, bins)) {
      csv.add(static_cast<long long>(k)).add(b.left).add(b.right).add(static_cast<long long>(b.count));
      csv.end_row();
    }
  }
  return csv.str();
}

AttackFixture feasible_attack_fixture(std::size_t n_per_class, std::size_t dim, std::uint64_t seed) {
  if (n_per_class == 0) throw Error(ErrorCode::InvalidArgument, "fixture needs at least one row per class");
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "fixture needs dimension >= 2");
  Rng rng(seed);
  const double noise = 0.02;
  AttackFixture fx;
  const double centers[2][2] = {{0.2, 0.1}, {0.2, -0.1}};
  for (const auto& center : centers) {
    Matrix rows(n_per_class, dim);
    for (std::size_t i = 0; i < n_per_class; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        rows(i, j) = (j < 2 ? center[j] : 0.0) + noise * rng.normal();
    fx.rows.push_back(std::move(rows));
  }
  fx.init.w.assign(dim, 0.0);
  fx.init.w[0] = 1.0;
  fx.init.method = CavMethod::Pattern;
  fx.init.train_size = 2 * n_per_class;
  fx.init.seed = seed;
  fx.signs = {1, -1};
  return fx;
}

}  // namespace cavlab
