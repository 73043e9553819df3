#pragma once
// Composite experiments shared by the CLI and the acceptance suite: theory vs
// empirical error for one CAV method, lambda and layer sweeps, histograms, and
// the feasible attack fixture.

#include <cstdint>
#include <string>
#include <vector>

#include "cavlab/cav.hpp"
#include "cavlab/io.hpp"
#include "cavlab/linalg.hpp"
#include "cavlab/mlp.hpp"
#include "cavlab/predictor.hpp"

namespace cavlab {

struct Split {
  LabeledActivations train;
  LabeledActivations test;
};

/// Seeded per-class shuffle; the first round(train_fraction * n_label) columns
/// of each label go to train. Both sides keep at least two columns per label.
Split stratified_split(const LabeledActivations& data, double train_fraction, std::uint64_t seed);

struct MethodEval {
  CavMethod method = CavMethod::Pattern;
  double lambda = 0.0;
  double eps_theory = 0.0;
  double eps_empirical = 0.0;
  ScorePrediction prediction;
  DistributionSource source = DistributionSource::MonteCarlo;
  Cav cav;
};

struct TheoryResult {
  ScorePrediction prediction;
  CavDistribution wdist;
};

/// Predicted score law and error for a CAV trained on `train`, with the training
/// sample statistics plugged in for the class statistics.
TheoryResult plug_in_theory(const LabeledActivations& train, CavMethod method, double lambda,
                            std::size_t reps, std::uint64_t seed);

/// Plug-in theory from the training split: class statistics are the training
/// sample statistics; the CAV distribution is analytic for pattern (and fast
/// when balanced) and bootstrap Monte Carlo otherwise. The empirical error is
/// the CAV fitted on `train` and evaluated on `test`.
MethodEval evaluate_method(const LabeledActivations& train, const LabeledActivations& test,
                           CavMethod method, double lambda, std::size_t reps, std::uint64_t seed);

struct SweepRow {
  double lambda = 0.0;
  CavMethod method = CavMethod::Ridge;
  double eps_theory = 0.0;
  double eps_empirical = 0.0;
};

struct SweepConfig {
  std::vector<double> lambdas;
  std::vector<CavMethod> methods{CavMethod::Ridge, CavMethod::Pattern, CavMethod::Fast};
  double train_fraction = 0.5;
  std::size_t reps = 200;
  std::uint64_t seed = 0;
};

/// One row per (lambda, method), lambdas ascending. Pattern and fast are
/// computed once and repeated for every lambda.
std::vector<SweepRow> lambda_sweep(const LabeledActivations& data, const SweepConfig& cfg);
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct LayerRow {
  std::size_t layer = 0;
  std::size_t dim = 0;
  double eps_theory = 0.0;
  double eps_empirical = 0.0;
};

struct LayerConfig {
  std::vector<std::size_t> layers;
  double lambda = 1.0;
  double train_fraction = 0.5;
  std::size_t reps = 200;
  std::uint64_t seed = 0;
};

/// Activations of raw inputs at layer l, labelled like the inputs.
LabeledActivations extract_layer(const MlpModel& model, const LabeledActivations& inputs, std::size_t l);

/// Ridge CAV per layer; every layer uses the same split of the inputs.
std::vector<LayerRow> layer_sweep(const MlpModel& model, const LabeledActivations& inputs,
                                  const LayerConfig& cfg);
std::string layers_csv(const std::vector<LayerRow>& rows);

struct HistogramBin {
  double left = 0.0, right = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [lo, hi]; the right edge of the last bin is closed.
std::vector<HistogramBin> histogram(std::span<const double> values, double lo, double hi,
                                    std::size_t bins);

/// Test-score histogram per class on a shared range, with the predicted
/// Gaussian density at each bin center.
/// Columns: class,bin_left,bin_right,count,density,gaussian_pdf_at_center.
std::string score_histogram_csv(const Vector& scores, const std::vector<int>& labels,
                                const ScorePrediction& prediction, std::size_t bins);

/// Sensitivity histogram per class. Columns: class,bin_left,bin_right,count.
std::string sensitivity_histogram_csv(const std::vector<Vector>& per_class, std::size_t bins);

struct AttackFixture {
  std::vector<Matrix> rows;  // per-class gradient rows
  Cav init;
  std::vector<int> signs;
};

/// Two separable clouds of gradient rows. Class 0 sits near (0.2, 0.1), class
/// 1 near (0.2, -0.1), extra dimensions are pure noise. The initial CAV e1 gives
/// both classes TCAV_Q = 1; signs (+1, -1) ask to flip class 0 only, which
/// w = -e2 achieves.
AttackFixture feasible_attack_fixture(std::size_t n_per_class, std::size_t dim, std::uint64_t seed);

}  // namespace cavlab
