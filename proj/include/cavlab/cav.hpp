#pragma once
// Concept Activation Vectors: ridge, Pattern and Fast CAVs from labeled
// activations, their closed-form distributions, and Monte-Carlo estimates.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "cavlab/datagen.hpp"
#include "cavlab/linalg.hpp"

namespace cavlab {

enum class CavMethod { Ridge, Pattern, Fast, Adversarial };

std::string_view to_string(CavMethod m) noexcept;
CavMethod cav_method_from_string(std::string_view name);

/// Linear concept classifier: predict the concept class iff w.x / sqrt(n) > eta,
/// with n the training-set size. w points toward the concept class (+1).
struct Cav {
  Vector w;
  double eta = 0.0;
  CavMethod method = CavMethod::Pattern;
  std::string layer_id;
  double lambda = 0.0;  // ridge only
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  /// w == 0 (e.g. identical class means); downstream scoring rejects it.
  bool degenerate = false;
};

struct RidgeConfig {
  double lambda = 1.0;
  void validate() const;
};

/// Class +1 mean minus class -1 mean.
Vector pattern_weights(const LabeledActivations& acts);
/// Class +1 mean minus the pooled mean of all examples.
Vector fast_weights(const LabeledActivations& acts);
/// ((1/n) X X^T + lambda I)^{-1} X y / sqrt(n), solved by Cholesky.
Vector ridge_weights(const LabeledActivations& acts, const RidgeConfig& cfg);
Vector cav_weights(const LabeledActivations& acts, CavMethod method, const RidgeConfig& cfg = {});

/// Weights plus a threshold fitted on `acts` (see fit_threshold).
Cav pattern_cav(const LabeledActivations& acts);
Cav fast_cav(const LabeledActivations& acts);
Cav ridge_cav(const LabeledActivations& acts, const RidgeConfig& cfg);
Cav fit_cav(const LabeledActivations& acts, CavMethod method, const RidgeConfig& cfg = {});

enum class DistributionSource { AnalyticPattern, AnalyticFast, MonteCarlo };
std::string_view to_string(DistributionSource s) noexcept;

/// Mean and covariance of a CAV viewed as a random vector.
struct CavDistribution {
  Vector mean;
  Matrix cov;
  DistributionSource source = DistributionSource::MonteCarlo;
};

/// Pattern: mean mu2 - mu1, cov S1/n1 + S2/n2. Fast (balanced classes only):
/// half the mean and a quarter of the covariance.
CavDistribution analytic_distribution(CavMethod method, const ClassStats& class1,
                                      const ClassStats& class2);

/// Produces one training set per repetition seed.
using DatasetSource = std::function<LabeledActivations(std::uint64_t)>;

/// Fresh draws from the mixture (the spec's own seed is replaced).
DatasetSource gmm_source(GmmSpec spec);
/// Stratified bootstrap: each class resampled with replacement at its own size.
DatasetSource bootstrap_source(LabeledActivations data);

/// Fits `reps` CAVs on sets drawn with seeds seed + r (r = 0..reps-1) and returns
/// their sample mean and unbiased sample covariance. Needs reps >= 2.
CavDistribution monte_carlo_distribution(const DatasetSource& source, CavMethod method,
                                         const RidgeConfig& cfg, std::size_t reps,
                                         std::uint64_t seed);

/// <base>.json (method, lambda, eta, layer, seed, ...) and <base>.cavm (d x 1).
void save_cav(const std::filesystem::path& base, const Cav& cav);
Cav load_cav(const std::filesystem::path& base);

}  // namespace cavlab
