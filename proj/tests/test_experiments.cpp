#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "cavlab/datagen.hpp"
#include "cavlab/error.hpp"
#include "cavlab/experiments.hpp"
#include "test_util.hpp"

using namespace cavlab;

namespace {

std::size_t sum_counts(const std::string& csv, std::size_t column) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::size_t total = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    for (std::size_t i = 0; i <= column; ++i) std::getline(cells, cell, ',');
    total += std::stoull(cell);
  }
  return total;
}

}  // namespace

TEST_CASE("stratified split") {
  const LabeledActivations data = sample_gmm(GmmSpec::symmetric(3, 1.0, 1.0, 10, 6, 1));
  const Split s = stratified_split(data, 0.5, 7);
  CHECK(s.train.count_of(-1) == 5);
  CHECK(s.train.count_of(1) == 3);
  CHECK(s.test.count_of(-1) == 5);
  CHECK(s.test.count_of(1) == 3);
  CHECK(stratified_split(data, 0.5, 7).train.data == s.train.data);
  CHECK_FALSE(stratified_split(data, 0.5, 8).train.data == s.train.data);

  // Both sides keep two examples per label even at extreme fractions.
  const Split tiny = stratified_split(data, 0.01, 7);
  CHECK(tiny.train.count_of(1) == 2);
  CHECK(stratified_split(data, 0.99, 7).test.count_of(1) == 2);

  CHECK_THROWS_AS(stratified_split(data, 0.0, 1), Error);
  const LabeledActivations small = sample_gmm(GmmSpec::symmetric(3, 1.0, 1.0, 3, 6, 1));
  CHECK_THROWS_AS(stratified_split(small, 0.5, 1), Error);
}

TEST_CASE("lambda sweep") {
  const LabeledActivations data = sample_gmm(GmmSpec::symmetric(10, 0.3, 1.0, 100, 100, 2));
  SweepConfig cfg;
  cfg.lambdas = {1e4, 1e-2, 1.0};
  cfg.reps = 20;
  cfg.seed = 5;
  const std::vector<SweepRow> rows = lambda_sweep(data, cfg);
  REQUIRE(rows.size() == 9);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].lambda >= rows[i - 1].lambda);
  for (std::size_t i = 0; i < rows.size(); i += 3) {
    CHECK(rows[i].method == CavMethod::Ridge);
    CHECK(rows[i + 1].eps_empirical == rows[i + 2].eps_empirical);  // pattern vs fast
    CHECK(rows[i + 1].eps_empirical == rows[1].eps_empirical);      // computed once
  }
  // The largest lambda sits far above the spectrum of XX^T/n.
  CHECK(std::abs(rows[6].eps_empirical - rows[7].eps_empirical) <= 1e-3);
  for (const SweepRow& r : rows) {
    CHECK(r.eps_theory >= 0.0);
    CHECK(r.eps_theory <= 0.5);
  }

  const std::string csv = sweep_csv(rows);
  CHECK(csv.rfind("lambda,method,eps_theory,eps_empirical\n", 0) == 0);
  CHECK(lambda_sweep(data, cfg).size() == 9);
  CHECK(sweep_csv(lambda_sweep(data, cfg)) == csv);

  SweepConfig bad = cfg;
  bad.lambdas = {0.0};
  CHECK_THROWS_AS(lambda_sweep(data, bad), Error);
}

TEST_CASE("method evaluation uses the analytic law for pattern and fast") {
  const LabeledActivations data = sample_gmm(GmmSpec::symmetric(5, 1.0, 1.0, 60, 60, 3));
  const Split s = stratified_split(data, 0.5, 1);
  CHECK(evaluate_method(s.train, s.test, CavMethod::Pattern, 0, 10, 1).source == DistributionSource::AnalyticPattern);
  CHECK(evaluate_method(s.train, s.test, CavMethod::Fast, 0, 10, 1).source == DistributionSource::AnalyticFast);
  const MethodEval r = evaluate_method(s.train, s.test, CavMethod::Ridge, 1.0, 10, 1);
  CHECK(r.source == DistributionSource::MonteCarlo);
  CHECK(r.lambda == 1.0);
  CHECK(r.cav.lambda == 1.0);
  CHECK_THROWS_AS(evaluate_method(s.train, s.test, CavMethod::Adversarial, 0, 10, 1), Error);
}

TEST_CASE("layer sweep") {
  const std::vector<std::size_t> sizes{8, 6, 4, 2};
  const MlpModel model = MlpModel::initialize(sizes, Activation::Relu, 4);
  const LabeledActivations inputs = sample_gmm(GmmSpec::symmetric(8, 1.0, 1.0, 40, 40, 5));
  LayerConfig cfg;
  cfg.layers = {2, 0, 1};
  cfg.reps = 10;
  cfg.seed = 9;
  const std::vector<LayerRow> rows = layer_sweep(model, inputs, cfg);
  REQUIRE(rows.size() == 3);
  std::set<std::size_t> seen;
  for (const LayerRow& r : rows) seen.insert(r.layer);
  CHECK(seen == std::set<std::size_t>{0, 1, 2});
  CHECK(rows[0].layer == 0);
  CHECK(rows[0].dim == 8);
  CHECK(rows[1].dim == 6);

  // Layer 0 is the raw-input pipeline.
  const Split s = stratified_split(inputs, cfg.train_fraction, derive_seed(cfg.seed, 0));
  const MethodEval raw = evaluate_method(s.train, s.test, CavMethod::Ridge, cfg.lambda, cfg.reps, derive_seed(cfg.seed, 1));
  CHECK(rows[0].eps_empirical == raw.eps_empirical);
  CHECK(rows[0].eps_theory == raw.eps_theory);

  LayerConfig dup = cfg;
  dup.layers = {1, 1};
  CHECK_THROWS_AS(layer_sweep(model, inputs, dup), Error);
  LayerConfig deep = cfg;
  deep.layers = {5};
  CHECK_THROWS_AS(layer_sweep(model, inputs, deep), Error);
  CHECK(layers_csv(rows).rfind("layer,dim,eps_theory,eps_empirical\n", 0) == 0);
}

TEST_CASE("untrained model on a null concept is at chance") {
  const std::vector<std::size_t> sizes{64, 32, 16, 4};
  const MlpModel model = MlpModel::initialize(sizes, Activation::Relu, 6);
  const LabeledActivations null_data = build_null_dataset(64, 500, 7);
  LayerConfig cfg;
  cfg.layers = {1, 2};
  cfg.reps = 10;
  cfg.seed = 3;
  const double n_test = 500;
  for (const LayerRow& r : layer_sweep(model, null_data, cfg))
    CHECK(std::abs(r.eps_empirical - 0.5) <= 3 * std::sqrt(0.25 / n_test));
}

TEST_CASE("histograms") {
  const Vector v{0, 0.1, 0.5, 0.99, 1.0};
  const auto bins = histogram(v, 0, 1, 2);
  REQUIRE(bins.size() == 2);
  CHECK(bins[0].count == 2);
  CHECK(bins[1].count == 3);  // last bin closed on the right
  CHECK(bins[1].right == 1.0);
  CHECK(histogram(Vector{2, 2}, 2, 2, 4).size() == 4);
  CHECK_THROWS_AS(histogram(v, 0, 1, 0), Error);

  const LabeledActivations data = sample_gmm(GmmSpec::symmetric(4, 1.0, 1.0, 50, 50, 8));
  const Split s = stratified_split(data, 0.5, 2);
  const MethodEval e = evaluate_method(s.train, s.test, CavMethod::Pattern, 0, 10, 2);
  const std::string csv = score_histogram_csv(cav_scores(e.cav, s.test.data), s.test.labels, e.prediction, 15);
  CHECK(csv.rfind("class,bin_left,bin_right,count,density,gaussian_pdf_at_center\n", 0) == 0);
  CHECK(sum_counts(csv, 3) == s.test.count());

  const std::string sens = sensitivity_histogram_csv({Vector{1, 2, 3}, Vector{-1, 4}}, 5);
  CHECK(sum_counts(sens, 3) == 5);
}

TEST_CASE("feasible attack fixture") {
  const AttackFixture fx = feasible_attack_fixture(10, 3, 1);
  REQUIRE(fx.rows.size() == 2);
  CHECK(fx.rows[0].rows() == 10);
  CHECK(fx.rows[0].cols() == 3);
  CHECK(fx.init.w == Vector{1, 0, 0});
  CHECK(fx.signs == std::vector<int>{1, -1});
  CHECK_THROWS_AS(feasible_attack_fixture(10, 1, 1), Error);
}
