#include "cavlab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>

#include "cavlab/cav.hpp"
#include "cavlab/datagen.hpp"
#include "cavlab/error.hpp"
#include "cavlab/experiments.hpp"
#include "cavlab/io.hpp"
#include "cavlab/mlp.hpp"
#include "cavlab/predictor.hpp"
#include "cavlab/rng.hpp"
#include "cavlab/tcav.hpp"

namespace cavlab::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

template <class T>
struct is_optional : std::false_type {};
template <class T>
struct is_optional<std::optional<T>> : std::true_type {};

// Binds CLI options to variables and lets a JSON config section fill in the
// ones that were not given on the command line.
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* option(const std::string& flag, T& var, const std::string& help) {
    CLI::Option* opt = app_->add_option(flag, var, help)->capture_default_str();
    std::string key = flag.substr(2);
    std::replace(key.begin(), key.end(), '-', '_');
    appliers_.push_back([opt, key, &var](const json& section) {
      if (opt->count() > 0 || !section.contains(key)) return;
      if constexpr (is_optional<T>::value)
        var = section.at(key).get<typename T::value_type>();
      else
        var = section.at(key).get<T>();
    });
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    CLI::Option* opt = app_->add_flag(name, var, help);
    std::string key = name.substr(2);
    std::replace(key.begin(), key.end(), '-', '_');
    appliers_.push_back([opt, key, &var](const json& section) {
      if (opt->count() == 0 && section.contains(key)) var = section.at(key).get<bool>();
    });
    return opt;
  }

  void apply(const json& section) const {
    for (const auto& f : appliers_) f(section);
  }

  CLI::App* app() const noexcept { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::function<void(const json&)>> appliers_;
};

struct Context {
  std::uint64_t seed = 0;
  fs::path out_dir;
  json section = json::object();
  json summary = json::object();

  fs::path path(const std::string& name) const { return out_dir / name; }
  void wrote(const fs::path& p) { summary["outputs"].push_back(p.generic_string()); }
};

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, message);
}

void require_file(const std::string& label, const std::string& base) {
  require(!base.empty(), "--" + label + " is required");
  const fs::path b = io::dataset_base(base);
  if (!fs::exists(b.string() + ".json"))
    throw Error(ErrorCode::Io, "--" + label + ": cannot find " + b.string() + ".json");
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCode::Io, "cannot create output directory " + dir.string());
}

LabeledActivations load_activations(const std::string& base) {
  return io::to_activations(io::read_dataset(base));
}

std::size_t dataset_classes(const io::Dataset& ds) {
  if (ds.meta.contains("num_classes")) return ds.meta.at("num_classes").get<std::size_t>();
  int max_label = -1;
  for (int l : ds.labels) {
    require(l >= 0, "class labels must be 0..K-1");
    max_label = std::max(max_label, l);
  }
  return static_cast<std::size_t>(max_label + 1);
}

Matrix columns_with_label(const io::Dataset& ds, int label) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < ds.labels.size(); ++c)
    if (ds.labels[c] == label) cols.push_back(c);
  Matrix out(ds.data.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) out.set_column(j, ds.data.column(cols[j]));
  return out;
}

void write_csv(Context& ctx, const std::string& name, const std::string& text) {
  const fs::path p = ctx.path(name);
  io::write_text_file(p, text);
  ctx.wrote(p);
}

void write_json(Context& ctx, const std::string& name, const json& doc) {
  const fs::path p = ctx.path(name);
  io::write_json_file(p, doc);
  ctx.wrote(p);
}

void write_activations(Context& ctx, const std::string& name, const io::Dataset& ds) {
  const fs::path base = ctx.path(name);
  io::write_dataset(base, ds);
  ctx.wrote(base.string() + ".cavm");
  ctx.wrote(base.string() + ".json");
}

// ---- gen-gmm ---------------------------------------------------------------

struct GenGmmArgs {
  std::size_t d = 50;
  std::size_t n = 200;
  std::size_t n1 = 0, n2 = 0;
  double shift = 1.0;
  double variance = 1.0;
  std::string name = "gmm";
};

void cmd_gen_gmm(Context& ctx, const GenGmmArgs& a) {
  GmmSpec spec;
  if (ctx.section.contains("gmm")) {
    spec = gmm_spec_from_json(ctx.section.at("gmm"));
  } else {
    const std::size_t n1 = a.n1 ? a.n1 : a.n / 2;
    const std::size_t n2 = a.n2 ? a.n2 : a.n - a.n / 2;
    require(a.d >= 1, "--d must be >= 1");
    require(n1 >= 1 && n2 >= 1, "each class needs at least one example (--n >= 2)");
    require(a.variance >= 0.0, "--variance must be >= 0");
    spec = GmmSpec::symmetric(a.d, a.shift, a.variance, n1, n2, ctx.seed);
  }
  spec.seed = ctx.seed;
  spec.validate();
  io::Dataset ds = io::to_dataset(sample_gmm(spec), ctx.seed);
  ds.meta["gmm"] = to_json(spec);
  write_activations(ctx, a.name, ds);
  ctx.summary["dim"] = spec.dim();
  ctx.summary["n1"] = spec.n1;
  ctx.summary["n2"] = spec.n2;
}

// ---- gen-ts ----------------------------------------------------------------

struct GenTsArgs {
  std::string kind = "concept";
  std::string concept_name = "frequency";
  std::string non_concept = "white_noise";
  std::size_t n = 200;
  std::optional<double> high, low;
  std::string name = "ts";
};

void cmd_gen_ts(Context& ctx, const GenTsArgs& a) {
  require(a.n >= 1, "--n must be >= 1 examples per class");
  TimeSeriesParams params;
  if (ctx.section.contains("timeseries")) params = timeseries_params_from_json(ctx.section.at("timeseries"));
  params.validate();

  io::Dataset ds;
  if (a.kind == "task") {
    require(a.n >= 2, "--n must be >= 2 for the training task");
    const ClassDataset task = build_timeseries_task(params, a.n, ctx.seed);
    ds.data = task.inputs;
    ds.labels = task.labels;
    ds.layer = "0";
    ds.meta["seed"] = ctx.seed;
    ds.meta["rng"] = std::string(kRngAlgorithm);
    ds.meta["num_classes"] = task.num_classes;
    ds.meta["kind"] = "task";
  } else if (a.kind == "null") {
    ds = io::to_dataset(build_null_dataset(params.horizon, a.n, ctx.seed), ctx.seed);
    ds.meta["kind"] = "null";
  } else if (a.kind == "concept") {
    ConceptSpec spec;
    if (ctx.section.contains("concept")) {
      spec = concept_spec_from_json(ctx.section.at("concept"));
    } else {
      spec = ConceptSpec::defaults(concept_kind_from_string(a.concept_name),
                                   non_concept_mode_from_string(a.non_concept));
    }
    if (a.high) spec.high_value = *a.high;
    if (a.low) spec.low_value = *a.low;
    spec.validate();
    ds = io::to_dataset(build_concept_dataset(spec, params, a.n, ctx.seed), ctx.seed);
    ds.meta["kind"] = "concept";
    ds.meta["concept"] = to_json(spec);
  } else {
    throw Error(ErrorCode::InvalidArgument, "--kind must be concept, null or task");
  }
  ds.meta["timeseries"] = to_json(params);
  write_activations(ctx, a.name, ds);
  ctx.summary["columns"] = ds.data.cols();
  ctx.summary["horizon"] = ds.data.rows();
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::size_t epochs = TrainConfig{}.epochs;
  double lr = TrainConfig{}.learning_rate;
  std::size_t batch = TrainConfig{}.batch_size;
  std::vector<std::size_t> hidden{64, 32, 16};
  std::string activation = "relu";
  std::string name = "model";
};

void cmd_train(Context& ctx, const TrainArgs& a) {
  require_file("data", a.data);
  const io::Dataset ds = io::read_dataset(a.data);
  ClassDataset task{ds.data, ds.labels, dataset_classes(ds)};
  task.validate();
  require(!a.hidden.empty(), "--hidden needs at least one layer width");

  std::vector<std::size_t> sizes{task.inputs.rows()};
  sizes.insert(sizes.end(), a.hidden.begin(), a.hidden.end());
  sizes.push_back(task.num_classes);
  const MlpModel init = MlpModel::initialize(sizes, activation_from_string(a.activation), derive_seed(ctx.seed, 0));

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch;
  cfg.seed = derive_seed(ctx.seed, 1);
  const TrainResult result = train(init, task, cfg);

  const fs::path base = ctx.path(a.name);
  save_model(base, result.model);
  ctx.wrote(base.string() + ".json");
  ctx.wrote(base.string() + ".cavm");

  io::CsvWriter csv({"epoch", "loss"});
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    csv.add(static_cast<long long>(e + 1)).add(result.loss_trace[e]);
    csv.end_row();
  }
  write_csv(ctx, a.name + "_loss.csv", csv.str());
  ctx.summary["train_accuracy"] = accuracy(result.model, task);
  ctx.summary["final_loss"] = result.loss_trace.empty() ? 0.0 : result.loss_trace.back();
}

// ---- extract ---------------------------------------------------------------

struct ExtractArgs {
  std::string model, data;
  std::size_t layer = 0;
  std::string name = "acts";
};

void cmd_extract(Context& ctx, const ExtractArgs& a) {
  require_file("model", a.model);
  require_file("data", a.data);
  const MlpModel model = load_model(a.model);
  const io::Dataset ds = io::read_dataset(a.data);
  if (a.layer > model.depth())
    throw Error(ErrorCode::InvalidArgument, "invalid layer " + std::to_string(a.layer));
  io::Dataset out;
  out.data = layer_activations(model, ds.data, a.layer);
  out.labels = ds.labels;
  out.layer = layer_name(a.layer);
  out.meta = ds.meta;
  out.meta["source"] = io::dataset_base(a.data).filename().string();
  write_activations(ctx, a.name, out);
  ctx.summary["dim"] = out.data.rows();
}

// ---- cav / predict / sweep / layers / hist ----------------------------------

struct CavArgs {
  std::string data;
  std::string method = "pattern";
  double lambda = 1.0;
  std::string name = "cav";
};

void cmd_cav(Context& ctx, const CavArgs& a) {
  require_file("data", a.data);
  const LabeledActivations acts = load_activations(a.data);
  RidgeConfig rcfg;
  rcfg.lambda = a.lambda;
  Cav cav = fit_cav(acts, cav_method_from_string(a.method), rcfg);
  cav.seed = ctx.seed;
  const fs::path base = ctx.path(a.name);
  save_cav(base, cav);
  ctx.wrote(base.string() + ".json");
  ctx.wrote(base.string() + ".cavm");
  ctx.summary["eta"] = cav.eta;
  ctx.summary["norm"] = norm2(cav.w);
  ctx.summary["degenerate"] = cav.degenerate;
  if (!cav.degenerate) ctx.summary["train_error"] = empirical_error(cav, acts);
}

struct PredictArgs {
  std::string data, test;
  std::string method = "pattern";
  double lambda = 1.0;
  std::size_t reps = 200;
  std::string name = "prediction.json";
};

void cmd_predict(Context& ctx, const PredictArgs& a) {
  require_file("data", a.data);
  const LabeledActivations train = load_activations(a.data);
  const CavMethod method = cav_method_from_string(a.method);
  const TheoryResult theory = plug_in_theory(train, method, a.lambda, a.reps, ctx.seed);
  json doc = to_json(theory.prediction);
  doc["method"] = std::string(to_string(method));
  doc["lambda"] = method == CavMethod::Ridge ? a.lambda : 0.0;
  doc["distribution"] = std::string(to_string(theory.wdist.source));
  if (!a.test.empty()) {
    require_file("test", a.test);
    RidgeConfig rcfg;
    rcfg.lambda = a.lambda;
    const Cav cav = fit_cav(train, method, rcfg);
    doc["eps_empirical"] = empirical_error(cav, load_activations(a.test));
  }
  write_json(ctx, a.name, doc);
  ctx.summary["epsilon"] = theory.prediction.epsilon;
}

struct SweepArgs {
  std::string data;
  std::vector<double> lambdas{1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3, 1e4};
  std::vector<std::string> methods{"ridge", "pattern", "fast"};
  double train_fraction = 0.5;
  std::size_t reps = 200;
  std::string name = "sweep.csv";
};

void cmd_sweep(Context& ctx, const SweepArgs& a) {
  require_file("data", a.data);
  SweepConfig cfg;
  cfg.lambdas = a.lambdas;
  cfg.methods.clear();
  for (const std::string& m : a.methods) cfg.methods.push_back(cav_method_from_string(m));
  cfg.train_fraction = a.train_fraction;
  cfg.reps = a.reps;
  cfg.seed = ctx.seed;
  const auto rows = lambda_sweep(load_activations(a.data), cfg);
  write_csv(ctx, a.name, sweep_csv(rows));
  ctx.summary["rows"] = rows.size();
}

struct LayersArgs {
  std::string model, data;
  std::vector<std::size_t> layers;
  double lambda = 1.0;
  double train_fraction = 0.5;
  std::size_t reps = 200;
  std::string name = "layers.csv";
};

void cmd_layers(Context& ctx, const LayersArgs& a) {
  require_file("model", a.model);
  require_file("data", a.data);
  const MlpModel model = load_model(a.model);
  LayerConfig cfg;
  cfg.layers = a.layers;
  if (cfg.layers.empty())
    for (std::size_t l = 0; l < model.depth(); ++l) cfg.layers.push_back(l);
  cfg.lambda = a.lambda;
  cfg.train_fraction = a.train_fraction;
  cfg.reps = a.reps;
  cfg.seed = ctx.seed;
  const auto rows = layer_sweep(model, load_activations(a.data), cfg);
  write_csv(ctx, a.name, layers_csv(rows));
  ctx.summary["rows"] = rows.size();
}

struct HistArgs {
  std::string data;
  std::string method = "pattern";
  double lambda = 1.0;
  std::size_t bins = 30;
  double train_fraction = 0.5;
  std::size_t reps = 200;
  std::string name = "hist";
};

void cmd_hist(Context& ctx, const HistArgs& a) {
  require_file("data", a.data);
  require(a.bins >= 1, "--bins must be >= 1");
  const Split split = stratified_split(load_activations(a.data), a.train_fraction, derive_seed(ctx.seed, 0));
  const MethodEval e = evaluate_method(split.train, split.test, cav_method_from_string(a.method), a.lambda,
                                       a.reps, derive_seed(ctx.seed, 1));
  const Vector scores = cav_scores(e.cav, split.test.data);
  write_csv(ctx, a.name + ".csv", score_histogram_csv(scores, split.test.labels, e.prediction, a.bins));
  json doc = to_json(e.prediction);
  doc["method"] = std::string(to_string(e.method));
  doc["eps_empirical"] = e.eps_empirical;
  doc["test_size"] = split.test.count();
  write_json(ctx, a.name + ".json", doc);
  ctx.summary["test_size"] = split.test.count();
}

// ---- tcav / attack ---------------------------------------------------------

struct TcavArgs {
  std::string model, data, cav;
  std::size_t class_k = 0;
  std::size_t layer = 1;
  std::optional<int> label;
  std::size_t bins = 20;
  std::string name = "tcav";
};

void cmd_tcav(Context& ctx, const TcavArgs& a) {
  require_file("model", a.model);
  require_file("data", a.data);
  require_file("cav", a.cav);
  const MlpModel model = load_model(a.model);
  require(a.class_k < model.num_classes(), "--class is out of range");
  const io::Dataset ds = io::read_dataset(a.data);
  const Matrix inputs = columns_with_label(ds, a.label.value_or(static_cast<int>(a.class_k)));
  const Cav cav = load_cav(a.cav);
  const TcavReport report = tcav_q(model, inputs, cav, a.class_k, a.layer);

  io::CsvWriter csv({"index", "sensitivity"});
  for (std::size_t i = 0; i < report.sensitivities.size(); ++i) {
    csv.add(static_cast<long long>(i)).add(report.sensitivities[i]);
    csv.end_row();
  }
  write_csv(ctx, a.name + "_sensitivities.csv", csv.str());
  write_csv(ctx, a.name + "_hist.csv", sensitivity_histogram_csv({report.sensitivities}, a.bins));
  json doc{{"tcav_q", report.tcav_q},
           {"class", a.class_k},
           {"layer", a.layer},
           {"count", report.sensitivities.size()},
           {"cav_method", std::string(to_string(cav.method))}};
  write_json(ctx, a.name + ".json", doc);
  ctx.summary["tcav_q"] = report.tcav_q;
}

struct AttackArgs {
  bool fixture = false;
  std::size_t n = 100;
  std::size_t dim = 2;
  std::string model, data, cav;
  std::size_t layer = 1;
  std::vector<int> signs;
  double beta = AttackConfig{}.beta;
  double step_size = AttackConfig{}.step_size;
  std::size_t max_iters = AttackConfig{}.max_iters;
  double prox_weight = AttackConfig{}.prox_weight;
  double stop_tol = AttackConfig{}.stop_tol;
  std::string mode = "gradient";
  std::size_t bins = 20;
  std::string name = "attack";
};

void cmd_attack(Context& ctx, const AttackArgs& a) {
  std::vector<Matrix> rows;
  Cav init;
  std::vector<int> signs = a.signs;
  AttackMode mode = attack_mode_from_string(a.mode);
  if (a.fixture) {
    AttackFixture fx = feasible_attack_fixture(a.n, a.dim, ctx.seed);
    rows = std::move(fx.rows);
    init = fx.init;
    if (signs.empty()) signs = fx.signs;
  } else {
    require_file("model", a.model);
    require_file("data", a.data);
    require_file("cav", a.cav);
    const MlpModel model = load_model(a.model);
    const io::Dataset ds = io::read_dataset(a.data);
    init = load_cav(a.cav);
    for (std::size_t k = 0; k < model.num_classes(); ++k) {
      const Matrix inputs = columns_with_label(ds, static_cast<int>(k));
      require(inputs.cols() > 0, "no inputs with label " + std::to_string(k));
      rows.push_back(mode == AttackMode::GradientRows ? gradient_rows(model, inputs, k, a.layer)
                                                      : activation_rows(model, inputs, a.layer));
    }
  }
  AttackConfig cfg;
  cfg.signs = signs;
  cfg.beta = a.beta;
  cfg.step_size = a.step_size;
  cfg.max_iters = a.max_iters;
  cfg.prox_weight = a.prox_weight;
  cfg.stop_tol = a.stop_tol;
  cfg.seed = ctx.seed;
  cfg.mode = mode;
  const AttackTrace trace = attack(rows, init, cfg);

  const std::size_t K = rows.size();
  std::vector<std::string> header{"iter", "loss", "step"};
  for (std::size_t k = 0; k < K; ++k) header.push_back("tcav_q_class_" + std::to_string(k));
  for (std::size_t k = 0; k < K; ++k) header.push_back("class_loss_" + std::to_string(k));
  io::CsvWriter csv(header);
  for (const AttackIteration& it : trace.iterations) {
    csv.add(static_cast<long long>(it.iter)).add(it.loss).add(it.step);
    for (double q : it.tcav_q) csv.add(q);
    for (double l : it.class_loss) csv.add(l);
    csv.end_row();
  }
  write_csv(ctx, a.name + "_trace.csv", csv.str());

  auto scores = [&](const Vector& w) {
    std::vector<Vector> out;
    for (const Matrix& r : rows) out.push_back(matvec(r, w));
    return out;
  };
  write_csv(ctx, a.name + "_hist_initial.csv", sensitivity_histogram_csv(scores(init.w), a.bins));
  write_csv(ctx, a.name + "_hist_final.csv", sensitivity_histogram_csv(scores(trace.final_cav.w), a.bins));

  const fs::path base = ctx.path(a.name + "_cav");
  Cav final_cav = trace.final_cav;
  final_cav.seed = ctx.seed;
  save_cav(base, final_cav);
  ctx.wrote(base.string() + ".json");
  ctx.wrote(base.string() + ".cavm");

  const AttackIteration& last = trace.iterations.back();
  json doc{{"updates", trace.updates},
           {"final_loss", last.loss},
           {"initial_tcav_q", trace.iterations.front().tcav_q},
           {"final_tcav_q", last.tcav_q},
           {"signs", signs},
           {"mode", std::string(to_string(mode))},
           {"final_w", trace.final_cav.w},
           {"final_unit", trace.final_unit}};
  write_json(ctx, a.name + ".json", doc);
  ctx.summary["final_tcav_q"] = last.tcav_q;
}

int report_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  json doc{{"error", kind}, {"message", message}, {"exit_code", code}};
  err << doc.dump() << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cavlab: concept activation vectors, error prediction and TCAV attacks", "cavlab"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string config_path;
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Seed for every random draw (required here or in --config)");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--config", config_path, "JSON config file");

  std::vector<Binder> binders;
  binders.reserve(16);
  auto sub = [&](const std::string& name, const std::string& help) -> Binder& {
    binders.emplace_back(app.add_subcommand(name, help));
    return binders.back();
  };

  GenGmmArgs gg;
  {
    Binder& b = sub("gen-gmm", "Sample a two-class Gaussian mixture dataset");
    b.option("--d", gg.d, "Dimension");
    b.option("--n", gg.n, "Total examples, split evenly between the classes");
    b.option("--n1", gg.n1, "Examples of class -1 (overrides --n)");
    b.option("--n2", gg.n2, "Examples of class +1 (overrides --n)");
    b.option("--shift", gg.shift, "mu2 = -mu1 = shift * e1");
    b.option("--variance", gg.variance, "Sigma = variance * I");
    b.option("--name", gg.name, "Output base name");
  }
  GenTsArgs gt;
  {
    Binder& b = sub("gen-ts", "Generate time-series concept, null or training-task data");
    b.option("--kind", gt.kind, "concept | null | task");
    b.option("--concept", gt.concept_name, "amplitude | frequency | trend");
    b.option("--non-concept", gt.non_concept, "white_noise | low_value");
    b.option("--n", gt.n, "Examples per class");
    b.option("--high", gt.high, "Concept parameter value");
    b.option("--low", gt.low, "Non-concept parameter value (low_value mode)");
    b.option("--name", gt.name, "Output base name");
  }
  TrainArgs tr;
  {
    Binder& b = sub("train", "Train the MLP classifier on a task dataset");
    b.option("--data", tr.data, "Task dataset (labels 0..K-1)");
    b.option("--epochs", tr.epochs, "Epochs");
    b.option("--lr", tr.lr, "Learning rate");
    b.option("--batch", tr.batch, "Mini-batch size");
    b.option("--hidden", tr.hidden, "Hidden layer widths")->delimiter(',');
    b.option("--activation", tr.activation, "relu | tanh | identity");
    b.option("--name", tr.name, "Output base name");
  }
  ExtractArgs ex;
  {
    Binder& b = sub("extract", "Write layer-l activations of a dataset");
    b.option("--model", ex.model, "Model base path");
    b.option("--data", ex.data, "Input dataset");
    b.option("--layer", ex.layer, "Layer index (0 = input)");
    b.option("--name", ex.name, "Output base name");
  }
  CavArgs cv;
  {
    Binder& b = sub("cav", "Fit a CAV on labelled activations");
    b.option("--data", cv.data, "Activations with labels -1/+1");
    b.option("--method", cv.method, "ridge | pattern | fast");
    b.option("--lambda", cv.lambda, "Ridge regularization");
    b.option("--name", cv.name, "Output base name");
  }
  PredictArgs pr;
  {
    Binder& b = sub("predict", "Predict score distributions and error from training statistics");
    b.option("--data", pr.data, "Training activations");
    b.option("--test", pr.test, "Optional held-out activations for the empirical error");
    b.option("--method", pr.method, "ridge | pattern | fast");
    b.option("--lambda", pr.lambda, "Ridge regularization");
    b.option("--reps", pr.reps, "Bootstrap repetitions when no closed form exists");
    b.option("--name", pr.name, "Output file name");
  }
  SweepArgs sw;
  {
    Binder& b = sub("sweep", "Theory vs empirical error over a lambda grid");
    b.option("--data", sw.data, "Activations with labels -1/+1");
    b.option("--lambdas", sw.lambdas, "Ridge lambda grid")->delimiter(',');
    b.option("--methods", sw.methods, "CAV methods")->delimiter(',');
    b.option("--train-fraction", sw.train_fraction, "Training share of each class");
    b.option("--reps", sw.reps, "Bootstrap repetitions for ridge");
    b.option("--name", sw.name, "Output file name");
  }
  LayersArgs ly;
  {
    Binder& b = sub("layers", "Ridge CAV theory vs empirical error per layer");
    b.option("--model", ly.model, "Model base path");
    b.option("--data", ly.data, "Raw concept dataset (labels -1/+1)");
    b.option("--layers", ly.layers, "Layer indices (default: 0 .. depth-1)")->delimiter(',');
    b.option("--lambda", ly.lambda, "Ridge regularization");
    b.option("--train-fraction", ly.train_fraction, "Training share of each class");
    b.option("--reps", ly.reps, "Bootstrap repetitions");
    b.option("--name", ly.name, "Output file name");
  }
  HistArgs hs;
  {
    Binder& b = sub("hist", "Test-score histograms with the predicted Gaussians");
    b.option("--data", hs.data, "Activations with labels -1/+1");
    b.option("--method", hs.method, "ridge | pattern | fast");
    b.option("--lambda", hs.lambda, "Ridge regularization");
    b.option("--bins", hs.bins, "Bins per class");
    b.option("--train-fraction", hs.train_fraction, "Training share of each class");
    b.option("--reps", hs.reps, "Bootstrap repetitions for ridge");
    b.option("--name", hs.name, "Output base name");
  }
  TcavArgs tc;
  {
    Binder& b = sub("tcav", "Sensitivities and TCAV_Q of class-k inputs");
    b.option("--model", tc.model, "Model base path");
    b.option("--data", tc.data, "Input dataset");
    b.option("--cav", tc.cav, "CAV base path");
    b.option("--class", tc.class_k, "Logit index k");
    b.option("--layer", tc.layer, "Layer of the CAV");
    b.option("--label", tc.label, "Dataset label of the inputs to use (default: k)");
    b.option("--bins", tc.bins, "Histogram bins");
    b.option("--name", tc.name, "Output base name");
  }
  AttackArgs at;
  {
    Binder& b = sub("attack", "Move a CAV so that TCAV scores avoid chosen signs");
    b.flag("--fixture", at.fixture, "Use the built-in separable fixture");
    b.option("--n", at.n, "Fixture rows per class");
    b.option("--dim", at.dim, "Fixture dimension");
    b.option("--model", at.model, "Model base path");
    b.option("--data", at.data, "Task dataset (labels 0..K-1)");
    b.option("--cav", at.cav, "Initial CAV base path");
    b.option("--layer", at.layer, "Layer of the CAV");
    b.option("--signs", at.signs, "Sign per class (+1 pushes scores negative)")->delimiter(',');
    b.option("--beta", at.beta, "Sigmoid temperature");
    b.option("--step-size", at.step_size, "Initial step length");
    b.option("--max-iters", at.max_iters, "Iteration cap");
    b.option("--prox-weight", at.prox_weight, "Pull toward the initial CAV");
    b.option("--stop-tol", at.stop_tol, "Stop when the loss changes by less than this");
    b.option("--mode", at.mode, "gradient | activation");
    b.option("--bins", at.bins, "Histogram bins");
    b.option("--name", at.name, "Output base name");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report_error(err, "usage", e.what(), kExitUsage);
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  try {
    Context ctx;
    json config = json::object();
    if (!config_path.empty()) {
      config = io::read_json_file(config_path);
      if (!config.is_object()) throw Error(ErrorCode::Format, "config must be a JSON object");
    }
    if (seed_opt->count() > 0) {
      ctx.seed = seed;
    } else if (config.contains("seed")) {
      ctx.seed = config.at("seed").get<std::uint64_t>();
    } else {
      throw Error(ErrorCode::InvalidArgument, "a seed is required (--seed or \"seed\" in --config)");
    }
    if (config.contains(command)) ctx.section = config.at(command);
    for (const Binder& b : binders)
      if (b.app() == chosen) b.apply(ctx.section);
    ctx.out_dir = out_dir;
    ensure_out_dir(ctx.out_dir);
    ctx.summary["command"] = command;
    ctx.summary["seed"] = ctx.seed;
    ctx.summary["outputs"] = json::array();

    if (command == "gen-gmm") cmd_gen_gmm(ctx, gg);
    else if (command == "gen-ts") cmd_gen_ts(ctx, gt);
    else if (command == "train") cmd_train(ctx, tr);
    else if (command == "extract") cmd_extract(ctx, ex);
    else if (command == "cav") cmd_cav(ctx, cv);
    else if (command == "predict") cmd_predict(ctx, pr);
    else if (command == "sweep") cmd_sweep(ctx, sw);
    else if (command == "layers") cmd_layers(ctx, ly);
    else if (command == "hist") cmd_hist(ctx, hs);
    else if (command == "tcav") cmd_tcav(ctx, tc);
    else if (command == "attack") cmd_attack(ctx, at);

    out << ctx.summary.dump(2) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    const int code = is_numerical(e.code()) ? kExitNumerical : kExitUsage;
    return report_error(err, std::string(to_string(e.code())), e.what(), code);
  } catch (const json::exception& e) {
    return report_error(err, "config", e.what(), kExitUsage);
  } catch (const std::exception& e) {
    return report_error(err, "internal", e.what(), kExitUsage);
  }
}

}  // namespace cavlab::cli
