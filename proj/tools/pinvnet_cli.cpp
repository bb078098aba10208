// pinvnet command-line driver: train, cv, synth, variance, selfcheck.

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pinvnet/pinvnet.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace pinvnet;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitMissingFile = 2;

/// One subcommand plus everything needed to echo and reload its settings.
struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::vector<std::pair<std::string, std::function<json()>>> echo;
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool reproducible = false;
  std::function<int(Command&)> run;

  template <class T>
  CLI::Option* option(const std::string& name, T& var, const std::string& help) {
    echo.emplace_back(name, [&var] { return json(var); });
    return app->add_option("--" + name, var, help);
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    echo.emplace_back(name, [&var] { return json(var); });
    return app->add_flag("--" + name, var, help);
  }

  void common() {
    app->add_option("--config", config, "JSON file of option values (or a manifest.json); flags win");
    option("out", out, "Output directory");
    option("seed", seed, "Master seed");
    flag("reproducible", reproducible, "Leave wall-clock timings out of every output file");
  }

  json config_echo() const {
    json j = json::object();
    for (const auto& [key, get] : echo) j[key] = get();
    return j;
  }
};

std::string json_to_arg(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

/// Fills every option not given on the command line from the config file.
void merge_config(Command& cmd) {
  if (cmd.config.empty()) return;
  std::ifstream in(cmd.config);
  if (!in) throw FileNotFound(cmd.config);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(cmd.config + ": " + e.what());
  }
  if (doc.contains("config_echo")) {
    if (doc.contains("command") && doc["command"] != cmd.name) {
      throw InvalidConfiguration("manifest " + cmd.config + " belongs to '" +
                                 doc["command"].get<std::string>() + "', not '" + cmd.name + "'");
    }
    doc = doc["config_echo"];
  }
  if (!doc.is_object()) throw InvalidConfiguration(cmd.config + ": expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    CLI::Option* opt = cmd.app->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw InvalidConfiguration(cmd.config + ": unknown option '" + key + "' for " + cmd.name);
    }
    if (opt->count() > 0) continue;
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(json_to_arg(v));
    } else if (!value.is_null()) {
      opt->add_result(json_to_arg(value));
    }
    opt->run_callback();
  }
}

class Timer {
 public:
  void phase(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    if (!current_.empty()) times_[current_] += std::chrono::duration<double>(now - start_).count();
    current_ = name;
    start_ = now;
  }
  json finish() {
    phase("");
    json j = json::object();
    for (const auto& [k, v] : times_) j[k] = v;
    return j;
  }

 private:
  std::string current_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, double> times_;
};

fs::path prepare_out(const Command& cmd) {
  fs::path out(cmd.out);
  fs::create_directories(out);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
}

void write_manifest(const Command& cmd, const fs::path& out, const std::vector<std::string>& artifacts,
                    Timer& timer) {
  json m;
  m["command"] = cmd.name;
  m["config_echo"] = cmd.config_echo();
  m["seed"] = cmd.seed;
  m["artifact_paths"] = artifacts;
  json timings = timer.finish();
  if (!cmd.reproducible) m["timings"] = timings;
  write_text(out / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Shared dataset and training options

struct DataOptions {
  std::string data;
  std::string label_column = "-1";
  bool no_header = false;
  std::string missing = "drop";
  std::string task = "auto";

  void add(Command& cmd) {
    cmd.option("data", data, "Dataset CSV");
    cmd.option("label-column", label_column, "Label column: index (negative from the end) or header name");
    cmd.flag("no-header", no_header, "The CSV has no header row");
    cmd.option("missing", missing, "Missing-value policy")->check(CLI::IsMember({"drop", "mean"}));
    cmd.option("task", task, "Task kind")->check(CLI::IsMember({"auto", "regression", "classification"}));
  }

  CsvSchema schema() const {
    CsvSchema s;
    long idx = 0;
    auto res = std::from_chars(label_column.data(), label_column.data() + label_column.size(), idx);
    if (res.ec == std::errc{} && res.ptr == label_column.data() + label_column.size()) {
      s.label_column = idx;
    } else {
      s.label_column = label_column;
    }
    s.header = !no_header;
    s.missing = missing == "mean" ? MissingPolicy::mean_impute : MissingPolicy::drop;
    s.task = task == "regression"       ? TaskHint::regression
             : task == "classification" ? TaskHint::classification
                                        : TaskHint::automatic;
    return s;
  }

  Dataset load(const std::string& path) const {
    if (path.empty()) throw InvalidConfiguration("--data is required");
    return load_csv(path, schema());
  }
};

struct SolverOptions {
  std::string activation = "softplus08";
  bool linear_output = false;
  std::string init = "random";
  double c = 1.0;
  std::string order;
  std::string tolerance = "auto";
  double ridge = 0.0;
  bool no_clamp = false;
  double clamp_margin = 1e-9;

  void add(Command& cmd) {
    cmd.option("activation", activation, "identity, softplus, softplus08, exp or exp:<alpha>");
    cmd.flag("linear-output", linear_output, "Skip the output layer's activation");
    cmd.option("init", init, "Weight initialization")->check(CLI::IsMember({"random", "data_matrix"}));
    cmd.option("c", c, "Scale of the random placeholder matrices");
    cmd.option("order", order, "Solve order of the inner layers, 1-based, e.g. 2,1 (output layer is last)");
    cmd.option("tolerance", tolerance, "Singular-value cutoff, or 'auto'");
    cmd.option("ridge", ridge, "Ridge parameter for every pseudoinverse");
    cmd.flag("no-clamp", no_clamp, "Fail on inverse-domain violations instead of clamping");
    cmd.option("clamp-margin", clamp_margin, "Clamp back targets to bound + margin");
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig cfg;
    if (init == "data_matrix") {
      cfg.init.variant = DataMatrixInit{};
    } else {
      cfg.init.variant = RandomInit{seed, c};
    }
    if (!order.empty()) {
      std::stringstream ss(order);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        std::size_t k = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), k);
        if (tok.empty() || res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || k == 0) {
          throw ParseError("bad layer index '" + tok + "' in --order");
        }
        cfg.init.solve_order.push_back(k - 1);
      }
    }
    if (tolerance != "auto") {
      double t = 0.0;
      auto res = std::from_chars(tolerance.data(), tolerance.data() + tolerance.size(), t);
      if (res.ec != std::errc{} || res.ptr != tolerance.data() + tolerance.size()) {
        throw ParseError("bad --tolerance '" + tolerance + "'");
      }
      cfg.pinv.tolerance = t;
    }
    cfg.pinv.ridge = ridge;
    cfg.clamp = !no_clamp;
    cfg.clamp_margin = clamp_margin;
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  DataOptions data;
  SolverOptions solver;
  std::string structure;
  std::string test;
  bool save_weights = false;
};

int run_train(Command& cmd, TrainArgs& a) {
  Timer timer;
  timer.phase("load");
  if (a.structure.empty()) throw InvalidConfiguration("--structure is required");
  const Activation act = Activation::parse(a.solver.activation);
  Dataset ds = a.data.load(a.data.data);
  const auto enc = TargetEncoding::for_output(act, a.solver.linear_output);
  ds = ds.encoded(enc);
  std::optional<Dataset> test;
  if (!a.test.empty()) {
    test = a.data.load(a.test);
    if (ds.is_classification()) test = align_classes(*test, ds.class_labels, enc);
  }
  const auto spec = NetworkSpec::from_structure(static_cast<std::size_t>(ds.x.cols()), a.structure, act,
                                                a.solver.linear_output);
  const TrainConfig cfg = a.solver.config(cmd.seed);

  timer.phase("train");
  const TrainReport report = train(spec, ds.x, ds.y, cfg);

  timer.phase("evaluate");
  json j = report_to_json(spec, cfg, report, !cmd.reproducible);
  j["samples"] = ds.size();
  std::cout << "train_sse: " << format_number(report.train_sse) << "\n";
  if (ds.is_classification()) {
    const double acc = accuracy(forward(spec, report.weights, ds.x), ds);
    j["train_accuracy"] = acc;
    std::cout << "train_accuracy: " << format_number(acc) << "\n";
  }
  if (test) {
    const Matrix pred = forward(spec, report.weights, test->x);
    const double test_sse = sse(pred, test->y);
    j["test_samples"] = test->size();
    j["test_sse"] = test_sse;
    std::cout << "test_sse: " << format_number(test_sse) << "\n";
    if (test->is_classification()) {
      const double acc = accuracy(pred, *test);
      j["test_accuracy"] = acc;
      std::cout << "test_accuracy: " << format_number(acc) << "\n";
    }
  }

  timer.phase("write");
  const fs::path out = prepare_out(cmd);
  std::vector<std::string> artifacts{"report.json"};
  write_text(out / "report.json", j.dump(2) + "\n");
  if (a.save_weights) {
    for (std::size_t k = 0; k < report.weights.size(); ++k) {
      const std::string name = "weights_" + std::to_string(k + 1) + ".csv";
      std::ostringstream os;
      write_matrix_csv(os, report.weights[k]);
      write_text(out / name, os.str());
      artifacts.push_back(name);
    }
  }
  write_manifest(cmd, out, artifacts, timer);
  return 0;
}

// ---------------------------------------------------------------------------
// cv

struct CvArgs {
  DataOptions data;
  SolverOptions solver;
  std::vector<std::string> templates{"h-q"};
  std::vector<std::size_t> grid = default_h_grid();
  std::size_t folds = 10;
  std::size_t trials = 10;
  bool stratified = true;
};

int run_cv(Command& cmd, CvArgs& a) {
  Timer timer;
  timer.phase("load");
  const Dataset ds = a.data.load(a.data.data);
  SearchSpace space;
  for (const auto& t : a.templates) space.templates.emplace_back(t);
  space.h_grid = a.grid;
  space.activation = Activation::parse(a.solver.activation);
  space.linear_output = a.solver.linear_output;
  CvPlan plan;
  plan.folds = a.folds;
  plan.trials = a.trials;
  plan.seed = cmd.seed;
  plan.stratified = a.stratified;
  if (!ds.is_classification() && a.stratified && cmd.app->get_option("--stratified")->count() > 0) {
    std::cerr << "warning: stratification needs class labels; using unstratified folds for this regression set\n";
  }
  const TrainConfig cfg = a.solver.config(cmd.seed);

  timer.phase("cv");
  const CvResult r = cv_search(ds, space, plan, cfg);

  timer.phase("write");
  json j;
  j["samples"] = ds.size();
  j["task"] = ds.is_classification() ? "classification" : "regression";
  j["folds"] = plan.folds;
  j["trials"] = plan.trials;
  j["stratified"] = plan.stratified && ds.is_classification();
  j["metric"] = r.metric;
  j["mean_score"] = r.mean_score;
  j["selected_h"] = r.selected_h;
  j["selected_template"] = r.selected_template;
  j["scores"] = r.scores;
  j["chosen_h"] = r.chosen_h;
  j["chosen_template"] = r.chosen_template;
  const fs::path out = prepare_out(cmd);
  write_text(out / "cv.json", j.dump(2) + "\n");
  std::cout << "metric: " << r.metric << "\nmean_score: " << format_number(r.mean_score)
            << "\nselected_h: " << r.selected_h << "\nselected_template: " << r.selected_template << "\n";
  write_manifest(cmd, out, {"cv.json"}, timer);
  return 0;
}

// ---------------------------------------------------------------------------
// synth

std::string dataset_csv(const Dataset& ds) {
  std::ostringstream os;
  write_dataset_csv(os, ds);
  return os.str();
}

struct SpiralArgs {
  std::size_t arms = 6;
  std::size_t per_arm = 500;
  double noise = 0.3;
};

int run_spiral(Command& cmd, SpiralArgs& a) {
  Timer timer;
  timer.phase("generate");
  const auto sets = gen_spiral(a.arms, a.per_arm, a.noise, cmd.seed);
  timer.phase("write");
  const fs::path out = prepare_out(cmd);
  write_text(out / "spiral_train.csv", dataset_csv(sets.train));
  write_text(out / "spiral_test.csv", dataset_csv(sets.test));
  std::cout << "train: " << sets.train.size() << " rows\ntest: " << sets.test.size() << " rows\n";
  write_manifest(cmd, out, {"spiral_train.csv", "spiral_test.csv"}, timer);
  return 0;
}

struct RegressionArgs {
  std::size_t noisy_sets = 0;
  double noise = 0.2;
};

int run_regression(Command& cmd, RegressionArgs& a) {
  Timer timer;
  timer.phase("generate");
  const auto sets = gen_regression(a.noisy_sets, a.noise, cmd.seed);
  timer.phase("write");
  const fs::path out = prepare_out(cmd);
  std::vector<std::string> artifacts;
  for (std::size_t s = 0; s < sets.train.size(); ++s) {
    char name[64];
    std::snprintf(name, sizeof name, "regression_train_%02zu.csv", s);
    write_text(out / name, dataset_csv(sets.train[s]));
    artifacts.emplace_back(name);
  }
  write_text(out / "regression_test.csv", dataset_csv(sets.test));
  artifacts.emplace_back("regression_test.csv");
  std::cout << "train sets: " << sets.train.size() << "\ntest: " << sets.test.size() << " rows\n";
  write_manifest(cmd, out, artifacts, timer);
  return 0;
}

// ---------------------------------------------------------------------------
// variance

struct VarianceArgs {
  std::size_t m = 100;
  std::size_t d = 10;
  double lo = -5.0;
  double hi = 5.0;
  double noise_scale = 1.0;
  std::size_t trials = 1000;
  std::size_t max_depth = 8;
  std::string activation = "exp:0.0001";
};

int run_variance(Command& cmd, VarianceArgs& a) {
  Timer timer;
  timer.phase("simulate");
  VarianceConfig cfg;
  cfg.m = a.m;
  cfg.d = a.d;
  cfg.input_lo = a.lo;
  cfg.input_hi = a.hi;
  cfg.noise_scale = a.noise_scale;
  cfg.trials = a.trials;
  cfg.max_depth = a.max_depth;
  cfg.activation = Activation::parse(a.activation);
  cfg.seed = cmd.seed;
  const VarianceReport r = mc_output_variance(cfg);
  timer.phase("write");
  std::ostringstream os;
  write_variance_csv(os, r);
  const fs::path out = prepare_out(cmd);
  write_text(out / "variance.csv", os.str());
  std::cout << os.str();
  write_manifest(cmd, out, {"variance.csv"}, timer);
  return 0;
}

// ---------------------------------------------------------------------------
// selfcheck

struct SelfcheckArgs {
  std::vector<std::string> shapes{"200x100", "100x200", "60x60", "150x20", "20x150", "1x40", "40x1"};
  std::size_t count = 100;
  bool inject_fault = false;
};

std::pair<Eigen::Index, Eigen::Index> parse_shape(const std::string& s) {
  const auto x = s.find('x');
  long r = 0, c = 0;
  bool ok = x != std::string::npos;
  if (ok) {
    auto r1 = std::from_chars(s.data(), s.data() + x, r);
    auto r2 = std::from_chars(s.data() + x + 1, s.data() + s.size(), c);
    ok = r1.ec == std::errc{} && r1.ptr == s.data() + x && r2.ec == std::errc{} &&
         r2.ptr == s.data() + s.size() && r > 0 && c > 0;
  }
  if (!ok) throw ParseError("bad shape '" + s + "', expected <rows>x<cols>");
  return {r, c};
}

/// Pseudoinverse with the largest singular value's reciprocal negated.
Matrix faulty_pinv(const Matrix& a) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double tol = static_cast<double>(std::max(a.rows(), a.cols())) * std::numeric_limits<double>::epsilon() *
                     (s.size() ? s(0) : 0.0);
  Vector inv = s.unaryExpr([tol](double v) { return v > tol ? 1.0 / v : 0.0; });
  if (inv.size()) inv(0) = -inv(0);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Closed-form inverse for full-rank input: (A^T A)^-1 A^T if tall, A^T (A A^T)^-1 if wide.
Matrix normal_equation_inverse(const Matrix& a) {
  if (a.rows() >= a.cols()) {
    const Matrix g = a.transpose() * a;
    return g.ldlt().solve(a.transpose());
  }
  const Matrix g = a * a.transpose();
  return g.ldlt().solve(a).transpose();
}

int run_selfcheck(Command& cmd, SelfcheckArgs& a) {
  Timer timer;
  timer.phase("check");
  if (a.count < 1) throw InvalidConfiguration("--count must be >= 1");
  if (a.shapes.empty()) throw InvalidConfiguration("--shapes needs at least one shape");
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
  for (const auto& s : a.shapes) shapes.push_back(parse_shape(s));

  std::size_t penrose_failures = 0, oracle_failures = 0, oracle_checked = 0, rank_deficient = 0;
  double worst_penrose = 0.0, worst_oracle = 0.0;
  for (std::size_t i = 0; i < a.count; ++i) {
    Rng rng(cmd.seed, "selfcheck", i);
    const auto [rows, cols] = shapes[i % shapes.size()];
    const Eigen::Index full = std::min(rows, cols);
    // every third matrix is built with rank about half its smaller dimension
    const bool deficient = i % 3 == 2 && full > 1;
    Matrix m;
    if (deficient) {
      const Eigen::Index r = std::max<Eigen::Index>(1, full / 2);
      m = rng.uniform_matrix(rows, r, -1.0, 1.0) * rng.uniform_matrix(r, cols, -1.0, 1.0);
      ++rank_deficient;
    } else {
      m = rng.uniform_matrix(rows, cols, -1.0, 1.0);
    }
    const Matrix dag = a.inject_fault ? faulty_pinv(m) : pinv(m);
    const double res = penrose_residual(m, dag);
    worst_penrose = std::max(worst_penrose, res);
    if (!(res <= 1e-8)) ++penrose_failures;
    if (!deficient) {
      const Matrix oracle = normal_equation_inverse(m);
      const double err = (dag - oracle).norm() / oracle.norm();
      worst_oracle = std::max(worst_oracle, err);
      ++oracle_checked;
      if (!(err <= 1e-8)) ++oracle_failures;
    }
  }
  const bool ok = penrose_failures == 0 && oracle_failures == 0;

  timer.phase("write");
  json j;
  j["count"] = a.count;
  j["rank_deficient"] = rank_deficient;
  j["oracle_checked"] = oracle_checked;
  j["penrose_failures"] = penrose_failures;
  j["oracle_failures"] = oracle_failures;
  j["max_penrose_residual"] = worst_penrose;
  j["max_oracle_error"] = worst_oracle;
  j["fault_injected"] = a.inject_fault;
  j["passed"] = ok;
  const fs::path out = prepare_out(cmd);
  write_text(out / "selfcheck.json", j.dump(2) + "\n");
  std::cout << "checked: " << a.count << " (" << rank_deficient << " rank-deficient)\n"
            << "max penrose residual: " << format_number(worst_penrose) << "\n"
            << "max oracle error: " << format_number(worst_oracle) << "\n"
            << (ok ? "PASS" : "FAIL") << "\n";
  write_manifest(cmd, out, {"selfcheck.json"}, timer);
  return ok ? 0 : kExitFailure;
}

void report_error(const char* kind, const std::string& message, const std::string& path = {}) {
  json j;
  j["error"]["kind"] = kind;
  j["error"]["message"] = message;
  if (!path.empty()) j["error"]["path"] = path;
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-free training of feedforward networks by pseudoinverse projection"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](CLI::App* parent, const std::string& name, const std::string& full, const std::string& help) {
    auto cmd = std::make_unique<Command>();
    cmd->name = full;
    cmd->app = parent->add_subcommand(name, help);
    cmd->common();
    commands.push_back(std::move(cmd));
    return commands.back().get();
  };

  TrainArgs train_args;
  {
    Command* c = make(&app, "train", "train", "Train one network and write report.json");
    train_args.data.add(*c);
    c->option("structure", train_args.structure, "Layer widths, e.g. 8-1 or 150^r3-250-6");
    train_args.solver.add(*c);
    c->option("test", train_args.test, "Optional test CSV with the same layout");
    c->flag("save-weights", train_args.save_weights, "Also write weights_<k>.csv");
    c->run = [&](Command& cmd) { return run_train(cmd, train_args); };
  }
  CvArgs cv_args;
  {
    Command* c = make(&app, "cv", "cv", "Repeated k-fold cross-validation with hidden-size search");
    cv_args.data.add(*c);
    cv_args.solver.add(*c);
    c->option("template", cv_args.templates, "Structure templates in h and q, e.g. h-q 2h-h-q");
    c->option("grid", cv_args.grid, "Hidden sizes to search")->delimiter(',');
    c->option("folds", cv_args.folds, "Folds per trial");
    c->option("trials", cv_args.trials, "Repetitions");
    c->echo.emplace_back("stratified", [&] { return json(cv_args.stratified); });
    c->app->add_flag("--stratified,!--no-stratified", cv_args.stratified, "Stratify folds by class");
    c->run = [&](Command& cmd) { return run_cv(cmd, cv_args); };
  }
  SpiralArgs spiral_args;
  RegressionArgs regression_args;
  {
    CLI::App* synth = app.add_subcommand("synth", "Generate synthetic datasets");
    synth->require_subcommand(1);
    Command* s = make(synth, "spiral", "synth spiral", "Multi-arm spiral, split half/half");
    s->option("arms", spiral_args.arms, "Number of arms");
    s->option("per-arm", spiral_args.per_arm, "Samples per arm (even)");
    s->option("noise", spiral_args.noise, "Angle noise amplitude");
    s->run = [&](Command& cmd) { return run_spiral(cmd, spiral_args); };
    Command* r = make(synth, "regression", "synth regression", "sin(2x)/(2x) train sets and test grid");
    r->option("noisy-sets", regression_args.noisy_sets, "Extra noisy copies of the train set");
    r->option("noise", regression_args.noise, "Noise amplitude as a fraction of the target range");
    r->run = [&](Command& cmd) { return run_regression(cmd, regression_args); };
  }
  VarianceArgs var_args;
  {
    Command* c = make(&app, "variance", "variance", "Monte Carlo output-variance study by depth");
    c->option("m", var_args.m, "Samples");
    c->option("d", var_args.d, "Input dimension");
    c->option("lo", var_args.lo, "Lower end of the input range");
    c->option("hi", var_args.hi, "Upper end of the input range");
    c->option("noise-scale", var_args.noise_scale, "Noise amplitude");
    c->option("trials", var_args.trials, "Monte Carlo trials");
    c->option("max-depth", var_args.max_depth, "Deepest layer");
    c->option("activation", var_args.activation, "Activation of the chain");
    c->run = [&](Command& cmd) { return run_variance(cmd, var_args); };
  }
  SelfcheckArgs check_args;
  {
    Command* c = make(&app, "selfcheck", "selfcheck", "Penrose-condition and closed-form checks of pinv");
    c->option("shapes", check_args.shapes, "Matrix shapes, e.g. 200x100")->delimiter(',');
    c->option("count", check_args.count, "Number of random matrices");
    c->flag("inject-fault", check_args.inject_fault, "Negate the largest singular value (must fail)");
    c->run = [&](Command& cmd) { return run_selfcheck(cmd, check_args); };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (auto& cmd : commands) {
    if (!cmd->app->parsed()) continue;
    try {
      merge_config(*cmd);
      return cmd->run(*cmd);
    } catch (const FileNotFound& e) {
      report_error(e.kind(), e.what(), e.path());
      return kExitMissingFile;
    } catch (const pinvnet::Error& e) {
      report_error(e.kind(), e.what());
      return kExitFailure;
    } catch (const CLI::Error& e) {
      report_error("invalid-configuration", e.what());
      return kExitFailure;
    } catch (const std::exception& e) {
      report_error("error", e.what());
      return kExitFailure;
    }
  }
  return kExitFailure;
}
