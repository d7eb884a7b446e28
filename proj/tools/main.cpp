#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "asymloss/asymloss.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace asymloss;

namespace {

// Shared by every subcommand.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--seed", c.seed, "random seed (overrides the config)");
  cmd->add_option("--out", c.out, "output directory");
}

json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorKind::config, path + ": " + e.what());
  }
}

// Inline JSON, a path to a JSON file, or "kind:eta" shorthand.
NoiseSpec parse_noise_arg(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return noise_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      raise(ErrorKind::config, std::string("noise JSON does not parse: ") + e.what());
    }
  }
  if (fs::exists(text)) return noise_from_json(read_json_file(text));
  const auto colon = text.find(':');
  if (colon == std::string::npos) raise(ErrorKind::config, "noise must be JSON, a file, or kind:eta");
  json j{{"kind", text.substr(0, colon)}};
  try {
    j[text.substr(0, colon) == "instance" ? "eta_mean" : "eta"] = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    raise(ErrorKind::config, "bad noise rate in '" + text + "'");
  }
  return noise_from_json(j);
}

// Writes to <dir>/<name> when an output directory was requested; always echoes to stdout.
void emit(const json& j, const std::string& dir, const std::string& name) {
  const std::string text = j.dump(2) + "\n";
  if (!dir.empty()) write_text_file(fs::path(dir) / name, text);
  std::cout << text;
}

// --- losses eval -----------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string loss = "ce";
  std::vector<double> p;
  std::vector<double> logits;
  std::size_t y = 0;
};

int cmd_losses_eval(const EvalArgs& args) {
  const LossSpec spec = parse_loss_arg(args.loss);
  if (args.p.empty() == args.logits.empty()) raise(ErrorKind::config, "give exactly one of --p or --logits");
  const ProbVector p = args.p.empty() ? softmax(args.logits) : ProbVector::from(args.p);
  if (args.y >= p.size()) raise(ErrorKind::config, "--y is out of range");
  const ClassLabel y{args.y};
  const LossTaxonomy tax = taxonomy(spec);

  json out{{"loss", loss_name(spec)},
           {"spec", to_json(spec)},
           {"p", p.vec()},
           {"y", args.y},
           {"value", loss_value(spec, p, y)},
           {"row", loss_row(spec, p)},
           {"row_sum", 0.0},
           {"grad_p", loss_grad_p(spec, p, y)},
           {"taxonomy",
            {{"active", tax.is_active}, {"passive", tax.is_passive}, {"symmetric", tax.is_symmetric}}}};
  double sum = 0.0;
  for (double v : out["row"]) sum += v;
  out["row_sum"] = sum;
  if (!args.logits.empty()) out["grad_logits"] = loss_grad_logits(spec, args.logits, y);
  emit(out, args.common.out, "loss_eval.json");
  return 0;
}

// --- verify ----------------------------------------------------------------

struct VerifyArgs {
  Common common;
  std::string loss = "amse";
  std::vector<double> weights;
  std::string noise;
  std::size_t classes = 10;
  std::size_t label = 0;
  std::optional<double> q;
  std::optional<double> a;
  std::optional<std::size_t> grid;
  std::size_t sup_grid = 20000;
};

int cmd_verify(const VerifyArgs& args) {
  if (args.weights.empty() == args.noise.empty()) raise(ErrorKind::config, "give exactly one of --weights or --noise");
  AsymmetryWeights w = args.weights.empty()
                           ? weights_from_noise(parse_noise_arg(args.noise), ClassLabel{args.label}, args.classes)
                           : AsymmetryWeights::dominant(args.weights);

  LossSpec spec =
      parse_loss_arg(args.loss, LossSpec::amse(args.a.value_or(kShorthandMagnitude), args.q.value_or(2.0)));
  if (spec.kind == LossKind::amse) {
    spec = LossSpec::amse(args.a.value_or(spec.a), args.q.value_or(spec.q));
  } else if (args.a || args.q) {
    raise(ErrorKind::config, "--a/--q only apply to the amse loss");
  }
  const std::size_t resolution = args.grid.value_or(w.size() <= 4 ? 200 : 10000);

  json out{{"loss", loss_name(spec)}, {"spec", to_json(spec)}, {"weights", w.w}, {"dominant", w.t.index}};
  if (spec.kind == LossKind::amse) {
    const AsymmetryVerdict v = verify_amse(spec.q, spec.a, w, resolution, args.sup_grid);
    out["threshold"] = std::isinf(v.required_ratio) ? json("inf") : json(v.required_ratio);
    out["ratio"] = std::isinf(v.actual_ratio) ? json("inf") : json(v.actual_ratio);
    out["sup_h"] = v.sup_h;
    out["oracle_argmin"] = v.oracle_argmin.vec();
    out["verdict"] = {{"theorem", v.theorem_satisfied ? "asymmetric" : "not_asymmetric"},
                      {"oracle", v.oracle_is_vertex ? "asymmetric" : "not_asymmetric"},
                      {"agree", v.oracle_agrees}};
  } else {
    // No closed form outside AMSE; report the oracle alone.
    const OracleResult r = oracle_minimize(spec, w, resolution);
    out["threshold"] = nullptr;
    out["ratio"] = std::isinf(w.ratio()) ? json("inf") : json(w.ratio());
    out["sup_h"] = nullptr;
    out["oracle_argmin"] = r.argmin.vec();
    out["verdict"] = {{"theorem", nullptr},
                      {"oracle", r.is_dominant_vertex ? "asymmetric" : "not_asymmetric"},
                      {"agree", nullptr}};
  }
  emit(out, args.common.out, "verify.json");
  return 0;
}

// --- noise inject ----------------------------------------------------------

struct InjectArgs {
  Common common;
  std::string input;
  std::string noise;
};

int cmd_noise_inject(const InjectArgs& args) {
  if (args.common.out.empty()) raise(ErrorKind::config, "noise inject needs --out");
  std::string noise_text = args.noise;
  std::uint64_t seed = args.common.seed.value_or(0);
  if (!args.common.config.empty()) {
    const json cfg = read_json_file(args.common.config);
    if (noise_text.empty() && cfg.contains("noise")) noise_text = cfg.at("noise").dump();
    if (!args.common.seed) seed = cfg.value("seed", seed);
  }
  if (noise_text.empty()) raise(ErrorKind::config, "no noise spec given (--noise or config 'noise')");
  const NoiseSpec spec = parse_noise_arg(noise_text);

  const Dataset clean = load_dataset(args.input);
  const Dataset noisy = inject(clean, spec, seed);
  const TransitionReport report = empirical_rates(clean, noisy, spec);

  const fs::path dir(args.common.out);
  save_dataset(noisy, dir / "noisy.json");
  json t = to_json(report);
  t["noise"] = to_json(spec);
  t["seed"] = seed;
  write_text_file(dir / "transition.json", t.dump(2) + "\n");
  std::cout << "wrote " << (dir / "noisy.json").string() << " (" << noisy.size() << " samples, max |T - T_emp| = "
            << report.max_abs_diff << ")\n";
  return 0;
}

// --- train / sweep ---------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string loss;
  std::string noise;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
};

ExperimentConfig load_config(const TrainArgs& args) {
  ExperimentConfig c = args.common.config.empty() ? ExperimentConfig{}
                                                   : config_from_text(read_text_file(args.common.config));
  bool overridden = false;
  if (args.common.seed) {
    c.seed = *args.common.seed;
    c.opt.seed = *args.common.seed;
    overridden = true;
  }
  if (!args.common.out.empty()) {
    c.outputs = args.common.out;
    overridden = true;
  }
  if (!args.loss.empty()) {
    c.loss = parse_loss_arg(args.loss);
    overridden = true;
  }
  if (!args.noise.empty()) {
    c.noise = parse_noise_arg(args.noise);
    overridden = true;
  }
  if (args.epochs) {
    c.opt.epochs = *args.epochs;
    overridden = true;
  }
  if (args.lr) {
    c.opt.lr0 = *args.lr;
    overridden = true;
  }
  // The stored snapshot must replay to the same run, so overrides drop the source text.
  if (overridden) c.source_text.clear();
  return c;
}

int cmd_train(const TrainArgs& args) {
  const ExperimentConfig config = load_config(args);
  const RunRecord record = run_experiment(config, true);
  const auto& last = record.train.per_epoch.back();
  std::printf("run %s  %s  %s eta=%.3g  test_acc=%.4f  train_acc_clean=%.4f  (%.1fs)\n", record.run_id.c_str(),
              record.loss_name.c_str(), to_json(record.noise).at("kind").get<std::string>().c_str(),
              record.noise.rate(), last.test_acc, last.train_acc_clean, record.duration_s);
  std::printf("outputs: %s\n", (fs::path(config.outputs) / record.run_id).string().c_str());
  return 0;
}

struct SweepArgs {
  TrainArgs base;
  std::vector<double> a_values{5, 10, 20, 30};
  std::vector<std::uint64_t> seeds{0};
};

// Replaces the AMSE magnitude wherever it appears in the loss tree.
bool set_amse_a(LossSpec& spec, double a) {
  if (spec.kind == LossKind::amse) {
    spec = LossSpec::amse(a, spec.q);
    return true;
  }
  bool found = false;
  for (auto& part : spec.parts) found = set_amse_a(part, a) || found;
  return found;
}

int cmd_sweep(const SweepArgs& args) {
  const ExperimentConfig base = load_config(args.base);
  std::vector<RunRecord> records;
  for (double a : args.a_values) {
    for (std::uint64_t seed : args.seeds) {
      ExperimentConfig c = base;
      if (!set_amse_a(c.loss, a)) raise(ErrorKind::config, "sweep over a needs a loss with an AMSE term");
      c.loss.validate();
      c.seed = seed;
      c.opt.seed = seed;
      c.source_text.clear();
      RunRecord r = run_experiment(c, true);
      std::fprintf(stderr, "a=%g seed=%llu test_acc=%.4f\n", a, static_cast<unsigned long long>(seed),
                   r.train.final_test_acc);
      records.push_back(std::move(r));
    }
  }
  std::cout << compare_runs(records).text();
  return 0;
}

// --- gradcheck -------------------------------------------------------------

struct GradArgs {
  Common common;
  std::string loss = "jal_ce";
  std::size_t trials = 100;
  std::vector<std::size_t> classes{2, 10, 100};
  double step = 1e-6;
};

int cmd_gradcheck(const GradArgs& args) {
  const LossSpec spec = parse_loss_arg(args.loss);
  const GradCheckResult r = gradient_check(spec, args.trials, args.classes, args.common.seed.value_or(0), args.step);
  json out = to_json(r);
  out["loss"] = loss_name(spec);
  out["classes"] = args.classes;
  out["trials"] = args.trials;
  emit(out, args.common.out, "gradcheck.json");
  return 0;
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  Common common;
  std::vector<std::string> paths;
  bool csv = false;
};

int cmd_report(const ReportArgs& args) {
  std::vector<std::string> roots = args.paths;
  if (roots.empty()) roots.push_back(args.common.out.empty() ? "runs" : args.common.out);
  std::vector<fs::path> files;
  for (const auto& root : roots) {
    const fs::path p(root);
    if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else if (fs::is_directory(p)) {
      for (const auto& entry : fs::recursive_directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().filename() == "record.json") files.push_back(entry.path());
      }
    } else {
      raise(ErrorKind::io, "no such file or directory: " + root);
    }
  }
  if (files.empty()) raise(ErrorKind::io, "no record.json files found");
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> records;
  for (const auto& f : files) records.push_back(load_run_record(f));
  const ComparisonTable table = compare_runs(records);
  std::cout << (args.csv ? table.csv() : table.text());
  return 0;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  Common common;
  std::string kind = "gaussians";
  std::size_t n = 4000;
  std::size_t classes = 4;
  std::size_t dim = 2;
  double separation = 4.0;
  std::string file = "data.json";
};

int cmd_synth(const SynthArgs& args) {
  const Dataset d = synth_dataset(synth_kind_from_string(args.kind), args.n, args.classes, args.dim, args.separation,
                                  args.common.seed.value_or(1));
  const fs::path path = fs::path(args.common.out.empty() ? "." : args.common.out) / args.file;
  save_dataset(d, path);
  std::cout << "wrote " << path.string() << " (" << d.size() << " samples)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust losses for noisy labels: evaluation, verification, noise injection, training."};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  auto* losses = app.add_subcommand("losses", "loss evaluation");
  losses->require_subcommand(1);
  EvalArgs eval;
  auto* eval_cmd = losses->add_subcommand("eval", "value, row and gradient of a loss at one point");
  add_common(eval_cmd, eval.common);
  eval_cmd->add_option("--loss", eval.loss, "loss name (ce, fl, mae, mse, rce, amse, nce, nfl, jal-ce, jal-fl) or JSON");
  eval_cmd->add_option("--p", eval.p, "probability vector")->delimiter(',');
  eval_cmd->add_option("--logits", eval.logits, "logit vector")->delimiter(',');
  eval_cmd->add_option("--y", eval.y, "label (0-based)");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "check the asymmetric condition for weighted risks");
  add_common(verify_cmd, verify.common);
  verify_cmd->add_option("--loss", verify.loss, "loss (default amse)");
  verify_cmd->add_option("--weights", verify.weights, "risk weights w_1..w_K")->delimiter(',');
  verify_cmd->add_option("--noise", verify.noise, "noise spec: JSON, file, or kind:eta");
  verify_cmd->add_option("--classes", verify.classes, "K when weights come from --noise");
  verify_cmd->add_option("--label", verify.label, "clean label whose noise row gives the weights");
  verify_cmd->add_option("--q", verify.q, "AMSE exponent (default 2)");
  verify_cmd->add_option("--a", verify.a, "AMSE magnitude (default 30)");
  verify_cmd->add_option("--grid", verify.grid, "oracle grid resolution");
  verify_cmd->add_option("--sup-grid", verify.sup_grid, "grid size for sup h");

  auto* noise = app.add_subcommand("noise", "label noise");
  noise->require_subcommand(1);
  InjectArgs inject_args;
  auto* inject_cmd = noise->add_subcommand("inject", "corrupt the labels of a dataset file");
  add_common(inject_cmd, inject_args.common);
  inject_cmd->add_option("--in", inject_args.input, "dataset JSON file")->required();
  inject_cmd->add_option("--noise", inject_args.noise, "noise spec: JSON, file, or kind:eta");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "run one experiment and persist its record");
  add_common(train_cmd, train_args.common);
  train_cmd->add_option("--loss", train_args.loss, "loss override");
  train_cmd->add_option("--noise", train_args.noise, "noise override");
  train_cmd->add_option("--epochs", train_args.epochs, "epoch override");
  train_cmd->add_option("--lr", train_args.lr, "initial learning rate override");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "train over a grid of AMSE magnitudes and seeds");
  add_common(sweep_cmd, sweep.base.common);
  sweep_cmd->add_option("--loss", sweep.base.loss, "loss override");
  sweep_cmd->add_option("--noise", sweep.base.noise, "noise override");
  sweep_cmd->add_option("--epochs", sweep.base.epochs, "epoch override");
  sweep_cmd->add_option("--a-values", sweep.a_values, "AMSE magnitudes")->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep.seeds, "seeds")->delimiter(',');

  GradArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  add_common(grad_cmd, grad.common);
  grad_cmd->add_option("--loss", grad.loss, "loss name or JSON");
  grad_cmd->add_option("--trials", grad.trials, "points per class count");
  grad_cmd->add_option("--classes", grad.classes, "class counts")->delimiter(',');
  grad_cmd->add_option("--step", grad.step, "finite-difference step");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "compare persisted runs");
  add_common(report_cmd, report.common);
  report_cmd->add_option("paths", report.paths, "run directories or record.json files");
  report_cmd->add_flag("--csv", report.csv, "CSV instead of aligned text");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset file");
  add_common(synth_cmd, synth.common);
  synth_cmd->add_option("--kind", synth.kind, "gaussians or rings");
  synth_cmd->add_option("--n", synth.n, "samples");
  synth_cmd->add_option("--classes", synth.classes, "classes");
  synth_cmd->add_option("--dim", synth.dim, "feature dimension");
  synth_cmd->add_option("--separation", synth.separation, "cluster separation");
  synth_cmd->add_option("--file", synth.file, "file name under --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*eval_cmd) return cmd_losses_eval(eval);
    if (*verify_cmd) return cmd_verify(verify);
    if (*inject_cmd) return cmd_noise_inject(inject_args);
    if (*train_cmd) return cmd_train(train_args);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*grad_cmd) return cmd_gradcheck(grad);
    if (*report_cmd) return cmd_report(report);
    if (*synth_cmd) return cmd_synth(synth);
  } catch (const Error& e) {
    std::cerr << "asymloss: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "asymloss: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
