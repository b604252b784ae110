// Command-line front end: dataset generation, training, evaluation,
// snapshot sampling, phase-diagram sweeps, and the coupling/correlation
// verification and inversion tools.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "hamlearn/bijection.hpp"
#include "hamlearn/dataset.hpp"
#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/parallel.hpp"
#include "hamlearn/sampler.hpp"
#include "hamlearn/training.hpp"

namespace fs = std::filesystem;
using namespace hamlearn;

namespace {

fs::path default_out_dir() {
  if (const char* env = std::getenv("HAMLEARN_DATA_DIR")) return fs::path(env);
  return fs::path("data");
}

std::vector<std::pair<int, int>> parse_sizes(const std::string& text) {
  std::vector<std::pair<int, int>> sizes;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto x = tok.find('x');
    if (x == std::string::npos) throw ConfigError("bad size token '" + tok + "', want RxC");
    sizes.emplace_back(std::stoi(tok.substr(0, x)), std::stoi(tok.substr(x + 1)));
  }
  if (sizes.empty()) throw ConfigError("no sizes given");
  return sizes;
}

// CLI flags win over config-file values, which win over defaults.
class ConfigOverlay {
 public:
  explicit ConfigOverlay(const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    in >> j_;
  }

  template <typename T>
  void apply(const CLI::App& cmd, const std::string& flag, T& target) const {
    const std::string key = flag.substr(2);  // strip leading --
    if (cmd.count(flag) == 0 && j_.contains(key)) target = j_.at(key).get<T>();
  }

 private:
  nlohmann::json j_;
};

// Timestamps are confined to this sidecar so artifact files are byte-stable.
void write_sidecar_log(const fs::path& primary_output, const nlohmann::json& config_echo) {
  fs::path log = primary_output;
  log += ".log";
  std::ofstream out(log, std::ios::app);
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  out << stamp << " " << config_echo.dump() << "\n";
}

struct GenArgs {
  std::string sizes = "3x3,3x4,4x4";
  int count = 100;
  int case_tag = 3;
  std::string mode = "exact";
  std::string omega;  // comma list; empty = default history
  double spacing = 10.0;
  double disorder = 0.1;
  double delta = 0.0;
  double c6 = kDefaultC6;
  bool per_omega_graphs = false;
  std::string format = "binary";
  std::uint64_t seed = 0;
  int jobs = 1;
  int solver_cap = 22;
  std::string out = "dataset.jsonl";
  std::string out_dir;
  std::string config;
};

int run_gen(const GenArgs& a) {
  DatasetSpec spec;
  spec.sizes = parse_sizes(a.sizes);
  spec.per_size_count = a.count;
  spec.case_tag = a.case_tag;
  spec.mode = GenerationMode::parse(a.mode);
  spec.master_seed = a.seed;
  spec.spacing_um = a.spacing;
  spec.disorder_amplitude_um = a.disorder;
  spec.delta = a.delta;
  spec.c6 = a.c6;
  spec.per_omega_graphs = a.per_omega_graphs;
  spec.solver.n_atoms_cap = a.solver_cap;
  if (!a.omega.empty()) {
    spec.omega.values.clear();
    std::stringstream ss(a.omega);
    std::string tok;
    while (std::getline(ss, tok, ',')) spec.omega.values.push_back(std::stod(tok));
  }
  if (a.format != "binary" && a.format != "jsonl-full") {
    throw ConfigError("--format must be binary or jsonl-full");
  }

  const fs::path out_dir = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);
  fs::create_directories(out_dir);
  const fs::path out = out_dir / a.out;

  const Dataset ds = generate_dataset(spec, a.jobs);
  write_dataset(out, ds, a.format == "jsonl-full");

  nlohmann::json echo = {{"command", "gen"},    {"sizes", a.sizes},
                         {"count", a.count},    {"case", a.case_tag},
                         {"mode", a.mode},      {"seed", a.seed},
                         {"spacing", a.spacing}, {"disorder", a.disorder},
                         {"delta", a.delta},    {"out", out.string()}};
  write_sidecar_log(out, echo);
  std::cout << "wrote " << ds.samples.size() << " graphs to " << out << "\n";
  return 0;
}

struct TrainArgs {
  std::string dataset;
  std::vector<std::string> test_datasets;
  int case_tag = 3;
  int epochs = 550;
  int batch = 32;
  int replicates = 1;
  double lr_start = 5e-3;
  double lr_end = 2.5e-4;
  double val_fraction = 0.1;
  double weight_decay = 0.0;
  std::string targets = "nn";
  std::string model = "gnn";
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "run";
  std::string out_dir;
  std::string config;
  int embed_dim = 32;
  int n_layers = 4;
  int msg_hidden = 64;
  int task_hidden = 64;
};

TrainConfig make_train_config(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.case_tag = a.case_tag;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  cfg.lr_start = a.lr_start;
  cfg.lr_end = a.lr_end;
  cfg.val_fraction = a.val_fraction;
  cfg.hyper.weight_decay = a.weight_decay;
  if (a.targets == "nn") cfg.predict_nnn = false;
  else if (a.targets == "nn+nnn") cfg.predict_nnn = true;
  else throw ConfigError("--targets must be nn or nn+nnn");
  if (a.model == "gnn") cfg.mlp_baseline = false;
  else if (a.model == "mlp-baseline") cfg.mlp_baseline = true;
  else throw ConfigError("--model must be gnn or mlp-baseline");
  cfg.embed_dim = a.embed_dim;
  cfg.n_layers = a.n_layers;
  cfg.msg_hidden = a.msg_hidden;
  cfg.task_hidden = a.task_hidden;
  return cfg;
}

int run_train(const TrainArgs& a) {
  if (a.dataset.empty()) throw ConfigError("--dataset is required");
  const Dataset train_ds = read_dataset(a.dataset);
  std::vector<Dataset> test_sets;
  for (const auto& p : a.test_datasets) test_sets.push_back(read_dataset(p));

  const TrainConfig cfg = make_train_config(a);
  const fs::path out_dir = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);
  fs::create_directories(out_dir);

  nlohmann::json echo = {{"command", "train"},   {"dataset", a.dataset},
                         {"case", a.case_tag},   {"epochs", a.epochs},
                         {"replicates", a.replicates}, {"seed", a.seed},
                         {"model", a.model},     {"targets", a.targets}};

  if (a.replicates <= 1) {
    const TrainResult res = train(cfg, train_ds);
    const fs::path ck = out_dir / (a.out + ".ckpt.json");
    save_checkpoint(ck, res.model);
    write_loss_curve_csv(out_dir / (a.out + ".loss.csv"), res.curve);
    if (!test_sets.empty()) {
      Model model = load_checkpoint(ck);
      const auto metrics = evaluate_extrapolation(model, test_sets);
      ReplicateOutcome outcome;
      outcome.seed = cfg.seed;
      outcome.per_size = metrics;
      const MetricsReport rep = aggregate_metrics({outcome, outcome}, echo.dump());
      write_metrics_csv(out_dir / (a.out + ".metrics.csv"), rep);
      write_metrics_json(out_dir / (a.out + ".metrics.json"), rep);
    }
    write_sidecar_log(ck, echo);
    std::cout << "checkpoint " << ck << " final train loss "
              << format_double(res.curve.back().train_loss) << " um^2\n";
    return 0;
  }

  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < a.replicates; ++r) {
    seeds.push_back(substream_seed(substream_seed(a.seed, streams::kReplicate),
                                   static_cast<std::uint64_t>(r)));
  }
  const MetricsReport rep = run_replicates(cfg, train_ds, test_sets, seeds, a.jobs);
  // Persist one checkpoint per replicate for later evaluation.
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    TrainConfig rep_cfg = cfg;
    rep_cfg.seed = seeds[r];
    const TrainResult res = train(rep_cfg, train_ds);
    save_checkpoint(out_dir / (a.out + ".rep" + std::to_string(r) + ".ckpt.json"), res.model);
    write_loss_curve_csv(out_dir / (a.out + ".rep" + std::to_string(r) + ".loss.csv"),
                         res.curve);
  }
  write_metrics_csv(out_dir / (a.out + ".metrics.csv"), rep);
  write_metrics_json(out_dir / (a.out + ".metrics.json"), rep);
  write_sidecar_log(out_dir / (a.out + ".metrics.csv"), echo);
  std::cout << "replicate report " << (out_dir / (a.out + ".metrics.csv")) << "\n";
  for (const auto& agg : rep.aggregate) {
    std::cout << "  " << agg.rows << "x" << agg.cols << (agg.extrapolation ? " (extrap)" : "")
              << "  r2 " << agg.mean[0] << " +- " << agg.stderr_[0] << "  mae "
              << agg.mean[1] << " +- " << agg.stderr_[1] << " nm\n";
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::vector<std::string> datasets;
  std::string out = "eval";
  std::string out_dir;
  std::string config;
};

int run_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() || a.datasets.empty()) {
    throw ConfigError("--checkpoint and --datasets are required");
  }
  Model model = load_checkpoint(a.checkpoint);
  std::vector<Dataset> sets;
  for (const auto& p : a.datasets) sets.push_back(read_dataset(p));
  const auto metrics = evaluate_extrapolation(model, sets);

  ReplicateOutcome outcome;
  outcome.seed = model.init_seed();
  outcome.per_size = metrics;
  nlohmann::json echo = {{"command", "eval"}, {"checkpoint", a.checkpoint}};
  const MetricsReport rep = aggregate_metrics({outcome, outcome}, echo.dump());

  const fs::path out_dir = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);
  fs::create_directories(out_dir);
  write_metrics_csv(out_dir / (a.out + ".metrics.csv"), rep);
  write_metrics_json(out_dir / (a.out + ".metrics.json"), rep);
  write_sidecar_log(out_dir / (a.out + ".metrics.csv"), echo);
  for (const auto& m : metrics) {
    std::cout << m.rows << "x" << m.cols << (m.extrapolation ? " (extrap)" : "") << "  r2 "
              << m.r2 << "  mae " << m.mae_nm << " nm  medae " << m.medae_nm << " nm\n";
  }
  return 0;
}

struct SampleArgs {
  int rows = 3, cols = 3;
  double spacing = 10.0, disorder = 0.1;
  double omega = 17.0, delta = 0.0;
  std::string basis = "z";
  int n = 1000;
  std::uint64_t seed = 0;
  std::string out = "snapshots.snap";
  std::string out_dir;
  std::string config;
};

int run_sample(const SampleArgs& a) {
  const Geometry geom = build_geometry(a.rows, a.cols, a.spacing, a.disorder,
                                       substream_seed(a.seed, streams::kGeometry));
  const CouplingMatrix j = couplings(geom);
  const auto gs = ground_state(j, a.omega, a.delta);
  Basis basis;
  if (a.basis == "z") basis = Basis::Z;
  else if (a.basis == "x") basis = Basis::X;
  else throw ConfigError("--basis must be z or x");
  const SnapshotSet snaps =
      sample_bitstrings(gs.state, basis, a.n, substream_seed(a.seed, streams::kSnapshotZ));

  const fs::path out_dir = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);
  fs::create_directories(out_dir);
  const fs::path out = out_dir / a.out;
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  write_snapshots(f, snaps);
  nlohmann::json echo = {{"command", "sample"}, {"rows", a.rows},   {"cols", a.cols},
                         {"omega", a.omega},    {"basis", a.basis}, {"n", a.n},
                         {"seed", a.seed}};
  write_sidecar_log(out, echo);
  std::cout << "wrote " << a.n << " " << a.basis << "-basis snapshots to " << out << "\n";
  return 0;
}

struct PhaseArgs {
  int rows = 4, cols = 4;
  double omega_min = 0.0, omega_max = 100.0;
  int omega_steps = 26;
  double a_min = 7.0, a_max = 12.0;
  int a_steps = 11;
  double delta = 0.0;
  int jobs = 1;
  std::string out = "phase_diagram.csv";
  std::string out_dir;
  std::string config;
};

int run_phase_diagram(const PhaseArgs& a) {
  if (a.omega_steps < 1 || a.a_steps < 1) throw ConfigError("need positive step counts");
  const fs::path out_dir = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);
  fs::create_directories(out_dir);
  const fs::path out = out_dir / a.out;

  struct Cell {
    double omega, spacing, order;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(a.omega_steps) * a.a_steps);
  parallel_for(cells.size(), a.jobs, [&](std::size_t idx) {
    const int wi = static_cast<int>(idx) % a.omega_steps;
    const int ai = static_cast<int>(idx) / a.omega_steps;
    const double omega =
        a.omega_steps == 1
            ? a.omega_min
            : a.omega_min + (a.omega_max - a.omega_min) * wi / (a.omega_steps - 1);
    const double spacing =
        a.a_steps == 1 ? a.a_min : a.a_min + (a.a_max - a.a_min) * ai / (a.a_steps - 1);
    // Ordered lattice: the sweep characterizes the clean model.
    const Geometry geom = build_geometry(a.rows, a.cols, spacing, 0.0, 0);
    const CouplingMatrix j = couplings(geom);
    const auto gs = ground_state(j, omega, a.delta);
    cells[idx] = {omega, spacing, staggered_order_parameter(gs.state, a.rows, a.cols)};
  });

  CsvWriter csv(out);
  csv.row({"omega_rad_per_us", "spacing_um", "staggered_order_parameter"});
  for (const Cell& c : cells) {
    csv.row({format_double(c.omega), format_double(c.spacing), format_double(c.order)});
  }
  nlohmann::json echo = {{"command", "phase-diagram"}, {"rows", a.rows},
                         {"cols", a.cols},             {"omega_steps", a.omega_steps},
                         {"a_steps", a.a_steps},       {"delta", a.delta}};
  write_sidecar_log(out, echo);
  std::cout << "wrote " << cells.size() << " grid cells to " << out << "\n";
  return 0;
}

struct VerifyArgs {
  int rows = 2, cols = 2;
  int trials = 100;
  double omega = 1.0;
  double delta = 0.0;
  double j_tol = 1e-3;
  double c_floor = 1e-8;
  std::string ensemble = "mixed";
  bool lemma = false;
  double lemma_omega_min = 2.0, lemma_omega_max = 30.0;
  std::uint64_t seed = 0;
  std::string out = "bijection_report.json";
  std::string out_dir;
  std::string config;
};

int run_verify_bijection(const VerifyArgs& a) {
  if (a.omega == 0.0) {
    std::cerr << "verify-bijection: omega must be nonzero; at zero field the map from "
                 "couplings to correlations is not one-to-one (degenerate classical "
                 "ground states share identical correlators)\n";
    return 2;
  }
  CouplingEnsemble ens;
  if (a.ensemble == "physical") ens = CouplingEnsemble::Physical;
  else if (a.ensemble == "synthetic") ens = CouplingEnsemble::Synthetic;
  else if (a.ensemble == "mixed") ens = CouplingEnsemble::Mixed;
  else throw ConfigError("--ensemble must be physical, synthetic, or mixed");

  const Topology topo{a.rows, a.cols};
  const InjectivityReport rep = verify_injectivity(topo, a.trials, a.omega, a.delta,
                                                   a.seed, ens, a.j_tol, a.c_floor);
  nlohmann::json out_json = nlohmann::json::parse(rep.to_json());
  if (a.lemma) {
    const LemmaStats stats =
        verify_lemma(topo, a.trials, a.lemma_omega_min, a.lemma_omega_max, a.delta, a.seed);
    out_json["lemma"] = nlohmann::json::parse(stats.to_json());
    const ZeroFieldCounterexample ce = zero_field_counterexample(topo);
    out_json["zero_field_counterexample"] = {
        {"gap", ce.gap},
        {"degenerate", ce.degenerate},
        {"c_distance_under_j_doubling", ce.c_distance_under_j_doubling}};
  }

  const fs::path out_dir = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);
  fs::create_directories(out_dir);
  const fs::path out = out_dir / a.out;
  std::ofstream f(out, std::ios::trunc);
  f << out_json.dump(2) << '\n';
  write_sidecar_log(out, {{"command", "verify-bijection"}, {"seed", a.seed}});

  std::cout << "injectivity: " << rep.trials << " trials, " << rep.violations
            << " violations, min |c1-c2| " << rep.min_c_distance << " over pairs with "
            << "|J1-J2| > " << rep.j_tol << "\n";
  if (a.lemma) {
    std::cout << "lemma: min gap " << out_json["lemma"]["min_gap"] << ", min amplitude "
              << out_json["lemma"]["min_amplitude"] << "\n";
    std::cout << "zero-field counterexample degenerate: "
              << out_json["zero_field_counterexample"]["degenerate"] << "\n";
  }
  return rep.violations == 0 ? 0 : 1;
}

struct InvertArgs {
  std::string target;
  double omega = 10.0;
  double delta = 0.0;
  double tol = 1e-10;
  double init_scale = 0.5;
  std::string init_file;
  std::string out = "recovered_couplings.json";
  std::string out_dir;
  std::string config;
};

int run_invert(const InvertArgs& a) {
  if (a.target.empty()) throw ConfigError("--target is required");
  std::ifstream in(a.target);
  if (!in) throw ConfigError("cannot open " + a.target);
  nlohmann::json tj;
  in >> tj;
  const int n = tj.at("n").get<int>();
  Eigen::MatrixXd c(n, n);
  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < n; ++col) c(r, col) = tj.at("c").at(r).at(col).get<double>();
  }

  CouplingMatrix init;
  init.n_atoms = n;
  init.j_rad_per_us.assign(static_cast<std::size_t>(n) * n, 0.0);
  if (!a.init_file.empty()) {
    std::ifstream jf(a.init_file);
    if (!jf) throw ConfigError("cannot open " + a.init_file);
    nlohmann::json jj;
    jf >> jj;
    for (int r = 0; r < n; ++r) {
      for (int col = 0; col < n; ++col) init.j(r, col) = jj.at("j").at(r).at(col).get<double>();
    }
  } else {
    // Uniform positive start at a fraction of the strong-field estimate
    // J ~ -4 omega^2 c / (1 - 16 c^2) is overkill here; a flat guess works.
    for (int r = 0; r < n; ++r) {
      for (int col = 0; col < n; ++col) {
        if (r != col) init.j(r, col) = std::max(0.1, a.init_scale);
      }
    }
  }

  InversionOptions opts;
  opts.tol = a.tol;
  const InversionResult res = invert_correlators(c, a.omega, a.delta, init, opts);

  nlohmann::json out_json;
  out_json["n"] = n;
  out_json["omega"] = a.omega;
  out_json["delta"] = a.delta;
  out_json["residual"] = res.residual;
  out_json["iterations"] = res.iterations;
  auto& jm = out_json["j"] = nlohmann::json::array();
  for (int r = 0; r < n; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int col = 0; col < n; ++col) row.push_back(res.j.j(r, col));
    jm.push_back(std::move(row));
  }
  const fs::path out_dir = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);
  fs::create_directories(out_dir);
  const fs::path out = out_dir / a.out;
  std::ofstream f(out, std::ios::trunc);
  f << out_json.dump(2) << '\n';
  write_sidecar_log(out, {{"command", "invert"}, {"target", a.target}});
  std::cout << "recovered couplings written to " << out << " (residual " << res.residual
            << ", " << res.iterations << " iterations)\n";
  return 0;
}

void add_common(CLI::App* cmd, std::string& out_dir, std::string& config) {
  cmd->add_option("--out-dir", out_dir,
                  "Output directory (default: $HAMLEARN_DATA_DIR or ./data)");
  cmd->add_option("--config", config, "JSON config file; CLI flags take precedence");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground-state data generation, correlator sampling, and coupling "
               "reconstruction for disordered transverse-field Ising arrays"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* cmd_gen = app.add_subcommand("gen", "Generate a graph dataset");
  cmd_gen->add_option("--sizes", gen.sizes, "Comma list of RxC sizes");
  cmd_gen->add_option("--count", gen.count, "Disorder realizations per size");
  cmd_gen->add_option("--case", gen.case_tag, "Scenario tag 1..6")->check(CLI::Range(1, 6));
  cmd_gen->add_option("--mode", gen.mode, "exact or snapshot:<n>[:z|:zx][:split]");
  cmd_gen->add_option("--omega", gen.omega, "Comma list of omega values (default history)");
  cmd_gen->add_option("--spacing", gen.spacing, "Nominal spacing, um");
  cmd_gen->add_option("--disorder", gen.disorder, "Disorder amplitude, um");
  cmd_gen->add_option("--delta", gen.delta, "Detuning, rad/us");
  cmd_gen->add_option("--c6", gen.c6, "Interaction constant, rad/us*um^6");
  cmd_gen->add_flag("--per-omega-graphs", gen.per_omega_graphs,
                    "One graph per (realization, omega) instead of stacked channels");
  cmd_gen->add_option("--format", gen.format, "binary or jsonl-full");
  cmd_gen->add_option("--seed", gen.seed, "Master seed");
  cmd_gen->add_option("--jobs", gen.jobs, "Worker threads");
  cmd_gen->add_option("--solver-cap", gen.solver_cap, "Maximum spin count");
  cmd_gen->add_option("--out", gen.out, "Output file name");
  add_common(cmd_gen, gen.out_dir, gen.config);

  TrainArgs tr;
  CLI::App* cmd_train = app.add_subcommand("train", "Train a model on a dataset");
  cmd_train->add_option("--dataset", tr.dataset, "Training dataset path")->required();
  cmd_train->add_option("--test-datasets", tr.test_datasets, "Datasets for evaluation");
  cmd_train->add_option("--case", tr.case_tag, "Scenario tag 1..6")->check(CLI::Range(1, 6));
  cmd_train->add_option("--epochs", tr.epochs, "Training epochs");
  cmd_train->add_option("--batch", tr.batch, "Graphs per batch");
  cmd_train->add_option("--replicates", tr.replicates, "Independent trainings");
  cmd_train->add_option("--lr-start", tr.lr_start, "Initial learning rate");
  cmd_train->add_option("--lr-end", tr.lr_end, "Final learning rate");
  cmd_train->add_option("--val-fraction", tr.val_fraction, "Validation split fraction");
  cmd_train->add_option("--weight-decay", tr.weight_decay, "AdamW decoupled weight decay");
  cmd_train->add_option("--targets", tr.targets, "nn or nn+nnn");
  cmd_train->add_option("--model", tr.model, "gnn or mlp-baseline");
  cmd_train->add_option("--seed", tr.seed, "Master seed");
  cmd_train->add_option("--jobs", tr.jobs, "Worker threads for replicates");
  cmd_train->add_option("--embed-dim", tr.embed_dim, "Node embedding dimension");
  cmd_train->add_option("--layers", tr.n_layers, "Message-passing layers");
  cmd_train->add_option("--msg-hidden", tr.msg_hidden, "Message net hidden width");
  cmd_train->add_option("--task-hidden", tr.task_hidden, "Task net hidden width");
  cmd_train->add_option("--out", tr.out, "Output name prefix");
  add_common(cmd_train, tr.out_dir, tr.config);

  EvalArgs ev;
  CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint on datasets");
  cmd_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  cmd_eval->add_option("--datasets", ev.datasets, "Dataset paths")->required();
  cmd_eval->add_option("--out", ev.out, "Output name prefix");
  add_common(cmd_eval, ev.out_dir, ev.config);

  SampleArgs sa;
  CLI::App* cmd_sample = app.add_subcommand("sample", "Draw measurement snapshots");
  cmd_sample->add_option("--rows", sa.rows);
  cmd_sample->add_option("--cols", sa.cols);
  cmd_sample->add_option("--spacing", sa.spacing, "Nominal spacing, um");
  cmd_sample->add_option("--disorder", sa.disorder, "Disorder amplitude, um");
  cmd_sample->add_option("--omega", sa.omega, "Transverse field, rad/us");
  cmd_sample->add_option("--delta", sa.delta, "Detuning, rad/us");
  cmd_sample->add_option("--basis", sa.basis, "z or x");
  cmd_sample->add_option("--n", sa.n, "Snapshot count");
  cmd_sample->add_option("--seed", sa.seed, "Master seed");
  cmd_sample->add_option("--out", sa.out, "Output file name");
  add_common(cmd_sample, sa.out_dir, sa.config);

  PhaseArgs ph;
  CLI::App* cmd_phase = app.add_subcommand("phase-diagram", "Order-parameter sweep");
  cmd_phase->add_option("--rows", ph.rows);
  cmd_phase->add_option("--cols", ph.cols);
  cmd_phase->add_option("--omega-min", ph.omega_min);
  cmd_phase->add_option("--omega-max", ph.omega_max);
  cmd_phase->add_option("--omega-steps", ph.omega_steps);
  cmd_phase->add_option("--a-min", ph.a_min, "Smallest spacing, um");
  cmd_phase->add_option("--a-max", ph.a_max, "Largest spacing, um");
  cmd_phase->add_option("--a-steps", ph.a_steps);
  cmd_phase->add_option("--delta", ph.delta, "Detuning, rad/us");
  cmd_phase->add_option("--jobs", ph.jobs, "Worker threads");
  cmd_phase->add_option("--out", ph.out, "Output CSV name");
  add_common(cmd_phase, ph.out_dir, ph.config);

  VerifyArgs vb;
  CLI::App* cmd_verify = app.add_subcommand(
      "verify-bijection", "Check coupling/correlation injectivity on random instances");
  cmd_verify->add_option("--rows", vb.rows);
  cmd_verify->add_option("--cols", vb.cols);
  cmd_verify->add_option("--trials", vb.trials);
  cmd_verify->add_option("--omega", vb.omega, "Transverse field, rad/us (nonzero)");
  cmd_verify->add_option("--delta", vb.delta);
  cmd_verify->add_option("--j-tol", vb.j_tol, "Coupling distinctness threshold");
  cmd_verify->add_option("--c-floor", vb.c_floor, "Correlation separation floor");
  cmd_verify->add_option("--ensemble", vb.ensemble, "physical, synthetic, or mixed");
  cmd_verify->add_flag("--lemma", vb.lemma, "Also run gap/support statistics");
  cmd_verify->add_option("--seed", vb.seed, "Master seed");
  cmd_verify->add_option("--out", vb.out, "Report file name");
  add_common(cmd_verify, vb.out_dir, vb.config);

  InvertArgs iv;
  CLI::App* cmd_invert = app.add_subcommand("invert", "Recover couplings from correlations");
  cmd_invert->add_option("--target", iv.target, "JSON file with {n, c: [[..]]}")->required();
  cmd_invert->add_option("--omega", iv.omega, "Transverse field, rad/us (nonzero)");
  cmd_invert->add_option("--delta", iv.delta);
  cmd_invert->add_option("--tol", iv.tol, "Convergence tolerance on the residual");
  cmd_invert->add_option("--init-scale", iv.init_scale, "Flat initial coupling guess");
  cmd_invert->add_option("--init-file", iv.init_file, "JSON file with {j: [[..]]}");
  cmd_invert->add_option("--out", iv.out, "Output file name");
  add_common(cmd_invert, iv.out_dir, iv.config);

  try {
    app.parse(argc, argv);

    if (cmd_gen->parsed()) {
      const ConfigOverlay cfg(gen.config);
      cfg.apply(*cmd_gen, "--sizes", gen.sizes);
      cfg.apply(*cmd_gen, "--count", gen.count);
      cfg.apply(*cmd_gen, "--case", gen.case_tag);
      cfg.apply(*cmd_gen, "--mode", gen.mode);
      cfg.apply(*cmd_gen, "--omega", gen.omega);
      cfg.apply(*cmd_gen, "--spacing", gen.spacing);
      cfg.apply(*cmd_gen, "--disorder", gen.disorder);
      cfg.apply(*cmd_gen, "--delta", gen.delta);
      cfg.apply(*cmd_gen, "--seed", gen.seed);
      cfg.apply(*cmd_gen, "--jobs", gen.jobs);
      cfg.apply(*cmd_gen, "--out", gen.out);
      return run_gen(gen);
    }
    if (cmd_train->parsed()) {
      const ConfigOverlay cfg(tr.config);
      cfg.apply(*cmd_train, "--case", tr.case_tag);
      cfg.apply(*cmd_train, "--epochs", tr.epochs);
      cfg.apply(*cmd_train, "--batch", tr.batch);
      cfg.apply(*cmd_train, "--replicates", tr.replicates);
      cfg.apply(*cmd_train, "--lr-start", tr.lr_start);
      cfg.apply(*cmd_train, "--lr-end", tr.lr_end);
      cfg.apply(*cmd_train, "--targets", tr.targets);
      cfg.apply(*cmd_train, "--model", tr.model);
      cfg.apply(*cmd_train, "--seed", tr.seed);
      cfg.apply(*cmd_train, "--jobs", tr.jobs);
      return run_train(tr);
    }
    if (cmd_eval->parsed()) return run_eval(ev);
    if (cmd_sample->parsed()) return run_sample(sa);
    if (cmd_phase->parsed()) return run_phase_diagram(ph);
    if (cmd_verify->parsed()) return run_verify_bijection(vb);
    if (cmd_invert->parsed()) return run_invert(iv);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
