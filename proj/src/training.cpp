#include "hamlearn/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/parallel.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

double loss_mse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw ContractError("loss_mse: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    acc += d * d;
  }
  return acc;
}

double metric_r2(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.size() != predictions.size()) throw ContractError("metric_r2: length mismatch");
  if (targets.size() < 2) throw UndefinedMetricError("metric_r2: need at least two targets");
  const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) /
                      static_cast<double>(targets.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    ss_res += (targets[i] - predictions[i]) * (targets[i] - predictions[i]);
    ss_tot += (targets[i] - mean) * (targets[i] - mean);
  }
  if (ss_tot == 0.0) throw UndefinedMetricError("metric_r2: zero target variance");
  return 1.0 - ss_res / ss_tot;
}

double metric_mae_nm(std::span<const double> targets_um,
                     std::span<const double> predictions_um) {
  if (targets_um.size() != predictions_um.size() || targets_um.empty()) {
    throw ContractError("metric_mae_nm: bad lengths");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < targets_um.size(); ++i) {
    acc += std::abs(predictions_um[i] - targets_um[i]);
  }
  return 1000.0 * acc / static_cast<double>(targets_um.size());
}

double metric_medae_nm(std::span<const double> targets_um,
                       std::span<const double> predictions_um) {
  if (targets_um.size() != predictions_um.size() || targets_um.empty()) {
    throw ContractError("metric_medae_nm: bad lengths");
  }
  std::vector<double> err(targets_um.size());
  for (std::size_t i = 0; i < targets_um.size(); ++i) {
    err[i] = std::abs(predictions_um[i] - targets_um[i]);
  }
  std::sort(err.begin(), err.end());
  const std::size_t n = err.size();
  const double med = (n % 2 == 1) ? err[n / 2] : 0.5 * (err[n / 2 - 1] + err[n / 2]);
  return 1000.0 * med;
}

namespace {

std::map<int, long> degree_histogram_of(const std::vector<const GraphSample*>& samples) {
  std::map<int, long> hist;
  for (const GraphSample* g : samples) {
    std::vector<int> degree(g->n_nodes(), 0);
    const AdjacencySets adj = adjacency(g->rows, g->cols);
    for (const auto& [i, j] : adj.nn_edges) {
      ++degree[i];
      ++degree[j];
    }
    if (g->has_nnn_edges()) {
      for (const auto& [i, j] : adj.nnn_edges) {
        ++degree[i];
        ++degree[j];
      }
    }
    for (const int d : degree) ++hist[d];
  }
  return hist;
}

double batched_loss(Model& model, const std::vector<const GraphSample*>& samples,
                    int batch_size, bool predict_nnn) {
  double sse = 0.0;
  std::size_t count = 0;
  for (std::size_t at = 0; at < samples.size(); at += batch_size) {
    const std::size_t end = std::min(samples.size(), at + batch_size);
    const std::vector<const GraphSample*> chunk(samples.begin() + at, samples.begin() + end);
    const GraphBatch batch = GraphBatch::from_samples(chunk, predict_nnn);
    autodiff::Tape tape;
    const autodiff::Var pred = model.predict(tape, batch);
    const std::span<const double> p{pred.value().data(),
                                    static_cast<std::size_t>(pred.value().size())};
    const std::span<const double> y{batch.targets_um.data(),
                                    static_cast<std::size_t>(batch.targets_um.size())};
    sse += loss_mse(p, y);
    count += y.size();
  }
  return count > 0 ? sse / static_cast<double>(count) : 0.0;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& train_ds) {
  if (cfg.epochs < 1 || cfg.batch_size < 1) {
    throw ConfigError("train: epochs and batch size must be >= 1");
  }
  if (train_ds.manifest.case_tag != cfg.case_tag) {
    throw ContractError("train: dataset case " + std::to_string(train_ds.manifest.case_tag) +
                        " does not match config case " + std::to_string(cfg.case_tag));
  }
  if (train_ds.samples.empty()) throw ConfigError("train: empty dataset");
  if (cfg.predict_nnn && !case_has_nnn_edges(cfg.case_tag)) {
    throw ConfigError("train: NN+NNN targets need a case with NNN edges");
  }

  ModelConfig mc;
  mc.case_tag = cfg.case_tag;
  mc.node_in = static_cast<int>(train_ds.samples[0].node_features.cols());
  mc.edge_in = static_cast<int>(train_ds.samples[0].nn_edge_features.cols());
  mc.embed_dim = cfg.embed_dim;
  mc.n_layers = cfg.n_layers;
  mc.msg_hidden = cfg.msg_hidden;
  mc.task_hidden = cfg.task_hidden;
  mc.residual = cfg.residual;
  mc.mlp_baseline = cfg.mlp_baseline;
  mc.predict_nnn = cfg.predict_nnn;
  Model model(mc, cfg.seed);

  // Validation split: stratified tail fraction of the training graphs.
  std::vector<const GraphSample*> train_ptrs, val_ptrs;
  {
    std::map<std::pair<int, int>, std::vector<const GraphSample*>> by_size;
    for (const auto& g : train_ds.samples) by_size[{g.rows, g.cols}].push_back(&g);
    std::uint64_t size_idx = 0;
    for (auto& [size, ptrs] : by_size) {
      Rng g(substream_seed(substream_seed(cfg.seed, streams::kValSplit), size_idx++));
      shuffle(ptrs, g);
      std::size_t n_val = static_cast<std::size_t>(
          std::llround(ptrs.size() * cfg.val_fraction));
      if (ptrs.size() > 1 && n_val == ptrs.size()) n_val = ptrs.size() - 1;
      for (std::size_t i = 0; i < ptrs.size(); ++i) {
        (i < n_val ? val_ptrs : train_ptrs).push_back(ptrs[i]);
      }
    }
  }
  if (train_ptrs.empty()) throw ConfigError("train: no graphs left after validation split");

  model.degree_histogram = degree_histogram_of(train_ptrs);
  {
    std::map<std::pair<int, int>, int> sizes;
    for (const GraphSample* g : train_ptrs) ++sizes[{g->rows, g->cols}];
    for (const auto& [size, count] : sizes) model.trained_sizes.push_back(size);
  }

  AdamW opt(cfg.hyper);
  TrainResult result{std::move(model), {}};
  result.curve.reserve(cfg.epochs);

  std::vector<std::size_t> order(train_ptrs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg.epochs, cfg.lr_start, cfg.lr_end);
    Rng g(substream_seed(substream_seed(cfg.seed, streams::kShuffle),
                         static_cast<std::uint64_t>(epoch)));
    shuffle(order, g);

    double sse = 0.0;
    std::size_t edge_count = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), at + cfg.batch_size);
      std::vector<const GraphSample*> chunk;
      chunk.reserve(end - at);
      for (std::size_t k = at; k < end; ++k) chunk.push_back(train_ptrs[order[k]]);
      const GraphBatch batch = GraphBatch::from_samples(chunk, cfg.predict_nnn);

      autodiff::Tape tape;
      const autodiff::Var pred = result.model.predict(tape, batch);
      const autodiff::Var loss =
          tape.sum_squares(tape.sub(pred, tape.constant(batch.targets_um)));
      const double batch_sse = loss.value()(0, 0);
      if (!std::isfinite(batch_sse)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", batch offset " << at
            << ", lr " << lr << ", case " << cfg.case_tag;
        throw SolverError(msg.str());
      }
      sse += batch_sse;
      edge_count += static_cast<std::size_t>(batch.targets_um.size());

      for (auto& p : result.model.parameters()) p.zero_grad();
      tape.backward(loss);
      opt.step(result.model.parameters(), lr);
    }

    EpochLog log;
    log.lr = lr;
    log.train_loss = edge_count > 0 ? sse / static_cast<double>(edge_count) : 0.0;
    log.val_loss = val_ptrs.empty()
                       ? log.train_loss
                       : batched_loss(result.model, val_ptrs, cfg.batch_size, cfg.predict_nnn);
    result.curve.push_back(log);
  }
  return result;
}

void write_loss_curve_csv(const std::filesystem::path& path,
                          const std::vector<EpochLog>& curve) {
  CsvWriter csv(path);
  csv.row({"epoch", "train_loss_um2", "val_loss_um2", "lr"});
  for (std::size_t e = 0; e < curve.size(); ++e) {
    csv.row({std::to_string(e), format_double(curve[e].train_loss),
             format_double(curve[e].val_loss), format_double(curve[e].lr)});
  }
}

std::vector<SizeMetrics> evaluate_extrapolation(Model& model,
                                                const std::vector<Dataset>& test_sets) {
  struct Pool {
    std::vector<double> targets, predictions;
  };
  std::map<std::pair<int, int>, Pool> pools;

  for (const Dataset& ds : test_sets) {
    if (ds.manifest.case_tag != model.config().case_tag) {
      throw ContractError("evaluate_extrapolation: dataset case does not match checkpoint");
    }
    for (const GraphSample& g : ds.samples) {
      const std::vector<const GraphSample*> one{&g};
      const GraphBatch batch = GraphBatch::from_samples(one, model.config().predict_nnn);
      autodiff::Tape tape;
      const autodiff::Var pred = model.predict(tape, batch);
      Pool& pool = pools[{g.rows, g.cols}];
      for (Eigen::Index r = 0; r < batch.targets_um.size(); ++r) {
        pool.targets.push_back(batch.targets_um[r]);
        pool.predictions.push_back(pred.value()(r, 0));
      }
    }
  }

  std::vector<SizeMetrics> out;
  for (const auto& [size, pool] : pools) {
    SizeMetrics m;
    m.rows = size.first;
    m.cols = size.second;
    m.n_edges = pool.targets.size();
    m.r2 = metric_r2(pool.targets, pool.predictions);
    m.mae_nm = metric_mae_nm(pool.targets, pool.predictions);
    m.medae_nm = metric_medae_nm(pool.targets, pool.predictions);
    m.extrapolation =
        std::find(model.trained_sizes.begin(), model.trained_sizes.end(), size) ==
        model.trained_sizes.end();
    out.push_back(m);
  }
  std::sort(out.begin(), out.end(), [](const SizeMetrics& a, const SizeMetrics& b) {
    return a.n_atoms() != b.n_atoms() ? a.n_atoms() < b.n_atoms()
                                      : std::pair(a.rows, a.cols) < std::pair(b.rows, b.cols);
  });
  return out;
}

MetricsReport aggregate_metrics(const std::vector<ReplicateOutcome>& outcomes,
                                const std::string& config_echo_json) {
  MetricsReport report;
  report.replicates = outcomes;
  report.config_echo_json = config_echo_json;

  std::map<std::pair<int, int>, AggregateMetric> agg;
  for (const ReplicateOutcome& rep : outcomes) {
    if (rep.failed) continue;
    for (const SizeMetrics& m : rep.per_size) {
      AggregateMetric& a = agg[{m.rows, m.cols}];
      a.rows = m.rows;
      a.cols = m.cols;
      a.extrapolation = m.extrapolation;
      a.replicates[0].push_back(m.r2);
      a.replicates[1].push_back(m.mae_nm);
      a.replicates[2].push_back(m.medae_nm);
    }
  }
  for (auto& [size, a] : agg) {
    for (int k = 0; k < 3; ++k) {
      const auto& v = a.replicates[k];
      if (v.empty()) continue;
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) /
                          static_cast<double>(v.size());
      a.mean[k] = mean;
      if (v.size() > 1) {
        double var = 0.0;
        for (const double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size() - 1);
        a.stderr_[k] = std::sqrt(var / static_cast<double>(v.size()));
      }
    }
    report.aggregate.push_back(a);
  }
  std::sort(report.aggregate.begin(), report.aggregate.end(),
            [](const AggregateMetric& a, const AggregateMetric& b) {
              const int na = a.rows * a.cols, nb = b.rows * b.cols;
              return na != nb ? na < nb : std::pair(a.rows, a.cols) < std::pair(b.rows, b.cols);
            });
  return report;
}

MetricsReport run_replicates(const TrainConfig& cfg, const Dataset& train_ds,
                             const std::vector<Dataset>& test_sets,
                             const std::vector<std::uint64_t>& seeds, int jobs) {
  if (seeds.size() < 2) throw ConfigError("run_replicates: need k >= 2 seeds");

  std::vector<ReplicateOutcome> outcomes(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t r) {
    ReplicateOutcome& out = outcomes[r];
    out.seed = seeds[r];
    try {
      TrainConfig rep_cfg = cfg;
      rep_cfg.seed = seeds[r];
      TrainResult res = train(rep_cfg, train_ds);
      out.per_size = evaluate_extrapolation(res.model, test_sets);
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
  });

  nlohmann::json echo;
  echo["case"] = cfg.case_tag;
  echo["epochs"] = cfg.epochs;
  echo["batch_size"] = cfg.batch_size;
  echo["lr_start"] = cfg.lr_start;
  echo["lr_end"] = cfg.lr_end;
  echo["predict_nnn"] = cfg.predict_nnn;
  echo["mlp_baseline"] = cfg.mlp_baseline;
  echo["replicate_seeds"] = seeds;
  return aggregate_metrics(outcomes, echo.dump());
}

namespace {

const char* kMetricNames[3] = {"r2", "mae", "medae"};
const char* kMetricUnits[3] = {"dimensionless", "nm", "nm"};

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
  CsvWriter csv(path);
  std::size_t max_reps = 0;
  for (const auto& a : report.aggregate) {
    for (int k = 0; k < 3; ++k) max_reps = std::max(max_reps, a.replicates[k].size());
  }
  std::vector<std::string> header = {"size",  "n_atoms",      "extrapolation",
                                     "metric", "unit",        "mean", "stderr"};
  for (std::size_t r = 0; r < max_reps; ++r) header.push_back("replicate_" + std::to_string(r));
  csv.row(header);
  for (const auto& a : report.aggregate) {
    for (int k = 0; k < 3; ++k) {
      std::vector<std::string> row = {
          std::to_string(a.rows) + "x" + std::to_string(a.cols),
          std::to_string(a.rows * a.cols),
          a.extrapolation ? "1" : "0",
          kMetricNames[k],
          kMetricUnits[k],
          format_double(a.mean[k]),
          format_double(a.stderr_[k])};
      for (const double v : a.replicates[k]) row.push_back(format_double(v));
      csv.row(row);
    }
  }
}

void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report) {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(report.config_echo_json.empty()
                                          ? std::string("{}")
                                          : report.config_echo_json);
  auto& reps = j["replicates"] = nlohmann::json::array();
  for (const auto& rep : report.replicates) {
    nlohmann::json r;
    r["seed"] = rep.seed;
    r["failed"] = rep.failed;
    if (rep.failed) r["error"] = rep.error;
    auto& sizes = r["per_size"] = nlohmann::json::array();
    for (const auto& m : rep.per_size) {
      sizes.push_back({{"rows", m.rows},
                       {"cols", m.cols},
                       {"r2", m.r2},
                       {"mae_nm", m.mae_nm},
                       {"medae_nm", m.medae_nm},
                       {"n_edges", m.n_edges},
                       {"extrapolation", m.extrapolation}});
    }
    reps.push_back(std::move(r));
  }
  auto& agg = j["aggregate"] = nlohmann::json::array();
  for (const auto& a : report.aggregate) {
    nlohmann::json row;
    row["rows"] = a.rows;
    row["cols"] = a.cols;
    row["extrapolation"] = a.extrapolation;
    for (int k = 0; k < 3; ++k) {
      row[kMetricNames[k]] = {{"mean", a.mean[k]},
                              {"stderr", a.stderr_[k]},
                              {"replicates", a.replicates[k]},
                              {"unit", kMetricUnits[k]}};
    }
    agg.push_back(std::move(row));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("write_metrics_json: cannot open " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace hamlearn
