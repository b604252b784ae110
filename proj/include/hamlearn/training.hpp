#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hamlearn/dataset.hpp"
#include "hamlearn/model.hpp"
#include "hamlearn/optim.hpp"

namespace hamlearn {

struct TrainConfig {
  int case_tag = 3;
  int epochs = 550;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double lr_start = 5e-3;
  double lr_end = 2.5e-4;
  bool predict_nnn = false;  // NN-only vs NN+NNN targets, one shared readout
  bool mlp_baseline = false;
  double val_fraction = 0.1;
  AdamWConfig hyper;
  // Architecture knobs; node_in/edge_in are filled from the dataset.
  int embed_dim = 32;
  int n_layers = 4;
  int msg_hidden = 64;
  int task_hidden = 64;
  bool residual = true;
};

// Squared L2 norm of (pred - target), summed over all entries.
double loss_mse(std::span<const double> predictions, std::span<const double> targets);

double metric_r2(std::span<const double> targets, std::span<const double> predictions);
double metric_mae_nm(std::span<const double> targets_um, std::span<const double> predictions_um);
double metric_medae_nm(std::span<const double> targets_um, std::span<const double> predictions_um);

struct EpochLog {
  double train_loss = 0.0;  // per-edge mean squared error, um^2
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> curve;
};

TrainResult train(const TrainConfig& cfg, const Dataset& train_ds);

void write_loss_curve_csv(const std::filesystem::path& path, const std::vector<EpochLog>& curve);

struct SizeMetrics {
  int rows = 0;
  int cols = 0;
  double r2 = 0.0;
  double mae_nm = 0.0;
  double medae_nm = 0.0;
  std::size_t n_edges = 0;
  bool extrapolation = false;  // size absent from the checkpoint's training set

  int n_atoms() const { return rows * cols; }
};

// Pools edge targets/predictions per cluster size across the given test sets.
std::vector<SizeMetrics> evaluate_extrapolation(Model& model,
                                                const std::vector<Dataset>& test_sets);

struct ReplicateOutcome {
  bool failed = false;
  std::string error;
  std::uint64_t seed = 0;
  std::vector<SizeMetrics> per_size;
};

struct AggregateMetric {
  int rows = 0;
  int cols = 0;
  bool extrapolation = false;
  // index 0: r2 (dimensionless), 1: mae (nm), 2: medae (nm)
  std::array<double, 3> mean{};
  std::array<double, 3> stderr_{};
  std::array<std::vector<double>, 3> replicates;
};

struct MetricsReport {
  std::vector<ReplicateOutcome> replicates;
  std::vector<AggregateMetric> aggregate;
  std::string config_echo_json;
};

MetricsReport aggregate_metrics(const std::vector<ReplicateOutcome>& outcomes,
                                const std::string& config_echo_json);

// k independent trainings with the given seeds (pass identical seeds to get
// identical replicates). Failures are recorded per replicate, not thrown.
MetricsReport run_replicates(const TrainConfig& cfg, const Dataset& train_ds,
                             const std::vector<Dataset>& test_sets,
                             const std::vector<std::uint64_t>& seeds, int jobs = 1);

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);
void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace hamlearn
