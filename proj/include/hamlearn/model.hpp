#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hamlearn/autodiff.hpp"
#include "hamlearn/dataset.hpp"

namespace hamlearn {

struct ModelConfig {
  int case_tag = 3;
  int node_in = 0;   // raw node feature width
  int edge_in = 0;   // raw edge feature width
  int embed_dim = 32;
  int n_layers = 4;
  int msg_hidden = 64;   // two hidden layers in the message network
  int task_hidden = 64;  // two hidden layers in the task network
  std::vector<autodiff::Reduce> aggregators = {autodiff::Reduce::Mean, autodiff::Reduce::Min,
                                               autodiff::Reduce::Max, autodiff::Reduce::Sum};
  bool residual = true;       // layer-level skip connection
  bool mlp_baseline = false;  // task network on edge features alone, no graph pass
  bool predict_nnn = false;   // shared task network also reads out NNN edges
};

// Several graphs merged into one block-diagonal graph. Node slots are
// appended per sample in lattice order; node_rank carries that order so task
// inputs keep a label-independent endpoint convention.
struct GraphBatch {
  int n_nodes = 0;
  Eigen::MatrixXd node_features;
  std::vector<int> edge_src, edge_dst;  // directed, both orientations
  Eigen::MatrixXd edge_features;
  std::vector<int> node_rank;

  std::vector<int> task_i, task_j;  // undirected readout edges
  Eigen::MatrixXd task_edge_features;
  Eigen::VectorXd targets_um;
  std::vector<int> sample_of_task;
  std::vector<std::uint8_t> task_is_nnn;

  static GraphBatch from_samples(const std::vector<const GraphSample*>& samples,
                                 bool include_nnn_targets);
};

// PNA-style message passing stack with a shared per-edge readout network.
// The same weights apply to any graph size.
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t init_seed);

  // Node embeddings after the full message-passing stack (n_nodes x embed_dim).
  // Not available for the baseline configuration.
  autodiff::Var embed(autodiff::Tape& tape, const GraphBatch& batch);

  // Predictions for every task row of the batch, as an (n_task x 1) node on
  // the tape.
  autodiff::Var predict(autodiff::Tape& tape, const GraphBatch& batch);

  std::vector<autodiff::Parameter>& parameters() { return params_; }
  const std::vector<autodiff::Parameter>& parameters() const { return params_; }
  const ModelConfig& config() const { return cfg_; }
  std::uint64_t init_seed() const { return init_seed_; }

  // Training metadata persisted with the checkpoint.
  std::map<int, long> degree_histogram;          // node degree -> count
  std::vector<std::pair<int, int>> trained_sizes;

 private:
  friend Model load_checkpoint(const std::filesystem::path& path);
  autodiff::Parameter& p(const std::string& name);
  void build_parameters();

  ModelConfig cfg_;
  std::uint64_t init_seed_ = 0;
  std::vector<autodiff::Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

// JSON manifest (config, seed, degree histogram, tensor directory) plus a
// .bin blob of little-endian float64 tensors.
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace hamlearn
