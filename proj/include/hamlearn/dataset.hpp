#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hamlearn/lattice.hpp"
#include "hamlearn/spectral.hpp"

namespace hamlearn {

// Named RNG substreams hanging off a master seed. Every stochastic stage
// derives its generator as substream_seed chains starting from one of these.
namespace streams {
inline constexpr std::uint64_t kGeometry = 1;
inline constexpr std::uint64_t kSnapshotZ = 2;
inline constexpr std::uint64_t kSnapshotX = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kValSplit = 5;
inline constexpr std::uint64_t kShuffle = 6;
inline constexpr std::uint64_t kInit = 7;
inline constexpr std::uint64_t kReplicate = 8;
}  // namespace streams

// Ordered transverse-field values over which sample features are stacked.
struct OmegaHistory {
  std::vector<double> values;

  // Ten equally spaced values from -100 to +100 rad/us (step 200/9).
  static OmegaHistory default_history();
  std::size_t size() const { return values.size(); }
};

// Input-feature scenarios. Channels are stacked over the omega history;
// "ones" marks architectural edges/nodes with no physical payload.
//   1: nodes M, NN edges nominal spacing, no NNN edges
//   2: nodes M, NN edges chi_z, no NNN edges
//   3: nodes M, NN edges chi_z, NNN edges chi_z
//   4: nodes M, NN edges chi_z, NNN edges ones
//   5: nodes ones, NN edges chi_z, NNN edges ones
//   6: nodes M, NN and NNN edges carry chi_z then chi_x (double width)
bool case_has_nnn_edges(int case_tag);
int case_node_channels(int case_tag, int n_omega);
int case_edge_channels(int case_tag, int n_omega);

struct Provenance {
  bool exact = true;
  int n_snapshots = 0;

  std::string to_string() const;
  static Provenance from_string(const std::string& s);
};

// One training example: a disorder realization with features stacked over the
// omega history and per-edge displacement targets.
struct GraphSample {
  int rows = 0;
  int cols = 0;
  int case_tag = 0;
  Provenance provenance;
  std::uint64_t realization_seed = 0;

  Eigen::MatrixXd node_features;       // n_nodes x node channels
  Eigen::MatrixXd nn_edge_features;    // |NN| x edge channels
  Eigen::MatrixXd nnn_edge_features;   // |NNN| x edge channels; 0 rows if absent
  Eigen::VectorXd nn_targets_um;       // R - nominal spacing per NN edge
  Eigen::VectorXd nnn_targets_um;      // R - nominal sqrt(2)*spacing per NNN edge

  int n_nodes() const { return rows * cols; }
  bool has_nnn_edges() const { return nnn_edge_features.rows() > 0; }
};

GraphSample assemble_graph(int case_tag, const Geometry& geom,
                           const std::vector<ObservableSet>& per_omega,
                           const AdjacencySets& adj);

struct GenerationMode {
  enum class Kind { Exact, Snapshot } kind = Kind::Exact;
  int n_snapshots = 0;
  bool with_x = false;  // draw X-basis snapshots too (required for case 6)
  // Equal budget draws n_snapshots per basis; split halves it between them.
  enum class Budget { EqualIndependent, SplitHalf } budget = Budget::EqualIndependent;

  std::string to_string() const;
  static GenerationMode parse(const std::string& s);
};

struct DatasetSpec {
  std::vector<std::pair<int, int>> sizes;  // (rows, cols)
  int per_size_count = 0;
  OmegaHistory omega = OmegaHistory::default_history();
  int case_tag = 3;
  GenerationMode mode;
  std::uint64_t master_seed = 0;
  double spacing_um = 10.0;
  double disorder_amplitude_um = 0.1;
  double delta = 0.0;
  double c6 = kDefaultC6;
  bool per_omega_graphs = false;  // one sample per (realization, omega)
  GroundStateOptions solver;
};

struct DatasetManifest {
  int format_version = 1;
  int case_tag = 0;
  std::vector<double> omega_values;
  std::vector<std::pair<int, int>> sizes;
  std::vector<int> counts;
  std::string mode;
  std::uint64_t master_seed = 0;
  bool per_omega_graphs = false;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<GraphSample> samples;
};

Dataset generate_dataset(const DatasetSpec& spec, int jobs = 1);

// Shares the per-(realization, omega) ground-state solves across several
// scenario tags; the solves dominate generation cost.
std::vector<Dataset> generate_datasets(const DatasetSpec& spec,
                                       const std::vector<int>& cases, int jobs = 1);

// Disjoint split by realization, stratified per size. n_test per size is
// round(count * test_fraction) and must land strictly inside (0, count).
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                          std::uint64_t seed);

// On-disk layout: <path> is JSON Lines, first line the manifest, then one
// record per sample whose tensors reference <path stem>.bin (little-endian
// float64, offset + count per tensor). full_json inlines tensors as decimal
// arrays instead and writes no blob.
void write_dataset(const std::filesystem::path& path, const Dataset& ds,
                   bool full_json = false);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace hamlearn
