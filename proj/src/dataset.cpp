#include "hamlearn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/parallel.hpp"
#include "hamlearn/rng.hpp"
#include "hamlearn/sampler.hpp"

namespace hamlearn {

OmegaHistory OmegaHistory::default_history() {
  OmegaHistory h;
  for (int k = 0; k < 10; ++k) h.values.push_back((-900.0 + 200.0 * k) / 9.0);
  return h;
}

bool case_has_nnn_edges(int case_tag) {
  switch (case_tag) {
    case 1:
    case 2:
      return false;
    case 3:
    case 4:
    case 5:
    case 6:
      return true;
    default:
      throw ConfigError("unknown case tag " + std::to_string(case_tag));
  }
}

int case_node_channels(int case_tag, int n_omega) {
  case_has_nnn_edges(case_tag);  // validates the tag
  return n_omega;
}

int case_edge_channels(int case_tag, int n_omega) {
  case_has_nnn_edges(case_tag);
  return case_tag == 6 ? 2 * n_omega : n_omega;
}

std::string Provenance::to_string() const {
  return exact ? "exact" : "snapshot(" + std::to_string(n_snapshots) + ")";
}

Provenance Provenance::from_string(const std::string& s) {
  Provenance p;
  if (s == "exact") return p;
  if (s.rfind("snapshot(", 0) == 0 && s.back() == ')') {
    p.exact = false;
    p.n_snapshots = std::stoi(s.substr(9, s.size() - 10));
    return p;
  }
  throw ConfigError("bad provenance string: " + s);
}

std::string GenerationMode::to_string() const {
  if (kind == Kind::Exact) return "exact";
  std::string s = "snapshot:" + std::to_string(n_snapshots) + (with_x ? ":zx" : ":z");
  if (budget == Budget::SplitHalf) s += ":split";
  return s;
}

GenerationMode GenerationMode::parse(const std::string& s) {
  GenerationMode m;
  if (s == "exact") return m;
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  if (parts.empty() || parts[0] != "snapshot" || parts.size() < 2 || parts.size() > 4) {
    throw ConfigError("bad mode string: " + s + " (want exact or snapshot:<n>[:z|:zx][:split])");
  }
  m.kind = Kind::Snapshot;
  m.n_snapshots = std::stoi(parts[1]);
  if (m.n_snapshots < 1) throw ConfigError("snapshot count must be >= 1");
  for (std::size_t i = 2; i < parts.size(); ++i) {
    if (parts[i] == "z") m.with_x = false;
    else if (parts[i] == "zx") m.with_x = true;
    else if (parts[i] == "split") m.budget = Budget::SplitHalf;
    else throw ConfigError("bad mode token: " + parts[i]);
  }
  return m;
}

namespace {

Eigen::VectorXd edge_displacements_um(const Geometry& geom,
                                      const std::vector<std::pair<int, int>>& edges,
                                      double nominal_um) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out[static_cast<Eigen::Index>(e)] =
        pair_distance_um(geom, edges[e].first, edges[e].second) - nominal_um;
  }
  return out;
}

}  // namespace

GraphSample assemble_graph(int case_tag, const Geometry& geom,
                           const std::vector<ObservableSet>& per_omega,
                           const AdjacencySets& adj) {
  if (per_omega.empty()) throw ContractError("assemble_graph: empty omega history");
  const bool nnn = case_has_nnn_edges(case_tag);
  const int n_omega = static_cast<int>(per_omega.size());
  const int n_nodes = geom.n_atoms();
  const int n_nn = static_cast<int>(adj.nn_edges.size());
  const int n_nnn = static_cast<int>(adj.nnn_edges.size());

  for (const auto& obs : per_omega) {
    if (static_cast<int>(obs.magnetization_z.size()) != n_nodes ||
        static_cast<int>(obs.chi_z_nn.size()) != n_nn ||
        static_cast<int>(obs.chi_z_nnn.size()) != n_nnn) {
      throw ContractError("assemble_graph: observable set does not match geometry");
    }
    if (case_tag == 6 && (!obs.chi_x_nn || !obs.chi_x_nnn)) {
      throw ContractError("assemble_graph: case 6 needs X-basis correlators");
    }
  }

  GraphSample g;
  g.rows = geom.rows;
  g.cols = geom.cols;
  g.case_tag = case_tag;
  g.realization_seed = geom.seed;

  const int node_ch = case_node_channels(case_tag, n_omega);
  const int edge_ch = case_edge_channels(case_tag, n_omega);

  g.node_features.setZero(n_nodes, node_ch);
  if (case_tag == 5) {
    g.node_features.setOnes();
  } else {
    for (int w = 0; w < n_omega; ++w) {
      for (int i = 0; i < n_nodes; ++i) g.node_features(i, w) = per_omega[w].magnetization_z[i];
    }
  }

  g.nn_edge_features.setZero(n_nn, edge_ch);
  if (case_tag == 1) {
    g.nn_edge_features.setConstant(geom.nominal_spacing_um);
  } else {
    for (int w = 0; w < n_omega; ++w) {
      for (int e = 0; e < n_nn; ++e) g.nn_edge_features(e, w) = per_omega[w].chi_z_nn[e];
      if (case_tag == 6) {
        for (int e = 0; e < n_nn; ++e) {
          g.nn_edge_features(e, n_omega + w) = (*per_omega[w].chi_x_nn)[e];
        }
      }
    }
  }

  if (nnn) {
    g.nnn_edge_features.setZero(n_nnn, edge_ch);
    if (case_tag == 4 || case_tag == 5) {
      g.nnn_edge_features.setOnes();
    } else {
      for (int w = 0; w < n_omega; ++w) {
        for (int e = 0; e < n_nnn; ++e) g.nnn_edge_features(e, w) = per_omega[w].chi_z_nnn[e];
        if (case_tag == 6) {
          for (int e = 0; e < n_nnn; ++e) {
            g.nnn_edge_features(e, n_omega + w) = (*per_omega[w].chi_x_nnn)[e];
          }
        }
      }
    }
  } else {
    g.nnn_edge_features.resize(0, edge_ch);
  }

  g.nn_targets_um = edge_displacements_um(geom, adj.nn_edges, geom.nominal_spacing_um);
  g.nnn_targets_um = edge_displacements_um(geom, adj.nnn_edges,
                                           std::sqrt(2.0) * geom.nominal_spacing_um);
  return g;
}

namespace {

struct RealizationData {
  Geometry geom;
  std::vector<ObservableSet> per_omega;
};

RealizationData solve_realization(const DatasetSpec& spec, int size_idx, int realization) {
  const auto [rows, cols] = spec.sizes[size_idx];
  const std::uint64_t geom_seed = substream_seed(
      substream_seed(substream_seed(spec.master_seed, streams::kGeometry),
                     static_cast<std::uint64_t>(size_idx)),
      static_cast<std::uint64_t>(realization));

  RealizationData data;
  data.geom = build_geometry(rows, cols, spec.spacing_um, spec.disorder_amplitude_um, geom_seed);
  const CouplingMatrix j = couplings(data.geom, spec.c6);
  const AdjacencySets adj = adjacency(rows, cols);

  const bool snapshot = spec.mode.kind == GenerationMode::Kind::Snapshot;
  int n_z = spec.mode.n_snapshots;
  int n_x = spec.mode.with_x ? spec.mode.n_snapshots : 0;
  if (snapshot && spec.mode.with_x && spec.mode.budget == GenerationMode::Budget::SplitHalf) {
    n_z = std::max(1, spec.mode.n_snapshots / 2);
    n_x = std::max(1, spec.mode.n_snapshots - n_z);
  }

  data.per_omega.reserve(spec.omega.size());
  for (std::size_t w = 0; w < spec.omega.size(); ++w) {
    try {
      const auto gs = ground_state(j, spec.omega.values[w], spec.delta, spec.solver);
      if (!snapshot) {
        data.per_omega.push_back(exact_observables(gs.state, adj, spec.omega.values[w], spec.delta));
        continue;
      }
      const std::uint64_t base = substream_seed(
          substream_seed(substream_seed(spec.master_seed, streams::kSnapshotZ),
                         static_cast<std::uint64_t>(size_idx)),
          static_cast<std::uint64_t>(realization));
      const std::uint64_t seed_z = substream_seed(base, 2 * w);
      const std::uint64_t seed_x = substream_seed(base, 2 * w + 1);
      const SnapshotSet snap_z = sample_bitstrings(gs.state, Basis::Z, n_z, seed_z);
      SnapshotSet snap_x;
      ObservableSet obs;
      if (n_x > 0) {
        snap_x = sample_bitstrings(gs.state, Basis::X, n_x, seed_x);
        obs = estimate_observables(snap_z, &snap_x, adj);
      } else {
        obs = estimate_observables(snap_z, nullptr, adj);
      }
      obs.omega = spec.omega.values[w];
      obs.delta = spec.delta;
      data.per_omega.push_back(std::move(obs));
    } catch (const SolverError& e) {
      throw SolverError("size " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " realization " + std::to_string(realization) + " omega " +
                        format_double(spec.omega.values[w]) + ": " + e.what());
    }
  }
  return data;
}

void validate_spec(const DatasetSpec& spec) {
  if (spec.sizes.empty()) throw ConfigError("generate_dataset: no sizes");
  if (spec.per_size_count < 0) throw ConfigError("generate_dataset: negative count");
  if (spec.omega.values.empty()) throw ConfigError("generate_dataset: empty omega history");
  for (std::size_t i = 1; i < spec.omega.values.size(); ++i) {
    if (!(spec.omega.values[i] > spec.omega.values[i - 1])) {
      throw ConfigError("generate_dataset: omega history must be strictly increasing");
    }
  }
  for (const auto& [r, c] : spec.sizes) {
    if (r * c > spec.solver.n_atoms_cap) {
      throw ConfigError("generate_dataset: size " + std::to_string(r) + "x" + std::to_string(c) +
                        " exceeds solver capacity " + std::to_string(spec.solver.n_atoms_cap));
    }
  }
  if (spec.case_tag == 6 && spec.mode.kind == GenerationMode::Kind::Snapshot &&
      !spec.mode.with_x) {
    throw ContractError("generate_dataset: case 6 snapshot mode needs X-basis snapshots");
  }
}

DatasetManifest make_manifest(const DatasetSpec& spec, int case_tag) {
  DatasetManifest m;
  m.case_tag = case_tag;
  m.omega_values = spec.omega.values;
  m.sizes = spec.sizes;
  m.counts.assign(spec.sizes.size(), spec.per_size_count);
  m.mode = spec.mode.to_string();
  m.master_seed = spec.master_seed;
  m.per_omega_graphs = spec.per_omega_graphs;
  return m;
}

}  // namespace

std::vector<Dataset> generate_datasets(const DatasetSpec& spec,
                                       const std::vector<int>& cases, int jobs) {
  validate_spec(spec);
  for (int c : cases) case_has_nnn_edges(c);
  if (cases.empty()) throw ConfigError("generate_datasets: no cases");

  const std::size_t n_sizes = spec.sizes.size();
  const std::size_t total = n_sizes * static_cast<std::size_t>(spec.per_size_count);
  const int graphs_per_realization = spec.per_omega_graphs
                                         ? static_cast<int>(spec.omega.size())
                                         : 1;

  std::vector<Dataset> out;
  for (int c : cases) {
    DatasetSpec cs = spec;
    cs.case_tag = c;
    if (c == 6 && spec.mode.kind == GenerationMode::Kind::Snapshot && !spec.mode.with_x) {
      throw ContractError("generate_datasets: case 6 snapshot mode needs X-basis snapshots");
    }
    Dataset ds;
    ds.manifest = make_manifest(cs, c);
    ds.samples.resize(total * graphs_per_realization);
    out.push_back(std::move(ds));
  }

  parallel_for(total, jobs, [&](std::size_t t) {
    const int size_idx = static_cast<int>(t / spec.per_size_count);
    const int realization = static_cast<int>(t % spec.per_size_count);
    const RealizationData data = solve_realization(spec, size_idx, realization);
    const AdjacencySets adj = adjacency(data.geom.rows, data.geom.cols);
    Provenance prov;
    if (spec.mode.kind == GenerationMode::Kind::Snapshot) {
      prov.exact = false;
      prov.n_snapshots = spec.mode.n_snapshots;
    }
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
      if (spec.per_omega_graphs) {
        for (std::size_t w = 0; w < spec.omega.size(); ++w) {
          std::vector<ObservableSet> one{data.per_omega[w]};
          GraphSample g = assemble_graph(cases[ci], data.geom, one, adj);
          g.provenance = prov;
          out[ci].samples[t * spec.omega.size() + w] = std::move(g);
        }
      } else {
        GraphSample g = assemble_graph(cases[ci], data.geom, data.per_omega, adj);
        g.provenance = prov;
        out[ci].samples[t] = std::move(g);
      }
    }
  });
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec, int jobs) {
  return std::move(generate_datasets(spec, {spec.case_tag}, jobs)[0]);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("split_dataset: test fraction must lie in (0, 1)");
  }
  // Group sample indices by size, preserving order.
  std::map<std::pair<int, int>, std::vector<std::size_t>> by_size;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    by_size[{ds.samples[i].rows, ds.samples[i].cols}].push_back(i);
  }
  if (by_size.empty()) throw ConfigError("split_dataset: empty dataset");

  std::vector<bool> is_test(ds.samples.size(), false);
  std::uint64_t size_idx = 0;
  for (auto& [size, idx] : by_size) {
    const auto n = idx.size();
    const auto n_test = static_cast<std::size_t>(std::llround(n * test_fraction));
    if (n_test == 0 || n_test >= n) {
      throw ConfigError("split_dataset: cannot hold out " + std::to_string(n_test) + " of " +
                        std::to_string(n) + " samples at size " + std::to_string(size.first) +
                        "x" + std::to_string(size.second));
    }
    Rng g(substream_seed(substream_seed(seed, streams::kSplit), size_idx++));
    shuffle(idx, g);
    for (std::size_t k = 0; k < n_test; ++k) is_test[idx[k]] = true;
  }

  Dataset train, test;
  train.manifest = test.manifest = ds.manifest;
  train.manifest.sizes.clear();
  test.manifest.sizes.clear();
  train.manifest.counts.clear();
  test.manifest.counts.clear();
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    (is_test[i] ? test : train).samples.push_back(ds.samples[i]);
  }
  for (const auto& [size, idx] : by_size) {
    const auto n_test = static_cast<int>(std::llround(idx.size() * test_fraction));
    train.manifest.sizes.push_back(size);
    test.manifest.sizes.push_back(size);
    train.manifest.counts.push_back(static_cast<int>(idx.size()) - n_test);
    test.manifest.counts.push_back(n_test);
  }
  return {std::move(train), std::move(test)};
}

namespace {

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["format_version"] = m.format_version;
  j["case"] = m.case_tag;
  j["omega_values"] = m.omega_values;
  auto& sizes = j["sizes"] = nlohmann::json::array();
  for (const auto& [r, c] : m.sizes) sizes.push_back({r, c});
  j["counts"] = m.counts;
  j["mode"] = m.mode;
  j["master_seed"] = m.master_seed;
  j["per_omega_graphs"] = m.per_omega_graphs;
  return j;
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.format_version = j.at("format_version").get<int>();
  m.case_tag = j.at("case").get<int>();
  m.omega_values = j.at("omega_values").get<std::vector<double>>();
  for (const auto& s : j.at("sizes")) m.sizes.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
  m.counts = j.at("counts").get<std::vector<int>>();
  m.mode = j.at("mode").get<std::string>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.per_omega_graphs = j.value("per_omega_graphs", false);
  return m;
}

nlohmann::json tensor_ref_json(const TensorRef& ref, Eigen::Index rows, Eigen::Index cols) {
  return {{"offset", ref.offset}, {"count", ref.count}, {"rows", rows}, {"cols", cols}};
}

std::vector<double> matrix_to_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> v(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      v.data(), m.rows(), m.cols()) = m;
  return v;
}

Eigen::MatrixXd matrix_from_row_major(const std::vector<double>& v, Eigen::Index rows,
                                      Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
    throw ContractError("dataset blob: tensor size mismatch");
  }
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(v.data(), rows, cols);
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index cols_hint) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(rows, rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : cols_hint);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

std::filesystem::path blob_path_for(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p.replace_extension(".bin");
  return p;
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& ds, bool full_json) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("write_dataset: cannot open " + path.string());

  nlohmann::json manifest = manifest_to_json(ds.manifest);
  std::unique_ptr<BlobWriter> blob;
  if (!full_json) {
    manifest["blob"] = blob_path_for(path).filename().string();
    blob = std::make_unique<BlobWriter>(blob_path_for(path));
  }
  out << manifest.dump() << '\n';

  for (const auto& g : ds.samples) {
    nlohmann::json rec;
    rec["rows"] = g.rows;
    rec["cols"] = g.cols;
    rec["case"] = g.case_tag;
    rec["provenance"] = g.provenance.to_string();
    rec["realization_seed"] = g.realization_seed;
    if (full_json) {
      rec["node_features"] = matrix_to_json(g.node_features);
      rec["nn_edge_features"] = matrix_to_json(g.nn_edge_features);
      if (g.has_nnn_edges()) rec["nnn_edge_features"] = matrix_to_json(g.nnn_edge_features);
      rec["nn_targets_um"] = std::vector<double>(g.nn_targets_um.begin(), g.nn_targets_um.end());
      rec["nnn_targets_um"] =
          std::vector<double>(g.nnn_targets_um.begin(), g.nnn_targets_um.end());
    } else {
      auto put_matrix = [&](const char* key, const Eigen::MatrixXd& m) {
        const auto v = matrix_to_row_major(m);
        rec[key] = tensor_ref_json(blob->put(v), m.rows(), m.cols());
      };
      put_matrix("node_features", g.node_features);
      put_matrix("nn_edge_features", g.nn_edge_features);
      if (g.has_nnn_edges()) put_matrix("nnn_edge_features", g.nnn_edge_features);
      auto put_vector = [&](const char* key, const Eigen::VectorXd& v) {
        const std::span<const double> s{v.data(), static_cast<std::size_t>(v.size())};
        rec[key] = tensor_ref_json(blob->put(s), v.size(), 1);
      };
      put_vector("nn_targets_um", g.nn_targets_um);
      put_vector("nnn_targets_um", g.nnn_targets_um);
    }
    out << rec.dump() << '\n';
  }
  if (!out) throw ConfigError("write_dataset: write failed");
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("read_dataset: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("read_dataset: missing manifest");
  const nlohmann::json manifest = nlohmann::json::parse(line);
  Dataset ds;
  ds.manifest = manifest_from_json(manifest);

  std::unique_ptr<BlobReader> blob;
  if (manifest.contains("blob")) {
    blob = std::make_unique<BlobReader>(path.parent_path() / manifest["blob"].get<std::string>());
  }

  const int n_omega = static_cast<int>(ds.manifest.omega_values.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json rec = nlohmann::json::parse(line);
    GraphSample g;
    g.rows = rec.at("rows").get<int>();
    g.cols = rec.at("cols").get<int>();
    g.case_tag = rec.at("case").get<int>();
    g.provenance = Provenance::from_string(rec.at("provenance").get<std::string>());
    g.realization_seed = rec.at("realization_seed").get<std::uint64_t>();
    const int edge_ch = case_edge_channels(
        g.case_tag, ds.manifest.per_omega_graphs ? 1 : n_omega);

    if (blob) {
      auto get_matrix = [&](const char* key) {
        const auto& t = rec.at(key);
        TensorRef ref{t.at("offset").get<std::uint64_t>(), t.at("count").get<std::uint64_t>()};
        return matrix_from_row_major(blob->get(ref), t.at("rows").get<Eigen::Index>(),
                                     t.at("cols").get<Eigen::Index>());
      };
      g.node_features = get_matrix("node_features");
      g.nn_edge_features = get_matrix("nn_edge_features");
      g.nnn_edge_features = rec.contains("nnn_edge_features")
                                ? get_matrix("nnn_edge_features")
                                : Eigen::MatrixXd(0, edge_ch);
      g.nn_targets_um = get_matrix("nn_targets_um");
      g.nnn_targets_um = get_matrix("nnn_targets_um");
    } else {
      g.node_features = matrix_from_json(rec.at("node_features"), 0);
      g.nn_edge_features = matrix_from_json(rec.at("nn_edge_features"), 0);
      g.nnn_edge_features = rec.contains("nnn_edge_features")
                                ? matrix_from_json(rec.at("nnn_edge_features"), edge_ch)
                                : Eigen::MatrixXd(0, edge_ch);
      const auto tn = rec.at("nn_targets_um").get<std::vector<double>>();
      const auto tnnn = rec.at("nnn_targets_um").get<std::vector<double>>();
      g.nn_targets_um = Eigen::Map<const Eigen::VectorXd>(tn.data(), tn.size());
      g.nnn_targets_um = Eigen::Map<const Eigen::VectorXd>(tnnn.data(), tnnn.size());
    }
    ds.samples.push_back(std::move(g));
  }
  return ds;
}

}  // namespace hamlearn
