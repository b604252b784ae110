#include "hamlearn/model.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

using autodiff::Matrix;
using autodiff::Parameter;
using autodiff::Reduce;
using autodiff::Tape;
using autodiff::Var;

GraphBatch GraphBatch::from_samples(const std::vector<const GraphSample*>& samples,
                                    bool include_nnn_targets) {
  if (samples.empty()) throw ContractError("GraphBatch: no samples");
  GraphBatch b;
  const auto node_ch = samples[0]->node_features.cols();
  const auto edge_ch = samples[0]->nn_edge_features.cols();

  int total_nodes = 0;
  Eigen::Index total_dir_edges = 0, total_task = 0;
  for (const GraphSample* g : samples) {
    if (g->node_features.cols() != node_ch || g->nn_edge_features.cols() != edge_ch) {
      throw ContractError("GraphBatch: feature widths differ across samples");
    }
    if (include_nnn_targets && !g->has_nnn_edges()) {
      throw ContractError("GraphBatch: NNN targets requested but sample has no NNN edges");
    }
    total_nodes += g->n_nodes();
    total_dir_edges += 2 * (g->nn_edge_features.rows() + g->nnn_edge_features.rows());
    total_task += g->nn_targets_um.size();
    if (include_nnn_targets) total_task += g->nnn_targets_um.size();
  }

  b.n_nodes = total_nodes;
  b.node_features.resize(total_nodes, node_ch);
  b.edge_features.resize(total_dir_edges, edge_ch);
  b.edge_src.reserve(total_dir_edges);
  b.edge_dst.reserve(total_dir_edges);
  b.node_rank.resize(total_nodes);
  b.task_edge_features.resize(total_task, edge_ch);
  b.targets_um.resize(total_task);
  b.task_i.reserve(total_task);
  b.task_j.reserve(total_task);
  b.sample_of_task.reserve(total_task);
  b.task_is_nnn.reserve(total_task);

  int node_base = 0;
  Eigen::Index edge_at = 0, task_at = 0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const GraphSample& g = *samples[s];
    const AdjacencySets adj = adjacency(g.rows, g.cols);
    b.node_features.middleRows(node_base, g.n_nodes()) = g.node_features;
    for (int i = 0; i < g.n_nodes(); ++i) b.node_rank[node_base + i] = node_base + i;

    auto add_edges = [&](const std::vector<std::pair<int, int>>& edges,
                         const Eigen::MatrixXd& feats) {
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const int i = node_base + edges[e].first;
        const int j = node_base + edges[e].second;
        b.edge_src.push_back(i);
        b.edge_dst.push_back(j);
        b.edge_features.row(edge_at++) = feats.row(static_cast<Eigen::Index>(e));
        b.edge_src.push_back(j);
        b.edge_dst.push_back(i);
        b.edge_features.row(edge_at++) = feats.row(static_cast<Eigen::Index>(e));
      }
    };
    add_edges(adj.nn_edges, g.nn_edge_features);
    if (g.has_nnn_edges()) add_edges(adj.nnn_edges, g.nnn_edge_features);

    auto add_tasks = [&](const std::vector<std::pair<int, int>>& edges,
                         const Eigen::MatrixXd& feats, const Eigen::VectorXd& targets,
                         bool is_nnn) {
      for (std::size_t e = 0; e < edges.size(); ++e) {
        b.task_i.push_back(node_base + edges[e].first);
        b.task_j.push_back(node_base + edges[e].second);
        b.task_edge_features.row(task_at) = feats.row(static_cast<Eigen::Index>(e));
        b.targets_um[task_at] = targets[static_cast<Eigen::Index>(e)];
        b.sample_of_task.push_back(static_cast<int>(s));
        b.task_is_nnn.push_back(is_nnn ? 1 : 0);
        ++task_at;
      }
    };
    add_tasks(adj.nn_edges, g.nn_edge_features, g.nn_targets_um, false);
    if (include_nnn_targets) {
      add_tasks(adj.nnn_edges, g.nnn_edge_features, g.nnn_targets_um, true);
    }
    node_base += g.n_nodes();
  }
  return b;
}

namespace {

Matrix fan_in_uniform(Eigen::Index rows, Eigen::Index cols, Rng& g) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = uniform_in(g, -bound, bound);
  }
  return m;
}

}  // namespace

void Model::build_parameters() {
  if (cfg_.node_in < 1 && !cfg_.mlp_baseline) {
    throw ConfigError("Model: node_in must be set");
  }
  if (cfg_.edge_in < 1) throw ConfigError("Model: edge_in must be set");
  if (cfg_.aggregators.empty()) throw ConfigError("Model: need at least one aggregator");

  Rng g(substream_seed(init_seed_, streams::kInit));
  auto add = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols,
                 bool zero = false) {
    index_[name] = params_.size();
    params_.emplace_back(name,
                         zero ? Matrix::Zero(rows, cols) : fan_in_uniform(rows, cols, g));
  };

  const int e = cfg_.embed_dim;
  if (!cfg_.mlp_baseline) {
    add("encoder.w", cfg_.node_in, e);
    add("encoder.b", 1, e, true);
    const int msg_in = 2 * e + cfg_.edge_in;
    const int agg_in = static_cast<int>(cfg_.aggregators.size()) * e;
    for (int l = 0; l < cfg_.n_layers; ++l) {
      const std::string pre = "layer" + std::to_string(l) + ".";
      add(pre + "msg.w0", msg_in, cfg_.msg_hidden);
      add(pre + "msg.b0", 1, cfg_.msg_hidden, true);
      add(pre + "msg.w1", cfg_.msg_hidden, cfg_.msg_hidden);
      add(pre + "msg.b1", 1, cfg_.msg_hidden, true);
      add(pre + "msg.w2", cfg_.msg_hidden, e);
      add(pre + "msg.b2", 1, e, true);
      add(pre + "comb.w", agg_in, e);
      add(pre + "comb.b", 1, e, true);
    }
  }
  const int task_in = cfg_.mlp_baseline ? cfg_.edge_in : 2 * e + cfg_.edge_in;
  add("task.w0", task_in, cfg_.task_hidden);
  add("task.b0", 1, cfg_.task_hidden, true);
  add("task.w1", cfg_.task_hidden, cfg_.task_hidden);
  add("task.b1", 1, cfg_.task_hidden, true);
  add("task.w2", cfg_.task_hidden, 1);
  add("task.b2", 1, 1, true);
}

Model::Model(ModelConfig cfg, std::uint64_t init_seed)
    : cfg_(std::move(cfg)), init_seed_(init_seed) {
  build_parameters();
}

Parameter& Model::p(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("Model: unknown parameter " + name);
  return params_[it->second];
}

namespace {

// affine - softplus - affine - softplus - affine
Var mlp3(Tape& t, Var in, autodiff::Parameter& w0, autodiff::Parameter& b0,
         autodiff::Parameter& w1, autodiff::Parameter& b1, autodiff::Parameter& w2,
         autodiff::Parameter& b2) {
  Var h = t.softplus(t.add_row(t.matmul(in, t.param(w0)), t.param(b0)));
  h = t.softplus(t.add_row(t.matmul(h, t.param(w1)), t.param(b1)));
  return t.add_row(t.matmul(h, t.param(w2)), t.param(b2));
}

}  // namespace

Var Model::embed(Tape& t, const GraphBatch& batch) {
  if (cfg_.mlp_baseline) throw ContractError("Model::embed: baseline has no embeddings");
  if (batch.node_features.cols() != cfg_.node_in) {
    throw ContractError("Model::embed: node feature width mismatch");
  }
  if (batch.edge_features.cols() != cfg_.edge_in) {
    throw ContractError("Model::embed: edge feature width mismatch");
  }
  Var h = t.add_row(t.matmul(t.constant(batch.node_features), t.param(p("encoder.w"))),
                    t.param(p("encoder.b")));
  Var ef = t.constant(batch.edge_features);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    Var hs = t.gather_rows(h, batch.edge_src);
    Var hd = t.gather_rows(h, batch.edge_dst);
    Var msg = mlp3(t, t.concat_cols({hs, hd, ef}), p(pre + "msg.w0"), p(pre + "msg.b0"),
                   p(pre + "msg.w1"), p(pre + "msg.b1"), p(pre + "msg.w2"),
                   p(pre + "msg.b2"));
    std::vector<Var> aggs;
    aggs.reserve(cfg_.aggregators.size());
    for (const Reduce kind : cfg_.aggregators) {
      aggs.push_back(t.segment_reduce(msg, batch.edge_dst, batch.n_nodes, kind));
    }
    Var hn = t.add_row(t.matmul(t.concat_cols(aggs), t.param(p(pre + "comb.w"))),
                       t.param(p(pre + "comb.b")));
    h = cfg_.residual ? t.add(hn, h) : hn;
  }
  return h;
}

Var Model::predict(Tape& t, const GraphBatch& batch) {
  if (batch.task_edge_features.cols() != cfg_.edge_in) {
    throw ContractError("Model::predict: edge feature width mismatch");
  }

  Var task_in;
  if (cfg_.mlp_baseline) {
    task_in = t.constant(batch.task_edge_features);
  } else {
    Var h = embed(t, batch);
    // Canonical endpoint order for the readout: by node rank, so a relabeled
    // batch presents identical inputs.
    std::vector<int> lo(batch.task_i.size()), hi(batch.task_i.size());
    for (std::size_t r = 0; r < batch.task_i.size(); ++r) {
      const int i = batch.task_i[r], j = batch.task_j[r];
      const bool swap = batch.node_rank[i] > batch.node_rank[j];
      lo[r] = swap ? j : i;
      hi[r] = swap ? i : j;
    }
    task_in = t.concat_cols(
        {t.gather_rows(h, lo), t.gather_rows(h, hi), t.constant(batch.task_edge_features)});
  }
  return mlp3(t, task_in, p("task.w0"), p("task.b0"), p("task.w1"), p("task.b1"),
              p("task.w2"), p("task.b2"));
}

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["case"] = c.case_tag;
  j["node_in"] = c.node_in;
  j["edge_in"] = c.edge_in;
  j["embed_dim"] = c.embed_dim;
  j["n_layers"] = c.n_layers;
  j["msg_hidden"] = c.msg_hidden;
  j["task_hidden"] = c.task_hidden;
  nlohmann::json aggs = nlohmann::json::array();
  for (const Reduce r : c.aggregators) {
    switch (r) {
      case Reduce::Sum: aggs.push_back("sum"); break;
      case Reduce::Mean: aggs.push_back("mean"); break;
      case Reduce::Min: aggs.push_back("min"); break;
      case Reduce::Max: aggs.push_back("max"); break;
    }
  }
  j["aggregators"] = aggs;
  j["residual"] = c.residual;
  j["mlp_baseline"] = c.mlp_baseline;
  j["predict_nnn"] = c.predict_nnn;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.case_tag = j.at("case").get<int>();
  c.node_in = j.at("node_in").get<int>();
  c.edge_in = j.at("edge_in").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.msg_hidden = j.at("msg_hidden").get<int>();
  c.task_hidden = j.at("task_hidden").get<int>();
  c.aggregators.clear();
  for (const auto& a : j.at("aggregators")) {
    const std::string s = a.get<std::string>();
    if (s == "sum") c.aggregators.push_back(Reduce::Sum);
    else if (s == "mean") c.aggregators.push_back(Reduce::Mean);
    else if (s == "min") c.aggregators.push_back(Reduce::Min);
    else if (s == "max") c.aggregators.push_back(Reduce::Max);
    else throw ConfigError("checkpoint: unknown aggregator " + s);
  }
  c.residual = j.at("residual").get<bool>();
  c.mlp_baseline = j.at("mlp_baseline").get<bool>();
  c.predict_nnn = j.at("predict_nnn").get<bool>();
  return c;
}

std::filesystem::path checkpoint_blob_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p.replace_extension(".bin");
  return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["config"] = config_to_json(model.config());
  j["seed"] = model.init_seed();
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& [degree, count] : model.degree_histogram) {
    hist.push_back({degree, count});
  }
  j["degree_histogram"] = hist;
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& [r, c] : model.trained_sizes) sizes.push_back({r, c});
  j["trained_sizes"] = sizes;
  j["blob"] = checkpoint_blob_path(path).filename().string();

  BlobWriter blob(checkpoint_blob_path(path));
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : model.parameters()) {
    std::vector<double> row_major(static_cast<std::size_t>(p.value.size()));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        row_major.data(), p.value.rows(), p.value.cols()) = p.value;
    const TensorRef ref = blob.put(row_major);
    tensors.push_back({{"name", p.name},
                       {"rows", p.value.rows()},
                       {"cols", p.value.cols()},
                       {"offset", ref.offset},
                       {"count", ref.count}});
  }
  j["tensors"] = tensors;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("save_checkpoint: cannot open " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw ConfigError("save_checkpoint: write failed");
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_checkpoint: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  if (j.at("format_version").get<int>() != kCheckpointVersion) {
    throw ConfigError("load_checkpoint: unsupported format version");
  }
  Model model(config_from_json(j.at("config")), j.at("seed").get<std::uint64_t>());
  for (const auto& h : j.at("degree_histogram")) {
    model.degree_histogram[h.at(0).get<int>()] = h.at(1).get<long>();
  }
  for (const auto& s : j.at("trained_sizes")) {
    model.trained_sizes.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
  }

  BlobReader blob(path.parent_path() / j.at("blob").get<std::string>());
  for (const auto& t : j.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    autodiff::Parameter& p = model.p(name);
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    if (rows != p.value.rows() || cols != p.value.cols()) {
      throw ConfigError("load_checkpoint: tensor shape mismatch for " + name);
    }
    const TensorRef ref{t.at("offset").get<std::uint64_t>(), t.at("count").get<std::uint64_t>()};
    const std::vector<double> data = blob.get(ref);
    p.value = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(data.data(), rows, cols);
  }
  return model;
}

}  // namespace hamlearn
