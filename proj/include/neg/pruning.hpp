#pragma once

// Pseudo-labelling against the center graph and the two-layer GCN node
// classifier that prunes nodes the center coverage does not support.
//
//   Y = softmax(Â · ReLU(Â X W0) · W1)      (GCN)
//   Y = softmax(ReLU(X W0) · W1)            (MLP ablation, Â = I)
//
// Column 0 of Y is Keep, column 1 is Remove.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "neg/core.hpp"
#include "neg/matching.hpp"

namespace neg {

enum class NodeLabel { Keep = 0, Remove = 1 };

struct PseudoLabels {
  std::map<std::string, NodeLabel> labels;
  double match_threshold = 0.5;

  std::size_t count(NodeLabel l) const {
    return static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [l](const auto& kv) { return kv.second == l; }));
  }
};

/// Greedy cosine matching of `g` against `central`; matched nodes are Keep, the rest Remove.
inline PseudoLabels pseudo_labels(const EventGraph& g, const EventGraph& central, double threshold = 0.5) {
  if (g.nodes.empty() || central.nodes.empty()) throw ValidationError("pseudo_labels needs two non-empty graphs");
  PseudoLabels out;
  out.match_threshold = threshold;
  const auto ids = g.node_ids();
  for (const auto& id : ids) out.labels[id] = NodeLabel::Remove;
  for (const auto& p : greedy_match(embedding_similarity(g, central), threshold)) out.labels[ids[p.row]] = NodeLabel::Keep;
  return out;
}

// ---------------------------------------------------------------------------
// Graph tensors

using Matrix = Eigen::MatrixXd;

/// D̃^{-1/2} (A_sym + I) D̃^{-1/2} over nodes in sorted-id order; edges count as undirected, weight 1.
inline Matrix normalize_adjacency(const EventGraph& g) {
  const auto ids = g.node_ids();
  const auto n = static_cast<Eigen::Index>(ids.size());
  std::map<std::string, Eigen::Index> idx;
  for (Eigen::Index i = 0; i < n; ++i) idx[ids[static_cast<std::size_t>(i)]] = i;
  Matrix a = Matrix::Identity(n, n);
  for (const auto& e : g.edges) {
    auto s = idx.at(e.src), d = idx.at(e.dst);
    a(s, d) = a(d, s) = 1.0;
  }
  Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

/// Node embeddings stacked as rows in sorted-id order.
inline Matrix node_features(const EventGraph& g) {
  if (g.nodes.empty()) return Matrix(0, 0);
  const auto d = static_cast<Eigen::Index>(g.nodes.begin()->second.embedding.size());
  Matrix x(static_cast<Eigen::Index>(g.nodes.size()), d);
  Eigen::Index r = 0;
  for (const auto& [id, n] : g.nodes) {
    if (static_cast<Eigen::Index>(n.embedding.size()) != d) throw Error("mixed embedding dimensions at node " + id);
    for (Eigen::Index c = 0; c < d; ++c) x(r, c) = n.embedding[static_cast<std::size_t>(c)];
    ++r;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Model

enum class ModelKind { Gcn, Mlp };

inline std::string_view to_string(ModelKind k) { return k == ModelKind::Gcn ? "gcn" : "mlp"; }

struct GcnModel {
  ModelKind kind = ModelKind::Gcn;
  Matrix w0;  // D x H
  Matrix w1;  // H x 2
  std::uint64_t seed = 13;
  std::size_t epochs = 0;
  double learning_rate = 0.0;
  std::vector<double> loss_trajectory;

  Eigen::Index input_dim() const { return w0.rows(); }
  Eigen::Index hidden_dim() const { return w0.cols(); }
};

namespace detail {

/// Uniform double in [0,1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix y(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    y.row(i) = (logits.row(i).array() - m).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  return y;
}

inline void check_dims(const Matrix& x, const Matrix& adj, const GcnModel& m) {
  if (m.w0.cols() != m.w1.rows() || m.w1.cols() != 2) throw Error("model weight shapes are inconsistent");
  if (x.cols() != m.w0.rows())
    throw Error("feature dimension " + std::to_string(x.cols()) + " != model input dimension " +
                std::to_string(m.w0.rows()));
  if (adj.rows() != x.rows() || adj.cols() != x.rows()) throw Error("adjacency shape does not match node count");
}

}  // namespace detail

/// Glorot-uniform weights drawn from one seeded stream, W0 then W1, row-major.
inline GcnModel init_model(std::size_t input_dim, std::size_t hidden, std::uint64_t seed, ModelKind kind = ModelKind::Gcn) {
  if (input_dim == 0 || hidden == 0) throw ValidationError("model dimensions must be positive");
  GcnModel m;
  m.kind = kind;
  m.seed = seed;
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Matrix& w) {
    const double s = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = (2.0 * detail::unit_uniform(rng) - 1.0) * s;
  };
  m.w0.resize(static_cast<Eigen::Index>(input_dim), static_cast<Eigen::Index>(hidden));
  m.w1.resize(static_cast<Eigen::Index>(hidden), 2);
  fill(m.w0);
  fill(m.w1);
  return m;
}

/// Pre-softmax class scores.
inline Matrix gcn_logits(const Matrix& x, const Matrix& adj, const GcnModel& m) {
  detail::check_dims(x, adj, m);
  Matrix hidden = (adj * (x * m.w0)).cwiseMax(0.0);
  return adj * (hidden * m.w1);
}

inline Matrix gcn_forward(const Matrix& x, const Matrix& adj, const GcnModel& m) {
  return detail::softmax_rows(gcn_logits(x, adj, m));
}

inline Matrix mlp_forward(const Matrix& x, const GcnModel& m) {
  return gcn_forward(x, Matrix::Identity(x.rows(), x.rows()), m);
}

/// Propagation matrix the model kind uses for `g`.
inline Matrix propagation_for(const EventGraph& g, ModelKind kind) {
  if (kind == ModelKind::Mlp) {
    const auto n = static_cast<Eigen::Index>(g.nodes.size());
    return Matrix::Identity(n, n);
  }
  return normalize_adjacency(g);
}

inline Matrix predict(const EventGraph& g, const GcnModel& m) {
  return gcn_forward(node_features(g), propagation_for(g, m.kind), m);
}

struct Gradients {
  double loss = 0.0;
  Matrix w0;
  Matrix w1;
};

/// Mean per-node cross-entropy and its exact gradient with respect to W0 and W1.
/// `labels[i]` is the class index (0 Keep, 1 Remove) of row i.
inline Gradients loss_and_gradients(const Matrix& x, const Matrix& adj, const std::vector<int>& labels,
                                    const GcnModel& m) {
  detail::check_dims(x, adj, m);
  const auto n = x.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw Error("label count does not match node count");
  if (n == 0) return {0.0, Matrix::Zero(m.w0.rows(), m.w0.cols()), Matrix::Zero(m.w1.rows(), m.w1.cols())};

  const Matrix ax = adj * x;
  const Matrix pre = ax * m.w0;
  const Matrix hidden = pre.cwiseMax(0.0);
  const Matrix ah = adj * hidden;
  const Matrix y = detail::softmax_rows(ah * m.w1);

  Gradients g;
  Matrix dlogits = y;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (c != 0 && c != 1) throw Error("labels must be 0 or 1");
    g.loss -= std::log(std::max(y(i, c), std::numeric_limits<double>::min()));
    dlogits(i, c) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  g.loss *= inv_n;
  dlogits *= inv_n;

  g.w1 = ah.transpose() * dlogits;
  Matrix dhidden = adj.transpose() * (dlogits * m.w1.transpose());
  dhidden.array() *= (pre.array() > 0.0).cast<double>();
  g.w0 = ax.transpose() * dhidden;
  return g;
}

inline double mean_loss(const Matrix& x, const Matrix& adj, const std::vector<int>& labels, const GcnModel& m) {
  return loss_and_gradients(x, adj, labels, m).loss;
}

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
  std::size_t epochs = 10;
  double learning_rate = 1e-4;
  std::size_t hidden = 64;
  std::uint64_t seed = 13;
  ModelKind kind = ModelKind::Gcn;
};

/// One supervised graph in tensor form.
struct TrainingGraph {
  Matrix features;
  Matrix propagation;
  std::vector<int> labels;
};

inline TrainingGraph make_training_graph(const EventGraph& g, const PseudoLabels& labels, ModelKind kind) {
  TrainingGraph t{node_features(g), propagation_for(g, kind), {}};
  for (const auto& id : g.node_ids()) {
    auto it = labels.labels.find(id);
    if (it == labels.labels.end()) throw ValidationError("node '" + id + "' has no pseudo-label");
    t.labels.push_back(static_cast<int>(it->second));
  }
  return t;
}

using EpochCallback = std::function<void(std::size_t epoch, const GcnModel& model)>;

/// Plain gradient descent, one full-batch step per graph per epoch in dataset order.
/// The recorded loss for an epoch is the mean of the per-graph losses seen before each step.
inline GcnModel train(const std::vector<TrainingGraph>& data, const TrainOptions& opt,
                      const EpochCallback& on_epoch = {}) {
  if (data.empty()) throw ValidationError("training needs at least one graph");
  Eigen::Index dim = -1;
  for (const auto& t : data)
    if (t.features.rows() > 0) dim = t.features.cols();
  if (dim <= 0) throw ValidationError("training data has no nodes");
  GcnModel m = init_model(static_cast<std::size_t>(dim), opt.hidden, opt.seed, opt.kind);
  m.learning_rate = opt.learning_rate;
  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& t : data) {
      if (t.features.rows() == 0) continue;
      auto grad = loss_and_gradients(t.features, t.propagation, t.labels, m);
      if (!std::isfinite(grad.loss)) throw Error("non-finite training loss at epoch " + std::to_string(epoch));
      total += grad.loss;
      ++counted;
      m.w0 -= opt.learning_rate * grad.w0;
      m.w1 -= opt.learning_rate * grad.w1;
    }
    m.loss_trajectory.push_back(total / static_cast<double>(counted));
    m.epochs = epoch;
    if (on_epoch) on_epoch(epoch, m);
  }
  m.epochs = opt.epochs;
  return m;
}

inline GcnModel gcn_train(const std::vector<std::pair<EventGraph, PseudoLabels>>& dataset, const TrainOptions& opt,
                          const EpochCallback& on_epoch = {}) {
  std::vector<TrainingGraph> data;
  data.reserve(dataset.size());
  for (const auto& [g, l] : dataset) data.push_back(make_training_graph(g, l, opt.kind));
  return train(data, opt, on_epoch);
}

/// Keep/Remove decision per node; an exact tie keeps the node.
inline std::map<std::string, NodeLabel> classify(const EventGraph& g, const GcnModel& m) {
  std::map<std::string, NodeLabel> out;
  if (g.nodes.empty()) return out;
  const Matrix y = predict(g, m);
  Eigen::Index r = 0;
  for (const auto& [id, _] : g.nodes) {
    out[id] = y(r, 0) >= y(r, 1) ? NodeLabel::Keep : NodeLabel::Remove;
    ++r;
  }
  return out;
}

/// Drops every node classified Remove together with its incident edges.
inline EventGraph prune(const EventGraph& g, const GcnModel& m) {
  EventGraph out;
  out.topic_id = g.topic_id;
  out.side = g.side;
  out.role = "neutral";
  for (const auto& [id, label] : classify(g, m))
    if (label == NodeLabel::Keep) out.add_node(g.nodes.at(id));
  for (const auto& e : g.edges)
    if (out.nodes.contains(e.src) && out.nodes.contains(e.dst)) out.edges.push_back(e);
  if (!is_acyclic(out)) throw Error("pruning produced a cycle; the input graph was not a DAG");
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: plain text, 17 significant digits, row-major weights.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_model(std::ostream& os, const GcnModel& m) {
  os << "neg-model 1\n";
  os << "kind " << to_string(m.kind) << '\n';
  os << "D " << m.w0.rows() << '\n';
  os << "H " << m.w0.cols() << '\n';
  os << "seed " << m.seed << '\n';
  os << "epochs " << m.epochs << '\n';
  os << "lr " << format_double(m.learning_rate) << '\n';
  auto dump = [&os](const char* name, const Matrix& w) {
    os << name << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) os << (c ? " " : "") << format_double(w(r, c));
      os << '\n';
    }
  };
  dump("W0", m.w0);
  dump("W1", m.w1);
  os << "loss " << m.loss_trajectory.size() << '\n';
  for (std::size_t i = 0; i < m.loss_trajectory.size(); ++i)
    os << (i ? " " : "") << format_double(m.loss_trajectory[i]);
  os << '\n';
}

inline GcnModel read_model(std::istream& is) {
  auto expect = [&is](const std::string& key) {
    std::string k;
    if (!(is >> k) || k != key) throw ValidationError("checkpoint: expected '" + key + "', got '" + k + "'");
  };
  GcnModel m;
  int version = 0;
  expect("neg-model");
  is >> version;
  if (version != 1) throw ValidationError("checkpoint: unsupported version");
  std::string kind;
  expect("kind");
  is >> kind;
  if (kind == "gcn")
    m.kind = ModelKind::Gcn;
  else if (kind == "mlp")
    m.kind = ModelKind::Mlp;
  else
    throw ValidationError("checkpoint: unknown model kind '" + kind + "'");
  Eigen::Index d = 0, h = 0;
  expect("D");
  is >> d;
  expect("H");
  is >> h;
  expect("seed");
  is >> m.seed;
  expect("epochs");
  is >> m.epochs;
  expect("lr");
  is >> m.learning_rate;
  auto load = [&](const char* name, Eigen::Index rows, Eigen::Index cols) {
    expect(name);
    Eigen::Index r = 0, c = 0;
    is >> r >> c;
    if (r != rows || c != cols) throw ValidationError(std::string("checkpoint: bad shape for ") + name);
    Matrix w(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j)
        if (!(is >> w(i, j)) || !std::isfinite(w(i, j)))
          throw ValidationError(std::string("checkpoint: bad value in ") + name);
    return w;
  };
  if (!is || d <= 0 || h <= 0) throw ValidationError("checkpoint: bad header");
  m.w0 = load("W0", d, h);
  m.w1 = load("W1", h, 2);
  std::size_t n = 0;
  expect("loss");
  is >> n;
  m.loss_trajectory.resize(n);
  for (auto& v : m.loss_trajectory)
    if (!(is >> v)) throw ValidationError("checkpoint: truncated loss trajectory");
  return m;
}

inline void save_model(const GcnModel& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_model(out, m);
}

inline GcnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return read_model(in);
}

}  // namespace neg
