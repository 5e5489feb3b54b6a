#pragma once

// Domain types for event graphs and the cycle-breaking pass every stage ends with.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace neg {

/// Runtime failure inside a stage (CLI exit code 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a documented invariant (CLI exit code 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

using Embedding = std::vector<double>;

enum class Side { Left, Right, Center };

/// Side label of a graph; merged graphs no longer belong to one side.
enum class GraphSide { Left, Right, Center, Merged };

inline std::string_view to_string(Side s) {
  switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Center: return "center";
  }
  return "";
}

inline std::string_view to_string(GraphSide s) {
  switch (s) {
    case GraphSide::Left: return "left";
    case GraphSide::Right: return "right";
    case GraphSide::Center: return "center";
    case GraphSide::Merged: return "merged";
  }
  return "";
}

inline Side parse_side(std::string_view s) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  if (s == "center") return Side::Center;
  throw ValidationError("unknown side '" + std::string(s) + "'");
}

inline GraphSide parse_graph_side(std::string_view s) {
  if (s == "merged") return GraphSide::Merged;
  switch (parse_side(s)) {
    case Side::Left: return GraphSide::Left;
    case Side::Right: return GraphSide::Right;
    case Side::Center: return GraphSide::Center;
  }
  return GraphSide::Merged;
}

inline GraphSide to_graph_side(Side s) {
  switch (s) {
    case Side::Left: return GraphSide::Left;
    case Side::Right: return GraphSide::Right;
    case Side::Center: return GraphSide::Center;
  }
  return GraphSide::Merged;
}

struct SvoTriple {
  std::string subject;
  std::string verb;
  std::string object;

  bool operator==(const SvoTriple&) const = default;
};

struct ArticleRecord {
  std::string id;
  std::string topic_id;
  Side side = Side::Left;
  std::vector<std::string> sentences;
  std::optional<std::vector<double>> salience;
  std::optional<std::vector<Embedding>> embeddings;
  std::optional<std::vector<SvoTriple>> svos;

  void validate() const {
    if (sentences.empty()) throw ValidationError("article '" + id + "' has no sentences");
    auto check_len = [&](std::size_t n, const char* what) {
      if (n != sentences.size())
        throw ValidationError("article '" + id + "': " + what + " length " + std::to_string(n) +
                              " != sentence count " + std::to_string(sentences.size()));
    };
    if (salience) {
      check_len(salience->size(), "salience");
      for (double s : *salience)
        if (!(s >= 0.0 && s <= 1.0))
          throw ValidationError("article '" + id + "': salience outside [0,1]");
    }
    if (embeddings) check_len(embeddings->size(), "embeddings");
    if (svos) {
      check_len(svos->size(), "svos");
      for (const auto& t : *svos)
        if (t.verb.empty()) throw ValidationError("article '" + id + "': SVO with empty verb");
    }
  }
};

/// (article id, sentence index)
using Provenance = std::set<std::pair<std::string, std::size_t>>;

struct EventNode {
  std::string id;
  std::string text;
  SvoTriple svo;
  Embedding embedding;
  double salience = 0.0;
  Provenance provenance;
};

enum class Relation { Before };

struct TemporalEdge {
  std::string src;
  std::string dst;
  Relation relation = Relation::Before;
  double confidence = 0.0;

  bool operator==(const TemporalEdge&) const = default;
};

struct EventGraph {
  std::string topic_id;
  GraphSide side = GraphSide::Merged;
  // Free-form stage tag: "article", "side", "merged", "central", "neutral", "baseline".
  std::string role;
  std::map<std::string, EventNode> nodes;
  // Sorted by (src, dst), at most one edge per ordered pair.
  std::vector<TemporalEdge> edges;

  void add_node(EventNode n) {
    auto id = n.id;
    if (!nodes.emplace(id, std::move(n)).second)
      throw ValidationError("duplicate node id '" + id + "'");
  }

  /// Inserts src->dst, keeping the higher confidence when the pair already exists.
  void upsert_edge(const std::string& src, const std::string& dst, double confidence) {
    auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{src, dst},
                               [](const TemporalEdge& e, const std::pair<std::string, std::string>& k) {
                                 return std::tie(e.src, e.dst) < std::tie(k.first, k.second);
                               });
    if (it != edges.end() && it->src == src && it->dst == dst) {
      it->confidence = std::max(it->confidence, confidence);
      return;
    }
    edges.insert(it, TemporalEdge{src, dst, Relation::Before, confidence});
  }

  bool has_edge(std::string_view src, std::string_view dst) const {
    return std::any_of(edges.begin(), edges.end(),
                       [&](const TemporalEdge& e) { return e.src == src && e.dst == dst; });
  }

  std::vector<std::string> node_ids() const {
    std::vector<std::string> ids;
    ids.reserve(nodes.size());
    for (const auto& [id, _] : nodes) ids.push_back(id);
    return ids;
  }

  /// Checks the structural invariants; `dim` additionally pins the embedding dimension.
  void validate(std::optional<std::size_t> dim = std::nullopt) const {
    for (const auto& [id, n] : nodes) {
      if (id != n.id) throw ValidationError("node key '" + id + "' != node id '" + n.id + "'");
      if (n.provenance.empty()) throw ValidationError("node '" + id + "' has empty provenance");
      if (n.svo.verb.empty()) throw ValidationError("node '" + id + "' has empty SVO verb");
      if (dim && n.embedding.size() != *dim)
        throw ValidationError("node '" + id + "' embedding dimension " +
                              std::to_string(n.embedding.size()) + " != " + std::to_string(*dim));
      double sq = 0.0;
      for (double x : n.embedding) sq += x * x;
      if (std::abs(std::sqrt(sq) - 1.0) > 1e-6)
        throw ValidationError("node '" + id + "' embedding is not unit norm");
      if (!(n.salience >= 0.0 && n.salience <= 1.0))
        throw ValidationError("node '" + id + "' salience outside [0,1]");
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      if (e.src == e.dst) throw ValidationError("self-loop on '" + e.src + "'");
      if (!nodes.contains(e.src) || !nodes.contains(e.dst))
        throw ValidationError("edge " + e.src + "->" + e.dst + " has a dangling endpoint");
      if (!(e.confidence >= 0.0 && e.confidence <= 1.0))
        throw ValidationError("edge " + e.src + "->" + e.dst + " confidence outside [0,1]");
      if (i > 0 && std::tie(edges[i - 1].src, edges[i - 1].dst) >= std::tie(e.src, e.dst))
        throw ValidationError("edges not sorted/unique at " + e.src + "->" + e.dst);
    }
  }
};

// ---------------------------------------------------------------------------
// Text helpers

/// Lowercased tokens split on non-alphanumeric ASCII; bytes >= 0x80 are kept inside tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// ---------------------------------------------------------------------------
// Vector helpers

inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error("cosine: dimension mismatch " + std::to_string(u.size()) + " vs " +
                std::to_string(v.size()));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw Error("cosine: zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

inline Embedding normalized(Embedding v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0 || !std::isfinite(sq)) throw ValidationError("cannot normalize a zero or non-finite vector");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

// ---------------------------------------------------------------------------
// Cycle handling

namespace detail {

/// Strongly connected component id per node index (iterative Tarjan).
inline std::vector<int> scc_ids(std::size_t n, const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  int next_index = 0, next_comp = 0;
  struct Frame {
    std::size_t v;
    std::size_t child;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& f = call.back();
      if (f.child < adj[f.v].size()) {
        std::size_t w = adj[f.v][f.child++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      std::size_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = next_comp;
        } while (w != v);
        ++next_comp;
      }
    }
  }
  return comp;
}

}  // namespace detail

/// Node ids in topological order, or nullopt when the edge set has a cycle.
inline std::optional<std::vector<std::string>> topological_order(const EventGraph& g) {
  std::map<std::string, std::size_t> indeg;
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [id, _] : g.nodes) indeg[id] = 0;
  for (const auto& e : g.edges) {
    ++indeg[e.dst];
    out[e.src].push_back(e.dst);
  }
  std::set<std::string> ready;
  for (const auto& [id, d] : indeg)
    if (d == 0) ready.insert(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    auto id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const auto& w : out[id])
      if (--indeg[w] == 0) ready.insert(w);
  }
  if (order.size() != indeg.size()) return std::nullopt;
  return order;
}

inline bool is_acyclic(const EventGraph& g) { return topological_order(g).has_value(); }

/// Indices into g.edges of every edge lying on at least one directed cycle.
inline std::vector<std::size_t> cycle_edges(const EventGraph& g) {
  std::map<std::string, std::size_t> idx;
  for (const auto& [id, _] : g.nodes) idx.emplace(id, idx.size());
  std::vector<std::vector<std::size_t>> adj(idx.size());
  for (const auto& e : g.edges) adj[idx.at(e.src)].push_back(idx.at(e.dst));
  auto comp = detail::scc_ids(idx.size(), adj);
  std::vector<std::size_t> result;
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    if (comp[idx.at(g.edges[i].src)] == comp[idx.at(g.edges[i].dst)]) result.push_back(i);
  return result;
}

/// Breaks cycles by repeatedly deleting the lowest-confidence edge that lies on a cycle.
/// Ties go to the lexicographically smallest (src, dst). Edges never on a cycle survive.
inline EventGraph dagify(EventGraph g) {
  for (;;) {
    auto candidates = cycle_edges(g);
    if (candidates.empty()) return g;
    // g.edges is sorted by (src, dst), so the first minimum wins ties.
    std::size_t victim = candidates.front();
    for (auto i : candidates)
      if (g.edges[i].confidence < g.edges[victim].confidence) victim = i;
    g.edges.erase(g.edges.begin() + static_cast<std::ptrdiff_t>(victim));
  }
}

}  // namespace neg
