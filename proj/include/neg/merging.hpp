#pragma once

// Coreference-driven graph merging: same-side folds and the cross-side merge
// that rewrites coreferential pairs through the neutralizer.

#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "neg/core.hpp"
#include "neg/induction.hpp"
#include "neg/matching.hpp"
#include "neg/providers.hpp"

namespace neg {

struct NodeMatch {
  std::string a;
  std::string b;
  double score;

  bool operator==(const NodeMatch&) const = default;
};

struct Matching {
  std::vector<NodeMatch> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

struct MergeConfig {
  double coref_threshold = 0.5;
  std::uint64_t rng_seed = 13;

  void validate() const {
    if (!(coref_threshold >= 0.0 && coref_threshold <= 1.0))
      throw ValidationError("coref_threshold must lie in [0,1]");
  }
};

inline Matching match_nodes(const EventGraph& a, const EventGraph& b, const CoreferenceScorer& scorer,
                            double threshold) {
  std::vector<const EventNode*> an, bn;
  for (const auto& [_, n] : a.nodes) an.push_back(&n);
  for (const auto& [_, n] : b.nodes) bn.push_back(&n);
  ScoreMatrix s(an.size(), std::vector<double>(bn.size()));
  for (std::size_t i = 0; i < an.size(); ++i)
    for (std::size_t j = 0; j < bn.size(); ++j) {
      s[i][j] = scorer.score(*an[i], *bn[j]);
      if (!(s[i][j] >= 0.0 && s[i][j] <= 1.0))
        throw Error("coreference score outside [0,1] for " + an[i]->id + "/" + bn[j]->id);
    }
  Matching m;
  for (const auto& p : greedy_match(s, threshold)) m.pairs.push_back({an[p.row]->id, bn[p.col]->id, p.score});
  return m;
}

/// Builds the content of the node that replaces a coreferential (a, b) pair.
/// merge_pair overwrites provenance with the union of both inputs.
using RepresentativeRule = std::function<EventNode(const EventNode& a, const EventNode& b)>;

/// Same-side rule: one of the two inputs, picked by a seeded coin flip.
inline RepresentativeRule random_representative(std::mt19937_64& rng) {
  return [&rng](const EventNode& a, const EventNode& b) { return (rng() >> 63) ? b : a; };
}

/// Cross-side rule: neutralized text, re-embedded, with the larger salience.
inline RepresentativeRule neutralized_representative(const Neutralizer& neutralizer,
                                                     const EmbeddingProvider& embedder,
                                                     const std::set<std::string>& verbs = default_verb_lexicon()) {
  return [&neutralizer, &embedder, &verbs](const EventNode& a, const EventNode& b) {
    EventNode m;
    m.id = a.id;
    m.text = neutralizer.neutralize(a.text, b.text);
    if (m.text.empty()) throw Error("neutralizer returned an empty sentence for " + a.id + "/" + b.id);
    if (m.text == a.text)
      m.svo = a.svo;
    else if (m.text == b.text)
      m.svo = b.svo;
    else
      m.svo = extract_svo(m.text, verbs);
    m.embedding = embedder.embed(m.text);
    m.salience = std::max(a.salience, b.salience);
    return m;
  };
}

inline EventGraph merge_pair(const EventGraph& a, const EventGraph& b, const Matching& matching,
                             const RepresentativeRule& rule) {
  EventGraph out;
  out.topic_id = a.topic_id;
  out.side = a.side == b.side ? a.side : GraphSide::Merged;
  out.role = a.role;

  std::set<std::string> used;
  auto claim = [&used](std::string id) {
    if (used.contains(id)) {
      std::string base = id;
      for (int k = 2; used.contains(id); ++k) id = base + "~" + std::to_string(k);
    }
    used.insert(id);
    return id;
  };

  std::unordered_map<std::string, std::string> map_a, map_b;
  for (const auto& p : matching.pairs) {
    const auto& na = a.nodes.at(p.a);
    const auto& nb = b.nodes.at(p.b);
    if (map_a.contains(p.a) || map_b.contains(p.b)) throw ValidationError("matching is not one-to-one");
    EventNode m = rule(na, nb);
    m.id = claim(m.id);
    m.provenance = na.provenance;
    m.provenance.insert(nb.provenance.begin(), nb.provenance.end());
    map_a[p.a] = map_b[p.b] = m.id;
    out.add_node(std::move(m));
  }
  auto copy_rest = [&](const EventGraph& g, std::unordered_map<std::string, std::string>& map) {
    for (const auto& [id, n] : g.nodes) {
      if (map.contains(id)) continue;
      EventNode c = n;
      c.id = claim(id);
      map[id] = c.id;
      out.add_node(std::move(c));
    }
  };
  copy_rest(a, map_a);
  copy_rest(b, map_b);

  auto copy_edges = [&](const EventGraph& g, const std::unordered_map<std::string, std::string>& map) {
    for (const auto& e : g.edges) {
      const auto& s = map.at(e.src);
      const auto& d = map.at(e.dst);
      if (s != d) out.upsert_edge(s, d, e.confidence);
    }
  };
  copy_edges(a, map_a);
  copy_edges(b, map_b);
  return dagify(std::move(out));
}

/// Left fold over `graphs` in list order, merging coreferential nodes with the random rule.
inline EventGraph merge_side(const std::vector<EventGraph>& graphs, const CoreferenceScorer& scorer,
                             const MergeConfig& config) {
  config.validate();
  if (graphs.empty()) throw ValidationError("merge_side needs at least one graph");
  for (const auto& g : graphs)
    if (g.side != graphs.front().side || g.topic_id != graphs.front().topic_id)
      throw ValidationError("merge_side: graphs must share side and topic");
  std::mt19937_64 rng(config.rng_seed);
  auto rule = random_representative(rng);
  EventGraph acc = dagify(graphs.front());
  for (std::size_t i = 1; i < graphs.size(); ++i)
    acc = merge_pair(acc, graphs[i], match_nodes(acc, graphs[i], scorer, config.coref_threshold), rule);
  acc.role = "side";
  return acc;
}

inline EventGraph merge_cross(const EventGraph& left, const EventGraph& right, const Neutralizer& neutralizer,
                              const EmbeddingProvider& embedder, const CoreferenceScorer& scorer,
                              const MergeConfig& config) {
  config.validate();
  if (left.side != GraphSide::Left || right.side != GraphSide::Right)
    throw ValidationError("merge_cross expects a left graph and a right graph");
  auto matching = match_nodes(left, right, scorer, config.coref_threshold);
  auto g = merge_pair(left, right, matching, neutralized_representative(neutralizer, embedder));
  g.side = GraphSide::Merged;
  g.role = "merged";
  return g;
}

}  // namespace neg
