#pragma once

// Single-article event graph induction: salient sentences become event nodes,
// pairwise temporal judgements become edges, and cycles are broken.

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "neg/core.hpp"
#include "neg/providers.hpp"

namespace neg {

inline const std::set<std::string>& default_verb_lexicon() {
  static const std::set<std::string> verbs = {
      "accuse",   "accused",   "accuses",  "announce", "announced", "announces", "approve",  "approved",
      "approves", "arrest",    "arrested", "arrests",  "attack",    "attacked",  "attacks",  "ban",
      "banned",   "bans",      "block",    "blocked",  "blocks",    "call",      "called",   "calls",
      "claim",    "claimed",   "claims",   "condemn",  "condemned", "condemns",  "cut",      "cuts",
      "defend",   "defended",  "defends",  "deny",     "denied",    "denies",    "die",      "died",
      "dies",     "file",      "filed",    "files",    "hit",       "hits",      "kill",     "killed",
      "kills",    "launch",    "launched", "launches", "meet",      "meets",     "met",      "order",
      "ordered",  "orders",    "pass",     "passed",   "passes",    "plan",      "planned",  "plans",
      "praise",   "praised",   "praises",  "propose",  "proposed",  "proposes",  "raise",    "raised",
      "raises",   "reject",    "rejected", "rejects",  "report",    "reported",  "reports",  "rule",
      "ruled",    "rules",     "said",     "say",      "says",      "sign",      "signed",   "signs",
      "strike",   "strikes",   "struck",   "sue",      "sued",      "sues",      "support",  "supported",
      "supports", "told",      "vote",     "voted",    "votes",     "warn",      "warned",   "warns",
      "win",      "wins",      "won"};
  return verbs;
}

struct InductionConfig {
  std::size_t top_k = 10;
  // Edges are kept only when confidence is strictly above this floor.
  double temporal_confidence_floor = 0.0;
  std::set<std::string> verb_lexicon = default_verb_lexicon();

  void validate() const {
    if (top_k < 1) throw ValidationError("top_k must be >= 1");
    if (!(temporal_confidence_floor >= 0.0 && temporal_confidence_floor <= 1.0))
      throw ValidationError("temporal_confidence_floor must lie in [0,1]");
  }
};

struct SalientSentence {
  std::size_t index;
  std::string text;
  double salience;
};

/// Record-supplied salience wins over the provider.
inline std::vector<double> sentence_salience(const ArticleRecord& article, const SalienceProvider& provider) {
  auto scores = article.salience ? *article.salience : provider.score_sentences(article);
  if (scores.size() != article.sentences.size())
    throw Error("salience provider returned " + std::to_string(scores.size()) + " scores for " +
                std::to_string(article.sentences.size()) + " sentences in '" + article.id + "'");
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0)) throw Error("salience score outside [0,1] for article '" + article.id + "'");
  return scores;
}

/// Top-k sentences by descending salience, ties by ascending sentence index.
inline std::vector<SalientSentence> select_salient(const ArticleRecord& article, const SalienceProvider& provider,
                                                   std::size_t k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (article.sentences.empty()) throw ValidationError("article '" + article.id + "' is empty");
  auto scores = sentence_salience(article, provider);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  std::vector<SalientSentence> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back({i, article.sentences[i], scores[i]});
  return out;
}

/// Heuristic SVO: first lexicon verb, with its neighbouring tokens as subject and object.
inline SvoTriple extract_svo(std::string_view sentence, const std::set<std::string>& verbs = default_verb_lexicon()) {
  auto toks = tokenize(sentence);
  if (toks.empty()) throw ValidationError("cannot extract SVO from an empty sentence");
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!verbs.contains(toks[i])) continue;
    return {i > 0 ? toks[i - 1] : "", toks[i], i + 1 < toks.size() ? toks[i + 1] : ""};
  }
  return {"", toks.front(), ""};
}

inline SvoTriple extract_svo(const ArticleRecord& article, std::size_t index,
                             const std::set<std::string>& verbs = default_verb_lexicon()) {
  if (article.svos) return (*article.svos)[index];
  return extract_svo(article.sentences.at(index), verbs);
}

inline std::string node_id_for(const ArticleRecord& article, std::size_t sentence_index) {
  return article.id + "#" + std::to_string(sentence_index);
}

inline Embedding sentence_embedding(const ArticleRecord& article, std::size_t index, const EmbeddingProvider& provider) {
  if (!article.embeddings) return provider.embed(article.sentences[index]);
  const auto& e = (*article.embeddings)[index];
  if (e.size() != provider.dimension())
    throw ValidationError("article '" + article.id + "' embedding dimension " + std::to_string(e.size()) +
                          " != configured " + std::to_string(provider.dimension()));
  return normalized(e);
}

inline EventGraph induce_graph(const ArticleRecord& article, const Providers& providers, const InductionConfig& config) {
  article.validate();
  config.validate();
  auto picked = select_salient(article, *providers.salience, config.top_k);
  std::sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) { return a.index < b.index; });

  EventGraph g;
  g.topic_id = article.topic_id;
  g.side = to_graph_side(article.side);
  g.role = "article";
  std::vector<const EventNode*> ordered;
  for (const auto& s : picked) {
    EventNode n;
    n.id = node_id_for(article, s.index);
    n.text = s.text;
    n.svo = extract_svo(article, s.index, config.verb_lexicon);
    n.embedding = sentence_embedding(article, s.index, *providers.embedding);
    n.salience = s.salience;
    n.provenance.emplace(article.id, s.index);
    g.add_node(std::move(n));
  }
  for (const auto& s : picked) ordered.push_back(&g.nodes.at(node_id_for(article, s.index)));

  for (std::size_t i = 0; i < picked.size(); ++i) {
    for (std::size_t j = i + 1; j < picked.size(); ++j) {
      const int hint = static_cast<int>(picked[j].index) - static_cast<int>(picked[i].index);
      auto verdict = providers.temporal->score(*ordered[i], *ordered[j], hint);
      if (!(verdict.confidence >= 0.0 && verdict.confidence <= 1.0))
        throw Error("temporal confidence outside [0,1] for " + ordered[i]->id + "/" + ordered[j]->id);
      if (verdict.confidence <= config.temporal_confidence_floor) continue;
      if (verdict.relation == TemporalRelation::Before)
        g.upsert_edge(ordered[i]->id, ordered[j]->id, verdict.confidence);
      else if (verdict.relation == TemporalRelation::After)
        g.upsert_edge(ordered[j]->id, ordered[i]->id, verdict.confidence);
    }
  }
  return dagify(std::move(g));
}

}  // namespace neg
