#pragma once

// Graph distance metrics against the center graph, the lexicon arousal bias
// metric, and the two comparison baselines.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "neg/core.hpp"
#include "neg/induction.hpp"
#include "neg/lexicon.hpp"
#include "neg/matching.hpp"
#include "neg/merging.hpp"
#include "neg/providers.hpp"

namespace neg {

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Both sides empty scores (1, 1, 1).
inline PrfScore prf_from_counts(const MatchCounts& c) {
  if (c.tp + c.fp == 0 && c.tp + c.fn == 0) return {1.0, 1.0, 1.0};
  PrfScore s;
  if (c.tp + c.fp > 0) s.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) s.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

inline MatchCounts node_match_counts(const EventGraph& pred, const EventGraph& target, double threshold = 0.5) {
  std::size_t tp = 0;
  if (!pred.nodes.empty() && !target.nodes.empty())
    tp = greedy_match(embedding_similarity(pred, target), threshold).size();
  return {tp, pred.nodes.size() - tp, target.nodes.size() - tp};
}

inline PrfScore node_prf(const EventGraph& pred, const EventGraph& target, double threshold = 0.5) {
  return prf_from_counts(node_match_counts(pred, target, threshold));
}

/// Endpoint-wise edge similarity (sim(u_p,u_t) + sim(v_p,v_t)) / 2, rows follow pred.edges.
inline ScoreMatrix edge_similarity(const EventGraph& pred, const EventGraph& target) {
  ScoreMatrix s;
  s.reserve(pred.edges.size());
  for (const auto& ep : pred.edges) {
    const auto& up = pred.nodes.at(ep.src).embedding;
    const auto& vp = pred.nodes.at(ep.dst).embedding;
    auto& row = s.emplace_back();
    for (const auto& et : target.edges)
      row.push_back(0.5 * (cosine(up, target.nodes.at(et.src).embedding) + cosine(vp, target.nodes.at(et.dst).embedding)));
  }
  return s;
}

inline MatchCounts edge_match_counts(const EventGraph& pred, const EventGraph& target, double threshold = 0.5) {
  std::size_t tp = 0;
  if (!pred.edges.empty() && !target.edges.empty()) tp = greedy_match(edge_similarity(pred, target), threshold).size();
  return {tp, pred.edges.size() - tp, target.edges.size() - tp};
}

inline PrfScore edge_prf(const EventGraph& pred, const EventGraph& target, double threshold = 0.5) {
  return prf_from_counts(edge_match_counts(pred, target, threshold));
}

// ---------------------------------------------------------------------------
// Arousal bias

struct BiasScore {
  double arousal_pos = 0.0;
  double arousal_neg = 0.0;
};

inline std::set<std::string> graph_tokens(const EventGraph& g) {
  std::set<std::string> out;
  for (const auto& [_, n] : g.nodes)
    for (auto& t : tokenize(n.text)) out.insert(std::move(t));
  return out;
}

/// Arousal of charged tokens that appear in `pred` but nowhere in `target`.
inline BiasScore arousal_bias(const EventGraph& pred, const EventGraph& target, const VadLexicon& lexicon) {
  const auto center = graph_tokens(target);
  BiasScore b;
  for (const auto& t : graph_tokens(pred)) {
    if (center.contains(t)) continue;
    const Vad* v = lexicon.find(t);
    if (!v) continue;
    if (v->valence > kPositiveValence) b.arousal_pos += v->arousal;
    if (v->valence < kNegativeValence) b.arousal_neg += v->arousal;
  }
  return b;
}

inline BiasScore corpus_bias(const std::vector<BiasScore>& scores) {
  if (scores.empty()) throw Error("corpus_bias: no scores to average");
  BiasScore m;
  for (const auto& s : scores) {
    m.arousal_pos += s.arousal_pos;
    m.arousal_neg += s.arousal_neg;
  }
  m.arousal_pos /= static_cast<double>(scores.size());
  m.arousal_neg /= static_cast<double>(scores.size());
  return m;
}

// ---------------------------------------------------------------------------
// Baselines

/// (1 + ln freq)^2 * ln(N / bsf)
inline double word_salience(std::size_t freq, std::size_t total_sentences, std::size_t bsf) {
  if (freq < 1 || total_sentences < 1 || bsf < 1) throw ValidationError("word_salience arguments must be >= 1");
  const double tf = 1.0 + std::log(static_cast<double>(freq));
  return tf * tf * std::log(static_cast<double>(total_sentences) / static_cast<double>(bsf));
}

/// Mean word salience per sentence of one concatenated document. Word frequencies are
/// counted over the whole document; N falls back to the document's sentence count when
/// the background table has no #N header.
inline std::vector<double> sentence_word_salience(const std::vector<std::string>& sentences,
                                                  const BackgroundCounts& background) {
  std::vector<std::vector<std::string>> toks;
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& s : sentences) {
    toks.push_back(tokenize(s));
    for (const auto& t : toks.back()) ++freq[t];
  }
  const std::size_t n = background.total_sentences > 0 ? background.total_sentences : std::max<std::size_t>(1, sentences.size());
  std::vector<double> out;
  out.reserve(sentences.size());
  for (const auto& ts : toks) {
    double sum = 0.0;
    for (const auto& t : ts) sum += word_salience(freq.at(t), n, background.bsf(t));
    out.push_back(ts.empty() ? 0.0 : sum / static_cast<double>(ts.size()));
  }
  return out;
}

/// Serves fixed scores, min-max scaled into [0,1] so induction accepts them.
class FixedSalience final : public SalienceProvider {
 public:
  explicit FixedSalience(std::vector<double> raw) {
    scores_ = std::move(raw);
    if (scores_.empty()) return;
    auto [lo, hi] = std::minmax_element(scores_.begin(), scores_.end());
    const double min = *lo, range = *hi - *lo;
    for (auto& s : scores_) s = range > 0.0 ? (s - min) / range : 1.0;
  }
  std::vector<double> score_sentences(const ArticleRecord& a) const override {
    if (a.sentences.size() != scores_.size()) throw Error("FixedSalience: sentence count mismatch");
    return scores_;
  }

 private:
  std::vector<double> scores_;
};

/// Concatenates the articles, ranks sentences by word salience, and induces one graph.
/// Node provenance points back at the original articles.
inline EventGraph baseline_salience_ranking(const std::vector<ArticleRecord>& articles, const BackgroundCounts& background,
                                            const Providers& providers, const InductionConfig& config) {
  if (articles.empty()) throw ValidationError("salience baseline needs at least one article");
  ArticleRecord concat;
  concat.topic_id = articles.front().topic_id;
  concat.id = concat.topic_id + "/concat";
  concat.side = articles.front().side;
  std::vector<std::pair<std::string, std::size_t>> origin;
  bool all_embedded = true;
  std::vector<Embedding> embeddings;
  for (const auto& a : articles) {
    a.validate();
    all_embedded = all_embedded && a.embeddings.has_value();
    for (std::size_t i = 0; i < a.sentences.size(); ++i) {
      concat.sentences.push_back(a.sentences[i]);
      origin.emplace_back(a.id, i);
      if (a.embeddings) embeddings.push_back((*a.embeddings)[i]);
    }
  }
  if (all_embedded) concat.embeddings = std::move(embeddings);
  FixedSalience salience(sentence_word_salience(concat.sentences, background));
  Providers p = providers;
  p.salience = std::shared_ptr<const SalienceProvider>(&salience, [](const SalienceProvider*) {});
  EventGraph g = induce_graph(concat, p, config);
  for (auto& [_, n] : g.nodes) {
    Provenance prov;
    for (const auto& [art, idx] : n.provenance) prov.insert(origin.at(idx));
    n.provenance = std::move(prov);
  }
  g.side = GraphSide::Merged;
  g.role = "baseline";
  return g;
}

/// Folds every graph together with the random representative rule; optionally drops
/// nodes left without any edge.
inline EventGraph baseline_instance_graph(const std::vector<EventGraph>& graphs, bool include_isolated,
                                          const CoreferenceScorer& scorer, const MergeConfig& config) {
  config.validate();
  if (graphs.empty()) throw ValidationError("instance graph baseline needs at least one graph");
  std::mt19937_64 rng(config.rng_seed);
  auto rule = random_representative(rng);
  EventGraph acc = dagify(graphs.front());
  for (std::size_t i = 1; i < graphs.size(); ++i)
    acc = merge_pair(acc, graphs[i], match_nodes(acc, graphs[i], scorer, config.coref_threshold), rule);
  acc.side = GraphSide::Merged;
  acc.role = "baseline";
  if (include_isolated) return acc;
  std::set<std::string> touched;
  for (const auto& e : acc.edges) {
    touched.insert(e.src);
    touched.insert(e.dst);
  }
  std::erase_if(acc.nodes, [&](const auto& kv) { return !touched.contains(kv.first); });
  return acc;
}

}  // namespace neg
