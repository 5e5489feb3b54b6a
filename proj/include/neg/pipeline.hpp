#pragma once

// Topic-level orchestration: induce -> merge per side -> merge across sides ->
// prune, plus the training and evaluation drivers and their reports.

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "neg/core.hpp"
#include "neg/dataset.hpp"
#include "neg/graph_io.hpp"
#include "neg/induction.hpp"
#include "neg/lexicon.hpp"
#include "neg/merging.hpp"
#include "neg/metrics.hpp"
#include "neg/providers.hpp"
#include "neg/pruning.hpp"

namespace neg {

/// Runs fn(i) for i in [0, n) on up to `workers` threads; results keep index order.
/// The exception of the lowest failing index is rethrown.
template <typename Fn>
auto parallel_map(std::size_t n, std::size_t workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct PipelineContext {
  RunConfig config;
  Providers providers;
  std::shared_ptr<const VadLexicon> lexicon = std::make_shared<VadLexicon>();
  BackgroundCounts background;

  static PipelineContext from_config(const RunConfig& c) {
    c.validate();
    PipelineContext ctx;
    ctx.config = c;
    if (!c.lexicon_path.empty()) ctx.lexicon = std::make_shared<VadLexicon>(VadLexicon::load(c.lexicon_path));
    if (!c.background_path.empty()) ctx.background = BackgroundCounts::load(c.background_path);
    ctx.providers = build_providers(c, ctx.lexicon);
    return ctx;
  }
};

namespace detail {

/// Re-raises any failure of `fn` with the stage name prefixed, preserving the error class.
template <typename Fn>
auto in_stage(const std::string& stage, const std::string& topic, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError("[" + stage + "] topic '" + topic + "': " + e.what());
  } catch (const std::exception& e) {
    throw Error("[" + stage + "] topic '" + topic + "': " + e.what());
  }
}

inline std::string safe_name(std::string s) {
  for (auto& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return s;
}

}  // namespace detail

struct PipelineResult {
  std::vector<EventGraph> article_graphs;
  EventGraph left, right, merged, central;
  std::optional<EventGraph> neutral;
};

inline EventGraph induce_side(const TopicRecord& topic, Side side, const PipelineContext& ctx,
                              std::vector<EventGraph>* collected = nullptr) {
  std::vector<EventGraph> graphs;
  for (const auto& a : topic.side_articles(side)) graphs.push_back(induce_graph(a, ctx.providers, ctx.config.induction()));
  if (collected) collected->insert(collected->end(), graphs.begin(), graphs.end());
  return merge_side(graphs, *ctx.providers.coref, ctx.config.merge());
}

/// Full per-topic flow. `neutralizer` overrides the context's neutralizer (ablations).
inline PipelineResult run_pipeline(const TopicRecord& topic, const PipelineContext& ctx, const GcnModel* model = nullptr,
                                   const Neutralizer* neutralizer = nullptr) {
  topic.validate();
  PipelineResult r;
  detail::in_stage("induce+merge_side", topic.topic_id, [&] {
    r.left = induce_side(topic, Side::Left, ctx, &r.article_graphs);
    r.right = induce_side(topic, Side::Right, ctx, &r.article_graphs);
    r.central = induce_side(topic, Side::Center, ctx, &r.article_graphs);
    r.central.role = "central";
    return 0;
  });
  r.merged = detail::in_stage("merge_cross", topic.topic_id, [&] {
    return merge_cross(r.left, r.right, neutralizer ? *neutralizer : *ctx.providers.neutralizer,
                       *ctx.providers.embedding, *ctx.providers.coref, ctx.config.merge());
  });
  if (model) r.neutral = detail::in_stage("prune", topic.topic_id, [&] { return prune(r.merged, *model); });
  return r;
}

/// Writes every graph of `r` under dir/<topic>/.
inline void persist(const PipelineResult& r, const std::filesystem::path& dir) {
  const auto base = dir / detail::safe_name(r.left.topic_id);
  for (const auto& g : r.article_graphs) {
    std::string article = g.nodes.empty() ? "empty" : g.nodes.begin()->second.provenance.begin()->first;
    save_graph(g, base / "articles" / (detail::safe_name(article) + ".json"));
  }
  save_graph(r.left, base / "left.json");
  save_graph(r.right, base / "right.json");
  save_graph(r.merged, base / "merged.json");
  save_graph(r.central, base / "central.json");
  if (r.neutral) save_graph(*r.neutral, base / "neutral.json");
}

// ---------------------------------------------------------------------------
// Reports

inline json prf_json(const PrfScore& s) { return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}}; }
inline json bias_json(const BiasScore& b) { return {{"arousal_pos", b.arousal_pos}, {"arousal_neg", b.arousal_neg}}; }

inline PrfScore mean_prf(const std::vector<PrfScore>& v) {
  PrfScore m;
  if (v.empty()) return m;
  for (const auto& s : v) {
    m.precision += s.precision;
    m.recall += s.recall;
    m.f1 += s.f1;
  }
  const double n = static_cast<double>(v.size());
  return {m.precision / n, m.recall / n, m.f1 / n};
}

namespace detail {

inline std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
  return buf;
}

inline std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }
inline std::string lpad(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  std::size_t epoch;
  double loss;
  std::optional<PrfScore> val_node;
};

struct TrainReport {
  std::size_t train_topics = 0, val_topics = 0, test_topics = 0;
  std::size_t keep_labels = 0, remove_labels = 0;
  std::optional<PrfScore> untrained_val_node;
  std::vector<EpochRecord> epochs;
  json config;

  json to_json() const {
    json ep = json::array();
    for (const auto& e : epochs) {
      json j = {{"epoch", e.epoch}, {"loss", e.loss}};
      j["val_node"] = e.val_node ? prf_json(*e.val_node) : json(nullptr);
      ep.push_back(std::move(j));
    }
    return {{"config", config},
            {"split", {{"train", train_topics}, {"val", val_topics}, {"test", test_topics}}},
            {"pseudo_labels", {{"keep", keep_labels}, {"remove", remove_labels}}},
            {"untrained_val_node", untrained_val_node ? prf_json(*untrained_val_node) : json(nullptr)},
            {"epochs", std::move(ep)}};
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "split train/val/test: " << train_topics << '/' << val_topics << '/' << test_topics << '\n';
    os << "pseudo-labels keep/remove: " << keep_labels << '/' << remove_labels << '\n';
    if (untrained_val_node) os << "untrained val node F1: " << detail::pct(untrained_val_node->f1) << '\n';
    os << detail::pad("Epoch", 7) << detail::lpad("Loss", 12) << detail::lpad("Val P", 9) << detail::lpad("Val R", 9)
       << detail::lpad("Val F1", 9) << '\n';
    for (const auto& e : epochs) {
      char loss[32];
      std::snprintf(loss, sizeof loss, "%.6f", e.loss);
      os << detail::pad(std::to_string(e.epoch), 7) << detail::lpad(loss, 12);
      if (e.val_node)
        os << detail::lpad(detail::pct(e.val_node->precision), 9) << detail::lpad(detail::pct(e.val_node->recall), 9)
           << detail::lpad(detail::pct(e.val_node->f1), 9);
      os << '\n';
    }
    return os.str();
  }
};

struct TrainResult {
  GcnModel model;
  TrainReport report;
};

/// Pipeline outputs without pruning plus pseudo-labels for a set of topics.
struct LabelledTopic {
  PipelineResult graphs;
  PseudoLabels labels;
};

inline std::vector<LabelledTopic> label_topics(const std::vector<TopicRecord>& topics, const PipelineContext& ctx) {
  return parallel_map(topics.size(), ctx.config.workers, [&](std::size_t i) {
    auto r = run_pipeline(topics[i], ctx);
    auto labels = detail::in_stage("pseudo_labels", topics[i].topic_id,
                                   [&] { return pseudo_labels(r.merged, r.central, ctx.config.match_threshold); });
    return LabelledTopic{std::move(r), std::move(labels)};
  });
}

inline std::optional<PrfScore> validation_node_prf(const std::vector<LabelledTopic>& val, const GcnModel& m,
                                                   double threshold) {
  if (val.empty()) return std::nullopt;
  std::vector<PrfScore> scores;
  for (const auto& t : val) scores.push_back(node_prf(prune(t.graphs.merged, m), t.graphs.central, threshold));
  return mean_prf(scores);
}

/// Splits the dataset, pseudo-labels the training topics and fits the node classifier.
inline TrainResult train_command(const std::vector<TopicRecord>& dataset, const PipelineContext& ctx) {
  const auto& c = ctx.config;
  auto split = split_dataset(dataset, c.split, c.seed);
  if (split.train.empty()) throw ValidationError("no training topics after the split");
  TrainReport report;
  report.config = c.to_json();
  report.train_topics = split.train.size();
  report.val_topics = split.val.size();
  report.test_topics = split.test.size();

  auto train_set = label_topics(split.train, ctx);
  auto val_set = label_topics(split.val, ctx);
  std::vector<TrainingGraph> data;
  for (const auto& t : train_set) {
    report.keep_labels += t.labels.count(NodeLabel::Keep);
    report.remove_labels += t.labels.count(NodeLabel::Remove);
    data.push_back(make_training_graph(t.graphs.merged, t.labels, c.model_kind));
  }
  const auto opt = c.train_options();
  const auto dim = static_cast<std::size_t>(data.front().features.cols());
  report.untrained_val_node = validation_node_prf(val_set, init_model(dim, opt.hidden, opt.seed, opt.kind), c.metric_threshold);
  auto model = train(data, opt, [&](std::size_t epoch, const GcnModel& m) {
    report.epochs.push_back({epoch, m.loss_trajectory.back(), validation_node_prf(val_set, m, c.metric_threshold)});
  });
  return {std::move(model), std::move(report)};
}

// ---------------------------------------------------------------------------
// Evaluation

inline const std::vector<std::string>& table1_rows() {
  static const std::vector<std::string> rows = {"Left", "Right", "Salience Ranking", "Event Instance Graph",
                                                "w/ isolated nodes", "Ours"};
  return rows;
}

inline const std::vector<std::string>& table2_rows() {
  static const std::vector<std::string> rows = {"Left", "Right", "Ours", "w/o Neutralizer"};
  return rows;
}

struct TopicEval {
  std::string topic_id;
  std::map<std::string, PrfScore> node;
  std::map<std::string, PrfScore> edge;
  std::map<std::string, BiasScore> bias;
  std::map<std::string, PrfScore> ablation_node;  // Table 3, keyed by model kind
  std::map<std::string, PrfScore> ablation_edge;
};

struct EvalReport {
  json config;
  std::vector<TopicEval> topics;
  std::map<std::string, PrfScore> node_mean, edge_mean;
  std::map<std::string, BiasScore> bias_mean;
  std::vector<std::string> ablation_rows;
  std::map<std::string, PrfScore> ablation_node_mean, ablation_edge_mean;

  json to_json() const {
    json per_topic = json::array();
    for (const auto& t : topics) {
      json node, edge, bias;
      for (const auto& [k, v] : t.node) node[k] = prf_json(v);
      for (const auto& [k, v] : t.edge) edge[k] = prf_json(v);
      for (const auto& [k, v] : t.bias) bias[k] = bias_json(v);
      per_topic.push_back({{"topic_id", t.topic_id}, {"node", node}, {"edge", edge}, {"bias", bias}});
    }
    json t1 = json::array(), t2 = json::array(), t3 = json::array();
    for (const auto& row : table1_rows())
      t1.push_back({{"model", row}, {"node", prf_json(node_mean.at(row))}, {"edge", prf_json(edge_mean.at(row))}});
    for (const auto& row : table2_rows()) t2.push_back({{"graph", row}, {"bias", bias_json(bias_mean.at(row))}});
    for (const auto& row : ablation_rows)
      t3.push_back({{"pruning_model", row},
                    {"node_f1", ablation_node_mean.at(row).f1},
                    {"edge_f1", ablation_edge_mean.at(row).f1}});
    json out = {{"config", config}, {"test_topics", topics.size()}, {"table1", t1}, {"table2", t2}, {"topics", per_topic}};
    if (!ablation_rows.empty()) out["table3"] = t3;
    return out;
  }

  std::string to_text() const {
    using detail::lpad;
    using detail::pad;
    using detail::pct;
    std::ostringstream os;
    os << "Graph distance metrics (" << topics.size() << " test topics)\n";
    os << pad("Model", 22) << "| " << lpad("Node-level", 10) << std::string(20, ' ') << "| " << lpad("Edge-level", 10)
       << '\n';
    os << pad("", 22) << "| " << lpad("Precision", 10) << lpad("Recall", 10) << lpad("F1", 10) << "| "
       << lpad("Precision", 10) << lpad("Recall", 10) << lpad("F1", 10) << '\n';
    for (const auto& row : table1_rows()) {
      const auto& n = node_mean.at(row);
      const auto& e = edge_mean.at(row);
      os << pad(row, 22) << "| " << lpad(pct(n.precision), 10) << lpad(pct(n.recall), 10) << lpad(pct(n.f1), 10) << "| "
         << lpad(pct(e.precision), 10) << lpad(pct(e.recall), 10) << lpad(pct(e.f1), 10) << '\n';
    }
    os << "\nBias metric\n" << pad("Graph", 22) << lpad("Arousal_pos", 13) << lpad("Arousal_neg", 13) << '\n';
    for (const auto& row : table2_rows()) {
      const auto& b = bias_mean.at(row);
      os << pad(row, 22) << lpad(detail::fixed2(b.arousal_pos), 13) << lpad(detail::fixed2(b.arousal_neg), 13) << '\n';
    }
    if (!ablation_rows.empty()) {
      os << "\nPruning model ablation\n" << pad("Pruning Model", 22) << lpad("Node F1", 10) << lpad("Edge F1", 10) << '\n';
      for (const auto& row : ablation_rows)
        os << pad(row, 22) << lpad(pct(ablation_node_mean.at(row).f1), 10) << lpad(pct(ablation_edge_mean.at(row).f1), 10)
           << '\n';
    }
    return os.str();
  }
};

inline std::string model_label(ModelKind k) { return k == ModelKind::Gcn ? "GCN" : "MLP"; }

inline TopicEval evaluate_topic(const TopicRecord& topic, const PipelineContext& ctx, const GcnModel& model,
                                const GcnModel* ablation) {
  const auto& c = ctx.config;
  const double th = c.metric_threshold;
  TopicEval te;
  te.topic_id = topic.topic_id;

  auto ours = run_pipeline(topic, ctx, &model);
  RandomChoiceNeutralizer random_pick(c.seed);
  auto plain = run_pipeline(topic, ctx, &model, &random_pick);

  std::vector<ArticleRecord> inputs = topic.side_articles(Side::Left);
  for (auto& a : topic.side_articles(Side::Right)) inputs.push_back(std::move(a));
  auto salience = detail::in_stage("baseline_salience", topic.topic_id, [&] {
    return baseline_salience_ranking(inputs, ctx.background, ctx.providers, c.induction());
  });
  std::vector<EventGraph> input_graphs;
  for (const auto& g : ours.article_graphs)
    if (g.side == GraphSide::Left || g.side == GraphSide::Right) input_graphs.push_back(g);
  // The instance graph folds graphs of both sides, so they are relabelled to one side first.
  for (auto& g : input_graphs) g.side = GraphSide::Merged;
  auto instance = baseline_instance_graph(input_graphs, false, *ctx.providers.coref, c.merge());
  auto instance_iso = baseline_instance_graph(input_graphs, true, *ctx.providers.coref, c.merge());

  const EventGraph& target = ours.central;
  const std::map<std::string, const EventGraph*> rows = {
      {"Left", &ours.left},       {"Right", &ours.right},       {"Salience Ranking", &salience},
      {"Event Instance Graph", &instance}, {"w/ isolated nodes", &instance_iso}, {"Ours", &*ours.neutral}};
  for (const auto& [name, g] : rows) {
    te.node[name] = node_prf(*g, target, th);
    te.edge[name] = edge_prf(*g, target, th);
  }
  te.bias["Left"] = arousal_bias(ours.left, target, *ctx.lexicon);
  te.bias["Right"] = arousal_bias(ours.right, target, *ctx.lexicon);
  te.bias["Ours"] = arousal_bias(*ours.neutral, target, *ctx.lexicon);
  te.bias["w/o Neutralizer"] = arousal_bias(*plain.neutral, target, *ctx.lexicon);

  if (ablation) {
    auto pruned = prune(ours.merged, *ablation);
    te.ablation_node[model_label(ablation->kind)] = node_prf(pruned, target, th);
    te.ablation_edge[model_label(ablation->kind)] = edge_prf(pruned, target, th);
    te.ablation_node[model_label(model.kind)] = te.node["Ours"];
    te.ablation_edge[model_label(model.kind)] = te.edge["Ours"];
  }
  return te;
}

/// Scores every test topic against its center graph; means are macro averages over topics.
inline EvalReport eval_command(const std::vector<TopicRecord>& test_topics, const PipelineContext& ctx,
                               const GcnModel& model, const GcnModel* ablation = nullptr) {
  if (test_topics.empty()) throw ValidationError("evaluation needs at least one test topic");
  EvalReport rep;
  rep.config = ctx.config.to_json();
  rep.topics = parallel_map(test_topics.size(), ctx.config.workers,
                            [&](std::size_t i) { return evaluate_topic(test_topics[i], ctx, model, ablation); });
  for (const auto& row : table1_rows()) {
    std::vector<PrfScore> n, e;
    for (const auto& t : rep.topics) {
      n.push_back(t.node.at(row));
      e.push_back(t.edge.at(row));
    }
    rep.node_mean[row] = mean_prf(n);
    rep.edge_mean[row] = mean_prf(e);
  }
  for (const auto& row : table2_rows()) {
    std::vector<BiasScore> b;
    for (const auto& t : rep.topics) b.push_back(t.bias.at(row));
    rep.bias_mean[row] = corpus_bias(b);
  }
  if (ablation) {
    rep.ablation_rows = {model_label(ablation->kind), model_label(model.kind)};
    if (ablation->kind == model.kind) rep.ablation_rows.pop_back();
    for (const auto& row : rep.ablation_rows) {
      std::vector<PrfScore> n, e;
      for (const auto& t : rep.topics) {
        n.push_back(t.ablation_node.at(row));
        e.push_back(t.ablation_edge.at(row));
      }
      rep.ablation_node_mean[row] = mean_prf(n);
      rep.ablation_edge_mean[row] = mean_prf(e);
    }
  }
  return rep;
}

}  // namespace neg
