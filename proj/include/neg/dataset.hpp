#pragma once

// Topic triplet records, seeded train/val/test splits, and run configuration.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "neg/core.hpp"
#include "neg/graph_io.hpp"
#include "neg/induction.hpp"
#include "neg/merging.hpp"
#include "neg/providers.hpp"
#include "neg/pruning.hpp"

namespace neg {

struct TopicRecord {
  std::string topic_id;
  std::vector<ArticleRecord> articles;

  std::vector<ArticleRecord> side_articles(Side s) const {
    std::vector<ArticleRecord> out;
    for (const auto& a : articles)
      if (a.side == s) out.push_back(a);
    return out;
  }

  void validate() const {
    for (Side s : {Side::Left, Side::Right, Side::Center}) {
      bool found = std::any_of(articles.begin(), articles.end(), [s](const auto& a) { return a.side == s; });
      if (!found) throw ValidationError("topic '" + topic_id + "' has no " + std::string(to_string(s)) + " article");
    }
    std::set<std::string> ids;
    for (const auto& a : articles) {
      if (!ids.insert(a.id).second) throw ValidationError("topic '" + topic_id + "' repeats article id '" + a.id + "'");
      a.validate();
    }
  }
};

inline ArticleRecord article_from_json(const json& j, const std::string& topic_id) {
  ArticleRecord a;
  a.id = j.at("id").get<std::string>();
  a.topic_id = topic_id;
  a.side = parse_side(j.at("side").get<std::string>());
  a.sentences = j.at("sentences").get<std::vector<std::string>>();
  if (j.contains("salience")) a.salience = j.at("salience").get<std::vector<double>>();
  if (j.contains("embeddings")) a.embeddings = j.at("embeddings").get<std::vector<Embedding>>();
  if (j.contains("svos")) {
    std::vector<SvoTriple> svos;
    for (const auto& t : j.at("svos")) svos.push_back(svo_from_json(t));
    a.svos = std::move(svos);
  }
  return a;
}

inline json article_to_json(const ArticleRecord& a) {
  json j = {{"id", a.id}, {"side", std::string(to_string(a.side))}, {"sentences", a.sentences}};
  if (a.salience) j["salience"] = *a.salience;
  if (a.embeddings) j["embeddings"] = *a.embeddings;
  if (a.svos) {
    json svos = json::array();
    for (const auto& t : *a.svos) svos.push_back(svo_to_json(t));
    j["svos"] = std::move(svos);
  }
  return j;
}

inline TopicRecord topic_from_json(const json& j) {
  TopicRecord t;
  t.topic_id = j.at("topic_id").get<std::string>();
  for (const auto& ja : j.at("articles")) t.articles.push_back(article_from_json(ja, t.topic_id));
  t.validate();
  return t;
}

inline json topic_to_json(const TopicRecord& t) {
  json arts = json::array();
  for (const auto& a : t.articles) arts.push_back(article_to_json(a));
  return {{"topic_id", t.topic_id}, {"articles", std::move(arts)}};
}

/// One JSON topic record per line; blank lines are skipped.
inline std::vector<TopicRecord> parse_dataset(std::istream& in, const std::string& origin = "<dataset>") {
  std::vector<TopicRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto t = topic_from_json(json::parse(line));
      if (!seen.insert(t.topic_id).second) throw ValidationError("duplicate topic_id '" + t.topic_id + "'");
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<TopicRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read dataset " + path.string());
  return parse_dataset(in, path.string());
}

inline void save_dataset(const std::vector<TopicRecord>& topics, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& t : topics) out << topic_to_json(t).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Splits

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;

  void validate() const {
    if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9)
      throw ValidationError("split fractions must be non-negative and sum to 1");
  }
};

struct SplitSizes {
  std::size_t train, val, test;
  bool operator==(const SplitSizes&) const = default;
};

/// floor(N * train), floor(N * val), remainder to test.
inline SplitSizes split_sizes(std::size_t n, const SplitFractions& f) {
  f.validate();
  // The epsilon keeps exact products such as 10 * 0.7 from flooring to 6.
  auto floor_of = [n](double frac) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
  };
  const std::size_t train = std::min(n, floor_of(f.train));
  const std::size_t val = std::min(n - train, floor_of(f.val));
  return {train, val, n - train - val};
}

/// Fisher-Yates with an unbiased bounded draw, so the order is identical across standard libraries.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do r = rng();
    while (r >= limit);
    std::swap(v[i - 1], v[static_cast<std::size_t>(r % bound)]);
  }
}

template <typename T>
struct Split {
  std::vector<T> train, val, test;
};

template <typename T>
Split<T> split_dataset(std::vector<T> items, const SplitFractions& f, std::uint64_t seed) {
  const auto sizes = split_sizes(items.size(), f);
  seeded_shuffle(items, seed);
  Split<T> s;
  auto it = std::make_move_iterator(items.begin());
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes.train));
  it += static_cast<std::ptrdiff_t>(sizes.train);
  s.val.assign(it, it + static_cast<std::ptrdiff_t>(sizes.val));
  it += static_cast<std::ptrdiff_t>(sizes.val);
  s.test.assign(it, std::make_move_iterator(items.end()));
  return s;
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  std::size_t top_k = 10;
  double temporal_confidence_floor = 0.0;
  double coref_threshold = 0.5;
  double match_threshold = 0.5;
  double metric_threshold = 0.5;
  std::size_t hidden = 64;
  std::size_t epochs = 10;
  double learning_rate = 1e-4;
  std::uint64_t seed = 13;
  std::size_t workers = 1;
  ModelKind model_kind = ModelKind::Gcn;
  SplitFractions split;
  // role -> "fallback" | "file:<path>"; roles: embedding, salience, temporal, coref, neutralizer
  std::map<std::string, std::string> providers;
  std::string lexicon_path;
  std::string background_path;
  std::string output_dir = "out";

  static inline const std::set<std::string> kProviderRoles = {"embedding", "salience", "temporal", "coref",
                                                              "neutralizer"};

  InductionConfig induction() const {
    InductionConfig c;
    c.top_k = top_k;
    c.temporal_confidence_floor = temporal_confidence_floor;
    return c;
  }

  MergeConfig merge() const { return {coref_threshold, seed}; }

  TrainOptions train_options() const { return {epochs, learning_rate, hidden, seed, model_kind}; }

  void set_provider(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ValidationError("provider override must look like role=fallback|file:PATH");
    auto role = assignment.substr(0, eq);
    auto spec = assignment.substr(eq + 1);
    if (!kProviderRoles.contains(role)) throw ValidationError("unknown provider role '" + role + "'");
    if (spec != "fallback" && spec.rfind("file:", 0) != 0)
      throw ValidationError("provider for '" + role + "' must be 'fallback' or 'file:PATH'");
    providers[role] = spec;
  }

  void validate() const {
    if (embedding_dim < 2) throw ValidationError("embedding_dim must be >= 2");
    if (top_k < 1) throw ValidationError("top_k must be >= 1");
    for (double t : {temporal_confidence_floor, coref_threshold, match_threshold, metric_threshold})
      if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("thresholds must lie in [0,1]");
    if (hidden < 1) throw ValidationError("hidden must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning rate must be >= 0");
    if (workers < 1) throw ValidationError("workers must be >= 1");
    split.validate();
  }

  json to_json() const {
    return {{"embedding_dim", embedding_dim},
            {"top_k", top_k},
            {"temporal_confidence_floor", temporal_confidence_floor},
            {"coref_threshold", coref_threshold},
            {"match_threshold", match_threshold},
            {"metric_threshold", metric_threshold},
            {"hidden", hidden},
            {"epochs", epochs},
            {"lr", learning_rate},
            {"seed", seed},
            {"model", std::string(to_string(model_kind))},
            {"split", {split.train, split.val, split.test}},
            {"providers", providers},
            {"lexicon", lexicon_path},
            {"background", background_path}};
  }

  static RunConfig from_json(const json& j) {
    RunConfig c;
    try {
      c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
      c.top_k = j.value("top_k", c.top_k);
      c.temporal_confidence_floor = j.value("temporal_confidence_floor", c.temporal_confidence_floor);
      c.coref_threshold = j.value("coref_threshold", c.coref_threshold);
      c.match_threshold = j.value("match_threshold", c.match_threshold);
      c.metric_threshold = j.value("metric_threshold", c.metric_threshold);
      c.hidden = j.value("hidden", c.hidden);
      c.epochs = j.value("epochs", c.epochs);
      c.learning_rate = j.value("lr", c.learning_rate);
      c.seed = j.value("seed", c.seed);
      c.workers = j.value("workers", c.workers);
      if (j.contains("model")) {
        auto m = j.at("model").get<std::string>();
        if (m != "gcn" && m != "mlp") throw ValidationError("model must be 'gcn' or 'mlp'");
        c.model_kind = m == "gcn" ? ModelKind::Gcn : ModelKind::Mlp;
      }
      if (j.contains("split")) {
        auto s = j.at("split").get<std::vector<double>>();
        if (s.size() != 3) throw ValidationError("split must list three fractions");
        c.split = {s[0], s[1], s[2]};
      }
      if (j.contains("providers"))
        for (const auto& [role, spec] : j.at("providers").items()) c.set_provider(role + "=" + spec.get<std::string>());
      c.lexicon_path = j.value("lexicon", c.lexicon_path);
      c.background_path = j.value("background", c.background_path);
      c.output_dir = j.value("output_dir", c.output_dir);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("bad config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config " + path.string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
    return from_json(j);
  }
};

/// Instantiates every provider role from its selection string, loading files eagerly.
inline Providers build_providers(const RunConfig& c, std::shared_ptr<const VadLexicon> lexicon) {
  Providers p = Providers::fallback(c.embedding_dim, lexicon ? lexicon : std::make_shared<VadLexicon>());
  auto file_of = [&c](const std::string& role) -> std::optional<std::filesystem::path> {
    auto it = c.providers.find(role);
    if (it == c.providers.end() || it->second == "fallback") return std::nullopt;
    return std::filesystem::path(it->second.substr(5));
  };
  if (auto f = file_of("embedding")) {
    auto e = std::make_shared<FileEmbedding>(*f);
    if (e->dimension() != c.embedding_dim)
      throw ValidationError("embedding file dimension " + std::to_string(e->dimension()) + " != configured " +
                            std::to_string(c.embedding_dim));
    p.embedding = e;
  }
  if (auto f = file_of("salience")) p.salience = std::make_shared<FileSalience>(*f);
  if (auto f = file_of("temporal")) p.temporal = std::make_shared<FileTemporal>(*f);
  if (auto f = file_of("coref")) p.coref = std::make_shared<FileCoreference>(*f);
  if (auto f = file_of("neutralizer")) p.neutralizer = std::make_shared<FileNeutralizer>(*f);
  return p;
}

}  // namespace neg
