#pragma once

// Scorer interfaces standing in for the pretrained models, with deterministic
// fallbacks and providers that serve precomputed score files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neg/core.hpp"
#include "neg/lexicon.hpp"

namespace neg {

enum class TemporalRelation { Before, After, Equal, Vague };

inline std::string_view to_string(TemporalRelation r) {
  switch (r) {
    case TemporalRelation::Before: return "before";
    case TemporalRelation::After: return "after";
    case TemporalRelation::Equal: return "equal";
    case TemporalRelation::Vague: return "vague";
  }
  return "";
}

inline TemporalRelation parse_temporal_relation(std::string_view s) {
  if (s == "before") return TemporalRelation::Before;
  if (s == "after") return TemporalRelation::After;
  if (s == "equal") return TemporalRelation::Equal;
  if (s == "vague") return TemporalRelation::Vague;
  throw ValidationError("unknown temporal relation '" + std::string(s) + "'");
}

struct TemporalJudgement {
  TemporalRelation relation = TemporalRelation::Vague;
  double confidence = 0.0;

  bool operator==(const TemporalJudgement&) const = default;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  /// Unit-norm vector of length dimension().
  virtual Embedding embed(const std::string& text) const = 0;
};

class SalienceProvider {
 public:
  virtual ~SalienceProvider() = default;
  /// One score in [0,1] per sentence.
  virtual std::vector<double> score_sentences(const ArticleRecord& article) const = 0;
};

class TemporalScorer {
 public:
  virtual ~TemporalScorer() = default;
  /// `doc_order_hint` is (sentence index of e2) - (sentence index of e1) when both come
  /// from the same article, nullopt otherwise.
  virtual TemporalJudgement score(const EventNode& e1, const EventNode& e2,
                                  std::optional<int> doc_order_hint) const = 0;
};

class CoreferenceScorer {
 public:
  virtual ~CoreferenceScorer() = default;
  virtual double score(const EventNode& e1, const EventNode& e2) const = 0;
};

class Neutralizer {
 public:
  virtual ~Neutralizer() = default;
  virtual std::string neutralize(const std::string& left_text, const std::string& right_text) const = 0;
};

// ---------------------------------------------------------------------------
// Deterministic fallbacks

/// Seed mixed into every token hash of the hashed bag-of-words embedder.
inline constexpr std::uint64_t kEmbedHashSeed = 0x6e65675f68617368ULL;
inline constexpr std::size_t kDefaultEmbeddingDim = 768;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_bytes(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

}  // namespace detail

inline Embedding fallback_embed(const std::string& text, std::size_t dim, std::uint64_t seed = kEmbedHashSeed) {
  if (dim < 2) throw Error("embedding dimension must be >= 2");
  Embedding v(dim, 0.0);
  auto tokens = tokenize(text);
  if (tokens.empty()) {
    v[0] = 1.0;
    return v;
  }
  for (const auto& t : tokens) v[detail::hash_bytes(t, seed) % dim] += 1.0;
  return normalized(std::move(v));
}

class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dim = kDefaultEmbeddingDim, std::uint64_t seed = kEmbedHashSeed)
      : dim_(dim), seed_(seed) {
    if (dim < 2) throw ValidationError("embedding dimension must be >= 2");
  }
  std::size_t dimension() const override { return dim_; }
  Embedding embed(const std::string& text) const override { return fallback_embed(text, dim_, seed_); }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Centrality salience: mean cosine to the other sentences, min-max scaled.
inline std::vector<double> fallback_salience(const ArticleRecord& article, std::size_t dim = kDefaultEmbeddingDim) {
  const auto n = article.sentences.size();
  if (n == 0) return {};
  if (n == 1) return {1.0};
  std::vector<Embedding> emb;
  emb.reserve(n);
  for (const auto& s : article.sentences) emb.push_back(fallback_embed(s, dim));
  std::vector<double> mean(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) mean[i] += cosine(emb[i], emb[j]);
    mean[i] /= static_cast<double>(n - 1);
  }
  auto [lo, hi] = std::minmax_element(mean.begin(), mean.end());
  const double min = *lo, range = *hi - *lo;
  std::vector<double> out(n, 1.0);
  if (range > 0.0)
    for (std::size_t i = 0; i < n; ++i) out[i] = (mean[i] - min) / range;
  return out;
}

class CentralitySalience final : public SalienceProvider {
 public:
  explicit CentralitySalience(std::size_t dim = kDefaultEmbeddingDim) : dim_(dim) {}
  std::vector<double> score_sentences(const ArticleRecord& article) const override {
    return fallback_salience(article, dim_);
  }

 private:
  std::size_t dim_;
};

inline TemporalJudgement fallback_temporal(std::optional<int> doc_order_hint) {
  if (!doc_order_hint) return {TemporalRelation::Vague, 0.0};
  const int h = *doc_order_hint;
  if (h == 0) return {TemporalRelation::Equal, 1.0};
  const double conf = std::min(1.0, 0.5 + 0.1 * std::abs(h));
  return {h > 0 ? TemporalRelation::Before : TemporalRelation::After, conf};
}

class DiscourseOrderTemporal final : public TemporalScorer {
 public:
  TemporalJudgement score(const EventNode&, const EventNode&, std::optional<int> hint) const override {
    return fallback_temporal(hint);
  }
};

inline double fallback_coref(const EventNode& a, const EventNode& b) {
  return std::clamp(cosine(a.embedding, b.embedding), 0.0, 1.0);
}

class CosineCoreference final : public CoreferenceScorer {
 public:
  double score(const EventNode& a, const EventNode& b) const override { return fallback_coref(a, b); }
};

/// Sum of arousal over the distinct charged tokens of `text`.
inline double charged_arousal_sum(const std::string& text, const VadLexicon& lex) {
  auto toks = tokenize(text);
  std::set<std::string> uniq(toks.begin(), toks.end());
  double sum = 0.0;
  for (const auto& t : uniq) sum += lex.charged_arousal(t);
  return sum;
}

/// Picks whichever input carries less charged arousal; ties go to the left text.
inline std::string fallback_neutralize(const std::string& left_text, const std::string& right_text,
                                       const VadLexicon& lex) {
  return charged_arousal_sum(right_text, lex) < charged_arousal_sum(left_text, lex) ? right_text : left_text;
}

class ArousalNeutralizer final : public Neutralizer {
 public:
  explicit ArousalNeutralizer(std::shared_ptr<const VadLexicon> lex) : lex_(std::move(lex)) {
    if (!lex_) throw Error("ArousalNeutralizer needs a lexicon");
  }
  std::string neutralize(const std::string& l, const std::string& r) const override {
    return fallback_neutralize(l, r, *lex_);
  }

 private:
  std::shared_ptr<const VadLexicon> lex_;
};

/// Ablation stand-in: returns one of the two inputs unchanged, chosen by a seeded hash.
class RandomChoiceNeutralizer final : public Neutralizer {
 public:
  explicit RandomChoiceNeutralizer(std::uint64_t seed) : seed_(seed) {}
  std::string neutralize(const std::string& l, const std::string& r) const override {
    auto h = detail::hash_bytes(r, detail::hash_bytes(l, seed_));
    return (h & 1U) ? r : l;
  }

 private:
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Score files
//
// One JSON object per file:
//   {"role": "embedding|salience|temporal|coref|neutralized", "dim": D (embedding only),
//    "entries": [{"key": [..strings..], "value": ...}, ...]}
// Keys: embedding [text]; salience [article_id]; temporal [node_id_1, node_id_2];
// coref [node_id_1, node_id_2]; neutralized [left_text, right_text].

using ScoreKey = std::vector<std::string>;

/// A lookup into a score file found no entry for the key.
class MissingScore : public Error {
 public:
  using Error::Error;
};

struct ScoreFile {
  std::string role;
  std::optional<std::size_t> dim;
  std::map<ScoreKey, nlohmann::json> entries;

  static inline const std::set<std::string> kRoles = {"embedding", "salience", "temporal", "coref",
                                                      "neutralized"};

  const nlohmann::json& at(const ScoreKey& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) {
      std::string k;
      for (const auto& part : key) k += (k.empty() ? "" : "|") + part;
      throw MissingScore("score not precomputed: " + role + " key [" + k + "]");
    }
    return it->second;
  }

  const nlohmann::json* find(const ScoreKey& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [k, v] : entries) arr.push_back({{"key", k}, {"value", v}});
    nlohmann::json j = {{"role", role}, {"entries", std::move(arr)}};
    if (dim) j["dim"] = *dim;
    return j;
  }

  static ScoreFile from_json(const nlohmann::json& j) {
    try {
      ScoreFile f;
      f.role = j.at("role").get<std::string>();
      if (!kRoles.contains(f.role)) throw ValidationError("unknown score file role '" + f.role + "'");
      if (j.contains("dim")) f.dim = j.at("dim").get<std::size_t>();
      const std::size_t key_len = (f.role == "embedding" || f.role == "salience") ? 1 : 2;
      for (const auto& e : j.at("entries")) {
        auto key = e.at("key").get<ScoreKey>();
        if (key.size() != key_len)
          throw ValidationError(f.role + " key must have " + std::to_string(key_len) + " part(s)");
        validate_value(f, e.at("value"));
        f.entries[std::move(key)] = e.at("value");
      }
      return f;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed score file: ") + e.what());
    }
  }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json().dump() << '\n';
  }

  static ScoreFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read score file " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
    return from_json(j);
  }

 private:
  static void validate_value(const ScoreFile& f, const nlohmann::json& v) {
    auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (f.role == "embedding") {
      auto e = v.get<Embedding>();
      if (f.dim && e.size() != *f.dim) throw ValidationError("embedding entry has wrong dimension");
      normalized(std::move(e));
    } else if (f.role == "salience") {
      for (double x : v.get<std::vector<double>>())
        if (!in_unit(x)) throw ValidationError("salience entry outside [0,1]");
    } else if (f.role == "temporal") {
      parse_temporal_relation(v.at("rel").get<std::string>());
      if (!in_unit(v.at("conf").get<double>())) throw ValidationError("temporal confidence outside [0,1]");
    } else if (f.role == "coref") {
      if (!in_unit(v.get<double>())) throw ValidationError("coref score outside [0,1]");
    } else if (v.get<std::string>().empty()) {
      throw ValidationError("neutralized entry is empty");
    }
  }
};

namespace detail {

inline ScoreFile load_role(const std::filesystem::path& path, const std::string& role) {
  auto f = ScoreFile::load(path);
  if (f.role != role) throw ValidationError(path.string() + ": expected role '" + role + "', got '" + f.role + "'");
  return f;
}

}  // namespace detail

class FileEmbedding final : public EmbeddingProvider {
 public:
  explicit FileEmbedding(ScoreFile f) {
    if (f.role != "embedding") throw ValidationError("FileEmbedding needs an embedding score file");
    for (const auto& [k, v] : f.entries) {
      auto e = normalized(v.get<Embedding>());
      if (dim_ == 0) dim_ = e.size();
      if (e.size() != dim_) throw ValidationError("embedding file mixes dimensions");
      table_.emplace(k.front(), std::move(e));
    }
    if (f.dim) {
      if (dim_ != 0 && dim_ != *f.dim) throw ValidationError("embedding file dim header disagrees with entries");
      dim_ = *f.dim;
    }
  }
  explicit FileEmbedding(const std::filesystem::path& path) : FileEmbedding(detail::load_role(path, "embedding")) {}

  std::size_t dimension() const override { return dim_; }
  Embedding embed(const std::string& text) const override {
    auto it = table_.find(text);
    if (it == table_.end()) throw MissingScore("score not precomputed: embedding key [" + text + "]");
    return it->second;
  }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, Embedding> table_;
};

class FileSalience final : public SalienceProvider {
 public:
  explicit FileSalience(ScoreFile f) : file_(std::move(f)) {}
  explicit FileSalience(const std::filesystem::path& path) : file_(detail::load_role(path, "salience")) {}

  std::vector<double> score_sentences(const ArticleRecord& article) const override {
    auto scores = file_.at({article.id}).get<std::vector<double>>();
    if (scores.size() != article.sentences.size())
      throw ValidationError("salience file entry for '" + article.id + "' has wrong length");
    return scores;
  }

 private:
  ScoreFile file_;
};

class FileTemporal final : public TemporalScorer {
 public:
  explicit FileTemporal(ScoreFile f) : file_(std::move(f)) {}
  explicit FileTemporal(const std::filesystem::path& path) : file_(detail::load_role(path, "temporal")) {}

  TemporalJudgement score(const EventNode& e1, const EventNode& e2, std::optional<int>) const override {
    if (const auto* v = file_.find({e1.id, e2.id})) return parse(*v);
    if (const auto* v = file_.find({e2.id, e1.id})) {
      auto j = parse(*v);
      if (j.relation == TemporalRelation::Before)
        j.relation = TemporalRelation::After;
      else if (j.relation == TemporalRelation::After)
        j.relation = TemporalRelation::Before;
      return j;
    }
    return parse(file_.at({e1.id, e2.id}));
  }

 private:
  static TemporalJudgement parse(const nlohmann::json& v) {
    return {parse_temporal_relation(v.at("rel").get<std::string>()), v.at("conf").get<double>()};
  }
  ScoreFile file_;
};

class FileCoreference final : public CoreferenceScorer {
 public:
  explicit FileCoreference(ScoreFile f) : file_(std::move(f)) {}
  explicit FileCoreference(const std::filesystem::path& path) : file_(detail::load_role(path, "coref")) {}

  double score(const EventNode& a, const EventNode& b) const override {
    // Keys are looked up in canonical order so the score is symmetric by construction.
    const auto& lo = std::min(a.id, b.id);
    const auto& hi = std::max(a.id, b.id);
    if (const auto* v = file_.find({hi, lo})) return v->get<double>();
    return file_.at({lo, hi}).get<double>();
  }

 private:
  ScoreFile file_;
};

class FileNeutralizer final : public Neutralizer {
 public:
  explicit FileNeutralizer(ScoreFile f) : file_(std::move(f)) {}
  explicit FileNeutralizer(const std::filesystem::path& path) : file_(detail::load_role(path, "neutralized")) {}

  std::string neutralize(const std::string& l, const std::string& r) const override {
    return file_.at({l, r}).get<std::string>();
  }

 private:
  ScoreFile file_;
};

/// The five scorer roles a pipeline run needs.
struct Providers {
  std::shared_ptr<const EmbeddingProvider> embedding;
  std::shared_ptr<const SalienceProvider> salience;
  std::shared_ptr<const TemporalScorer> temporal;
  std::shared_ptr<const CoreferenceScorer> coref;
  std::shared_ptr<const Neutralizer> neutralizer;

  static Providers fallback(std::size_t dim, std::shared_ptr<const VadLexicon> lexicon) {
    return {std::make_shared<HashingEmbedder>(dim), std::make_shared<CentralitySalience>(dim),
            std::make_shared<DiscourseOrderTemporal>(), std::make_shared<CosineCoreference>(),
            std::make_shared<ArousalNeutralizer>(std::move(lexicon))};
  }
};

}  // namespace neg
