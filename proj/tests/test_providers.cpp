#include <gtest/gtest.h>

#include <filesystem>

#include "neg/providers.hpp"
#include "support/oracles.hpp"

using namespace neg;

namespace {

ArticleRecord article(std::vector<std::string> sentences) {
  ArticleRecord a;
  a.id = "a1";
  a.topic_id = "t";
  a.sentences = std::move(sentences);
  return a;
}

std::size_t bucket(const std::string& token, std::size_t dim = kDefaultEmbeddingDim) {
  auto e = fallback_embed(token, dim);
  return static_cast<std::size_t>(std::max_element(e.begin(), e.end()) - e.begin());
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "neg_provider_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(FallbackEmbed, OrderInvariantAndDeterministic) {
  EXPECT_EQ(fallback_embed("a b", 768), fallback_embed("b a", 768));
  auto x = fallback_embed("senate passes the bill", 768);
  auto y = fallback_embed("senate passes the bill", 768);
  EXPECT_EQ(x, y);
}

TEST(FallbackEmbed, UnitNormAndEmptyFallsBackToBasis) {
  for (const char* t : {"one", "two words", "repeat repeat repeat", "Mixed CASE tokens 42"}) {
    auto e = fallback_embed(t, 64);
    double sq = 0;
    for (double v : e) sq += v * v;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12) << t;
  }
  auto e = fallback_embed("?!", 8);
  EXPECT_EQ(e, neg::testing::basis(8, 0));
  EXPECT_THROW(fallback_embed("x", 1), Error);
}

TEST(FallbackEmbed, SharedTokensDominateSimilarity) {
  // Bucket indices confirm there are no hash collisions among these tokens, so the
  // hand values 3/sqrt(12) and 0 hold exactly.
  std::set<std::size_t> b;
  for (auto t : {"gun", "control", "vote", "now", "hurricane", "landfall"}) b.insert(bucket(t));
  ASSERT_EQ(b.size(), 6u);
  const auto base = fallback_embed("gun control vote", 768);
  const double near = cosine(base, fallback_embed("gun control vote now", 768));
  const double far = cosine(base, fallback_embed("hurricane landfall", 768));
  EXPECT_NEAR(near, 3.0 / std::sqrt(12.0), 1e-12);
  EXPECT_DOUBLE_EQ(far, 0.0);
  EXPECT_GT(near, far);
}

TEST(FallbackSalience, DegenerateAndSymmetricCases) {
  EXPECT_EQ(fallback_salience(article({"only one"})), std::vector<double>{1.0});
  auto same = fallback_salience(article({"x y", "x y", "x y"}));
  EXPECT_EQ(same, (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(FallbackSalience, BridgingSentenceIsMostCentral) {
  std::set<std::size_t> b;
  for (auto t : {"alpha", "beta", "gamma", "delta"}) b.insert(bucket(t));
  ASSERT_EQ(b.size(), 4u);
  // cos matrix: (1,2)=1/2, (2,3)=1/2, (1,3)=0 -> means 1/4, 1/2, 1/4 -> scaled 0, 1, 0
  auto s = fallback_salience(article({"alpha beta", "beta gamma", "gamma delta"}));
  ASSERT_EQ(s.size(), 3u);
  EXPECT_NEAR(s[0], 0.0, 1e-12);
  EXPECT_NEAR(s[1], 1.0, 1e-12);
  EXPECT_NEAR(s[2], 0.0, 1e-12);
}

TEST(FallbackTemporal, DiscourseOrderFormula) {
  EXPECT_EQ(fallback_temporal(1).relation, TemporalRelation::Before);
  EXPECT_NEAR(fallback_temporal(1).confidence, 0.6, 1e-12);
  EXPECT_NEAR(fallback_temporal(3).confidence, 0.8, 1e-12);
  EXPECT_EQ(fallback_temporal(-2).relation, TemporalRelation::After);
  EXPECT_NEAR(fallback_temporal(-2).confidence, 0.7, 1e-12);
  EXPECT_EQ(fallback_temporal(9).confidence, 1.0);
  EXPECT_EQ(fallback_temporal(0), (TemporalJudgement{TemporalRelation::Equal, 1.0}));
  EXPECT_EQ(fallback_temporal(std::nullopt), (TemporalJudgement{TemporalRelation::Vague, 0.0}));
}

TEST(FallbackCoref, CosineClampedAndSymmetric) {
  using neg::testing::make_node;
  auto a = make_node("a", fallback_embed("troops enter city", 64));
  auto b = make_node("b", fallback_embed("troops leave city", 64));
  EXPECT_DOUBLE_EQ(fallback_coref(a, a), 1.0);
  EXPECT_DOUBLE_EQ(fallback_coref(a, b), fallback_coref(b, a));
  EXPECT_DOUBLE_EQ(fallback_coref(a, b), std::clamp(cosine(a.embedding, b.embedding), 0.0, 1.0));
  auto x = make_node("x", std::vector<double>{1, 0});
  auto y = make_node("y", std::vector<double>{0, 1});
  auto z = make_node("z", std::vector<double>{-1, 0});
  EXPECT_DOUBLE_EQ(fallback_coref(x, y), 0.0);
  EXPECT_DOUBLE_EQ(fallback_coref(x, z), 0.0);
}

TEST(FallbackNeutralize, PicksLowerArousal) {
  VadLexicon lex;
  lex.add("slaughter", {0.1, 0.9, 0.5});
  lex.add("kill", {0.2, 0.6, 0.5});
  EXPECT_EQ(fallback_neutralize("troops slaughter civilians", "troops kill civilians", lex), "troops kill civilians");
  EXPECT_EQ(fallback_neutralize("troops kill civilians", "troops slaughter civilians", lex), "troops kill civilians");
  EXPECT_EQ(fallback_neutralize("same text", "same text", lex), "same text");
  EXPECT_EQ(fallback_neutralize("no lexicon words", "none here either", lex), "no lexicon words");
}

TEST(RandomChoiceNeutralizer, ReturnsOneInputDeterministically) {
  RandomChoiceNeutralizer r(13);
  for (auto [l, rt] : {std::pair{"a b", "c d"}, {"left text", "right text"}, {"x", "y"}}) {
    auto out = r.neutralize(l, rt);
    EXPECT_TRUE(out == l || out == rt);
    EXPECT_EQ(out, r.neutralize(l, rt));
  }
}

TEST(ScoreFile, MissingKeyNamesTheKey) {
  ScoreFile f{"coref", std::nullopt, {{{"a", "b"}, 0.7}}};
  FileCoreference c(f);
  using neg::testing::make_node;
  auto a = make_node("a", {1, 0}), b = make_node("b", {1, 0}), z = make_node("z", {1, 0});
  EXPECT_DOUBLE_EQ(c.score(a, b), 0.7);
  EXPECT_DOUBLE_EQ(c.score(b, a), 0.7);
  try {
    c.score(a, z);
    FAIL() << "expected MissingScore";
  } catch (const MissingScore& e) {
    EXPECT_NE(std::string(e.what()).find("score not precomputed"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("a|z"), std::string::npos);
  }
}

TEST(ScoreFile, WriteThenReadPreservesEveryRole) {
  std::mt19937_64 rng(5);
  ScoreFile emb{"embedding", 4, {}};
  for (auto t : {"first sentence", "second sentence"}) emb.entries[{t}] = neg::testing::random_unit(4, rng);
  ScoreFile sal{"salience", std::nullopt, {{{"art"}, std::vector<double>{0.125, 0.3333333333333333, 1.0}}}};
  ScoreFile tmp{"temporal", std::nullopt, {{{"art#0", "art#2"}, {{"rel", "after"}, {"conf", 0.8123456789}}}}};
  ScoreFile neu{"neutralized", std::nullopt, {{{"l", "r"}, "neutral"}}};
  for (auto* f : {&emb, &sal, &tmp, &neu}) f->save(temp_path(f->role + ".json"));

  FileEmbedding fe(temp_path("embedding.json"));
  EXPECT_EQ(fe.dimension(), 4u);
  auto orig = emb.entries.at({"first sentence"}).get<Embedding>();
  auto back = fe.embed("first sentence");
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(back[i], orig[i], 1e-6);
  EXPECT_THROW(fe.embed("unknown"), MissingScore);

  ArticleRecord a;
  a.id = "art";
  a.sentences = {"x", "y", "z"};
  FileSalience fs(temp_path("salience.json"));
  auto s = fs.score_sentences(a);
  EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-6);

  FileTemporal ft(temp_path("temporal.json"));
  using neg::testing::make_node;
  auto n0 = make_node("art#0", {1, 0}), n2 = make_node("art#2", {1, 0});
  EXPECT_EQ(ft.score(n0, n2, 2).relation, TemporalRelation::After);
  EXPECT_NEAR(ft.score(n0, n2, 2).confidence, 0.8123456789, 1e-6);
  EXPECT_EQ(ft.score(n2, n0, -2).relation, TemporalRelation::Before);

  FileNeutralizer fn(temp_path("neutralized.json"));
  EXPECT_EQ(fn.neutralize("l", "r"), "neutral");
  EXPECT_THROW(fn.neutralize("r", "l"), MissingScore);
  EXPECT_THROW(FileSalience{temp_path("embedding.json")}, ValidationError);
}

TEST(ScoreFile, RejectsInvalidValues) {
  auto bad = R"({"role":"coref","entries":[{"key":["a","b"],"value":1.5}]})";
  EXPECT_THROW(ScoreFile::from_json(nlohmann::json::parse(bad)), ValidationError);
  auto short_key = R"({"role":"temporal","entries":[{"key":["a"],"value":{"rel":"before","conf":0.5}}]})";
  EXPECT_THROW(ScoreFile::from_json(nlohmann::json::parse(short_key)), ValidationError);
  EXPECT_THROW(ScoreFile::from_json(nlohmann::json::parse(R"({"role":"nope","entries":[]})")), ValidationError);
}
