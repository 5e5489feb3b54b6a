#include <gtest/gtest.h>

#include <random>

#include "neg/merging.hpp"
#include "support/oracles.hpp"

using namespace neg;
using neg::testing::basis;
using neg::testing::make_node;

namespace {

/// Coreference scores read from a table keyed by (a id, b id), symmetric lookup.
class TableScorer final : public CoreferenceScorer {
 public:
  explicit TableScorer(std::map<std::pair<std::string, std::string>, double> t) : t_(std::move(t)) {}
  double score(const EventNode& a, const EventNode& b) const override {
    if (auto it = t_.find({a.id, b.id}); it != t_.end()) return it->second;
    if (auto it = t_.find({b.id, a.id}); it != t_.end()) return it->second;
    return 0.0;
  }

 private:
  std::map<std::pair<std::string, std::string>, double> t_;
};

EventGraph make_graph(GraphSide side, const std::string& article,
                      std::vector<std::pair<std::string, std::string>> nodes,  // id, text
                      std::vector<std::tuple<std::string, std::string, double>> edges = {}, std::size_t dim = 64) {
  EventGraph g;
  g.topic_id = "t";
  g.side = side;
  std::size_t i = 0;
  for (auto& [id, text] : nodes) {
    auto n = make_node(id, fallback_embed(text, dim), text, article);
    n.provenance = {{article, i++}};
    g.add_node(std::move(n));
  }
  for (auto& [s, d, c] : edges) g.upsert_edge(s, d, c);
  return g;
}

Provenance all_provenance(const std::vector<const EventGraph*>& gs) {
  Provenance p;
  for (auto* g : gs)
    for (const auto& [_, n] : g->nodes) p.insert(n.provenance.begin(), n.provenance.end());
  return p;
}

}  // namespace

TEST(MatchNodes, IdentityGraphsMatchPerfectly) {
  auto a = make_graph(GraphSide::Left, "x", {{"a1", "senate passes bill"}, {"a2", "storm hits coast"}});
  auto b = make_graph(GraphSide::Left, "y", {{"b1", "senate passes bill"}, {"b2", "storm hits coast"}});
  auto m = match_nodes(a, b, CosineCoreference{}, 0.5);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.pairs[0], (NodeMatch{"a1", "b1", 1.0}));
  EXPECT_EQ(m.pairs[1], (NodeMatch{"a2", "b2", 1.0}));
}

TEST(MatchNodes, NothingAboveThreshold) {
  auto a = make_graph(GraphSide::Left, "x", {{"a1", "alpha"}});
  auto b = make_graph(GraphSide::Left, "y", {{"b1", "beta"}});
  EXPECT_TRUE(match_nodes(a, b, TableScorer({{{"a1", "b1"}, 0.5}}), 0.5).empty());
}

TEST(MatchNodes, GreedyIsNotOptimalAssignment) {
  auto a = make_graph(GraphSide::Left, "x", {{"a1", "p"}, {"a2", "q"}});
  auto b = make_graph(GraphSide::Left, "y", {{"b1", "r"}, {"b2", "s"}});
  TableScorer scores({{{"a1", "b1"}, 0.9}, {{"a1", "b2"}, 0.8}, {{"a2", "b1"}, 0.85}, {{"a2", "b2"}, 0.2}});
  auto m = match_nodes(a, b, scores, 0.5);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.pairs[0], (NodeMatch{"a1", "b1", 0.9}));
  const double optimum = neg::testing::optimal_assignment_bruteforce({{0.9, 0.8}, {0.85, 0.2}}, 0.5);
  EXPECT_DOUBLE_EQ(optimum, 0.8 + 0.85);
  EXPECT_GE(0.9, 0.5 * optimum);
}

TEST(GreedyMatchProperty, OneToOneAndHalfOptimal) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 1 + rng() % 6, c = 1 + rng() % 6;
    const double th = trial % 2 ? 0.5 : 0.0;
    ScoreMatrix s(r, std::vector<double>(c));
    for (auto& row : s)
      for (auto& x : row) x = u(rng);
    auto m = greedy_match(s, th);
    std::set<std::size_t> rows, cols;
    for (const auto& p : m) {
      EXPECT_TRUE(rows.insert(p.row).second);
      EXPECT_TRUE(cols.insert(p.col).second);
      EXPECT_GT(p.score, th);
    }
    EXPECT_GE(matching_objective(m), 0.5 * neg::testing::optimal_assignment_bruteforce(s, th) - 1e-12);
  }
}

TEST(MergePair, EmptyMatchingIsDisjointUnion) {
  auto a = make_graph(GraphSide::Left, "x", {{"a1", "p"}, {"a2", "q"}}, {{"a1", "a2", 0.6}});
  auto b = make_graph(GraphSide::Left, "y", {{"b1", "r"}}, {});
  std::mt19937_64 rng(1);
  auto g = merge_pair(a, b, {}, random_representative(rng));
  EXPECT_EQ(g.nodes.size(), 3u);
  EXPECT_EQ(g.edges.size(), 1u);
}

TEST(MergePair, RepointsEdgesThroughMergedNode) {
  auto a = make_graph(GraphSide::Left, "x", {{"a1", "p"}, {"a2", "shared"}}, {{"a1", "a2", 0.6}});
  auto b = make_graph(GraphSide::Left, "y", {{"b1", "shared"}, {"b2", "s"}}, {{"b1", "b2", 0.7}});
  std::mt19937_64 rng(1);
  auto g = merge_pair(a, b, Matching{{{"a2", "b1", 1.0}}}, random_representative(rng));
  ASSERT_EQ(g.nodes.size(), 3u);
  ASSERT_EQ(g.edges.size(), 2u);
  std::string m = g.nodes.contains("a2") ? "a2" : "b1";
  EXPECT_TRUE(g.has_edge("a1", m));
  EXPECT_TRUE(g.has_edge(m, "b2"));
  EXPECT_EQ(g.nodes.at(m).provenance, (Provenance{{"x", 1}, {"y", 0}}));
}

TEST(MergePair, OppositeOrientationsCollapseToTwoCycleThenDagify) {
  auto a = make_graph(GraphSide::Left, "x", {{"a1", "p"}, {"a2", "q"}}, {{"a1", "a2", 0.6}});
  auto b = make_graph(GraphSide::Left, "y", {{"b1", "q"}, {"b2", "p"}}, {{"b1", "b2", 0.8}});
  std::mt19937_64 rng(4);
  auto g = merge_pair(a, b, Matching{{{"a1", "b2", 1.0}, {"a2", "b1", 1.0}}}, random_representative(rng));
  ASSERT_EQ(g.nodes.size(), 2u);
  ASSERT_EQ(g.edges.size(), 1u);
  // m2 -> m1 came from b1 -> b2 with the higher confidence 0.8.
  EXPECT_DOUBLE_EQ(g.edges[0].confidence, 0.8);
  EXPECT_TRUE(is_acyclic(g));
}

TEST(MergePair, DuplicateEdgesKeepMaxConfidence) {
  auto a = make_graph(GraphSide::Left, "x", {{"a1", "p"}, {"a2", "q"}}, {{"a1", "a2", 0.6}});
  auto b = make_graph(GraphSide::Left, "y", {{"b1", "p"}, {"b2", "q"}}, {{"b1", "b2", 0.9}});
  std::mt19937_64 rng(4);
  auto g = merge_pair(a, b, Matching{{{"a1", "b1", 1.0}, {"a2", "b2", 1.0}}}, random_representative(rng));
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_DOUBLE_EQ(g.edges[0].confidence, 0.9);
}

TEST(MergeSide, SingleAndDisjointAndChained) {
  MergeConfig cfg;
  auto g1 = make_graph(GraphSide::Left, "d1", {{"d1#0", "senate passes bill"}, {"d1#1", "alpha beta gamma"}});
  auto g2 = make_graph(GraphSide::Left, "d2", {{"d2#0", "senate passes bill"}, {"d2#1", "storm hits coast"}});
  auto g3 = make_graph(GraphSide::Left, "d3", {{"d3#0", "storm hits coast"}, {"d3#1", "court rules today"}});
  auto g4 = make_graph(GraphSide::Left, "d4", {{"d4#0", "unrelated words only"}});
  EXPECT_EQ(merge_side({g1}, CosineCoreference{}, cfg).nodes.size(), 2u);
  EXPECT_EQ(merge_side({g1, g4}, CosineCoreference{}, cfg).nodes.size(), 3u);
  auto chained = merge_side({g1, g2, g3}, CosineCoreference{}, cfg);
  EXPECT_EQ(chained.nodes.size(), 2u + 2u + 2u - 2u);
  EXPECT_EQ(all_provenance({&chained}), all_provenance({&g1, &g2, &g3}));
  EXPECT_THROW(merge_side({}, CosineCoreference{}, cfg), ValidationError);
  auto right = g4;
  right.side = GraphSide::Right;
  EXPECT_THROW(merge_side({g1, right}, CosineCoreference{}, cfg), ValidationError);
}

TEST(MergeSide, SeedDeterminesRepresentative) {
  auto g1 = make_graph(GraphSide::Left, "d1", {{"d1#0", "senate passes bill"}});
  auto g2 = make_graph(GraphSide::Left, "d2", {{"d2#0", "senate passes bill"}});
  std::set<std::string> chosen;
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    auto a = merge_side({g1, g2}, CosineCoreference{}, {0.5, seed});
    auto b = merge_side({g1, g2}, CosineCoreference{}, {0.5, seed});
    EXPECT_EQ(a.node_ids(), b.node_ids());
    chosen.insert(a.node_ids().front());
  }
  EXPECT_EQ(chosen.size(), 2u);
}

TEST(MergeCross, NeutralizerPicksLowerArousalText) {
  auto lex = std::make_shared<VadLexicon>();
  lex->add("slaughter", {0.1, 0.9, 0.5});
  lex->add("kill", {0.2, 0.6, 0.5});
  auto left = make_graph(GraphSide::Left, "L", {{"L#0", "troops slaughter civilians"}, {"L#1", "left only event"}});
  auto right = make_graph(GraphSide::Right, "R", {{"R#0", "troops kill civilians"}});
  HashingEmbedder emb(64);
  auto g = merge_cross(left, right, ArousalNeutralizer(lex), emb, CosineCoreference{}, {});
  EXPECT_EQ(g.side, GraphSide::Merged);
  ASSERT_EQ(g.nodes.size(), 2u);
  const auto& m = g.nodes.at("L#0");
  EXPECT_EQ(m.text, "troops kill civilians");
  EXPECT_EQ(m.embedding, emb.embed("troops kill civilians"));
  EXPECT_EQ(m.provenance, (Provenance{{"L", 0}, {"R", 0}}));
}

TEST(MergeCross, NoCoreferenceIsDisjointUnion) {
  auto left = make_graph(GraphSide::Left, "L", {{"L#0", "alpha beta"}});
  auto right = make_graph(GraphSide::Right, "R", {{"R#0", "gamma delta"}});
  auto g = merge_cross(left, right, RandomChoiceNeutralizer(1), HashingEmbedder(64), CosineCoreference{}, {});
  EXPECT_EQ(g.nodes.size(), 2u);
  EXPECT_EQ(g.side, GraphSide::Merged);
  EXPECT_THROW(merge_cross(right, left, RandomChoiceNeutralizer(1), HashingEmbedder(64), CosineCoreference{}, {}),
               ValidationError);
}

TEST(MergeCross, IdenticalGraphsAreIsomorphicToInput) {
  auto left = make_graph(GraphSide::Left, "L", {{"L#0", "senate passes bill"}, {"L#1", "storm hits coast"}},
                         {{"L#0", "L#1", 0.6}});
  auto right = make_graph(GraphSide::Right, "R", {{"R#0", "senate passes bill"}, {"R#1", "storm hits coast"}},
                          {{"R#0", "R#1", 0.6}});
  auto lex = std::make_shared<VadLexicon>();
  auto g = merge_cross(left, right, ArousalNeutralizer(lex), HashingEmbedder(64), CosineCoreference{}, {});
  EXPECT_EQ(g.node_ids(), left.node_ids());
  EXPECT_EQ(g.edges, left.edges);
}

TEST(MergePairProperty, CountsProvenanceAndAcyclicity) {
  std::mt19937_64 rng(99);
  const std::vector<std::string> words = {"vote", "bill", "storm", "court", "city", "rally"};
  auto random_graph = [&](GraphSide side, const std::string& art) {
    std::vector<std::pair<std::string, std::string>> nodes;
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i)
      nodes.push_back({art + "#" + std::to_string(i), words[rng() % 6] + " " + words[rng() % 6]});
    std::vector<std::tuple<std::string, std::string, double>> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng() % 2) edges.emplace_back(nodes[i].first, nodes[j].first, 0.5 + 0.1 * static_cast<double>(rng() % 5));
    return make_graph(side, art, nodes, edges);
  };
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_graph(GraphSide::Left, "A");
    auto b = random_graph(GraphSide::Left, "B");
    auto m = match_nodes(a, b, CosineCoreference{}, 0.5);
    std::set<std::string> seen_a, seen_b;
    for (const auto& p : m.pairs) {
      EXPECT_TRUE(seen_a.insert(p.a).second);
      EXPECT_TRUE(seen_b.insert(p.b).second);
      EXPECT_GT(p.score, 0.5);
    }
    std::mt19937_64 pick(trial);
    auto g = merge_pair(a, b, m, random_representative(pick));
    EXPECT_EQ(g.nodes.size(), a.nodes.size() + b.nodes.size() - m.size());
    EXPECT_EQ(all_provenance({&g}), all_provenance({&a, &b}));
    EXPECT_TRUE(is_acyclic(g));
    g.validate(64);
  }
}
