#pragma once

// Greedy one-to-one matching over a dense score matrix.

#include <algorithm>
#include <cstddef>
#include <tuple>
#include <vector>

#include "neg/core.hpp"

namespace neg {

struct MatchedPair {
  std::size_t row;
  std::size_t col;
  double score;

  bool operator==(const MatchedPair&) const = default;
};

using ScoreMatrix = std::vector<std::vector<double>>;

/// Repeatedly takes the highest remaining score whose row and column are both free,
/// as long as it is strictly above `threshold`. Ties resolve to the smaller (row, col).
/// Stops once either side is exhausted or no qualifying score remains.
inline std::vector<MatchedPair> greedy_match(const ScoreMatrix& scores, double threshold) {
  const std::size_t rows = scores.size();
  const std::size_t cols = rows ? scores.front().size() : 0;
  std::vector<MatchedPair> cand;
  for (std::size_t i = 0; i < rows; ++i) {
    if (scores[i].size() != cols) throw Error("greedy_match: ragged score matrix");
    for (std::size_t j = 0; j < cols; ++j)
      if (scores[i][j] > threshold) cand.push_back({i, j, scores[i][j]});
  }
  std::sort(cand.begin(), cand.end(), [](const MatchedPair& a, const MatchedPair& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  });
  std::vector<bool> row_used(rows, false), col_used(cols, false);
  std::vector<MatchedPair> out;
  const std::size_t cap = std::min(rows, cols);
  for (const auto& c : cand) {
    if (out.size() == cap) break;
    if (row_used[c.row] || col_used[c.col]) continue;
    row_used[c.row] = col_used[c.col] = true;
    out.push_back(c);
  }
  return out;
}

inline double matching_objective(const std::vector<MatchedPair>& m) {
  double s = 0.0;
  for (const auto& p : m) s += p.score;
  return s;
}

/// Pairwise cosine similarity of stored embeddings, rows follow `a`'s sorted node order.
inline ScoreMatrix embedding_similarity(const EventGraph& a, const EventGraph& b) {
  ScoreMatrix s;
  s.reserve(a.nodes.size());
  for (const auto& [_, na] : a.nodes) {
    auto& row = s.emplace_back();
    row.reserve(b.nodes.size());
    for (const auto& [__, nb] : b.nodes) row.push_back(cosine(na.embedding, nb.embedding));
  }
  return s;
}

}  // namespace neg
