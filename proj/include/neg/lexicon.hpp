#pragma once

// Valence/arousal/dominance lexicon and background word-count table.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "neg/core.hpp"

namespace neg {

struct Vad {
  double valence = 0.5;
  double arousal = 0.0;
  double dominance = 0.5;
};

/// Tokens with valence strictly above this count as positively charged.
inline constexpr double kPositiveValence = 0.65;
/// Tokens with valence strictly below this count as negatively charged.
inline constexpr double kNegativeValence = 0.35;

class VadLexicon {
 public:
  VadLexicon() = default;

  void add(std::string token, Vad v) {
    for (double x : {v.valence, v.arousal, v.dominance})
      if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("VAD score outside [0,1] for '" + token + "'");
    for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    entries_[std::move(token)] = v;
  }

  const Vad* find(const std::string& token) const {
    auto it = entries_.find(token);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }

  /// Arousal of `token` if it is in the lexicon with non-neutral valence, else 0.
  double charged_arousal(const std::string& token) const {
    const Vad* v = find(token);
    if (!v) return 0.0;
    return (v->valence > kPositiveValence || v->valence < kNegativeValence) ? v->arousal : 0.0;
  }

  /// Tab-separated `token valence arousal dominance`; a non-numeric first line is a header.
  static VadLexicon parse(std::istream& in, const std::string& origin = "<lexicon>") {
    VadLexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> cols;
      std::stringstream ss(line);
      for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
      double vals[3];
      bool numeric = cols.size() >= 4;
      for (int i = 0; numeric && i < 3; ++i) numeric = parse_double(cols[i + 1], vals[i]);
      if (!numeric) {
        if (lineno == 1) continue;
        throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected token<TAB>v<TAB>a<TAB>d");
      }
      lex.add(cols[0], {vals[0], vals[1], vals[2]});
    }
    return lex;
  }

  static VadLexicon load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read lexicon " + path.string());
    return parse(in, path.string());
  }

  static bool parse_double(const std::string& s, double& out) {
    std::istringstream is(s);
    is >> out;
    return !is.fail() && (is >> std::ws).eof();
  }

 private:
  std::unordered_map<std::string, Vad> entries_;
};

/// Background sentence frequencies: how many background sentences contain each word.
struct BackgroundCounts {
  std::size_t total_sentences = 0;  // 0 when the file carries no #N header
  std::unordered_map<std::string, std::size_t> sentence_freq;

  std::size_t bsf(const std::string& word) const {
    auto it = sentence_freq.find(word);
    return (it == sentence_freq.end() || it->second == 0) ? 1 : it->second;
  }

  static BackgroundCounts parse(std::istream& in, const std::string& origin = "<background>") {
    BackgroundCounts bg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected token<TAB>count");
      std::string key = line.substr(0, tab);
      std::string val = line.substr(tab + 1);
      std::size_t count = 0;
      auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), count);
      if (ec != std::errc{} || p != val.data() + val.size())
        throw ValidationError(origin + ":" + std::to_string(lineno) + ": bad count '" + val + "'");
      if (key == "#N")
        bg.total_sentences = count;
      else
        bg.sentence_freq[key] = count;
    }
    return bg;
  }

  static BackgroundCounts load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read background table " + path.string());
    return parse(in, path.string());
  }
};

}  // namespace neg
