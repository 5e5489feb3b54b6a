#pragma once

// Graph JSON interchange and Graphviz DOT export.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "neg/core.hpp"

namespace neg {

using json = nlohmann::json;

inline json svo_to_json(const SvoTriple& t) { return {{"s", t.subject}, {"v", t.verb}, {"o", t.object}}; }

inline SvoTriple svo_from_json(const json& j) {
  return {j.value("s", std::string{}), j.at("v").get<std::string>(), j.value("o", std::string{})};
}

inline json to_json(const EventGraph& g) {
  json nodes = json::array();
  for (const auto& [id, n] : g.nodes) {
    json prov = json::array();
    for (const auto& [article, idx] : n.provenance) prov.push_back(json::array({article, idx}));
    nodes.push_back({{"id", n.id},
                     {"text", n.text},
                     {"svo", svo_to_json(n.svo)},
                     {"embedding", n.embedding},
                     {"salience", n.salience},
                     {"prov", std::move(prov)}});
  }
  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"rel", "before"}, {"conf", e.confidence}});
  json out = {{"topic_id", g.topic_id},
              {"side", std::string(to_string(g.side))},
              {"nodes", std::move(nodes)},
              {"edges", std::move(edges)}};
  if (!g.role.empty()) out["role"] = g.role;
  return out;
}

inline EventGraph graph_from_json(const json& j) {
  try {
    EventGraph g;
    g.topic_id = j.at("topic_id").get<std::string>();
    g.side = parse_graph_side(j.at("side").get<std::string>());
    g.role = j.value("role", std::string{});
    for (const auto& jn : j.at("nodes")) {
      EventNode n;
      n.id = jn.at("id").get<std::string>();
      n.text = jn.at("text").get<std::string>();
      n.svo = svo_from_json(jn.at("svo"));
      n.embedding = jn.at("embedding").get<Embedding>();
      n.salience = jn.at("salience").get<double>();
      for (const auto& p : jn.at("prov"))
        n.provenance.emplace(p.at(0).get<std::string>(), p.at(1).get<std::size_t>());
      g.add_node(std::move(n));
    }
    for (const auto& je : j.at("edges")) {
      if (je.value("rel", std::string{"before"}) != "before")
        throw ValidationError("unsupported edge relation '" + je.at("rel").get<std::string>() + "'");
      auto src = je.at("src").get<std::string>();
      auto dst = je.at("dst").get<std::string>();
      if (g.has_edge(src, dst)) throw ValidationError("duplicate edge " + src + "->" + dst);
      g.upsert_edge(src, dst, je.at("conf").get<double>());
    }
    g.validate();
    return g;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed graph JSON: ") + e.what());
  }
}

inline void save_graph(const EventGraph& g, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(g).dump(1) << '\n';
}

inline EventGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return graph_from_json(j);
}

namespace detail {

inline std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

/// First `limit` bytes of `s`, backed off so a UTF-8 sequence is never split.
inline std::string_view utf8_prefix(std::string_view s, std::size_t limit) {
  if (s.size() <= limit) return s;
  std::size_t cut = limit;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut);
}

}  // namespace detail

inline constexpr std::size_t kDotLabelChars = 60;

inline std::string to_dot(const EventGraph& g) {
  std::ostringstream os;
  os << "digraph \"" << detail::dot_escape(g.topic_id) << "\" {\n";
  for (const auto& [id, n] : g.nodes)
    os << "  \"" << detail::dot_escape(id) << "\" [label=\""
       << detail::dot_escape(detail::utf8_prefix(n.text, kDotLabelChars)) << "\"];\n";
  for (const auto& e : g.edges) {
    char conf[32];
    std::snprintf(conf, sizeof conf, "%.2f", e.confidence);
    os << "  \"" << detail::dot_escape(e.src) << "\" -> \"" << detail::dot_escape(e.dst)
       << "\" [label=\"" << conf << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

inline void export_dot(const EventGraph& g, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_dot(g);
}

}  // namespace neg
