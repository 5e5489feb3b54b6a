// neg: command-line driver for the neutral event graph pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "neg/neg.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> top_k;
  std::optional<double> coref_threshold;
  std::optional<double> metric_threshold;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> workers;
  std::vector<std::string> providers;
  std::string lexicon;
  std::string background;
  std::string kind;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--top-k", o.top_k, "salient sentences kept per article");
  cmd->add_option("--coref-threshold", o.coref_threshold, "coreference threshold for merging");
  cmd->add_option("--metric-threshold", o.metric_threshold, "similarity threshold for node/edge matching");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_option("--hidden", o.hidden, "hidden units");
  cmd->add_option("--workers", o.workers, "topics processed concurrently");
  cmd->add_option("--providers", o.providers, "role=fallback|file:PATH (repeatable)");
  cmd->add_option("--lexicon", o.lexicon, "VAD lexicon TSV");
  cmd->add_option("--background", o.background, "background sentence-frequency TSV");
  cmd->add_option("--kind", o.kind, "classifier kind: gcn or mlp")->check(CLI::IsMember({"gcn", "mlp"}));
  cmd->add_option("--out", o.out, "output directory or file");
}

neg::RunConfig resolve(const Overrides& o) {
  neg::RunConfig c = o.config.empty() ? neg::RunConfig{} : neg::RunConfig::load(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.top_k) c.top_k = *o.top_k;
  if (o.coref_threshold) c.coref_threshold = *o.coref_threshold;
  if (o.metric_threshold) c.metric_threshold = *o.metric_threshold;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.lr) c.learning_rate = *o.lr;
  if (o.hidden) c.hidden = *o.hidden;
  if (o.workers) c.workers = *o.workers;
  for (const auto& p : o.providers) c.set_provider(p);
  if (!o.lexicon.empty()) c.lexicon_path = o.lexicon;
  if (!o.background.empty()) c.background_path = o.background;
  if (!o.kind.empty()) c.model_kind = o.kind == "gcn" ? neg::ModelKind::Gcn : neg::ModelKind::Mlp;
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw neg::Error("cannot write " + p.string());
  out << s;
}

std::vector<neg::TopicRecord> require_dataset(const std::string& path) {
  if (path.empty()) throw neg::ValidationError("--dataset is required");
  return neg::load_dataset(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neutral event graph induction, merging, pruning and evaluation"};
  app.require_subcommand(1);

  Overrides o;
  std::string dataset, model_path, ablation_path, graph_path;
  bool all_topics = false;

  auto* induce = app.add_subcommand("induce", "induce one graph per article and merge each side");
  auto* merge = app.add_subcommand("merge", "run induction and both merge stages");
  auto* train = app.add_subcommand("train", "pseudo-label the train split and fit the node classifier");
  auto* prune = app.add_subcommand("prune", "apply a trained classifier to merged graphs");
  auto* eval = app.add_subcommand("eval", "score the test split against the center graphs");
  auto* exp = app.add_subcommand("export", "write a graph JSON file as DOT");

  for (auto* cmd : {induce, merge, train, prune, eval, exp}) add_common(cmd, o);
  for (auto* cmd : {induce, merge, train, prune, eval}) cmd->add_option("--dataset", dataset, "line-delimited topics");
  for (auto* cmd : {train, prune, eval}) cmd->add_option("--model", model_path, "model checkpoint");
  eval->add_option("--ablation-model", ablation_path, "second checkpoint reported alongside --model");
  eval->add_flag("--all", all_topics, "evaluate every topic instead of the test split");
  prune->add_option("--graph", graph_path, "prune a single merged graph JSON instead of a dataset");
  exp->add_option("--graph", graph_path, "graph JSON to export")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const auto cfg = resolve(o);
    const fs::path out = cfg.output_dir;

    if (*exp) {
      const auto g = neg::load_graph(graph_path);
      const fs::path target = o.out.empty() ? fs::path(graph_path).replace_extension(".dot") : fs::path(o.out);
      neg::export_dot(g, target);
      std::cout << target.string() << '\n';
      return 0;
    }

    if (*prune && !graph_path.empty()) {
      if (model_path.empty()) throw neg::ValidationError("--model is required");
      auto g = neg::prune(neg::load_graph(graph_path), neg::load_model(model_path));
      const fs::path target = o.out.empty() ? fs::path(graph_path).replace_filename("neutral.json") : fs::path(o.out);
      neg::save_graph(g, target);
      std::cout << target.string() << '\n';
      return 0;
    }

    const auto topics = require_dataset(dataset);
    const auto ctx = neg::PipelineContext::from_config(cfg);

    if (*induce) {
      neg::parallel_map(topics.size(), cfg.workers, [&](std::size_t i) {
        const auto& t = topics[i];
        t.validate();
        neg::PipelineResult r;
        neg::detail::in_stage("induce", t.topic_id, [&] {
          r.left = neg::induce_side(t, neg::Side::Left, ctx, &r.article_graphs);
          r.right = neg::induce_side(t, neg::Side::Right, ctx, &r.article_graphs);
          r.central = neg::induce_side(t, neg::Side::Center, ctx, &r.article_graphs);
          return 0;
        });
        const auto base = out / neg::detail::safe_name(t.topic_id);
        for (const auto& g : r.article_graphs)
          if (!g.nodes.empty())
            neg::save_graph(g, base / "articles" /
                                   (neg::detail::safe_name(g.nodes.begin()->second.provenance.begin()->first) + ".json"));
        neg::save_graph(r.left, base / "left.json");
        neg::save_graph(r.right, base / "right.json");
        neg::save_graph(r.central, base / "central.json");
        return 0;
      });
      std::cout << "induced " << topics.size() << " topics into " << out.string() << '\n';
      return 0;
    }

    if (*merge || *prune) {
      std::optional<neg::GcnModel> model;
      if (*prune) {
        if (model_path.empty()) throw neg::ValidationError("--model is required");
        model = neg::load_model(model_path);
      }
      neg::parallel_map(topics.size(), cfg.workers, [&](std::size_t i) {
        neg::persist(neg::run_pipeline(topics[i], ctx, model ? &*model : nullptr), out);
        return 0;
      });
      std::cout << (*prune ? "pruned " : "merged ") << topics.size() << " topics into " << out.string() << '\n';
      return 0;
    }

    if (*train) {
      auto result = neg::train_command(topics, ctx);
      const fs::path ckpt = model_path.empty() ? out / "model.txt" : fs::path(model_path);
      neg::save_model(result.model, ckpt);
      write_text(out / "train_report.json", result.report.to_json().dump(2) + "\n");
      write_text(out / "train_report.txt", result.report.to_text());
      std::cout << result.report.to_text() << "checkpoint: " << ckpt.string() << '\n';
      return 0;
    }

    if (*eval) {
      if (model_path.empty()) throw neg::ValidationError("--model is required");
      const auto model = neg::load_model(model_path);
      std::optional<neg::GcnModel> ablation;
      if (!ablation_path.empty()) ablation = neg::load_model(ablation_path);
      auto test = all_topics ? topics : neg::split_dataset(topics, cfg.split, cfg.seed).test;
      auto report = neg::eval_command(test, ctx, model, ablation ? &*ablation : nullptr);
      write_text(out / "eval_report.json", report.to_json().dump(2) + "\n");
      write_text(out / "eval_report.txt", report.to_text());
      std::cout << report.to_text();
      return 0;
    }
  } catch (const neg::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
