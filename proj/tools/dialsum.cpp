#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dialsum/cli.hpp"

namespace {

using dialsum::cli::Inputs;
using dialsum::cli::json;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> input_type;
  std::optional<long> n;
  std::optional<double> lambda;
  std::optional<int> beam;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config or a previous manifest.json");
  cmd->add_option("--seed", c.seed, "Seed for every random choice");
  cmd->add_option("--input-type", c.input_type, "lead, middle, longest or full")
      ->check(CLI::IsMember({"lead", "middle", "longest", "full"}));
  cmd->add_option("--n", c.n, "Number of selected turns")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", c.lambda, "Tagging loss weight in [0, 1]")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--beam", c.beam, "Beam size")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", c.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  cmd->add_option("--lr", c.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output directory");
}

json overrides_of(const Common& c) {
  json j = json::object();
  if (c.seed) j["seed"] = *c.seed;
  if (c.input_type) j["input_type"] = *c.input_type;
  if (c.n) j["n"] = *c.n;
  if (c.lambda) j["lambda"] = *c.lambda;
  if (c.beam) j["beam"] = *c.beam;
  if (c.epochs) j["epochs"] = *c.epochs;
  if (c.lr) j["lr"] = *c.lr;
  return j;
}

struct Command {
  CLI::App* app = nullptr;
  json (*defaults)() = nullptr;
  void (*run)(const json&, const Inputs&, const std::filesystem::path&, std::ostream&) = nullptr;
  // role -> paths from the command line
  std::vector<std::pair<std::string, std::vector<std::string>>> paths;
};

}  // namespace

int main(int argc, char** argv) {
  namespace cli = dialsum::cli;
  CLI::App app{"Syntax-aware multi-task dialogue summarization"};
  app.require_subcommand(1);

  Common common;
  std::vector<Command> commands;
  commands.reserve(6);

  auto make = [&](const char* name, const char* help, json (*defaults)(),
                  void (*run)(const json&, const Inputs&, const std::filesystem::path&, std::ostream&)) -> Command& {
    Command c;
    c.app = app.add_subcommand(name, help);
    c.defaults = defaults;
    c.run = run;
    add_common(c.app, common);
    commands.push_back(std::move(c));
    return commands.back();
  };

  // Path options are registered after `commands` stops growing.
  auto& stats = make("stats", "Corpus statistics table and utterance density", cli::stats_defaults, cli::cmd_stats);
  auto& pre = make("preprocess", "Tokenize and tag raw-chat corpora", cli::preprocess_defaults, cli::cmd_preprocess);
  auto& tr = make("train", "Train the multi-task model", cli::train_defaults, cli::cmd_train);
  auto& gen = make("generate", "Decode summaries with a checkpoint", cli::generate_defaults, cli::cmd_generate);
  auto& ev = make("evaluate", "ROUGE report for generated summaries", cli::evaluate_defaults, cli::cmd_evaluate);
  auto& sty = make("analyze-styles", "Speaker style clustering and projection", cli::styles_defaults,
                   cli::cmd_analyze_styles);

  auto paths = [](Command& c, const std::string& role, const std::string& flag, const std::string& help,
                  bool positional = false) {
    c.paths.emplace_back(role, std::vector<std::string>{});
    auto* opt = c.app->add_option(flag, c.paths.back().second, help);
    if (!positional) opt->expected(1, 1);
  };
  stats.paths.reserve(1);
  pre.paths.reserve(3);
  tr.paths.reserve(2);
  gen.paths.reserve(2);
  ev.paths.reserve(2);
  sty.paths.reserve(1);
  paths(stats, "corpus", "corpus", "Corpus files; split is taken from the file name", true);
  paths(pre, "corpus", "corpus", "Raw-chat corpus files", true);
  paths(pre, "lexicons", "--lexicons", "Directory of closed-class word lists");
  paths(pre, "tags", "--tags", "Annotated files to import tags from (one per corpus)", true);
  paths(tr, "train", "--train", "Training corpus");
  paths(tr, "dev", "--dev", "Development corpus");
  paths(gen, "checkpoint", "--checkpoint", "Checkpoint file");
  paths(gen, "input", "--input", "Corpus to summarize");
  paths(ev, "generated", "--generated", "generated.jsonl from the generate command");
  paths(ev, "references", "--references", "Corpus with reference summaries");
  paths(sty, "corpus", "corpus", "Tagged (or raw) corpus", true);

  std::optional<long> bin_width;
  stats.app->add_option("--bin-width", bin_width, "Turn-count bin width")->check(CLI::PositiveNumber);
  std::optional<std::string> tagger;
  pre.app->add_option("--tagger", tagger, "lexicon or import")->check(CLI::IsMember({"lexicon", "import"}));
  std::optional<int> batch_size, patience, max_len;
  tr.app->add_option("--batch-size", batch_size, "Dialogues per optimizer step")->check(CLI::PositiveNumber);
  tr.app->add_option("--patience", patience, "Epochs without dev improvement before stopping")->check(CLI::NonNegativeNumber);
  tr.app->add_option("--max-len", max_len, "Encoder input length")->check(CLI::PositiveNumber);
  std::optional<int> max_tokens;
  gen.app->add_option("--max-tokens", max_tokens, "Generated tokens per summary")->check(CLI::PositiveNumber);
  std::optional<std::string> system, type;
  ev.app->add_option("--system", system, "System name in the report");
  ev.app->add_option("--type", type, "Type column in the report");
  std::optional<int> k, top_k;
  sty.app->add_option("--k", k, "Number of clusters")->check(CLI::PositiveNumber);
  sty.app->add_option("--top-k", top_k, "Ranked features to report")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kBadArguments;
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      json overrides = overrides_of(common);
      if (bin_width) overrides["bin_width"] = *bin_width;
      if (tagger) overrides["tagger"] = *tagger;
      if (batch_size) overrides["batch_size"] = *batch_size;
      if (patience) overrides["patience"] = *patience;
      if (max_len) overrides["max_len"] = *max_len;
      if (max_tokens) overrides["max_tokens"] = *max_tokens;
      if (system) overrides["system"] = *system;
      if (type) overrides["type"] = *type;
      if (k) overrides["k"] = *k;
      if (top_k) overrides["top_k"] = *top_k;

      cli::ConfigFile file;
      if (!common.config_path.empty()) file = cli::read_config_file(common.config_path);
      const json config = cli::resolve_config(c.defaults(), file.config, overrides);

      Inputs inputs;
      for (const auto& [role, ps] : c.paths) {
        for (const auto& p : ps) inputs.emplace_back(role, p);
      }
      // Roles missing on the command line fall back to the manifest's.
      std::set<std::string> given;
      for (const auto& [role, p] : inputs) given.insert(role);
      for (const auto& [role, p] : file.inputs) {
        if (!given.count(role)) inputs.emplace_back(role, p);
      }
      c.run(config, inputs, common.out, std::cout);
      return cli::kOk;
    } catch (const std::exception& e) {
      std::cerr << "dialsum " << c.app->get_name() << ": " << e.what() << "\n";
      return cli::exit_code_for(e);
    }
  }
  return cli::kBadArguments;
}
