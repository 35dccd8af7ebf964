#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sentops/error.hpp"
#include "sentops/pipeline.hpp"

namespace {

struct Command {
  const char* name;
  const char* help;
  std::function<void(const sentops::PipelineConfig&)> run;
};

void print_keys() {
  const sentops::PipelineConfig defaults;
  for (const auto& key : sentops::config_keys()) {
    std::cout << key << " = " << sentops::get_config_value(defaults, key) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sentops;

  CLI::App app{"Clustering sentence-pair patterns in spaces of embedding operations"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  app.add_option("-c,--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides, "override one key, e.g. --set min_support=10")->take_all();
  app.add_option("-o,--output", output_dir, "output directory (overrides output_dir)");
  app.add_flag_callback(
      "--list-keys",
      [] {
        print_keys();
        throw CLI::Success();
      },
      "print every configuration key with its default and exit");
  app.fallthrough();

  std::ostream& log = std::cerr;
  const std::vector<Command> commands{
      {"extract", "tokenize the corpus, mine patterns and write the group manifest",
       [&](const PipelineConfig& c) { cmd_extract(c, log); }},
      {"embed", "attach sentence vectors (planted, vectors or average)", [&](const PipelineConfig& c) { cmd_embed(c, log); }},
      {"build-ops", "build one operation space per configured operation",
       [&](const PipelineConfig& c) { cmd_build_ops(c, log); }},
      {"cluster", "k-means at k = number of patterns for every operation space",
       [&](const PipelineConfig& c) { cmd_cluster(c, log); }},
      {"evaluate", "score every operation with ARI, V-measure and AMI",
       [&](const PipelineConfig& c) { cmd_evaluate(c, log); }},
      {"select-k", "recommend k by Davies-Bouldin and silhouette after noisy-pattern removal",
       [&](const PipelineConfig& c) { cmd_select_k(c, log); }},
      {"project", "t-SNE projection of the analysis operation space",
       [&](const PipelineConfig& c) { cmd_project(c, log); }},
      {"analyze", "inertia ranking, noisy-pattern removal, k selection, composition report",
       [&](const PipelineConfig& c) { cmd_analyze(c, log); }},
      {"pipeline", "extract, embed, evaluate, project and analyze in one run",
       [&](const PipelineConfig& c) { cmd_pipeline(c, log); }},
  };
  for (const auto& cmd : commands) app.add_subcommand(cmd.name, cmd.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::kUsage);
  }

  try {
    PipelineConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    for (const auto& item : overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got \"" + item + "\"");
      set_config_value(config, item.substr(0, eq), item.substr(eq + 1));
    }
    if (!output_dir.empty()) config.output_dir = output_dir;
    validate_config(config);

    for (const auto& cmd : commands) {
      if (!app.got_subcommand(cmd.name)) continue;
      write_run_manifest(config, cmd.name);
      cmd.run(config);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "sentops: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "sentops: internal error: " << e.what() << '\n';
    return 1;
  }
}
