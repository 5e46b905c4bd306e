// streetsafe: persona-conditioned street-view safety evaluation.
//
//   streetsafe ingest  --corpus pp2.csv --out out
//   streetsafe run     --backend mock:7 --personas all --replicates 2
//   streetsafe report  --out out
//
// Settings come from --config (key = value lines), then STREETSAFE_<KEY>
// environment variables, then flags. Exit codes: 0 ok, 1 usage, 2 data, 3 backend.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cstdlib>
#include <iostream>
#include <map>

#include "streetsafe/error.hpp"
#include "streetsafe/pipeline.hpp"

namespace pl = streetsafe::pipeline;

namespace {

std::string flag_name(const std::string& key) {
  std::string f = "--";
  for (char c : key) f.push_back(c == '_' ? '-' : c);
  return f;
}

int run_command(const std::string& name, const pl::PipelineConfig& config) {
  if (name == "ingest") {
    pl::cmd_ingest(config, std::cout);
  } else if (name == "run") {
    auto r = pl::cmd_run(config, std::cout);
    if (r.failed > 0) {
      fmt::print(std::cerr, "{} items failed; rerun to retry them\n", r.failed);
      return static_cast<int>(streetsafe::ErrorKind::Backend);
    }
  } else if (name == "report") {
    pl::cmd_report(config, std::cout);
  } else if (name == "cluster") {
    for (const auto& f : pl::cmd_cluster(config, std::cout)) fmt::print("wrote {}\n", f);
  } else if (name == "network") {
    for (const auto& f : pl::cmd_network(config, std::cout)) fmt::print("wrote {}\n", f);
  } else if (name == "export") {
    pl::cmd_export(config, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persona-conditioned street-view safety evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  app.add_option("--config", config_file, "Settings file of `key = value` lines");

  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  for (const auto& key : pl::setting_keys()) {
    if (key == "api_key") continue;  // environment or config file only
    options[key] = app.add_option(flag_name(key), values[key]);
  }
  options["runs"]->description("Comma-separated run ids to analyse (default: <run_name>-r*)");
  options["personas"]->description("`all` or comma-separated persona ids");
  options["backend"]->description("mock:<seed> or http");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"ingest", "Normalize scores, label the corpus, and print tau"},
      {"run", "Classify every persona x image x replicate into the run store"},
      {"report", "Write every analysis table under <out>/report"},
      {"cluster", "Write the city and nationality clustering tables"},
      {"network", "Write the keyword co-occurrence network tables"},
      {"export", "Write a flat CSV of all stored assessments"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(streetsafe::ErrorKind::Usage);
  }

  try {
    std::vector<std::pair<std::string, std::string>> flags;
    for (const auto& key : pl::setting_keys()) {
      auto it = options.find(key);
      if (it != options.end() && it->second->count() > 0) flags.emplace_back(key, values[key]);
    }
    auto config = pl::resolve_config(
        config_file.empty() ? std::nullopt : std::optional<std::string>(config_file),
        [](const std::string& name) -> std::optional<std::string> {
          const char* v = std::getenv(name.c_str());
          return v ? std::optional<std::string>(v) : std::nullopt;
        },
        flags);
    return run_command(app.get_subcommands().front()->get_name(), config);
  } catch (const streetsafe::Error& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return static_cast<int>(streetsafe::ErrorKind::Data);
  }
}
