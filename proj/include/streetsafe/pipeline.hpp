#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "streetsafe/corpus.hpp"
#include "streetsafe/inference.hpp"

namespace streetsafe::pipeline {

struct PipelineConfig {
  std::string corpus;          // raw input for ingest
  std::string labeled_corpus;  // defaults to <out>/corpus_labeled.csv
  std::string image_root;
  std::string city_map;
  inference::BackendConfig backend;
  std::string personas = "all";
  int replicates = 2;
  std::string run_name = "run";
  std::vector<std::string> run_ids;  // explicit selection for analysis; default: <run_name>-r*
  corpus::ThresholdConfig threshold = corpus::AdaptiveMean{};
  std::size_t top_n = 25;
  std::uint64_t seed = 0;  // Louvain visit order
  std::optional<double> cut_height;
  std::size_t city_clusters = 4;
  std::size_t nationality_clusters = 7;
  std::string out = "out";
  std::string runs_dir;  // defaults to <out>/runs
  std::string templates;
  std::string synonyms;
  std::optional<std::string> network_persona;

  std::string labeled_corpus_path() const;
  std::string runs_path() const;
  std::string report_dir() const;
};

/// Every recognised setting name, as used in config files (`top_n = 25`),
/// environment variables (STREETSAFE_TOP_N) and flags (--top-n).
const std::vector<std::string>& setting_keys();

/// Applies one textual setting. Throws UsageError for unknown keys or bad values.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);

/// Layers settings in increasing precedence: config file, environment, flags.
/// `env` returns the variable's value if set.
PipelineConfig resolve_config(const std::optional<std::string>& config_file,
                              const std::function<std::optional<std::string>(const std::string&)>& env,
                              const std::vector<std::pair<std::string, std::string>>& flags);

struct IngestResult {
  double tau = 0.0;
  corpus::LabelSummary summary;
  std::size_t records = 0;
  std::string output_path;
};

IngestResult cmd_ingest(const PipelineConfig& config, std::ostream& log);

struct RunResult {
  std::vector<std::string> run_ids;
  std::size_t appended = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
};

/// Resumable: triples already in the store are skipped. Items that fail after
/// retries are tallied and left for the next invocation.
RunResult cmd_run(const PipelineConfig& config, std::ostream& log);

/// Writes every report table under <out>/report. Returns the files written.
std::vector<std::string> cmd_report(const PipelineConfig& config, std::ostream& log);
std::vector<std::string> cmd_cluster(const PipelineConfig& config, std::ostream& log);
std::vector<std::string> cmd_network(const PipelineConfig& config, std::ostream& log);
std::string cmd_export(const PipelineConfig& config, std::ostream& log);

}  // namespace streetsafe::pipeline
