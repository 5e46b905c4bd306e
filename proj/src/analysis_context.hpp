#pragma once

// Inputs shared by the analysis subcommands: the labeled corpus and the
// selected replicates, checked against each other.

#include <map>
#include <string>
#include <vector>

#include "streetsafe/corpus.hpp"
#include "streetsafe/metrics.hpp"
#include "streetsafe/pipeline.hpp"
#include "streetsafe/runstore.hpp"

namespace streetsafe::pipeline::detail {

struct AnalysisContext {
  std::vector<corpus::ImageRecord> records;
  runstore::ImageCityIndex city_of;
  metrics::LabelIndex truth;
  runstore::RunSet runs;
  std::vector<std::string> cities;       // sorted
  std::vector<std::string> persona_ids;  // catalog order
};

corpus::CityNationTable city_table(const PipelineConfig& config);
std::vector<corpus::ImageRecord> load_labeled_corpus(const PipelineConfig& config);
std::vector<std::string> selected_run_ids(const PipelineConfig& config, const runstore::RunStore& store);
AnalysisContext load_context(const PipelineConfig& config);

void write_table(const std::string& path, const std::string& contents, std::vector<std::string>& written);

}  // namespace streetsafe::pipeline::detail
