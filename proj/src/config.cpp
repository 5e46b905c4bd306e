#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>

#include "streetsafe/error.hpp"
#include "streetsafe/pipeline.hpp"
#include "streetsafe/util.hpp"

namespace streetsafe::pipeline {

namespace fs = std::filesystem;

std::string PipelineConfig::labeled_corpus_path() const {
  return labeled_corpus.empty() ? (fs::path(out) / "corpus_labeled.csv").string() : labeled_corpus;
}

std::string PipelineConfig::runs_path() const {
  return runs_dir.empty() ? (fs::path(out) / "runs").string() : runs_dir;
}

std::string PipelineConfig::report_dir() const { return (fs::path(out) / "report").string(); }

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys{
      "corpus",     "labeled_corpus", "image_root",  "city_map",       "backend",  "endpoint",
      "model",      "temperature",    "max_retries", "timeout_ms",     "parallelism", "api_key",
      "image_field", "personas",      "replicates",  "run_name",       "runs",     "threshold",
      "top_n",      "seed",           "cut_height",  "city_clusters",  "nationality_clusters",
      "out",        "runs_dir",       "templates",   "synonyms",       "network_persona",
  };
  return keys;
}

namespace {

std::string canonical_key(std::string_view key) {
  std::string k = util::to_lower_ascii(util::trim(key));
  for (char& c : k) {
    if (c == '-') c = '_';
  }
  return k;
}

double number(std::string_view key, std::string_view value) {
  auto v = util::parse_double(value);
  if (!v) throw UsageError(fmt::format("setting `{}`: `{}` is not a number", key, value));
  return *v;
}

long long integer(std::string_view key, std::string_view value, long long min) {
  double v = number(key, value);
  if (v != std::floor(v) || v < static_cast<double>(min)) {
    throw UsageError(fmt::format("setting `{}`: `{}` must be an integer >= {}", key, value, min));
  }
  return static_cast<long long>(v);
}

}  // namespace

void apply_setting(PipelineConfig& c, std::string_view raw_key, std::string_view raw_value) {
  const std::string key = canonical_key(raw_key);
  const std::string value = util::trim(raw_value);
  if (key == "corpus") c.corpus = value;
  else if (key == "labeled_corpus") c.labeled_corpus = value;
  else if (key == "image_root") c.image_root = value;
  else if (key == "city_map") c.city_map = value;
  else if (key == "backend") c.backend.backend = value;
  else if (key == "endpoint") c.backend.endpoint_url = value;
  else if (key == "model") c.backend.model_name = value;
  else if (key == "temperature") {
    double t = number(key, value);
    if (t < 0) throw UsageError("temperature must be >= 0");
    c.backend.temperature = t;
  } else if (key == "max_retries") c.backend.max_retries = static_cast<int>(integer(key, value, 0));
  else if (key == "timeout_ms") c.backend.timeout = std::chrono::milliseconds{integer(key, value, 1)};
  else if (key == "parallelism") c.backend.request_parallelism = static_cast<int>(integer(key, value, 1));
  else if (key == "api_key") c.backend.api_key = value;
  else if (key == "image_field") {
    if (value == "base64") c.backend.image_field = inference::ImageField::Base64;
    else if (value == "image_url") c.backend.image_field = inference::ImageField::ImageUrl;
    else throw UsageError("image_field must be `base64` or `image_url`");
  } else if (key == "personas") c.personas = value;
  else if (key == "replicates") c.replicates = static_cast<int>(integer(key, value, 1));
  else if (key == "run_name") {
    if (value.empty() || value.find_first_of("/\\") != std::string::npos) throw UsageError("run_name must be a plain name");
    c.run_name = value;
  } else if (key == "runs") {
    c.run_ids.clear();
    for (const auto& id : util::split_csv_line(value)) {
      if (auto t = util::trim(id); !t.empty()) c.run_ids.push_back(t);
    }
  } else if (key == "threshold") c.threshold = corpus::parse_threshold(value);
  else if (key == "top_n") c.top_n = static_cast<std::size_t>(integer(key, value, 1));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(integer(key, value, 0));
  else if (key == "cut_height") {
    if (value.empty()) {
      c.cut_height.reset();
    } else {
      double h = number(key, value);
      if (h < 0) throw UsageError("cut_height must be >= 0");
      c.cut_height = h;
    }
  } else if (key == "city_clusters") c.city_clusters = static_cast<std::size_t>(integer(key, value, 1));
  else if (key == "nationality_clusters") c.nationality_clusters = static_cast<std::size_t>(integer(key, value, 1));
  else if (key == "out") c.out = value;
  else if (key == "runs_dir") c.runs_dir = value;
  else if (key == "templates") c.templates = value;
  else if (key == "synonyms") c.synonyms = value;
  else if (key == "network_persona") {
    if (value.empty() || value == "all") c.network_persona.reset();
    else c.network_persona = value;
  } else {
    throw UsageError(fmt::format("unknown setting `{}`", raw_key));
  }
}

PipelineConfig resolve_config(const std::optional<std::string>& config_file,
                              const std::function<std::optional<std::string>(const std::string&)>& env,
                              const std::vector<std::pair<std::string, std::string>>& flags) {
  PipelineConfig c;
  if (config_file) {
    if (!fs::is_regular_file(*config_file)) throw UsageError("config file not found: " + *config_file);
    std::vector<CLI::ConfigItem> items;
    try {
      items = CLI::ConfigTOML().from_file(*config_file);
    } catch (const CLI::Error& e) {
      throw UsageError(fmt::format("config file {}: {}", *config_file, e.what()));
    }
    for (const auto& item : items) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      std::string value;
      for (std::size_t i = 0; i < item.inputs.size(); ++i) {
        if (i) value += ',';
        value += item.inputs[i];
      }
      apply_setting(c, item.name, value);  // [section] headers only group keys
    }
  }
  for (const auto& key : setting_keys()) {
    std::string name = "STREETSAFE_";
    for (char ch : key) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (auto v = env(name)) apply_setting(c, key, *v);
  }
  for (const auto& [k, v] : flags) apply_setting(c, k, v);
  return c;
}

}  // namespace streetsafe::pipeline
