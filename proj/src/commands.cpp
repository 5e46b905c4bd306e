#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "analysis_context.hpp"
#include "streetsafe/error.hpp"
#include "streetsafe/inference.hpp"
#include "streetsafe/personas.hpp"
#include "streetsafe/pipeline.hpp"
#include "streetsafe/runstore.hpp"
#include "streetsafe/util.hpp"

namespace streetsafe::pipeline {

namespace fs = std::filesystem;

namespace detail {

corpus::CityNationTable city_table(const PipelineConfig& config) {
  if (config.city_map.empty()) return corpus::CityNationTable::bundled();
  std::ifstream in(config.city_map);
  if (!in) throw UsageError("cannot open city map " + config.city_map);
  return corpus::CityNationTable::parse(in);
}

std::vector<corpus::ImageRecord> load_labeled_corpus(const PipelineConfig& config) {
  const std::string path = config.labeled_corpus_path();
  if (!fs::is_regular_file(path)) throw DataError("labeled corpus " + path + " not found; run `ingest` first");
  auto records = corpus::load_corpus_file(path, city_table(config));
  for (const auto& r : records) {
    if (!r.ground_truth) throw DataError(fmt::format("{}: `{}` has no ground-truth label", path, r.image_id));
  }
  return records;
}

std::vector<std::string> selected_run_ids(const PipelineConfig& config, const runstore::RunStore& store) {
  if (!config.run_ids.empty()) return config.run_ids;
  auto ids = runstore::replicate_ids(store, config.run_name);
  if (ids.empty()) throw DataError(fmt::format("no runs named `{}` under {}", config.run_name, store.root()));
  return ids;
}

AnalysisContext load_context(const PipelineConfig& config) {
  AnalysisContext ctx;
  ctx.records = load_labeled_corpus(config);
  const std::string fp = corpus::fingerprint(ctx.records);
  runstore::RunStore store(config.runs_path());
  ctx.runs = runstore::load_run_set(store, selected_run_ids(config, store));
  if (ctx.runs.fingerprint() != fp) {
    throw DataError(fmt::format("runs were produced from a different corpus (fingerprint {} vs {})",
                                ctx.runs.fingerprint().substr(0, 12), fp.substr(0, 12)));
  }
  std::set<std::string> cities;
  for (const auto& r : ctx.records) {
    ctx.city_of.emplace(r.image_id, r.city);
    ctx.truth.emplace(r.image_id, *r.ground_truth);
    cities.insert(r.city);
  }
  ctx.cities.assign(cities.begin(), cities.end());

  std::vector<std::pair<std::size_t, std::string>> order;
  const auto& cat = personas::catalog();
  for (const auto& id : ctx.runs.persona_ids()) {
    auto p = personas::from_id(id);
    auto pos = std::find(cat.begin(), cat.end(), p);
    order.emplace_back(static_cast<std::size_t>(pos - cat.begin()), id);
  }
  std::sort(order.begin(), order.end());
  for (auto& [pos, id] : order) ctx.persona_ids.push_back(std::move(id));
  return ctx;
}

void write_table(const std::string& path, const std::string& contents, std::vector<std::string>& written) {
  util::write_file_atomic(path, contents);
  written.push_back(path);
}

}  // namespace detail

IngestResult cmd_ingest(const PipelineConfig& config, std::ostream& log) {
  if (config.corpus.empty()) throw UsageError("ingest needs a corpus path (--corpus)");
  auto raw = corpus::load_corpus_file(config.corpus, detail::city_table(config));
  auto normalized = corpus::normalize_scores(raw);
  IngestResult result;
  result.tau = corpus::compute_threshold(normalized, config.threshold);
  auto labeled = corpus::assign_ground_truth(normalized, result.tau);

  result.output_path = config.labeled_corpus_path();
  if (auto parent = fs::path(result.output_path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ostringstream out;
  corpus::write_corpus(out, labeled);
  util::write_file_atomic(result.output_path, out.str());

  result.records = labeled.size();
  result.summary = corpus::summarize(labeled);
  fmt::print(log, "tau = {}\n", util::fixed(result.tau, 6));
  fmt::print(log, "{} images: {} Safe, {} Unsafe -> {}\n", result.records, result.summary.safe,
             result.summary.unsafe, result.output_path);
  if (result.summary.unresolved_cities > 0) {
    fmt::print(log, "warning: {} images have a city with no known nation\n", result.summary.unresolved_cities);
  }
  return result;
}

namespace {

// Appends are issued in item order after each chunk completes, so a run
// store's contents do not depend on thread scheduling.
constexpr std::size_t kChunkPerWorker = 16;

}  // namespace

RunResult cmd_run(const PipelineConfig& config, std::ostream& log) {
  auto records = detail::load_labeled_corpus(config);
  const std::string fingerprint = corpus::fingerprint(records);
  auto selected = personas::select(config.personas);
  auto templates = config.templates.empty() ? personas::TemplateSet::embedded()
                                            : personas::TemplateSet::load_overrides(config.templates);
  auto backend = inference::make_backend(config.backend);
  const bool placeholder_images = config.image_root.empty();
  if (placeholder_images && backend->needs_image_bytes()) {
    throw UsageError("backend `" + backend->descriptor() + "` needs image bytes; set image_root");
  }

  std::vector<personas::PromptText> prompts;
  for (const auto& p : selected) prompts.push_back(personas::render_prompt(p, templates));

  runstore::RunStore store(config.runs_path());
  fs::create_directories(store.root());
  RunResult result;

  for (int r = 1; r <= config.replicates; ++r) {
    const std::string run_id = fmt::format("{}-r{}", config.run_name, r);
    runstore::RunManifest manifest;
    if (store.has_run(run_id)) {
      manifest = store.read_manifest(run_id);
      if (manifest.corpus_fingerprint != fingerprint) {
        throw DataError("run `" + run_id + "` exists for a different corpus; choose another run_name");
      }
      if (manifest.backend != backend->descriptor() || manifest.template_version != templates.version) {
        throw DataError(fmt::format("run `{}` was made with backend `{}` and templates `{}`; refusing to mix", run_id,
                                    manifest.backend, manifest.template_version));
      }
    } else {
      manifest.run_id = run_id;
      manifest.replicate_index = r;
      manifest.backend = backend->descriptor();
      manifest.template_version = templates.version;
      manifest.corpus_fingerprint = fingerprint;
      manifest.started_at = runstore::utc_now();
    }
    for (const auto& p : selected) {
      if (std::find(manifest.personas.begin(), manifest.personas.end(), p.id) == manifest.personas.end()) {
        manifest.personas.push_back(p.id);
      }
    }
    manifest.finished_at.clear();
    store.write_manifest(manifest);

    runstore::RunWriter writer(store, run_id);
    std::vector<std::size_t> todo_prompt;
    std::vector<const corpus::ImageRecord*> todo_image;
    std::size_t skipped = 0;
    for (std::size_t pi = 0; pi < selected.size(); ++pi) {
      for (const auto& rec : records) {
        if (writer.contains(selected[pi].id, rec.image_id)) {
          ++skipped;
          continue;
        }
        todo_prompt.push_back(pi);
        todo_image.push_back(&rec);
      }
    }
    result.skipped += skipped;
    fmt::print(log, "{}: {} to classify, {} already stored\n", run_id, todo_prompt.size(), skipped);

    const std::size_t chunk = kChunkPerWorker * static_cast<std::size_t>(std::max(1, config.backend.request_parallelism));
    std::size_t failed = 0;
    for (std::size_t begin = 0; begin < todo_prompt.size(); begin += chunk) {
      const std::size_t end = std::min(todo_prompt.size(), begin + chunk);
      std::vector<std::optional<inference::Assessment>> out(end - begin);
      std::vector<std::string> errors(end - begin);
      inference::for_each_bounded(end - begin, config.backend.request_parallelism, [&](std::size_t k) {
        const auto& rec = *todo_image[begin + k];
        inference::ImagePayload image;
        if (placeholder_images) {
          image.image_id = rec.image_id;
          image.bytes = rec.image_id;
        } else {
          image = inference::load_image(config.image_root, rec.image_id);
        }
        try {
          out[k] = inference::classify_image(*backend, config.backend, prompts[todo_prompt[begin + k]], image);
        } catch (const BackendError& e) {
          errors[k] = e.what();
        }
      });
      for (std::size_t k = 0; k < out.size(); ++k) {
        if (!out[k]) {
          ++failed;
          fmt::print(log, "  failed: {}\n", errors[k]);
          continue;
        }
        out[k]->run_id = run_id;
        writer.append(*out[k]);
        ++result.appended;
      }
      fmt::print(log, "  {}/{}\n", end, todo_prompt.size());
    }
    result.failed += failed;
    if (failed == 0) {
      manifest.finished_at = runstore::utc_now();
      store.write_manifest(manifest);
    }
    result.run_ids.push_back(run_id);
  }
  fmt::print(log, "appended {}, skipped {}, failed {}\n", result.appended, result.skipped, result.failed);
  return result;
}

std::string cmd_export(const PipelineConfig& config, std::ostream& log) {
  auto records = detail::load_labeled_corpus(config);
  runstore::ImageCityIndex city_of;
  for (const auto& r : records) city_of.emplace(r.image_id, r.city);
  runstore::RunStore store(config.runs_path());
  auto runs = runstore::load_run_set(store, detail::selected_run_ids(config, store));
  std::ostringstream out;
  runstore::export_assessments(out, runs, city_of);
  fs::create_directories(config.out);
  const std::string path = (fs::path(config.out) / "assessments.csv").string();
  util::write_file_atomic(path, out.str());
  fmt::print(log, "wrote {}\n", path);
  return path;
}

}  // namespace streetsafe::pipeline
