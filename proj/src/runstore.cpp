#include "streetsafe/runstore.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <regex>
#include <sstream>

#include "streetsafe/util.hpp"

namespace streetsafe::runstore {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_json_line(const Assessment& a) {
  json j = {
      {"run_id", a.run_id},
      {"persona_id", a.persona_id},
      {"image_id", a.image_id},
      {"classification", std::string(to_string(a.classification))},
      {"keywords", json::array({a.keywords[0], a.keywords[1], a.keywords[2]})},
      {"reason", a.reason},
      {"raw_response", a.raw_response},
      {"latency_ms", a.latency.count()},
      {"attempt_count", a.attempt_count},
  };
  return j.dump();
}

Assessment assessment_from_json(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("assessment record is not a JSON object");
  try {
    Assessment a;
    a.run_id = j.at("run_id").get<std::string>();
    a.persona_id = j.at("persona_id").get<std::string>();
    a.image_id = j.at("image_id").get<std::string>();
    auto cls = label_from_string(j.at("classification").get<std::string>());
    if (!cls) throw DataError("bad classification in assessment record");
    a.classification = *cls;
    const auto& kw = j.at("keywords");
    if (!kw.is_array() || kw.size() != 3) throw DataError("assessment record must carry 3 keywords");
    for (std::size_t i = 0; i < 3; ++i) a.keywords[i] = kw[i].get<std::string>();
    a.reason = j.at("reason").get<std::string>();
    a.raw_response = j.at("raw_response").get<std::string>();
    a.latency = std::chrono::milliseconds{j.at("latency_ms").get<std::int64_t>()};
    a.attempt_count = j.at("attempt_count").get<int>();
    return a;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed assessment record: ") + e.what());
  }
}

RunStore::RunStore(std::string root) : root_(std::move(root)) {}

std::string RunStore::run_dir(std::string_view run_id) const { return (fs::path(root_) / std::string(run_id)).string(); }

std::string RunStore::assessments_path(std::string_view run_id) const {
  return (fs::path(run_dir(run_id)) / "assessments.jsonl").string();
}

std::vector<std::string> RunStore::list_runs() const {
  std::vector<std::string> ids;
  if (!fs::is_directory(root_)) return ids;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) ids.push_back(entry.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool RunStore::has_run(std::string_view run_id) const {
  return fs::exists(fs::path(run_dir(run_id)) / "manifest.json");
}

RunManifest RunStore::read_manifest(std::string_view run_id) const {
  std::string path = (fs::path(run_dir(run_id)) / "manifest.json").string();
  json j = json::parse(util::read_file(path), nullptr, false);
  if (j.is_discarded()) throw DataError("malformed manifest: " + path);
  try {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.replicate_index = j.at("replicate_index").get<int>();
    m.backend = j.at("backend").get<std::string>();
    m.template_version = j.at("template_version").get<std::string>();
    m.corpus_fingerprint = j.at("corpus_fingerprint").get<std::string>();
    m.personas = j.at("personas").get<std::vector<std::string>>();
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    return m;
  } catch (const json::exception& e) {
    throw DataError("manifest " + path + ": " + e.what());
  }
}

void RunStore::write_manifest(const RunManifest& m) const {
  json j = {
      {"run_id", m.run_id},
      {"replicate_index", m.replicate_index},
      {"backend", m.backend},
      {"template_version", m.template_version},
      {"corpus_fingerprint", m.corpus_fingerprint},
      {"personas", m.personas},
      {"started_at", m.started_at},
      {"finished_at", m.finished_at},
  };
  util::write_file_atomic((fs::path(run_dir(m.run_id)) / "manifest.json").string(), j.dump(2) + "\n");
}

std::vector<Assessment> RunStore::read_assessments(std::string_view run_id) const {
  std::vector<Assessment> out;
  std::string path = assessments_path(run_id);
  if (!fs::exists(path)) return out;
  std::string contents = util::read_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < contents.size()) {
    std::size_t nl = contents.find('\n', pos);
    ++line_no;
    if (nl == std::string::npos) break;  // torn tail from an interrupted append
    std::string_view line(contents.data() + pos, nl - pos);
    pos = nl + 1;
    if (util::trim(line).empty()) continue;
    try {
      out.push_back(assessment_from_json(line));
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  }
  return out;
}

RunWriter::RunWriter(const RunStore& store, std::string run_id)
    : run_id_(std::move(run_id)), path_(store.assessments_path(run_id_)) {
  fs::create_directories(fs::path(path_).parent_path());
  if (fs::exists(path_)) {
    std::string contents = util::read_file(path_);
    std::size_t last_nl = contents.rfind('\n');
    std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (keep != contents.size()) fs::resize_file(path_, keep);
  }
  for (const auto& a : store.read_assessments(run_id_)) keys_.emplace(a.persona_id, a.image_id);
}

bool RunWriter::contains(std::string_view persona_id, std::string_view image_id) const {
  return keys_.contains({std::string(persona_id), std::string(image_id)});
}

void RunWriter::append(const Assessment& a) {
  if (a.run_id != run_id_) throw DataError("assessment for run `" + a.run_id + "` appended to `" + run_id_ + "`");
  if (contains(a.persona_id, a.image_id)) {
    throw ConflictError(fmt::format("duplicate assessment ({}, {}, {})", a.run_id, a.persona_id, a.image_id));
  }
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << to_json_line(a) << '\n';
  out.flush();
  if (!out) throw DataError("append failed: " + path_);
  keys_.emplace(a.persona_id, a.image_id);
}

std::vector<std::string> RunSet::persona_ids() const {
  std::set<std::string> ids;
  for (const auto& r : runs) {
    for (const auto& a : r.assessments) ids.insert(a.persona_id);
  }
  return {ids.begin(), ids.end()};
}

RunSet load_run_set(const RunStore& store, std::span<const std::string> run_ids) {
  if (run_ids.empty()) throw DataError("no runs selected");
  RunSet set;
  for (const auto& id : run_ids) {
    if (!store.has_run(id)) throw DataError("run `" + id + "` not found in " + store.root());
    RunData data{store.read_manifest(id), store.read_assessments(id)};
    if (!set.runs.empty() && data.manifest.corpus_fingerprint != set.fingerprint()) {
      throw DataError(fmt::format("run `{}` was produced from a different corpus than `{}`", id,
                                  set.runs.front().manifest.run_id));
    }
    set.runs.push_back(std::move(data));
  }
  std::stable_sort(set.runs.begin(), set.runs.end(), [](const RunData& a, const RunData& b) {
    return a.manifest.replicate_index < b.manifest.replicate_index;
  });
  return set;
}

std::vector<std::string> replicate_ids(const RunStore& store, std::string_view name) {
  std::vector<std::pair<int, std::string>> found;
  std::regex pattern(fmt::format("^{}-r([0-9]+)$", std::regex_replace(std::string(name), std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)")));
  for (const auto& id : store.list_runs()) {
    std::smatch m;
    if (std::regex_match(id, m, pattern)) found.emplace_back(std::stoi(m[1].str()), id);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> ids;
  for (auto& [k, id] : found) ids.push_back(std::move(id));
  if (ids.empty() && store.has_run(name)) ids.emplace_back(name);
  return ids;
}

std::string CityFilter::label() const {
  if (all) return "ALL";
  std::string out;
  for (std::size_t i = 0; i < cities.size(); ++i) {
    if (i) out += "+";
    out += cities[i];
  }
  return out;
}

UnsafeRate unsafe_rate(const RunSet& runs, const ImageCityIndex& cities, std::string_view persona_id,
                       const CityFilter& filter) {
  UnsafeRate rate;
  rate.persona_id = std::string(persona_id);
  rate.city = filter.label();
  std::set<std::string, std::less<>> wanted(filter.cities.begin(), filter.cities.end());

  for (const auto& run : runs.runs) {
    // city -> (unsafe, total); std::map keeps the per-city mean order-independent.
    std::map<std::string, std::pair<std::size_t, std::size_t>> tallies;
    for (const auto& a : run.assessments) {
      if (a.persona_id != persona_id) continue;
      auto it = cities.find(a.image_id);
      if (it == cities.end()) throw DataError("assessment for `" + a.image_id + "` has no corpus record");
      if (!filter.all && !wanted.contains(it->second)) continue;
      auto& t = tallies[filter.all ? it->second : std::string()];
      if (a.classification == Label::Unsafe) ++t.first;
      ++t.second;
    }
    if (tallies.empty()) continue;
    std::vector<double> city_pcts;
    for (const auto& [city, t] : tallies) {
      city_pcts.push_back(100.0 * static_cast<double>(t.first) / static_cast<double>(t.second));
      rate.sample_count += t.second;
    }
    rate.per_replicate.push_back(util::mean(city_pcts));
  }
  if (rate.per_replicate.empty()) {
    throw DataError(fmt::format("no assessments for persona `{}` in {}", persona_id, rate.city));
  }
  rate.unsafe_percent = util::mean(rate.per_replicate);
  rate.replicate_spread = util::sample_stddev(rate.per_replicate);
  return rate;
}

void export_assessments(std::ostream& out, const RunSet& runs, const ImageCityIndex& cities) {
  out << "run_id,persona_id,image_id,city,classification,keyword_1,keyword_2,keyword_3,reason,attempt_count,latency_ms\n";
  for (const auto& run : runs.runs) {
    for (const auto& a : run.assessments) {
      auto it = cities.find(a.image_id);
      std::vector<std::string> row{a.run_id,
                                   a.persona_id,
                                   a.image_id,
                                   it == cities.end() ? std::string() : it->second,
                                   std::string(to_string(a.classification)),
                                   a.keywords[0],
                                   a.keywords[1],
                                   a.keywords[2],
                                   a.reason,
                                   std::to_string(a.attempt_count),
                                   std::to_string(a.latency.count())};
      out << util::join_csv(row) << '\n';
    }
  }
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace streetsafe::runstore
