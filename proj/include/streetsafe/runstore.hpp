#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streetsafe/error.hpp"
#include "streetsafe/inference.hpp"

namespace streetsafe::runstore {

using inference::Assessment;

struct RunManifest {
  std::string run_id;
  int replicate_index = 1;
  std::string backend;
  std::string template_version;
  std::string corpus_fingerprint;
  std::vector<std::string> personas;
  std::string started_at;
  std::string finished_at;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

/// Raised when an assessment triple is already present in a run.
class ConflictError : public DataError {
 public:
  using DataError::DataError;
};

std::string to_json_line(const Assessment& a);
Assessment assessment_from_json(std::string_view line);

/// Layout: `<root>/<run_id>/manifest.json` and `<root>/<run_id>/assessments.jsonl`.
class RunStore {
 public:
  explicit RunStore(std::string root);

  const std::string& root() const { return root_; }
  std::vector<std::string> list_runs() const;
  bool has_run(std::string_view run_id) const;

  RunManifest read_manifest(std::string_view run_id) const;
  void write_manifest(const RunManifest& manifest) const;
  std::vector<Assessment> read_assessments(std::string_view run_id) const;

  std::string run_dir(std::string_view run_id) const;
  std::string assessments_path(std::string_view run_id) const;

 private:
  std::string root_;
};

/// Single appender for one run. Existing triples are indexed on open and a
/// torn trailing line left by an interrupted write is discarded.
class RunWriter {
 public:
  RunWriter(const RunStore& store, std::string run_id);

  bool contains(std::string_view persona_id, std::string_view image_id) const;
  /// Throws ConflictError if the (run, persona, image) triple exists.
  void append(const Assessment& a);
  std::size_t size() const { return keys_.size(); }

 private:
  std::string run_id_;
  std::string path_;
  std::set<std::pair<std::string, std::string>> keys_;
};

struct RunData {
  RunManifest manifest;
  std::vector<Assessment> assessments;
};

/// Replicates of one experiment. All members share a corpus fingerprint.
struct RunSet {
  std::vector<RunData> runs;

  const std::string& fingerprint() const { return runs.front().manifest.corpus_fingerprint; }
  /// Sorted union of persona ids with at least one assessment.
  std::vector<std::string> persona_ids() const;
};

/// Loads runs in replicate order. Throws DataError on fingerprint mismatch.
RunSet load_run_set(const RunStore& store, std::span<const std::string> run_ids);

/// Runs named `<name>-r<k>`, or the single run `<name>` if that exists.
std::vector<std::string> replicate_ids(const RunStore& store, std::string_view name);

struct CityFilter {
  /// Empty with `all` set means every city, weighted equally.
  std::vector<std::string> cities;
  bool all = false;

  static CityFilter every_city() { return CityFilter{{}, true}; }
  static CityFilter only(std::string city) { return CityFilter{{std::move(city)}, false}; }
  std::string label() const;
};

struct UnsafeRate {
  std::string persona_id;
  std::string city;
  double unsafe_percent = 0.0;
  /// Matching assessments summed over replicates.
  std::size_t sample_count = 0;
  double replicate_spread = 0.0;
  std::vector<double> per_replicate;
};

using ImageCityIndex = std::map<std::string, std::string, std::less<>>;

/// Explicit city lists pool their assessments; `every_city()` takes the
/// simple mean of per-city percentages. Replicates are averaged at the
/// percentage level and their sample standard deviation is the spread.
UnsafeRate unsafe_rate(const RunSet& runs, const ImageCityIndex& cities, std::string_view persona_id,
                       const CityFilter& filter);

/// Flat CSV of every assessment in the set, for external tools.
void export_assessments(std::ostream& out, const RunSet& runs, const ImageCityIndex& cities);

/// UTC timestamp, ISO 8601.
std::string utc_now();

}  // namespace streetsafe::runstore
