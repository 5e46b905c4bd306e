#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "streetsafe/label.hpp"

namespace streetsafe::corpus {

struct ImageRecord {
  std::string image_id;
  std::string city;
  std::string nation;
  std::optional<double> latitude;
  std::optional<double> longitude;
  double trueskill_raw = 0.0;
  std::optional<double> trueskill_normalized;
  std::optional<Label> ground_truth;
  /// Set when the row carried no nation and the city is not in the mapping.
  bool nation_unresolved = false;
};

/// City to nation lookup. Matching ignores case, spaces, and punctuation,
/// so "CapeTown", "Cape Town" and "cape-town" are the same key.
class CityNationTable {
 public:
  /// The bundled Place Pulse 2.0 mapping.
  static const CityNationTable& bundled();
  /// Parses `city,nation` rows with a header line.
  static CityNationTable parse(std::istream& in);

  std::optional<std::string> nation_for(std::string_view city) const;
  /// Distinct nations, sorted.
  std::vector<std::string> nations() const;
  std::size_t size() const { return by_key_.size(); }

 private:
  std::map<std::string, std::string> by_key_;
};

/// The bundled mapping as CSV text (same bytes as data/city_nations.csv).
std::string_view bundled_city_nations_csv();

/// Reads `image_id,city,nation,lat,lon,trueskill_raw` with an optional
/// `trueskill_normalized,ground_truth` tail. Columns are located by header name.
/// Throws DataError on duplicate ids or bad numeric fields.
std::vector<ImageRecord> load_corpus(std::istream& in,
                                     const CityNationTable& cities = CityNationTable::bundled());

std::vector<ImageRecord> load_corpus_file(const std::string& path,
                                          const CityNationTable& cities = CityNationTable::bundled());

/// Min-max normalization over the whole corpus.
std::vector<ImageRecord> normalize_scores(std::span<const ImageRecord> records);

struct AdaptiveMean {};
struct FixedThreshold {
  double value = 0.0;
};
using ThresholdConfig = std::variant<AdaptiveMean, FixedThreshold>;

/// Parses "mean" or a number in [0,1].
ThresholdConfig parse_threshold(std::string_view text);

double compute_threshold(std::span<const ImageRecord> records, const ThresholdConfig& config);

/// Safe iff normalized score > tau; ties go to Unsafe.
std::vector<ImageRecord> assign_ground_truth(std::span<const ImageRecord> records, double tau);

void write_corpus(std::ostream& out, std::span<const ImageRecord> records);

/// SHA-256 of the canonical labeled-corpus serialization.
std::string fingerprint(std::span<const ImageRecord> records);

struct LabelSummary {
  std::size_t safe = 0;
  std::size_t unsafe = 0;
  std::size_t unresolved_cities = 0;
};
LabelSummary summarize(std::span<const ImageRecord> records);

}  // namespace streetsafe::corpus
