#include "streetsafe/corpus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "streetsafe/error.hpp"
#include "streetsafe/util.hpp"

namespace streetsafe::corpus {

namespace {

std::string city_key(std::string_view city) {
  std::string key;
  for (char c : city) {
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      key.push_back(c);
    } else if (c >= 'A' && c <= 'Z') {
      key.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (static_cast<unsigned char>(c) >= 0x80) {
      key.push_back(c);
    }
  }
  return key;
}

std::string format_optional(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

}  // namespace

const CityNationTable& CityNationTable::bundled() {
  static const CityNationTable table = [] {
    std::istringstream in{std::string(bundled_city_nations_csv())};
    return parse(in);
  }();
  return table;
}

CityNationTable CityNationTable::parse(std::istream& in) {
  CityNationTable table;
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto fields = util::split_csv_line(line);
    if (fields.size() != 2) throw DataError(fmt::format("city map line {}: expected `city,nation`", line_no));
    std::string key = city_key(fields[0]);
    std::string nation = util::trim(fields[1]);
    if (key.empty() || nation.empty()) throw DataError(fmt::format("city map line {}: empty field", line_no));
    table.by_key_[key] = nation;
  }
  return table;
}

std::optional<std::string> CityNationTable::nation_for(std::string_view city) const {
  auto it = by_key_.find(city_key(city));
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> CityNationTable::nations() const {
  std::set<std::string> s;
  for (const auto& [k, v] : by_key_) s.insert(v);
  return {s.begin(), s.end()};
}

std::vector<ImageRecord> load_corpus(std::istream& in, const CityNationTable& cities) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!util::trim(line).empty()) {
      header = util::split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw DataError("corpus: missing header row");

  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (util::to_lower_ascii(util::trim(header[i])) == name) return i;
    }
    return std::nullopt;
  };
  auto col_id = column("image_id");
  auto col_city = column("city");
  auto col_raw = column("trueskill_raw");
  if (!col_id || !col_city || !col_raw) {
    throw DataError("corpus: header must name image_id, city and trueskill_raw");
  }
  auto col_nation = column("nation");
  auto col_lat = column("lat");
  auto col_lon = column("lon");
  auto col_norm = column("trueskill_normalized");
  auto col_truth = column("ground_truth");

  std::vector<ImageRecord> records;
  std::set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    ++row;
    auto fields = util::split_csv_line(line);
    auto field = [&](std::optional<std::size_t> col) -> std::string {
      if (!col || *col >= fields.size()) return {};
      return util::trim(fields[*col]);
    };
    auto where = [&] { return fmt::format("row {} (line {})", row, line_no); };
    auto optional_number = [&](std::optional<std::size_t> col, std::string_view name) -> std::optional<double> {
      std::string text = field(col);
      if (text.empty()) return std::nullopt;
      auto v = util::parse_double(text);
      if (!v) throw DataError(fmt::format("corpus {}: non-numeric {} `{}`", where(), name, text));
      return v;
    };

    ImageRecord rec;
    rec.image_id = field(col_id);
    rec.city = field(col_city);
    if (rec.image_id.empty()) throw DataError(fmt::format("corpus {}: empty image_id", where()));
    if (!seen.insert(rec.image_id).second) {
      throw DataError(fmt::format("corpus {}: duplicate image_id `{}`", where(), rec.image_id));
    }
    std::string raw_text = field(col_raw);
    auto raw = util::parse_double(raw_text);
    if (!raw) throw DataError(fmt::format("corpus {}: missing or non-numeric trueskill_raw `{}`", where(), raw_text));
    rec.trueskill_raw = *raw;
    rec.latitude = optional_number(col_lat, "lat");
    rec.longitude = optional_number(col_lon, "lon");

    rec.nation = field(col_nation);
    if (rec.nation.empty()) {
      if (auto n = cities.nation_for(rec.city)) {
        rec.nation = *n;
      } else {
        rec.nation_unresolved = true;
      }
    }

    rec.trueskill_normalized = optional_number(col_norm, "trueskill_normalized");
    if (rec.trueskill_normalized && (*rec.trueskill_normalized < 0.0 || *rec.trueskill_normalized > 1.0)) {
      throw DataError(fmt::format("corpus {}: trueskill_normalized outside [0,1]", where()));
    }
    if (std::string truth = field(col_truth); !truth.empty()) {
      rec.ground_truth = label_from_string(truth);
      if (!rec.ground_truth) throw DataError(fmt::format("corpus {}: ground_truth `{}` is not Safe/Unsafe", where(), truth));
      if (!rec.trueskill_normalized) throw DataError(fmt::format("corpus {}: ground_truth without a normalized score", where()));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ImageRecord> load_corpus_file(const std::string& path, const CityNationTable& cities) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus: " + path);
  return load_corpus(in, cities);
}

std::vector<ImageRecord> normalize_scores(std::span<const ImageRecord> records) {
  if (records.size() < 2) throw DataError("normalize: at least two records are required");
  auto [lo, hi] = std::minmax_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.trueskill_raw < b.trueskill_raw;
  });
  double min = lo->trueskill_raw;
  double max = hi->trueskill_raw;
  if (!(max > min)) throw DataError(fmt::format("normalize: degenerate score range, all raw scores equal {}", min));
  std::vector<ImageRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    double v = (r.trueskill_raw - min) / (max - min);
    r.trueskill_normalized = std::clamp(v, 0.0, 1.0);
    r.ground_truth.reset();
  }
  return out;
}

ThresholdConfig parse_threshold(std::string_view text) {
  std::string t = util::to_lower_ascii(util::trim(text));
  if (t == "mean" || t == "adaptive") return AdaptiveMean{};
  auto v = util::parse_double(t);
  if (!v || *v < 0.0 || *v > 1.0) throw UsageError(fmt::format("threshold `{}` must be `mean` or a number in [0,1]", text));
  return FixedThreshold{*v};
}

double compute_threshold(std::span<const ImageRecord> records, const ThresholdConfig& config) {
  if (records.empty()) throw DataError("threshold: empty corpus");
  if (const auto* fixed = std::get_if<FixedThreshold>(&config)) return fixed->value;
  double sum = 0.0;
  for (const auto& r : records) {
    if (!r.trueskill_normalized) throw DataError("threshold: record `" + r.image_id + "` is not normalized");
    sum += *r.trueskill_normalized;
  }
  return sum / static_cast<double>(records.size());
}

std::vector<ImageRecord> assign_ground_truth(std::span<const ImageRecord> records, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DataError(fmt::format("threshold {} outside [0,1]", tau));
  std::vector<ImageRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    if (!r.trueskill_normalized) throw DataError("label: record `" + r.image_id + "` is not normalized");
    r.ground_truth = *r.trueskill_normalized > tau ? Label::Safe : Label::Unsafe;
  }
  return out;
}

void write_corpus(std::ostream& out, std::span<const ImageRecord> records) {
  out << "image_id,city,nation,lat,lon,trueskill_raw,trueskill_normalized,ground_truth\n";
  for (const auto& r : records) {
    std::vector<std::string> row{
        r.image_id,
        r.city,
        r.nation,
        format_optional(r.latitude),
        format_optional(r.longitude),
        fmt::format("{}", r.trueskill_raw),
        format_optional(r.trueskill_normalized),
        r.ground_truth ? std::string(to_string(*r.ground_truth)) : std::string(),
    };
    out << util::join_csv(row) << '\n';
  }
}

std::string fingerprint(std::span<const ImageRecord> records) {
  std::ostringstream ss;
  write_corpus(ss, records);
  return util::sha256_hex(ss.str());
}

LabelSummary summarize(std::span<const ImageRecord> records) {
  LabelSummary s;
  for (const auto& r : records) {
    if (r.ground_truth == Label::Safe) ++s.safe;
    if (r.ground_truth == Label::Unsafe) ++s.unsafe;
    if (r.nation_unresolved) ++s.unresolved_cities;
  }
  return s;
}

}  // namespace streetsafe::corpus
