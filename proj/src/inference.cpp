#include "streetsafe/inference.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <json.hpp>
#include <thread>

#include "streetsafe/util.hpp"

namespace streetsafe::inference {

using nlohmann::json;

std::string_view to_string(ParseErrorCode code) {
  switch (code) {
    case ParseErrorCode::NoJsonObject: return "no-json-object";
    case ParseErrorCode::InvalidClassification: return "invalid-classification";
    case ParseErrorCode::KeywordCount: return "keyword-count";
  }
  return "unknown";
}

ImagePayload load_image(const std::string& image_root, const std::string& image_id) {
  namespace fs = std::filesystem;
  fs::path base = fs::path(image_root) / image_id;
  for (const char* ext : {"", ".jpg", ".jpeg", ".png"}) {
    fs::path p = base;
    p += ext;
    if (!fs::is_regular_file(p)) continue;
    ImagePayload payload;
    payload.image_id = image_id;
    payload.bytes = util::read_file(p.string());
    if (payload.bytes.empty()) throw DataError("empty image file: " + p.string());
    payload.media_type = util::to_lower_ascii(p.extension().string()) == ".png" ? "image/png" : "image/jpeg";
    return payload;
  }
  throw DataError("image not found for `" + image_id + "` under " + image_root);
}

namespace {

// End of the brace-balanced object starting at `open`, or npos.
std::size_t match_object(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

std::optional<json> first_json_object(std::string_view raw) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
    std::size_t close = match_object(raw, open);
    if (close == std::string_view::npos) continue;
    json j = json::parse(raw.substr(open, close - open + 1), nullptr, false);
    if (!j.is_discarded() && j.is_object()) return j;
  }
  return std::nullopt;
}

const json* find_key(const json& obj, std::string_view key) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (util::to_lower_ascii(it.key()) == key) return &it.value();
  }
  return nullptr;
}

std::string as_text(const json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

}  // namespace

Verdict parse_response(std::string_view raw) {
  auto obj = first_json_object(raw);
  if (!obj) throw ParseError(ParseErrorCode::NoJsonObject, "response contains no JSON object");

  Verdict v;
  const json* cls = find_key(*obj, "classification");
  std::string cls_text = cls && cls->is_string() ? util::to_lower_ascii(util::trim(cls->get<std::string>())) : "";
  if (cls_text == "safe") {
    v.classification = Label::Safe;
  } else if (cls_text == "unsafe") {
    v.classification = Label::Unsafe;
  } else {
    throw ParseError(ParseErrorCode::InvalidClassification,
                     cls ? "classification `" + as_text(*cls) + "` is not Safe/Unsafe" : "classification missing");
  }

  std::vector<std::string> keywords;
  if (const json* kw = find_key(*obj, "keywords")) {
    if (kw->is_array()) {
      for (const auto& e : *kw) keywords.push_back(util::trim(as_text(e)));
    } else if (kw->is_string()) {
      for (const auto& part : util::split_csv_line(kw->get<std::string>())) keywords.push_back(util::trim(part));
    }
  }
  std::erase_if(keywords, [](const std::string& k) { return k.empty(); });
  if (keywords.size() != 3) {
    throw ParseError(ParseErrorCode::KeywordCount, fmt::format("expected 3 keywords, found {}", keywords.size()));
  }
  std::copy(keywords.begin(), keywords.end(), v.keywords.begin());

  if (const json* reason = find_key(*obj, "reason")) v.reason = as_text(*reason);
  return v;
}

std::string serialize_verdict(const Verdict& v) {
  json j = json::object();
  j["Classification"] = std::string(to_string(v.classification));
  j["Keywords"] = json::array({v.keywords[0], v.keywords[1], v.keywords[2]});
  j["Reason"] = v.reason;
  return j.dump();
}

namespace {

struct Theme {
  std::vector<std::string> words;
};

// Themes follow the keyword communities reported for Safe and Unsafe images.
const std::vector<Theme>& safe_themes() {
  static const std::vector<Theme> t{
      {{"neighborhood", "residential", "trees", "parking", "security", "street", "parked cars", "safety", "peaceful"}},
      {{"orderly", "residential area", "secure", "wellmaintained", "empty", "quiet", "rural", "low crime",
        "no visible threats", "accessible"}},
      {{"commercial", "infrastructure", "traffic", "urban", "vehicles"}},
  };
  return t;
}

const std::vector<Theme>& unsafe_themes() {
  static const std::vector<Theme> t{
      {{"abandoned", "dilapidated", "isolated", "neglected", "graffiti", "vacant", "insecure", "rural", "vandalism"}},
      {{"empty", "security concerns", "lack of maintenance", "potential for crime", "deserted", "gated community",
        "lack of pedestrians", "parked cars", "rundown"}},
      {{"fence", "infrastructure", "parking", "security", "traffic", "urban", "vehicles"}},
  };
  return t;
}

// Surface forms the model might plausibly print for a canonical term.
std::string surface_form(const std::string& canonical, std::uint64_t bits) {
  if (canonical == "traffic" && (bits & 1u)) return "Vehicle Traffic";
  if (canonical == "wellmaintained" && (bits & 1u)) return "Well-Maintained";
  if (bits & 2u) {
    std::string s = canonical;
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
  }
  return canonical;
}

double unit_interval(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::uint64_t seed) : seed_(seed) {}

  Completion complete(const personas::PromptText& prompt, const ImagePayload& image) const override {
    auto h = [&](std::string_view tag, std::string_view a, std::string_view b = {}) {
      return util::stable_hash64(fmt::format("{}|{}|{}|{}", tag, seed_, a, b));
    };
    // A shared latent per image keeps personas correlated; each persona shifts the cut.
    double latent = unit_interval(h("image", image.image_id));
    double rate = 0.40;
    if (prompt.persona_id != "neutral") rate += 0.40 * (unit_interval(h("persona", prompt.persona_id)) - 0.5);
    bool unsafe = latent < rate;
    if (unit_interval(h("noise", prompt.persona_id, image.image_id)) < 0.08) unsafe = !unsafe;

    const auto& themes = unsafe ? unsafe_themes() : safe_themes();
    std::uint64_t pick = h("keywords", prompt.persona_id, image.image_id);
    const Theme& theme = themes[pick % themes.size()];
    pick /= themes.size();
    std::vector<std::string> chosen;
    while (chosen.size() < 3) {
      const std::string& w = theme.words[pick % theme.words.size()];
      pick = pick / theme.words.size() + 0x9e3779b97f4a7c15ULL * (chosen.size() + 1);
      if (std::find(chosen.begin(), chosen.end(), w) == chosen.end()) chosen.push_back(w);
    }
    std::uint64_t style = h("style", prompt.persona_id, image.image_id);
    json j = json::object();
    j["Classification"] = unsafe ? "Unsafe" : "Safe";
    j["Keywords"] = json::array();
    for (std::size_t i = 0; i < chosen.size(); ++i) j["Keywords"].push_back(surface_form(chosen[i], style >> (2 * i)));
    j["Reason"] = fmt::format("The scene shows {}, {} and {}, so the area appears {}.", chosen[0], chosen[1], chosen[2],
                              unsafe ? "unsafe" : "safe");
    std::string text = j.dump();
    if (style & (1ULL << 10)) text = "Here is my assessment:\n```json\n" + j.dump(2) + "\n```";
    return Completion{std::move(text), std::chrono::milliseconds{0}};
  }

  std::string descriptor() const override { return fmt::format("mock:{}", seed_); }
  bool needs_image_bytes() const override { return false; }

 private:
  std::uint64_t seed_;
};

}  // namespace

std::unique_ptr<Backend> mock_backend(std::uint64_t seed) { return std::make_unique<MockBackend>(seed); }

const std::vector<std::string>& mock_vocabulary() {
  static const std::vector<std::string> vocab = [] {
    std::vector<std::string> v;
    for (const auto* themes : {&safe_themes(), &unsafe_themes()}) {
      for (const auto& t : *themes) v.insert(v.end(), t.words.begin(), t.words.end());
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }();
  return vocab;
}

Assessment classify_image(const Backend& backend, const BackendConfig& config, const personas::PromptText& prompt,
                          const ImagePayload& image) {
  if (image.bytes.empty()) throw DataError("empty image payload for `" + image.image_id + "`");
  const int max_attempts = 1 + std::max(0, config.max_retries);
  std::string last_raw;
  std::string last_error;
  bool last_was_parse = false;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    Completion c;
    try {
      c = backend.complete(prompt, image);
    } catch (const TransportError& e) {
      last_error = e.what();
      last_was_parse = false;
      continue;
    }
    try {
      Verdict v = parse_response(c.text);
      Assessment a;
      a.image_id = image.image_id;
      a.persona_id = prompt.persona_id;
      a.classification = v.classification;
      a.keywords = std::move(v.keywords);
      a.reason = std::move(v.reason);
      a.raw_response = std::move(c.text);
      a.latency = c.latency;
      a.attempt_count = attempt;
      return a;
    } catch (const ParseError& e) {
      last_raw = std::move(c.text);
      last_error = fmt::format("{} ({})", e.what(), to_string(e.code()));
      last_was_parse = true;
    }
  }
  std::string what = fmt::format("`{}` / {}: gave up after {} attempts: {}", image.image_id, prompt.persona_id,
                                 max_attempts, last_error);
  if (last_was_parse) throw ParseExhaustedError(what, std::move(last_raw));
  throw BackendError(what);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  std::string b = util::trim(config.backend);
  if (b.starts_with("mock:")) {
    std::string seed_text = b.substr(5);
    std::uint64_t seed = 0;
    try {
      std::size_t used = 0;
      seed = std::stoull(seed_text, &used);
      if (used != seed_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("backend `" + b + "`: seed must be a non-negative integer");
    }
    return mock_backend(seed);
  }
  if (b == "mock") return mock_backend(0);
  if (b == "http") return http_backend(config);
  throw UsageError("unknown backend `" + b + "` (expected `mock:<seed>` or `http`)");
}

void for_each_bounded(std::size_t n, int parallelism, const std::function<void(std::size_t)>& task) {
  std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, parallelism)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            task(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace streetsafe::inference
