#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streetsafe/error.hpp"
#include "streetsafe/label.hpp"
#include "streetsafe/personas.hpp"

namespace streetsafe::inference {

enum class ImageField {
  Base64,    // {"type":"image","base64":...}
  ImageUrl,  // OpenAI-style {"type":"image_url","image_url":{"url":"data:..."}}
};

struct BackendConfig {
  /// "mock:<seed>" or "http".
  std::string backend = "mock:7";
  std::string endpoint_url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model_name = "llava-v1.6-vicuna-7b";
  double temperature = 0.1;
  int max_retries = 2;
  std::chrono::milliseconds timeout{120000};
  int request_parallelism = 4;
  std::string api_key;
  ImageField image_field = ImageField::Base64;
};

struct ImagePayload {
  std::string image_id;
  std::string bytes;
  std::string media_type = "image/jpeg";
};

/// Finds `<root>/<image_id>` or `<root>/<image_id>.{jpg,jpeg,png}`.
ImagePayload load_image(const std::string& image_root, const std::string& image_id);

struct Verdict {
  Label classification = Label::Unsafe;
  std::array<std::string, 3> keywords;
  std::string reason;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

enum class ParseErrorCode {
  NoJsonObject,
  InvalidClassification,
  KeywordCount,
};

std::string_view to_string(ParseErrorCode code);

class ParseError : public DataError {
 public:
  ParseError(ParseErrorCode code, const std::string& what) : DataError(what), code_(code) {}
  ParseErrorCode code() const noexcept { return code_; }

 private:
  ParseErrorCode code_;
};

/// Extracts the first JSON object in `raw`, tolerating prose and code fences
/// around it. Keys and the classification value match case-insensitively;
/// keywords may be an array or one comma-separated string.
Verdict parse_response(std::string_view raw);

/// Canonical JSON for a verdict; parse_response(serialize_verdict(v)) == v.
std::string serialize_verdict(const Verdict& v);

struct Completion {
  std::string text;
  std::chrono::milliseconds latency{0};
};

/// Connection or protocol failure; retried by classify_image.
class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Every attempt produced unparseable output.
class ParseExhaustedError : public BackendError {
 public:
  ParseExhaustedError(const std::string& what, std::string last_raw)
      : BackendError(what), last_raw_(std::move(last_raw)) {}
  const std::string& last_raw_response() const noexcept { return last_raw_; }

 private:
  std::string last_raw_;
};

/// Backends are shared across request threads; complete() must be thread-safe.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const personas::PromptText& prompt, const ImagePayload& image) const = 0;
  virtual std::string descriptor() const = 0;
  /// Offline backends accept placeholder image payloads.
  virtual bool needs_image_bytes() const { return true; }
};

/// Verdicts are a pure function of (seed, persona_id, image_id).
std::unique_ptr<Backend> mock_backend(std::uint64_t seed);

/// Canonical keyword vocabulary the mock draws from.
const std::vector<std::string>& mock_vocabulary();

std::unique_ptr<Backend> http_backend(const BackendConfig& config);

/// Builds the JSON request body sent by the HTTP backend.
std::string build_request_body(const BackendConfig& config, const personas::PromptText& prompt,
                               const ImagePayload& image);

/// Pulls the model text out of a chat-completion style response body.
std::string extract_completion_text(std::string_view response_body);

/// Dispatches on config.backend ("mock:<seed>" or "http").
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

struct Assessment {
  std::string image_id;
  std::string persona_id;
  std::string run_id;
  Label classification = Label::Unsafe;
  std::array<std::string, 3> keywords;
  std::string reason;
  std::string raw_response;
  std::chrono::milliseconds latency{0};
  int attempt_count = 0;

  friend bool operator==(const Assessment&, const Assessment&) = default;
};

/// Sends the request, retrying transport failures and malformed output up to
/// config.max_retries times. The returned run_id is empty.
Assessment classify_image(const Backend& backend, const BackendConfig& config, const personas::PromptText& prompt,
                          const ImagePayload& image);

/// Runs task(i) for i in [0, n) on at most `parallelism` threads.
void for_each_bounded(std::size_t n, int parallelism, const std::function<void(std::size_t)>& task);

}  // namespace streetsafe::inference
