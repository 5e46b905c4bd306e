#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <fmt/format.h>

#include <json.hpp>

#include "streetsafe/inference.hpp"
#include "streetsafe/util.hpp"

namespace streetsafe::inference {

using nlohmann::json;

std::string build_request_body(const BackendConfig& config, const personas::PromptText& prompt,
                               const ImagePayload& image) {
  json image_part;
  std::string b64 = util::base64_encode(image.bytes);
  if (config.image_field == ImageField::ImageUrl) {
    image_part = {{"type", "image_url"},
                  {"image_url", {{"url", fmt::format("data:{};base64,{}", image.media_type, b64)}}}};
  } else {
    image_part = {{"type", "image"}, {"base64", b64}};
  }
  json body = {
      {"model", config.model_name},
      {"temperature", config.temperature},
      {"messages",
       json::array({{{"role", "user"}, {"content", json::array({{{"type", "text"}, {"text", prompt.body}}, image_part})}}})},
  };
  return body.dump();
}

std::string extract_completion_text(std::string_view response_body) {
  json j = json::parse(response_body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::string(response_body);

  auto content_text = [](const json& content) -> std::optional<std::string> {
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
      std::string out;
      for (const auto& part : content) {
        if (part.is_object() && part.contains("text") && part["text"].is_string()) out += part["text"].get<std::string>();
      }
      return out;
    }
    return std::nullopt;
  };

  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const json& choice = j["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content")) {
      if (auto t = content_text(choice["message"]["content"])) return *t;
    }
    if (choice.contains("text") && choice["text"].is_string()) return choice["text"].get<std::string>();
  }
  if (j.contains("message") && j["message"].is_object() && j["message"].contains("content")) {
    if (auto t = content_text(j["message"]["content"])) return *t;
  }
  if (j.contains("response") && j["response"].is_string()) return j["response"].get<std::string>();
  return std::string(response_body);
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw UsageError("endpoint `" + url + "` must start with http:// or https://");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig config) : config_(std::move(config)), endpoint_(split_url(config_.endpoint_url)) {}

  Completion complete(const personas::PromptText& prompt, const ImagePayload& image) const override {
    // One client per request; httplib clients are not safe to share across threads.
    httplib::Client client(endpoint_.origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto start = std::chrono::steady_clock::now();
    auto res = client.Post(endpoint_.path, headers, build_request_body(config_, prompt, image), "application/json");
    auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    if (!res) {
      throw TransportError(fmt::format("POST {}: {}", config_.endpoint_url, httplib::to_string(res.error())));
    }
    if (res->status < 200 || res->status >= 300) {
      throw TransportError(fmt::format("POST {}: HTTP {}", config_.endpoint_url, res->status));
    }
    return Completion{extract_completion_text(res->body), latency};
  }

  std::string descriptor() const override {
    return fmt::format("http:{} model={} temperature={}", config_.endpoint_url, config_.model_name, config_.temperature);
  }

 private:
  BackendConfig config_;
  Endpoint endpoint_;
};

}  // namespace

std::unique_ptr<Backend> http_backend(const BackendConfig& config) { return std::make_unique<HttpBackend>(config); }

}  // namespace streetsafe::inference
