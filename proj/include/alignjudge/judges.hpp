#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "alignjudge/prompting.hpp"

namespace alignjudge {

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

struct RawJudgment {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double latency_seconds = 0.0;
  bool from_cache = false;
};

class JudgeError : public std::runtime_error {
 public:
  enum class Kind {
    kTransport,            // network or HTTP failure after retries
    kRejected,             // non-retriable HTTP status (4xx)
    kMissingCredential,    // named env var unset
    kMissingResponsePath,  // reply lacks the configured JSON pointer
    kMalformedResponse,    // reply is not JSON
    kConfig,
    kUnsupportedPrompt,    // mock could not read the prompt layout
    kNoFixture,            // scripted mock has no reply for this prompt
  };

  JudgeError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }
  bool retriable() const { return kind_ == Kind::kTransport; }

 private:
  Kind kind_;
};

std::string_view to_string(JudgeError::Kind kind);

// Thread-safe judges: evaluate may be called concurrently.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual const std::string& id() const = 0;
  virtual RawJudgment evaluate(const PromptBundle& bundle) = 0;
};

// Declarative judge description, loaded from a JSON document. Credentials
// are referenced by environment variable name only; the loader rejects
// credential-looking keys. Decoding temperature is pinned to 0.
struct JudgeConfig {
  std::string judge_id;
  std::string kind = "http";  // "http" or "mock"

  std::string endpoint;
  std::string auth_env_var;
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  std::map<std::string, std::string> extra_headers;
  // Body skeleton; "{{prompt}}" and "{{max_tokens}}" are substituted and any
  // "temperature" member is forced to 0.
  nlohmann::json request_template;
  std::string response_path = "/choices/0/message/content";
  std::string input_tokens_path;
  std::string output_tokens_path;

  static constexpr double kTemperature = 0.0;
  int max_tokens = 1024;

  std::optional<double> price_per_1k_input;
  std::optional<double> price_per_1k_output;

  double rate_limit_per_minute = 0.0;  // 0: unlimited
  int max_retries = 3;
  std::chrono::seconds timeout{120};
  std::chrono::milliseconds backoff_initial{500};
  int parallelism = 4;

  nlohmann::json mock;  // mock description when kind == "mock"
};

// Throws JudgeError(kConfig) on schema violations.
JudgeConfig parse_judge_config(const nlohmann::json& doc);
JudgeConfig load_judge_config(const std::filesystem::path& path);

// Input and output tokens priced per thousand. Unknown (not zero) when either
// price is unset.
std::optional<double> cost_of(const RawJudgment& judgment,
                              const JudgeConfig& config);

// Spaces requests at 60 / per_minute seconds across all callers.
class RateLimiter {
 public:
  explicit RateLimiter(double per_minute);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_{};
};

struct HttpResponse {
  int status = 0;  // 0 when the request never completed
  std::string body;
  std::string error;
};

class HttpTransport {
 public:
  using Headers = std::vector<std::pair<std::string, std::string>>;
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url, const Headers& headers,
                            const std::string& body,
                            std::chrono::seconds timeout) = 0;
};

// cpp-httplib client; http:// and https:// URLs.
std::unique_ptr<HttpTransport> make_default_transport();

// Generic chat-completion style client driven by JudgeConfig.
class HttpJudge final : public Judge {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpJudge(JudgeConfig config,
                     std::unique_ptr<HttpTransport> transport =
                         make_default_transport(),
                     Sleeper sleeper = {});

  const std::string& id() const override { return config_.judge_id; }
  RawJudgment evaluate(const PromptBundle& bundle) override;

  const JudgeConfig& config() const { return config_; }
  std::string render_request(std::string_view prompt) const;

 private:
  JudgeConfig config_;
  std::unique_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  RateLimiter limiter_;
};

struct CacheEntry {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
};

// Append-only response cache keyed by (judge id, prompt SHA-256). Each line
// of the backing file is one JSON object:
//   {"judge_id", "prompt_sha256", "text", "input_tokens", "output_tokens"}
// An empty path keeps the cache in memory. Lines that fail to parse (for
// example a torn final write) are skipped on load.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path file = {});

  std::optional<CacheEntry> lookup(std::string_view judge_id,
                                   std::string_view prompt_hash) const;
  // First write for a key wins; later stores of the same key are ignored.
  void store(std::string_view judge_id, std::string_view prompt_hash,
             const CacheEntry& entry);

  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_; }

 private:
  static std::string key(std::string_view judge_id, std::string_view hash);

  std::filesystem::path file_;
  mutable std::mutex mu_;
  std::map<std::string, CacheEntry, std::less<>> entries_;
  std::size_t skipped_ = 0;
};

// Consults the cache before delegating to `inner`.
class CachingJudge final : public Judge {
 public:
  CachingJudge(std::shared_ptr<Judge> inner, std::shared_ptr<ResponseCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  const std::string& id() const override { return inner_->id(); }
  RawJudgment evaluate(const PromptBundle& bundle) override;

  std::size_t misses() const { return misses_.load(); }
  std::size_t hits() const { return hits_.load(); }

 private:
  std::shared_ptr<Judge> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> hits_{0};
};

}  // namespace alignjudge
