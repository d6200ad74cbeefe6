#include "alignjudge/judges.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "alignjudge/text_util.hpp"

namespace alignjudge {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 9> kCredentialKeys = {
    "api_key",  "apikey",   "api-key",      "x-api-key", "authorization",
    "password", "secret",   "access_token", "bearer"};

bool is_credential_key(std::string_view key) {
  const std::string lower = text::ascii_lower(key);
  return std::find(kCredentialKeys.begin(), kCredentialKeys.end(), lower) !=
         kCredentialKeys.end();
}

void reject_credentials(const json& node, const std::string& where) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) {
      if (is_credential_key(k)) {
        throw JudgeError(JudgeError::Kind::kConfig,
                         "credential-like key '" + k + "' in " + where +
                             "; name an environment variable in auth_env_var");
      }
      reject_credentials(v, where);
    }
  } else if (node.is_array()) {
    for (const auto& v : node) reject_credentials(v, where);
  }
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw JudgeError(JudgeError::Kind::kConfig,
                     std::string("bad value for '") + key + "': " + e.what());
  }
}

std::optional<double> get_optional(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return get_or<double>(doc, key, 0.0);
}

// Replaces placeholders inside string leaves and pins temperature.
void fill_request(json& node, std::string_view prompt, int max_tokens) {
  if (node.is_object()) {
    for (auto& [k, v] : node.items()) {
      if (k == "temperature") {
        v = JudgeConfig::kTemperature;
      } else {
        fill_request(v, prompt, max_tokens);
      }
    }
  } else if (node.is_array()) {
    for (auto& v : node) fill_request(v, prompt, max_tokens);
  } else if (node.is_string()) {
    const std::string s = node.get<std::string>();
    if (s == "{{max_tokens}}") {
      node = max_tokens;
    } else if (s == "{{temperature}}") {
      node = JudgeConfig::kTemperature;
    } else if (s.find("{{prompt}}") != std::string::npos) {
      std::string out;
      std::size_t pos = 0;
      for (std::size_t p = s.find("{{prompt}}"); p != std::string::npos;
           p = s.find("{{prompt}}", pos)) {
        out.append(s, pos, p - pos);
        out.append(prompt);
        pos = p + 10;
      }
      out.append(s, pos);
      node = out;
    }
  }
}

std::optional<std::int64_t> token_count_at(const json& reply,
                                           const std::string& path) {
  if (path.empty()) return std::nullopt;
  const json::json_pointer ptr(path);
  if (!reply.contains(ptr) || !reply.at(ptr).is_number_integer()) {
    return std::nullopt;
  }
  return reply.at(ptr).get<std::int64_t>();
}

bool retriable_status(int status) {
  return status == 0 || status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string_view to_string(JudgeError::Kind kind) {
  switch (kind) {
    case JudgeError::Kind::kTransport:
      return "transport";
    case JudgeError::Kind::kRejected:
      return "rejected";
    case JudgeError::Kind::kMissingCredential:
      return "missing_credential";
    case JudgeError::Kind::kMissingResponsePath:
      return "missing_response_path";
    case JudgeError::Kind::kMalformedResponse:
      return "malformed_response";
    case JudgeError::Kind::kConfig:
      return "config";
    case JudgeError::Kind::kUnsupportedPrompt:
      return "unsupported_prompt";
    case JudgeError::Kind::kNoFixture:
      return "no_fixture";
  }
  return "unknown";
}

JudgeConfig parse_judge_config(const json& doc) {
  if (!doc.is_object()) {
    throw JudgeError(JudgeError::Kind::kConfig, "judge config must be an object");
  }
  reject_credentials(doc, "judge config");
  JudgeConfig c;
  c.judge_id = get_or<std::string>(doc, "judge_id", "");
  if (c.judge_id.empty()) {
    throw JudgeError(JudgeError::Kind::kConfig, "judge_id is required");
  }
  c.kind = get_or<std::string>(doc, "kind", "http");
  if (c.kind != "http" && c.kind != "mock") {
    throw JudgeError(JudgeError::Kind::kConfig, "kind must be http or mock");
  }
  if (doc.contains("temperature") &&
      get_or<double>(doc, "temperature", 0.0) != JudgeConfig::kTemperature) {
    throw JudgeError(JudgeError::Kind::kConfig,
                     "temperature is fixed at 0 for reproducible verdicts");
  }
  c.endpoint = get_or<std::string>(doc, "endpoint", "");
  c.auth_env_var = get_or<std::string>(doc, "auth_env_var", "");
  c.auth_header = get_or<std::string>(doc, "auth_header", c.auth_header);
  c.auth_prefix = get_or<std::string>(doc, "auth_prefix", c.auth_prefix);
  c.extra_headers = get_or<std::map<std::string, std::string>>(
      doc, "extra_headers", {});
  c.request_template = doc.value("request_template", json::object());
  c.response_path = get_or<std::string>(doc, "response_path", c.response_path);
  c.input_tokens_path = get_or<std::string>(doc, "input_tokens_path", "");
  c.output_tokens_path = get_or<std::string>(doc, "output_tokens_path", "");
  c.max_tokens = get_or<int>(doc, "max_tokens", c.max_tokens);
  c.price_per_1k_input = get_optional(doc, "price_per_1k_input");
  c.price_per_1k_output = get_optional(doc, "price_per_1k_output");
  c.rate_limit_per_minute =
      get_or<double>(doc, "rate_limit_per_minute", c.rate_limit_per_minute);
  c.max_retries = get_or<int>(doc, "max_retries", c.max_retries);
  c.timeout = std::chrono::seconds(
      get_or<std::int64_t>(doc, "timeout_seconds", c.timeout.count()));
  c.backoff_initial = std::chrono::milliseconds(get_or<std::int64_t>(
      doc, "backoff_initial_ms", c.backoff_initial.count()));
  c.parallelism = get_or<int>(doc, "parallelism", c.parallelism);
  c.mock = doc.value("mock", json::object());

  if (c.max_retries < 0 || c.parallelism < 1 || c.rate_limit_per_minute < 0) {
    throw JudgeError(JudgeError::Kind::kConfig,
                     "max_retries >= 0, parallelism >= 1 and "
                     "rate_limit_per_minute >= 0 are required");
  }
  if (c.kind == "http") {
    if (c.endpoint.empty()) {
      throw JudgeError(JudgeError::Kind::kConfig, "http judge needs endpoint");
    }
    if (!c.request_template.is_object()) {
      throw JudgeError(JudgeError::Kind::kConfig,
                       "request_template must be a JSON object");
    }
    if (c.request_template.dump().find("{{prompt}}") == std::string::npos) {
      throw JudgeError(JudgeError::Kind::kConfig,
                       "request_template needs a {{prompt}} placeholder");
    }
    try {
      (void)json::json_pointer(c.response_path);
    } catch (const json::exception& e) {
      throw JudgeError(JudgeError::Kind::kConfig,
                       std::string("bad response_path: ") + e.what());
    }
  }
  return c;
}

JudgeConfig load_judge_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw JudgeError(JudgeError::Kind::kConfig,
                     "cannot open judge config " + path.string());
  }
  try {
    return parse_judge_config(json::parse(in));
  } catch (const json::parse_error& e) {
    throw JudgeError(JudgeError::Kind::kConfig,
                     "judge config is not valid JSON: " + std::string(e.what()));
  }
}

std::optional<double> cost_of(const RawJudgment& judgment,
                              const JudgeConfig& config) {
  if (!config.price_per_1k_input || !config.price_per_1k_output) {
    return std::nullopt;
  }
  return static_cast<double>(judgment.input_tokens) / 1000.0 *
             *config.price_per_1k_input +
         static_cast<double>(judgment.output_tokens) / 1000.0 *
             *config.price_per_1k_output;
}

RateLimiter::RateLimiter(double per_minute) {
  if (per_minute > 0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / per_minute));
  }
}

void RateLimiter::acquire() {
  if (interval_ == std::chrono::steady_clock::duration::zero()) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

HttpJudge::HttpJudge(JudgeConfig config,
                     std::unique_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      limiter_(config_.rate_limit_per_minute) {
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
}

std::string HttpJudge::render_request(std::string_view prompt) const {
  json body = config_.request_template;
  fill_request(body, prompt, config_.max_tokens);
  return body.dump();
}

RawJudgment HttpJudge::evaluate(const PromptBundle& bundle) {
  if (bundle.text.empty()) {
    throw JudgeError(JudgeError::Kind::kConfig, "empty prompt");
  }
  HttpTransport::Headers headers = {{"Content-Type", "application/json"}};
  for (const auto& [k, v] : config_.extra_headers) headers.emplace_back(k, v);
  if (!config_.auth_env_var.empty()) {
    const char* credential = std::getenv(config_.auth_env_var.c_str());
    if (credential == nullptr || *credential == '\0') {
      throw JudgeError(JudgeError::Kind::kMissingCredential,
                       "environment variable " + config_.auth_env_var +
                           " is not set");
    }
    headers.emplace_back(config_.auth_header,
                         config_.auth_prefix + std::string(credential));
  }
  const std::string body = render_request(bundle.text);

  HttpResponse response;
  const auto started = std::chrono::steady_clock::now();
  for (int attempt = 0;; ++attempt) {
    limiter_.acquire();
    response = transport_->post(config_.endpoint, headers, body, config_.timeout);
    if (response.status >= 200 && response.status < 300) break;
    const std::string detail =
        response.status == 0 ? response.error
                             : "HTTP " + std::to_string(response.status);
    if (!retriable_status(response.status)) {
      throw JudgeError(JudgeError::Kind::kRejected,
                       config_.judge_id + ": request rejected: " + detail);
    }
    if (attempt >= config_.max_retries) {
      throw JudgeError(JudgeError::Kind::kTransport,
                       config_.judge_id + ": giving up after " +
                           std::to_string(attempt + 1) + " attempts: " + detail);
    }
    sleeper_(config_.backoff_initial * (1LL << std::min(attempt, 20)));
  }
  const double latency =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();

  json reply;
  try {
    reply = json::parse(response.body);
  } catch (const json::parse_error& e) {
    throw JudgeError(JudgeError::Kind::kMalformedResponse,
                     config_.judge_id + ": reply is not JSON: " + e.what());
  }
  const json::json_pointer ptr(config_.response_path);
  if (!reply.contains(ptr) || !reply.at(ptr).is_string()) {
    throw JudgeError(JudgeError::Kind::kMissingResponsePath,
                     config_.judge_id + ": reply has no string at " +
                         config_.response_path);
  }
  RawJudgment out;
  out.text = reply.at(ptr).get<std::string>();
  out.input_tokens = token_count_at(reply, config_.input_tokens_path)
                         .value_or(static_cast<std::int64_t>(bundle.token_estimate));
  out.output_tokens =
      token_count_at(reply, config_.output_tokens_path)
          .value_or(static_cast<std::int64_t>(estimate_tokens(out.text)));
  out.latency_seconds = latency;
  return out;
}

ResponseCache::ResponseCache(std::filesystem::path file)
    : file_(std::move(file)) {
  if (file_.empty() || !std::filesystem::exists(file_)) return;
  std::ifstream in(file_);
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      const json rec = json::parse(line);
      CacheEntry e{rec.at("text").get<std::string>(),
                   rec.value("input_tokens", std::int64_t{0}),
                   rec.value("output_tokens", std::int64_t{0})};
      entries_.emplace(key(rec.at("judge_id").get<std::string>(),
                           rec.at("prompt_sha256").get<std::string>()),
                       std::move(e));
    } catch (const json::exception&) {
      ++skipped_;
    }
  }
}

std::string ResponseCache::key(std::string_view judge_id,
                               std::string_view hash) {
  std::string k(judge_id);
  k.push_back('\n');
  k.append(hash);
  return k;
}

std::optional<CacheEntry> ResponseCache::lookup(
    std::string_view judge_id, std::string_view prompt_hash) const {
  std::lock_guard lock(mu_);
  if (auto it = entries_.find(key(judge_id, prompt_hash)); it != entries_.end()) {
    return it->second;
  }
  return std::nullopt;
}

void ResponseCache::store(std::string_view judge_id,
                          std::string_view prompt_hash,
                          const CacheEntry& entry) {
  std::lock_guard lock(mu_);
  const auto [it, inserted] = entries_.emplace(key(judge_id, prompt_hash), entry);
  if (!inserted || file_.empty()) return;
  std::ofstream out(file_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to cache " + file_.string());
  const json rec = {{"judge_id", judge_id},
                    {"prompt_sha256", prompt_hash},
                    {"text", entry.text},
                    {"input_tokens", entry.input_tokens},
                    {"output_tokens", entry.output_tokens}};
  out << rec.dump() << '\n';
  out.flush();
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

RawJudgment CachingJudge::evaluate(const PromptBundle& bundle) {
  const std::string hash = sha256_hex(bundle.text);
  if (auto hit = cache_->lookup(inner_->id(), hash)) {
    ++hits_;
    return {hit->text, hit->input_tokens, hit->output_tokens, 0.0, true};
  }
  ++misses_;
  RawJudgment fresh = inner_->evaluate(bundle);
  cache_->store(inner_->id(), hash,
                {fresh.text, fresh.input_tokens, fresh.output_tokens});
  return fresh;
}

}  // namespace alignjudge
