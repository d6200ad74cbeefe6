#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <gtest/gtest.h>

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <thread>

#include "alignjudge/judges.hpp"
#include "alignjudge/mock_judges.hpp"
#include "alignjudge/segmentation.hpp"

namespace aj = alignjudge;
using aj::JudgeError;
using nlohmann::json;

namespace {

json http_config() {
  return {{"judge_id", "test-judge"},
          {"kind", "http"},
          {"endpoint", "http://127.0.0.1:1/v1/chat"},
          {"auth_env_var", "ALIGNJUDGE_TEST_KEY"},
          {"request_template",
           {{"model", "m"},
            {"temperature", 0},
            {"max_tokens", "{{max_tokens}}"},
            {"messages", json::array({{{"role", "user"}, {"content", "{{prompt}}"}}})}}},
          {"response_path", "/choices/0/message/content"},
          {"input_tokens_path", "/usage/prompt_tokens"},
          {"output_tokens_path", "/usage/completion_tokens"},
          {"price_per_1k_input", 0.03},
          {"price_per_1k_output", 0.06},
          {"max_retries", 3},
          {"backoff_initial_ms", 100}};
}

std::string reply(const std::string& text, int in = 120, int out = 7) {
  return json{{"choices", json::array({{{"message", {{"content", text}}}}})},
              {"usage", {{"prompt_tokens", in}, {"completion_tokens", out}}}}
      .dump();
}

aj::PromptBundle bundle(const std::string& text = "[Question] q") {
  aj::PromptBundle b;
  b.text = text;
  b.token_estimate = aj::estimate_tokens(text);
  return b;
}

struct Exchange {
  std::string url;
  aj::HttpTransport::Headers headers;
  std::string body;
};

class FakeTransport final : public aj::HttpTransport {
 public:
  FakeTransport(std::deque<aj::HttpResponse> script, std::vector<Exchange>* log)
      : script_(std::move(script)), log_(log) {}
  aj::HttpResponse post(const std::string& url, const Headers& headers, const std::string& body,
                        std::chrono::seconds) override {
    log_->push_back({url, headers, body});
    if (script_.empty()) return {0, "", "script exhausted"};
    auto r = script_.front();
    script_.pop_front();
    return r;
  }

 private:
  std::deque<aj::HttpResponse> script_;
  std::vector<Exchange>* log_;
};

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (value) {
      setenv(name, value, 1);
    } else {
      unsetenv(name);
    }
  }
  ~ScopedEnv() { unsetenv(name_); }

 private:
  const char* name_;
};

struct HttpFixture {
  std::vector<Exchange> log;
  std::vector<std::chrono::milliseconds> sleeps;

  aj::HttpJudge make(std::deque<aj::HttpResponse> script, json cfg = http_config()) {
    return aj::HttpJudge(aj::parse_judge_config(cfg),
                         std::make_unique<FakeTransport>(std::move(script), &log),
                         [this](std::chrono::milliseconds d) { sleeps.push_back(d); });
  }
};

std::filesystem::path temp_path(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("alignjudge_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST(Sha256, KnownVector) {
  EXPECT_EQ(aj::sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(JudgeConfig, ParsesDefaultsAndFields) {
  const auto c = aj::parse_judge_config(http_config());
  EXPECT_EQ(c.judge_id, "test-judge");
  EXPECT_EQ(c.auth_env_var, "ALIGNJUDGE_TEST_KEY");
  EXPECT_EQ(c.max_retries, 3);
  EXPECT_EQ(c.timeout, std::chrono::seconds(120));
  EXPECT_EQ(aj::JudgeConfig::kTemperature, 0.0);
  EXPECT_EQ(*c.price_per_1k_input, 0.03);
}

TEST(JudgeConfig, RejectsStoredCredentials) {
  for (const char* key : {"api_key", "Authorization", "password", "secret"}) {
    json cfg = http_config();
    cfg[key] = "sk-live-123";
    EXPECT_THROW(aj::parse_judge_config(cfg), JudgeError) << key;
  }
  json nested = http_config();
  nested["extra_headers"] = {{"x-api-key", "abc"}};
  EXPECT_THROW(aj::parse_judge_config(nested), JudgeError);
}

TEST(JudgeConfig, TemperatureIsPinned) {
  json cfg = http_config();
  cfg["temperature"] = 0.7;
  EXPECT_THROW(aj::parse_judge_config(cfg), JudgeError);
  cfg["temperature"] = 0;
  EXPECT_NO_THROW(aj::parse_judge_config(cfg));
}

TEST(JudgeConfig, HttpRequirements) {
  json no_endpoint = http_config();
  no_endpoint.erase("endpoint");
  EXPECT_THROW(aj::parse_judge_config(no_endpoint), JudgeError);
  json no_prompt = http_config();
  no_prompt["request_template"] = {{"model", "m"}};
  EXPECT_THROW(aj::parse_judge_config(no_prompt), JudgeError);
  EXPECT_THROW(aj::parse_judge_config(json{{"kind", "mock"}}), JudgeError);
  EXPECT_NO_THROW(aj::parse_judge_config(json{{"judge_id", "m"}, {"kind", "mock"}}));
}

TEST(CostOf, Arithmetic) {
  const auto c = aj::parse_judge_config(http_config());
  EXPECT_DOUBLE_EQ(*aj::cost_of({"", 0, 0, 0, false}, c), 0.0);
  EXPECT_NEAR(*aj::cost_of({"", 1000, 500, 0, false}, c), 0.06, 1e-12);
  json unpriced = http_config();
  unpriced.erase("price_per_1k_output");
  EXPECT_FALSE(aj::cost_of({"", 1000, 500, 0, false}, aj::parse_judge_config(unpriced)));
}

TEST(HttpJudge, SuccessfulCall) {
  ScopedEnv key("ALIGNJUDGE_TEST_KEY", "secret-value");
  HttpFixture fx;
  auto judge = fx.make({{200, reply("verdict [[A]]"), ""}});
  const auto out = judge.evaluate(bundle("line \"one\"\nline two"));
  EXPECT_EQ(out.text, "verdict [[A]]");
  EXPECT_EQ(out.input_tokens, 120);
  EXPECT_EQ(out.output_tokens, 7);
  EXPECT_FALSE(out.from_cache);
  ASSERT_EQ(fx.log.size(), 1u);
  const json sent = json::parse(fx.log[0].body);
  EXPECT_EQ(sent["messages"][0]["content"], "line \"one\"\nline two");
  EXPECT_EQ(sent["temperature"], 0);
  EXPECT_EQ(sent["max_tokens"], 1024);
  bool auth = false;
  for (const auto& [k, v] : fx.log[0].headers) auth |= k == "Authorization" && v == "Bearer secret-value";
  EXPECT_TRUE(auth);
}

TEST(HttpJudge, ForcesTemperatureZeroInTemplate) {
  json cfg = http_config();
  cfg["request_template"]["temperature"] = 1.0;
  cfg["request_template"]["options"] = {{"temperature", 0.5}};
  HttpFixture fx;
  ScopedEnv key("ALIGNJUDGE_TEST_KEY", "k");
  const json sent = json::parse(fx.make({}, cfg).render_request("p"));
  EXPECT_EQ(sent["temperature"], 0);
  EXPECT_EQ(sent["options"]["temperature"], 0);
}

TEST(HttpJudge, RetriesWithExponentialBackoff) {
  ScopedEnv key("ALIGNJUDGE_TEST_KEY", "k");
  HttpFixture fx;
  auto judge = fx.make({{500, "", ""}, {0, "", "connection refused"}, {429, "", ""},
                        {200, reply("[[B]]"), ""}});
  EXPECT_EQ(judge.evaluate(bundle()).text, "[[B]]");
  EXPECT_EQ(fx.log.size(), 4u);
  EXPECT_EQ(fx.sleeps, (std::vector<std::chrono::milliseconds>{
                           std::chrono::milliseconds(100), std::chrono::milliseconds(200),
                           std::chrono::milliseconds(400)}));
}

TEST(HttpJudge, TransportFailureAfterRetriesIsRetriable) {
  ScopedEnv key("ALIGNJUDGE_TEST_KEY", "k");
  HttpFixture fx;
  auto judge = fx.make({{503, "", ""}, {503, "", ""}, {503, "", ""}, {503, "", ""}, {503, "", ""}});
  try {
    judge.evaluate(bundle());
    FAIL() << "expected JudgeError";
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.kind(), JudgeError::Kind::kTransport);
    EXPECT_TRUE(e.retriable());
  }
  EXPECT_EQ(fx.log.size(), 4u);  // first try plus max_retries
}

TEST(HttpJudge, ClientErrorsAreNotRetried) {
  ScopedEnv key("ALIGNJUDGE_TEST_KEY", "k");
  HttpFixture fx;
  auto judge = fx.make({{401, "", ""}});
  try {
    judge.evaluate(bundle());
    FAIL() << "expected JudgeError";
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.kind(), JudgeError::Kind::kRejected);
    EXPECT_FALSE(e.retriable());
  }
  EXPECT_EQ(fx.log.size(), 1u);
}

TEST(HttpJudge, DistinctErrorKinds) {
  HttpFixture fx;
  {
    ScopedEnv key("ALIGNJUDGE_TEST_KEY", nullptr);
    auto judge = fx.make({{200, reply("x"), ""}});
    try {
      judge.evaluate(bundle());
      FAIL();
    } catch (const JudgeError& e) {
      EXPECT_EQ(e.kind(), JudgeError::Kind::kMissingCredential);
    }
    EXPECT_TRUE(fx.log.empty()) << "no request without a credential";
  }
  ScopedEnv key("ALIGNJUDGE_TEST_KEY", "k");
  auto missing_path = fx.make({{200, R"({"choices": []})", ""}});
  try {
    missing_path.evaluate(bundle());
    FAIL();
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.kind(), JudgeError::Kind::kMissingResponsePath);
  }
  auto not_json = fx.make({{200, "<html>", ""}});
  try {
    not_json.evaluate(bundle());
    FAIL();
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.kind(), JudgeError::Kind::kMalformedResponse);
  }
}

TEST(HttpJudge, TokenCountsFallBackToEstimates) {
  ScopedEnv key("ALIGNJUDGE_TEST_KEY", "k");
  HttpFixture fx;
  auto judge = fx.make({{200, json{{"choices", json::array({{{"message", {{"content", "a b c"}}}}})}}.dump(), ""}});
  const auto b = bundle("one two three four");
  const auto out = judge.evaluate(b);
  EXPECT_EQ(out.input_tokens, 4);
  EXPECT_EQ(out.output_tokens, 3);
}

TEST(HttpJudge, TalksToLocalServer) {
  httplib::Server server;
  std::string seen_auth;
  std::string seen_body;
  server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(reply("Final: [[C]]", 11, 3), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ScopedEnv key("ALIGNJUDGE_TEST_KEY", "local-token");
  json cfg = http_config();
  cfg["endpoint"] = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";
  cfg["timeout_seconds"] = 5;
  aj::HttpJudge judge(aj::parse_judge_config(cfg));
  const auto out = judge.evaluate(bundle("hello judge"));
  server.stop();
  worker.join();

  EXPECT_EQ(out.text, "Final: [[C]]");
  EXPECT_EQ(out.input_tokens, 11);
  EXPECT_EQ(seen_auth, "Bearer local-token");
  EXPECT_EQ(json::parse(seen_body)["messages"][0]["content"], "hello judge");
}

TEST(HttpJudge, UnreachableServerIsTransportError) {
  ScopedEnv key("ALIGNJUDGE_TEST_KEY", "k");
  json cfg = http_config();
  cfg["endpoint"] = "http://127.0.0.1:1/v1/chat";
  cfg["max_retries"] = 1;
  cfg["backoff_initial_ms"] = 1;
  cfg["timeout_seconds"] = 2;
  aj::HttpJudge judge(aj::parse_judge_config(cfg));
  try {
    judge.evaluate(bundle());
    FAIL();
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.kind(), JudgeError::Kind::kTransport);
  }
}

TEST(RateLimiter, SpacesRequests) {
  aj::RateLimiter limiter(1200.0);  // one slot every 50 ms
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) limiter.acquire();
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(145));
  aj::RateLimiter unlimited(0.0);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 100; ++i) unlimited.acquire();
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(50));
}

TEST(ResponseCache, PersistsAndFirstWriteWins) {
  const auto path = temp_path("cache.jsonl");
  {
    aj::ResponseCache cache(path);
    cache.store("j", "h1", {"[[A]]", 10, 2});
    cache.store("j", "h1", {"[[B]]", 10, 2});
    cache.store("k", "h1", {"[[C]]", 1, 1});
    EXPECT_EQ(cache.lookup("j", "h1")->text, "[[A]]");
    EXPECT_EQ(cache.size(), 2u);
  }
  {
    std::ofstream torn(path, std::ios::app);
    torn << "{\"judge_id\": \"j\", \"prompt_sha";
  }
  aj::ResponseCache reloaded(path);
  EXPECT_EQ(reloaded.size(), 2u);
  EXPECT_EQ(reloaded.skipped_lines(), 1u);
  EXPECT_EQ(reloaded.lookup("j", "h1")->text, "[[A]]");
  EXPECT_EQ(reloaded.lookup("k", "h1")->input_tokens, 1);
  EXPECT_FALSE(reloaded.lookup("j", "h2"));
  std::filesystem::remove(path);
}

TEST(CachingJudge, SecondCallIsServedFromCache) {
  aj::MockJudgeSpec spec;
  spec.kind = aj::MockKind::kAlwaysFirst;
  auto inner = std::make_shared<aj::MockJudge>(spec);
  auto cache = std::make_shared<aj::ResponseCache>();
  aj::CachingJudge judge(inner, cache);
  const auto prompt = aj::render_unsplit(aj::ComparisonForm::kRelation, "q", "a", "b");
  const auto first = judge.evaluate(prompt);
  const auto second = judge.evaluate(prompt);
  EXPECT_EQ(first.text, second.text);
  EXPECT_FALSE(first.from_cache);
  EXPECT_TRUE(second.from_cache);
  EXPECT_EQ(first.input_tokens, second.input_tokens);
  EXPECT_EQ(judge.hits(), 1u);
  EXPECT_EQ(judge.misses(), 1u);
}

TEST(MockJudge, ScriptedPlayback) {
  const auto prompt = aj::render_unsplit(aj::ComparisonForm::kRelation, "q", "a", "b");
  aj::MockJudgeSpec spec;
  spec.kind = aj::MockKind::kScripted;
  spec.fixtures[aj::sha256_hex(prompt.text)] = "[[A]]";
  aj::MockJudge judge(spec);
  EXPECT_EQ(judge.evaluate(prompt).text, "[[A]]");
  try {
    judge.evaluate(aj::render_unsplit(aj::ComparisonForm::kRelation, "q", "b", "a"));
    FAIL();
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.kind(), JudgeError::Kind::kNoFixture);
  }
}

TEST(MockJudge, AlwaysFirstRepliesPerForm) {
  aj::MockJudge judge(aj::MockJudgeSpec{});
  EXPECT_EQ(judge.evaluate(aj::render_unsplit(aj::ComparisonForm::kRelation, "q", "a", "b")).text, "[[A]]");
  EXPECT_EQ(judge.evaluate(aj::render_unsplit(aj::ComparisonForm::kScore, "q", "a", "b")).text, "9 7");
  EXPECT_EQ(judge.evaluate(aj::render_unsplit(aj::ComparisonForm::kLikert, "q", "a", "b")).text, "2");
}

TEST(MockJudge, QualityOracleIsPositionIndependent) {
  aj::MockJudgeSpec spec;
  spec.kind = aj::MockKind::kQualityOracle;
  spec.references["Name a fruit."] = "apple banana cherry";
  spec.references["Name a color."] = "red green";
  aj::MockJudge judge(spec);

  // {apple, banana} vs ref: 2/3; {apple, kiwi, lime} vs ref: 1/3.
  const auto fwd = aj::render_unsplit(aj::ComparisonForm::kRelation, "Name a fruit.",
                                      "Apple, banana.", "apple kiwi lime");
  const auto rev = aj::render_unsplit(aj::ComparisonForm::kRelation, "Name a fruit.",
                                      "apple kiwi lime", "Apple, banana.");
  const auto s = judge.score(fwd.text);
  EXPECT_NEAR(s.quality_a, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.quality_b, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(judge.evaluate(fwd).text, "[[A]]");
  EXPECT_EQ(judge.evaluate(rev).text, "[[B]]");

  // {red} vs ref: 1/2 and {green} vs ref: 1/2: a tie either way.
  const auto tie = aj::render_unsplit(aj::ComparisonForm::kRelation, "Name a color.", "Red.", "green");
  EXPECT_EQ(judge.evaluate(tie).text, "[[C]]");

  try {
    judge.evaluate(aj::render_unsplit(aj::ComparisonForm::kRelation, "Unknown?", "a", "b"));
    FAIL();
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.kind(), JudgeError::Kind::kConfig);
  }
}

// Expected values computed outside the library from the scoring rule:
// reference overlap plus the slot's share of sum (pos / len)^4 over prompt
// tokens, pos counted from 1.
TEST(MockJudge, RecencyFlipsUnsplitButNotInterleaved) {
  const std::string q = "How can I relax?";
  const std::string first = "Breathe deeply. Rest often. Walk outside.";
  const std::string second = "Breathe slowly. Rest more. Sleep more.";
  aj::MockJudgeSpec spec;
  spec.kind = aj::MockKind::kRecencyBiased;
  spec.references[q] = "Breathe deeply, rest often, and walk outside daily.";
  aj::MockJudge judge(spec);

  const auto fwd = aj::render_unsplit(aj::ComparisonForm::kRelation, q, first, second);
  const auto s0 = judge.score(fwd.text);
  EXPECT_NEAR(s0.quality_a, 0.75, 1e-12);
  EXPECT_NEAR(s0.quality_b, 0.25, 1e-12);
  EXPECT_NEAR(s0.position_share_a, 0.038995237321, 1e-9);
  EXPECT_NEAR(s0.position_share_b, 0.961004762679, 1e-9);
  EXPECT_EQ(judge.evaluate(fwd).text, "[[B]]");
  const auto rev = aj::render_unsplit(aj::ComparisonForm::kRelation, q, second, first,
                                      aj::SlotOrdering::kReversed);
  EXPECT_EQ(judge.evaluate(rev).text, "[[B]]");  // the other answer: inconsistent

  const aj::AnswerText a(first), b(second);
  const auto sa = aj::split_at(a, aj::detect_boundaries(a));
  const auto sb = aj::split_at(b, aj::detect_boundaries(b));
  ASSERT_EQ(sa.size(), 3u);
  const auto split_fwd = aj::render_split(aj::ComparisonForm::kRelation, q, sa, sb);
  const auto s3 = judge.score(split_fwd.text);
  EXPECT_NEAR(s3.position_share_a, 0.305450382802, 1e-9);
  EXPECT_NEAR(s3.position_share_b, 0.694549617198, 1e-9);
  EXPECT_EQ(judge.evaluate(split_fwd).text, "[[A]]");
  const auto split_rev = aj::render_split(aj::ComparisonForm::kRelation, q, sb, sa,
                                          aj::SlotOrdering::kReversed);
  EXPECT_EQ(judge.evaluate(split_rev).text, "[[B]]");  // same answer both ways
}

TEST(MockJudge, PrimacyFavorsSlotA) {
  aj::MockJudgeSpec spec;
  spec.kind = aj::MockKind::kPrimacyBiased;
  aj::MockJudge judge(spec);
  const auto p = aj::render_unsplit(aj::ComparisonForm::kRelation, "q", "same words", "same words");
  const auto s = judge.score(p.text);
  EXPECT_GT(s.position_share_a, s.position_share_b);
  EXPECT_EQ(judge.evaluate(p).text, "[[A]]");
}

TEST(MockJudge, DeterministicAndConfigurable) {
  const json doc = {{"type", "recency_biased"}, {"gamma", 2.0}, {"bias_strength", 0.5},
                    {"references", {{"q", "x y"}}}};
  aj::MockJudge judge(aj::parse_mock_spec("r", doc));
  EXPECT_EQ(judge.spec().gamma, 2.0);
  EXPECT_EQ(judge.spec().bias_strength, 0.5);
  const auto p = aj::render_unsplit(aj::ComparisonForm::kLikert, "q", "x y", "z");
  EXPECT_EQ(judge.evaluate(p).text, judge.evaluate(p).text);
  EXPECT_THROW(aj::parse_mock_spec("r", json{{"type", "telepathic"}}), JudgeError);
  try {
    judge.evaluate(bundle("not a judge prompt"));
    FAIL();
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.kind(), JudgeError::Kind::kUnsupportedPrompt);
  }
}
