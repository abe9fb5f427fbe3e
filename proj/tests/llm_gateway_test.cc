#include "explplan/llm_gateway.h"

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "doctest.h"
#include "explplan/common.h"
#include "httplib.h"

using namespace explplan;
using std::chrono::milliseconds;

namespace {

// Loopback chat endpoint. Fails the first `fail_first` requests with
// `fail_status`, then answers with `reply`.
class FakeEndpoint {
 public:
  FakeEndpoint(int fail_first, int fail_status, std::string reply)
      : fail_first_(fail_first), fail_status_(fail_status), reply_(std::move(reply)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard<std::mutex> lock(mu_);
        bodies_.push_back(req.body);
        auth_.push_back(req.get_header_value("Authorization"));
        ids_.push_back(req.get_header_value("X-Request-Id"));
        content_types_.push_back(req.get_header_value("Content-Type"));
      }
      if (hits_++ < fail_first_) {
        res.status = fail_status_;
        res.set_content(R"({"error":"busy"})", "application/json");
        return;
      }
      res.set_content(reply_, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int hits() const { return hits_; }
  std::vector<std::string> bodies() {
    std::lock_guard<std::mutex> lock(mu_);
    return bodies_;
  }
  std::vector<std::string> auth() {
    std::lock_guard<std::mutex> lock(mu_);
    return auth_;
  }
  std::vector<std::string> ids() {
    std::lock_guard<std::mutex> lock(mu_);
    return ids_;
  }
  std::vector<std::string> content_types() {
    std::lock_guard<std::mutex> lock(mu_);
    return content_types_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  int fail_first_;
  int fail_status_;
  std::string reply_;
  std::mutex mu_;
  std::vector<std::string> bodies_, auth_, ids_, content_types_;
};

struct SleepLog {
  std::vector<milliseconds> delays;
  std::function<void(milliseconds)> fn() {
    return [this](milliseconds d) { delays.push_back(d); };
  }
};

LlmGateway stub_gateway(nlohmann::json responses, SleepLog* log = nullptr, LlmConfig config = {}) {
  return LlmGateway(config, std::make_shared<StubChatTransport>(std::move(responses)),
                    log ? log->fn() : [](milliseconds) {});
}

}  // namespace

TEST_CASE("http transport posts the chat body with headers") {
  FakeEndpoint endpoint(0, 200, completion_body("A short summary."));
  LlmConfig config;
  config.endpoint = endpoint.url();
  auto transport = std::make_shared<HttpChatTransport>(config.endpoint, "secret-key", milliseconds(5000));
  LlmGateway gateway(config, transport);
  CHECK(gateway.summarize_zero_shot("Bees visit flowers.") == "A short summary.");
  REQUIRE(endpoint.hits() == 1);
  const auto body = nlohmann::json::parse(endpoint.bodies()[0]);
  CHECK(body.at("model") == "gpt-4o-2024-05-13");
  CHECK(body.at("temperature") == 1.0);
  CHECK(body.at("top_p") == 1.0);
  CHECK(body.at("frequency_penalty") == 0.2);
  CHECK(body.at("presence_penalty") == 0.2);
  CHECK(body.at("max_tokens") == 1024);
  CHECK(body.at("messages").at(0).at("role") == "user");
  CHECK(endpoint.auth()[0] == "Bearer secret-key");
  CHECK(endpoint.ids()[0] == "req-0");
  CHECK(endpoint.content_types()[0] == "application/json");
}

TEST_CASE("http transport retries 503 then succeeds") {
  FakeEndpoint endpoint(2, 503, completion_body("ok"));
  LlmConfig config;
  config.endpoint = endpoint.url();
  SleepLog sleeps;
  LlmGateway gateway(config,
                     std::make_shared<HttpChatTransport>(config.endpoint, "", milliseconds(5000)),
                     sleeps.fn());
  CHECK(gateway.summarize_zero_shot("Doc.") == "ok");
  CHECK(endpoint.hits() == 3);
  CHECK(sleeps.delays == std::vector<milliseconds>{milliseconds(500), milliseconds(1000)});
  CHECK(endpoint.auth()[0].empty());
  // The same request id is reused across attempts.
  CHECK(endpoint.ids() == std::vector<std::string>{"req-0", "req-0", "req-0"});
}

TEST_CASE("http transport does not retry client errors") {
  FakeEndpoint endpoint(5, 400, completion_body("never"));
  LlmConfig config;
  config.endpoint = endpoint.url();
  SleepLog sleeps;
  LlmGateway gateway(config,
                     std::make_shared<HttpChatTransport>(config.endpoint, "", milliseconds(5000)),
                     sleeps.fn());
  try {
    gateway.summarize_zero_shot("Doc.");
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.http_status() == 400);
    CHECK(e.attempts() == 1);
  }
  CHECK(endpoint.hits() == 1);
  CHECK(sleeps.delays.empty());
}

TEST_CASE("unreachable endpoint is a transport failure retried to exhaustion") {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  LlmConfig config;
  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  config.retry.max_attempts = 3;
  SleepLog sleeps;
  LlmGateway gateway(config,
                     std::make_shared<HttpChatTransport>(config.endpoint, "", milliseconds(500)),
                     sleeps.fn());
  try {
    gateway.summarize_zero_shot("Doc.");
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.attempts() == 3);
    CHECK(e.http_status() == 0);
  }
  CHECK(sleeps.delays.size() == 2);
  CHECK_THROWS_AS(HttpChatTransport("ftp://host/x", "", milliseconds(1)), std::invalid_argument);
}

TEST_CASE("retry delays grow geometrically up to the cap") {
  RetryPolicy p;
  CHECK(p.delay_before(2) == milliseconds(500));
  CHECK(p.delay_before(3) == milliseconds(1000));
  CHECK(p.delay_before(4) == milliseconds(2000));
  CHECK(p.delay_before(6) == milliseconds(8000));
  CHECK(p.delay_before(9) == milliseconds(8000));
}

TEST_CASE("stub failures exercise the retry path") {
  SleepLog sleeps;
  auto gateway = stub_gateway({{"failures", {{"zero_shot", {{"status", 429}, {"times", 2}}}}},
                               {"zero_shot", "Fine."}},
                              &sleeps);
  CHECK(gateway.summarize_zero_shot("Doc.") == "Fine.");
  CHECK(sleeps.delays.size() == 2);

  auto down = stub_gateway({{"failures", {{"zero_shot", {{"status", 0}, {"times", 9}}}}}});
  CHECK_THROWS_AS(down.summarize_zero_shot("Doc."), GatewayError);
}

TEST_CASE("stub rules, replies and defaults") {
  auto stub = std::make_shared<StubChatTransport>(nlohmann::json{
      {"zero_shot", {{"rules", {{{"contains", "bees"}, {"reply", "About bees."}}}},
                     {"replies", {"First.", "Second."}}}},
      {"icl", {{"default", "Default."}}}});
  LlmGateway gateway(LlmConfig{}, stub, [](milliseconds) {});
  CHECK(gateway.summarize_zero_shot("Why bees dance.") == "About bees.");
  CHECK(gateway.summarize_zero_shot("Ants.") == "First.");
  CHECK(gateway.summarize_zero_shot("Ants.") == "Second.");
  CHECK(gateway.summarize_zero_shot("Ants.") == "First.");
  CHECK(gateway.summarize_icl("a", "b", "c") == "Default.");
  CHECK(stub->calls() == 5);
}

TEST_CASE("stub fallbacks are deterministic") {
  auto gateway = stub_gateway(nlohmann::json::object());
  const auto q = gateway.generate_question("Context.", "Bees dance to share where food is.");
  CHECK(q.text == "Why does it matter that bees dance to share where food is?");
  CHECK(!q.appended_question_mark);
  CHECK(gateway.summarize_zero_shot("One. Two. Three.") == "One. Two.");
  CHECK(gateway.generate_irrelevant_question().text == "What is the tallest mountain in South America?");
  CHECK(gateway.extract_pairs_llm("One. Two.").records.empty());
}

TEST_CASE("question replies without a question mark are normalized") {
  auto gateway = stub_gateway({{"question", "  What do bees eat\n"}});
  const auto q = gateway.generate_question("", "Bees eat nectar.");
  CHECK(q.text == "What do bees eat?");
  CHECK(q.appended_question_mark);
}

TEST_CASE("empty and malformed completions") {
  CHECK_THROWS_AS(stub_gateway({{"zero_shot", "   "}}).summarize_zero_shot("Doc."),
                  EmptyResponseError);

  struct Raw : ChatTransport {
    std::string body;
    HttpResult post(const ChatRequest&) override { return {200, body}; }
  };
  auto raw = std::make_shared<Raw>();
  LlmGateway gateway(LlmConfig{}, raw, [](milliseconds) {});
  raw->body = R"({"choices":[{"message":{"content":null}}]})";
  CHECK_THROWS_AS(gateway.summarize_zero_shot("Doc."), EmptyResponseError);
  raw->body = R"({"choices":[]})";
  CHECK_THROWS_AS(gateway.summarize_zero_shot("Doc."), GatewayError);
  raw->body = "not json";
  CHECK_THROWS_AS(gateway.summarize_zero_shot("Doc."), GatewayError);
}

TEST_CASE("argument checks") {
  auto gateway = stub_gateway(nlohmann::json::object());
  CHECK_THROWS_AS(gateway.generate_question("ctx", "  "), std::invalid_argument);
  CHECK_THROWS_AS(gateway.summarize_zero_shot(""), std::invalid_argument);
  CHECK_THROWS_AS(gateway.summarize_icl("", "b", "c"), std::invalid_argument);
  CHECK_THROWS_AS(gateway.summarize_with_plan("Doc.", Plan{}), std::invalid_argument);
  LlmConfig bad;
  bad.temperature = 2.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = LlmConfig{};
  bad.max_parallel_requests = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(LlmGateway(LlmConfig{}, nullptr), std::invalid_argument);
}

TEST_CASE("pair lists parse in json and prompt-style forms") {
  const auto json_form = parse_pair_list(
      R"(Here you go: [{"explanatory_sentence": "B.", "target_sentence": "A."}])");
  REQUIRE(json_form.size() == 1);
  CHECK(json_form[0].explanatory_sentence == "B.");
  CHECK(json_form[0].target_sentence == "A.");

  const auto loose = parse_pair_list(R"(```
[
  {
    explanatory_sentence: 'It's warm because of the sun.',
    target_sentence: 'The rock is warm.'
  },
  {
    Explanatory_Sentence: "Second one.",
    target_sentence: 'First one.'
  }
]
```)");
  REQUIRE(loose.size() == 2);
  CHECK(loose[0].explanatory_sentence == "It's warm because of the sun.");
  CHECK(loose[1].explanatory_sentence == "Second one.");
  CHECK(parse_pair_list("[]").empty());

  CHECK_THROWS_AS(parse_pair_list("no list here"), FormatError);
  CHECK_THROWS_AS(parse_pair_list("[{target_sentence: 'x'}]"), FormatError);
  try {
    parse_pair_list("[{oops");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.raw() == "[{oops");
  }
}

TEST_CASE("sentence alignment is exact first, then fuzzy above the threshold") {
  const std::vector<std::string> sentences = {"The rock is warm.", "It sat in the sun all day.",
                                              "Nobody noticed."};
  const auto exact = align_sentence(" The rock is warm. ", sentences);
  CHECK(exact.index == 0u);
  CHECK(exact.confidence == 1.0);
  const auto fuzzy = align_sentence("it sat in the sun all day", sentences);
  CHECK(fuzzy.index == 1u);
  CHECK(fuzzy.confidence < 1.0);
  CHECK(fuzzy.confidence >= kFuzzyAlignmentThreshold);
  CHECK(!align_sentence("Completely unrelated words here about galaxies.", sentences).index);
  CHECK(char_overlap("ABC", "abc") == 1.0);
  CHECK(char_overlap("", "abc") == 0.0);
}

TEST_CASE("llm extraction aligns and orders pairs") {
  const std::string doc = "The rock is warm. It sat in the sun all day. Nobody noticed.";
  auto gateway = stub_gateway(
      {{"extract",
        R"([{"explanatory_sentence": "It sat in the sun all day.", "target_sentence": "The rock is warm."},
            {"explanatory_sentence": "nobody noticed", "target_sentence": "The rock is warm."},
            {"explanatory_sentence": "Galaxies spin far away in space.", "target_sentence": "The rock is warm."}])"}});
  const auto extraction = gateway.extract_pairs_llm(doc);
  REQUIRE(extraction.records.size() == 3);
  CHECK(extraction.aligned == 2);
  CHECK(!extraction.records[0].fuzzy);
  CHECK(extraction.records[1].fuzzy);
  CHECK(!extraction.records[2].explanatory_index);
  const auto pairs = to_explanatory_pairs(extraction);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].explanatory == 1);
  CHECK(pairs[0].target == 0);
  CHECK(pairs[1].explanatory == 2);
  CHECK(pairs[1].appearance_position == 1);
  CHECK(!pairs[0].category);

  auto lost = stub_gateway(
      {{"extract", R"([{"explanatory_sentence": "Galaxies spin.", "target_sentence": "Quasars glow."}])"}});
  CHECK_THROWS_AS(lost.extract_pairs_llm(doc), AlignmentError);
  auto garbled = stub_gateway({{"extract", "I could not find any."}});
  CHECK_THROWS_AS(garbled.extract_pairs_llm(doc), FormatError);
}

TEST_CASE("admission control caps concurrent requests") {
  struct Slow : ChatTransport {
    std::atomic<int> active{0};
    std::atomic<int> peak{0};
    HttpResult post(const ChatRequest&) override {
      const int now = ++active;
      int seen = peak.load();
      while (now > seen && !peak.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(milliseconds(10));
      --active;
      return {200, completion_body("done")};
    }
  };
  auto slow = std::make_shared<Slow>();
  LlmConfig config;
  config.max_parallel_requests = 3;
  LlmGateway gateway(config, slow, [](milliseconds) {});
  std::vector<PromptRendering> prompts;
  for (int i = 0; i < 24; ++i) {
    prompts.push_back(render_prompt(PromptId::kZeroShot, {{"document", "Doc " + std::to_string(i)}}));
  }
  const auto results = gateway.complete_all(prompts);
  CHECK(results.size() == 24);
  for (const auto& r : results) CHECK(r == "done");
  CHECK(slow->peak.load() <= 3);
  CHECK(gateway.admission().peak_in_flight() <= 3);
  CHECK(gateway.admission().in_flight() == 0);
}

TEST_CASE("admission control spaces requests under a rate limit") {
  AdmissionControl control(4, 50.0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 5; ++i) auto permit = control.acquire();
  CHECK(std::chrono::steady_clock::now() - start >= milliseconds(75));
}
