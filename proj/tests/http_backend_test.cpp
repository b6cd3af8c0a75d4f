#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "detailcap/gateway/errors.hpp"
#include "detailcap/gateway/http_backend.hpp"
#include "detailcap/gateway/image.hpp"
#include "detailcap/gateway/resilient_backend.hpp"
#include "test_support.hpp"

using namespace detailcap::gateway;
using nlohmann::json;
using testsupport::png_ref;

namespace {

// Splits text into pieces the way a BPE server might: whitespace attaches
// to the following word.
std::vector<std::size_t> piece_offsets(const std::string& text) {
  std::vector<std::size_t> offs;
  std::size_t i = 0;
  while (i < text.size()) {
    offs.push_back(i);
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  }
  return offs;
}

class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      chat_bodies.push_back(json::parse(req.body));
      auth_headers.push_back(req.get_header_value("Authorization"));
      if (fail_remaining > 0) {
        --fail_remaining;
        res.status = fail_status;
        return;
      }
      res.set_content(json{{"choices", {{{"message", {{"content", chat_reply}}}}}}}.dump(), "application/json");
    });
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      const auto body = json::parse(req.body);
      completion_bodies.push_back(body);
      if (!logprobs_supported) {
        res.set_content(json{{"choices", {{{"text", "x"}, {"logprobs", nullptr}}}}}.dump(), "application/json");
        return;
      }
      const auto prompt = body["prompt"].get<std::string>();
      json lps = json::array(), offs = json::array();
      const bool image = body.contains("multi_modal_data");
      for (auto off : piece_offsets(prompt)) {
        offs.push_back(off);
        if (off == 0) lps.push_back(nullptr);
        else lps.push_back(image ? -0.1 : -1.0);
      }
      offs.push_back(prompt.size());  // generated token
      lps.push_back(-0.5);
      res.set_content(json{{"choices", {{{"text", "!"}, {"logprobs", {{"token_logprobs", lps}, {"text_offset", offs}}}}}}}
                          .dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  BackendSpec spec() const {
    BackendSpec s;
    s.kind = BackendKind::http;
    s.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    s.model_id = "test-model";
    s.timeout_s = 5;
    s.max_retries = 2;
    s.backoff_ms = 1;
    return s;
  }

  std::mutex mutex_;
  std::vector<json> chat_bodies;
  std::vector<json> completion_bodies;
  std::vector<std::string> auth_headers;
  std::string chat_reply = "A cat on a mat.";
  int fail_remaining = 0;
  int fail_status = 429;
  bool logprobs_supported = true;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(HttpBackend, CaptionRequestCarriesImageAndInstruction) {
  FakeServer server;
  HttpBackend backend(server.spec());
  EXPECT_EQ(backend.generate_caption(png_ref("img-1"), "Describe this image in detail."), "A cat on a mat.");
  ASSERT_EQ(server.chat_bodies.size(), 1u);
  const auto& body = server.chat_bodies[0];
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["top_p"], 1.0);
  const auto& content = body["messages"][0]["content"];
  EXPECT_EQ(content[0]["type"], "image_url");
  EXPECT_TRUE(content[0]["image_url"]["url"].get<std::string>().starts_with("data:image/png;base64,"));
  EXPECT_EQ(content[1]["text"], "Describe this image in detail.");
}

TEST(HttpBackend, InstructionEchoedVerbatim) {
  FakeServer server;
  HttpBackend backend(server.spec());
  const std::string instruction = "Describe more details about the position of the red  car.";
  backend.answer_visual_question(png_ref("img-1"), instruction);
  EXPECT_EQ(server.chat_bodies.at(0)["messages"][0]["content"][1]["text"], instruction);
}

TEST(HttpBackend, TextRequestHasNoImageAndKeepsSystemText) {
  FakeServer server;
  HttpBackend backend(server.spec());
  PromptParts p;
  p.system_text = "Be brief.";
  p.user_text = "Summarize.";
  backend.generate_text(p);
  const auto& messages = server.chat_bodies.at(0)["messages"];
  ASSERT_EQ(messages.size(), 2u);
  EXPECT_EQ(messages[0]["role"], "system");
  EXPECT_EQ(messages[1]["content"], "Summarize.");
}

TEST(HttpBackend, ApiKeyComesFromNamedEnvironmentVariable) {
  FakeServer server;
  ::setenv("DETAILCAP_TEST_KEY", "secret-123", 1);
  auto spec = server.spec();
  spec.api_key_env = "DETAILCAP_TEST_KEY";
  HttpBackend backend(spec);
  PromptParts p;
  p.user_text = "hi";
  backend.generate_text(p);
  EXPECT_EQ(server.auth_headers.at(0), "Bearer secret-123");
  ::unsetenv("DETAILCAP_TEST_KEY");
}

TEST(HttpBackend, BlankReplyIsEmptyResponse) {
  FakeServer server;
  server.chat_reply = "   ";
  HttpBackend backend(server.spec());
  EXPECT_THROW(backend.generate_caption(png_ref("i"), "Describe."), EmptyResponse);
}

TEST(HttpBackend, ScoringRecoversContinuationTokens) {
  FakeServer server;
  HttpBackend backend(server.spec());
  PromptParts prefix;
  prefix.user_text = "Describe this image.";
  const auto without = backend.score_continuation(prefix, "A red car.");
  prefix.image = png_ref("img-1");
  const auto with = backend.score_continuation(prefix, "A red car.");

  EXPECT_EQ(with.tokens, without.tokens);
  std::string joined;
  for (const auto& t : with.tokens) joined += t;
  EXPECT_EQ(joined, "A red car.");
  for (std::size_t i = 0; i < with.probs.size(); ++i) {
    EXPECT_DOUBLE_EQ(with.probs[i], std::exp(-0.1));
    EXPECT_DOUBLE_EQ(without.probs[i], std::exp(-1.0));
  }
  const auto& body = server.completion_bodies.at(1);
  EXPECT_EQ(body["echo"], true);
  EXPECT_EQ(body["max_tokens"], 1);
  EXPECT_EQ(body["prompt"], "Describe this image.\nA red car.");
  EXPECT_TRUE(body["multi_modal_data"]["image"].get<std::string>().starts_with("data:image/png;base64,"));
  EXPECT_FALSE(server.completion_bodies.at(0).contains("multi_modal_data"));
}

TEST(HttpBackend, MissingLogprobsIsScoringUnsupportedWithHint) {
  FakeServer server;
  server.logprobs_supported = false;
  HttpBackend backend(server.spec());
  try {
    backend.check_scoring_support();
    FAIL() << "expected ScoringUnsupported";
  } catch (const ScoringUnsupported& e) {
    EXPECT_NE(std::string(e.what()).find("echo=true"), std::string::npos);
  }
}

TEST(HttpBackend, RateLimitRetriedThenSucceeds) {
  FakeServer server;
  server.fail_remaining = 2;
  const auto backend = make_backend(server.spec());
  PromptParts p;
  p.user_text = "hi";
  EXPECT_EQ(backend->generate_text(p), "A cat on a mat.");
  EXPECT_EQ(server.chat_bodies.size(), 3u);
}

TEST(HttpBackend, PersistentRateLimitBecomesUnreachable) {
  FakeServer server;
  server.fail_remaining = 100;
  const auto backend = make_backend(server.spec());
  EXPECT_THROW(backend->answer_visual_question(png_ref("i"), "Describe more details about the cat."),
               BackendUnreachable);
  EXPECT_EQ(server.chat_bodies.size(), 3u);  // 1 + max_retries
}

TEST(HttpBackend, ClientErrorIsNotRetried) {
  FakeServer server;
  server.fail_remaining = 100;
  server.fail_status = 400;
  const auto backend = make_backend(server.spec());
  PromptParts p;
  p.user_text = "hi";
  EXPECT_THROW(backend->generate_text(p), ProtocolError);
  EXPECT_EQ(server.chat_bodies.size(), 1u);
}

TEST(HttpBackend, UnreachableHostFailsAfterRetries) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  BackendSpec spec;
  spec.kind = BackendKind::http;
  spec.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  spec.model_id = "m";
  spec.timeout_s = 2;
  spec.max_retries = 2;
  spec.backoff_ms = 1;
  const auto backend = make_backend(spec);
  EXPECT_THROW(backend->generate_caption(png_ref("i"), "Describe."), BackendUnreachable);
}

TEST(WireFormat, ProbabilityConversionClamps) {
  EXPECT_EQ(wire::probability_from_logprob(0.0), 1.0);
  EXPECT_EQ(wire::probability_from_logprob(0.3), 1.0);
  EXPECT_GT(wire::probability_from_logprob(-10000.0), 0.0);
  EXPECT_DOUBLE_EQ(wire::probability_from_logprob(std::log(0.25)), 0.25);
}

TEST(WireFormat, TokenStraddlingPromptBoundaryIsTrimmed) {
  PromptParts prefix;
  prefix.user_text = "Q";
  const auto prompt = wire::scoring_prompt(prefix, "ab cd");
  ASSERT_EQ(prompt.text, "Q\nab cd");
  // Server token "\nab" starts before the continuation.
  const json response = {{"choices",
                          {{{"logprobs",
                             {{"token_logprobs", {nullptr, -0.5, -0.25, -1.0}}, {"text_offset", {0, 1, 4, 7}}}}}}}};
  const auto scored = wire::parse_scoring_response(response, prompt);
  EXPECT_EQ(scored.tokens, (std::vector<std::string>{"ab", " cd"}));
  EXPECT_DOUBLE_EQ(scored.probs[0], std::exp(-0.5));
}
