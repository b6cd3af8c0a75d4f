#include <httplib.h>

#include "detailcap/gateway/http_backend.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

#include <spdlog/spdlog.h>

#include "detailcap/gateway/errors.hpp"
#include "detailcap/text/text_util.hpp"
#include "http_fetch.hpp"

namespace detailcap::gateway {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // "" or "/v1"
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw PreconditionViolation("URL without scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  auto path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

std::unique_ptr<httplib::Client> make_client(const std::string& origin, double timeout_s) {
  auto client = std::make_unique<httplib::Client>(origin);
  const auto secs = static_cast<time_t>(timeout_s);
  const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
  client->set_connection_timeout(secs, usecs);
  client->set_read_timeout(secs, usecs);
  client->set_write_timeout(secs, usecs);
  return client;
}

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

namespace detail {

std::vector<std::uint8_t> http_get(const std::string& url, double timeout_s) {
  auto parts = split_url(url);
  auto client = make_client(parts.origin, timeout_s);
  client->set_follow_location(true);
  auto res = client->Get(parts.path.empty() ? "/" : parts.path);
  if (!res) throw BackendUnreachable("GET " + url + ": " + httplib::to_string(res.error()));
  if (transient_status(res->status))
    throw BackendUnreachable("GET " + url + ": HTTP " + std::to_string(res->status));
  if (res->status < 200 || res->status >= 300)
    throw ImageDecodeError("GET " + url + ": HTTP " + std::to_string(res->status));
  return {res->body.begin(), res->body.end()};
}

}  // namespace detail

namespace wire {

json chat_request(const std::string& model, const PromptParts& prompt, const std::optional<LoadedImage>& image) {
  json messages = json::array();
  if (prompt.system_text) messages.push_back({{"role", "system"}, {"content", *prompt.system_text}});
  json user = {{"role", "user"}};
  if (image) {
    user["content"] = json::array({
        {{"type", "image_url"}, {"image_url", {{"url", data_url(*image)}}}},
        {{"type", "text"}, {"text", prompt.user_text}},
    });
  } else {
    user["content"] = prompt.user_text;
  }
  messages.push_back(std::move(user));
  return {{"model", model}, {"messages", std::move(messages)}, {"temperature", 0.0}, {"top_p", 1.0}};
}

std::string parse_chat_response(const json& response) {
  const json* content = nullptr;
  if (response.contains("choices") && response["choices"].is_array() && !response["choices"].empty()) {
    const auto& choice = response["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content"))
      content = &choice["message"]["content"];
  }
  if (!content) throw ProtocolError("chat response lacks choices[0].message.content");
  if (content->is_null()) throw EmptyResponse("chat response content is null");
  if (!content->is_string()) throw ProtocolError("chat response content is not a string");
  auto text = content->get<std::string>();
  if (text::trim(text).empty()) throw EmptyResponse("chat response content is empty");
  return text;
}

ScoringPrompt scoring_prompt(const PromptParts& prefix, std::string_view continuation) {
  std::string text;
  if (prefix.system_text) text += *prefix.system_text + "\n\n";
  text += prefix.user_text;
  text += "\n";
  ScoringPrompt p{std::move(text), 0};
  p.continuation_offset = p.text.size();
  p.text.append(continuation);
  return p;
}

json scoring_request(const std::string& model, const ScoringPrompt& prompt, const std::optional<LoadedImage>& image) {
  json body = {{"model", model}, {"prompt", prompt.text}, {"echo", true},
               {"logprobs", 0},  {"max_tokens", 1},      {"temperature", 0.0}};
  if (image) body["multi_modal_data"] = {{"image", data_url(*image)}};
  return body;
}

double probability_from_logprob(double logprob) {
  if (std::isnan(logprob)) throw ProtocolError("NaN log-probability");
  double p = std::exp(std::min(logprob, 0.0));
  return p > 0.0 ? p : std::numeric_limits<double>::min();
}

ScoredContinuation parse_scoring_response(const json& response, const ScoringPrompt& prompt) {
  const char* hint =
      " (the scoring backend must expose POST /completions with echo=true and logprobs, "
      "e.g. a vLLM or llama.cpp server; hosted chat-only APIs cannot score supplied text)";
  if (!response.contains("choices") || !response["choices"].is_array() || response["choices"].empty())
    throw ProtocolError("completions response lacks choices");
  const auto& choice = response["choices"][0];
  if (!choice.contains("logprobs") || !choice["logprobs"].is_object())
    throw ScoringUnsupported(std::string("completions response carries no logprobs") + hint);
  const auto& lp = choice["logprobs"];
  if (!lp.contains("token_logprobs") || !lp.contains("text_offset") || !lp["token_logprobs"].is_array() ||
      !lp["text_offset"].is_array())
    throw ScoringUnsupported(std::string("logprobs lack token_logprobs/text_offset") + hint);
  const auto& lps = lp["token_logprobs"];
  const auto& offs = lp["text_offset"];
  if (lps.size() != offs.size()) throw ProtocolError("token_logprobs and text_offset lengths differ");

  const std::size_t cont = prompt.continuation_offset;
  const std::size_t end = prompt.text.size();
  ScoredContinuation out;
  for (std::size_t i = 0; i < offs.size(); ++i) {
    const auto off = offs[i].get<std::size_t>();
    if (off >= end) break;
    std::size_t next = i + 1 < offs.size() ? std::min(offs[i + 1].get<std::size_t>(), end) : end;
    if (next < off) throw ProtocolError("text_offset is not monotone");
    if (next <= cont) continue;
    const std::size_t b = std::max(off, cont);
    if (lps[i].is_null())
      throw ScoringUnsupported(std::string("server returned no log-probability for a continuation token") + hint);
    out.tokens.push_back(prompt.text.substr(b, next - b));
    out.probs.push_back(probability_from_logprob(lps[i].get<double>()));
  }
  return out;
}

}  // namespace wire

HttpBackend::HttpBackend(BackendSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (!spec_.api_key_env.empty()) {
    if (const char* key = std::getenv(spec_.api_key_env.c_str()))
      api_key_ = key;
    else
      spdlog::warn("environment variable {} is not set; sending requests without an API key", spec_.api_key_env);
  }
}

json HttpBackend::post(const std::string& endpoint, const json& body) const {
  auto parts = split_url(spec_.base_url);
  auto client = make_client(parts.origin, spec_.timeout_s);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client->Post(parts.path + endpoint, headers, body.dump(), "application/json");
  const auto where = "POST " + spec_.base_url + endpoint;
  if (!res) throw BackendUnreachable(where + ": " + httplib::to_string(res.error()));
  if (transient_status(res->status))
    throw BackendUnreachable(where + ": HTTP " + std::to_string(res->status));
  if (res->status < 200 || res->status >= 300)
    throw ProtocolError(where + ": HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 512));
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(where + ": response is not JSON: " + e.what());
  }
}

std::string HttpBackend::chat(const PromptParts& prompt) const {
  std::optional<LoadedImage> image;
  if (prompt.image) image = load_image(*prompt.image, spec_.timeout_s);
  return wire::parse_chat_response(post("/chat/completions", wire::chat_request(spec_.model_id, prompt, image)));
}

std::string HttpBackend::do_generate_caption(const ImageRef& image, std::string_view instruction) const {
  PromptParts p;
  p.user_text = std::string(instruction);
  p.image = image;
  return chat(p);
}

std::string HttpBackend::do_answer_visual_question(const ImageRef& image, std::string_view instruction) const {
  PromptParts p;
  p.user_text = std::string(instruction);
  p.image = image;
  return chat(p);
}

std::string HttpBackend::do_generate_text(const PromptParts& prompt) const { return chat(prompt); }

ScoredContinuation HttpBackend::do_score_continuation(const PromptParts& prefix,
                                                      std::string_view continuation) const {
  std::optional<LoadedImage> image;
  if (prefix.image) image = load_image(*prefix.image, spec_.timeout_s);
  auto prompt = wire::scoring_prompt(prefix, continuation);
  try {
    return wire::parse_scoring_response(post("/completions", wire::scoring_request(spec_.model_id, prompt, image)),
                                        prompt);
  } catch (const ProtocolError& e) {
    throw ScoringUnsupported(std::string("scoring request rejected: ") + e.what());
  }
}

void HttpBackend::check_scoring_support() const {
  PromptParts probe;
  probe.user_text = "Say ok.";
  auto scored = score_continuation(probe, "ok");
  if (scored.tokens.empty()) throw ScoringUnsupported("scoring probe returned no continuation tokens");
}

}  // namespace detailcap::gateway
