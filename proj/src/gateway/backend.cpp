#include "detailcap/gateway/backend.hpp"

#include "detailcap/gateway/errors.hpp"
#include "detailcap/text/text_util.hpp"

namespace detailcap::gateway {

void BackendSpec::validate() const {
  if (kind == BackendKind::http) {
    if (base_url.empty()) throw PreconditionViolation("http backend requires base_url");
    if (model_id.empty()) throw PreconditionViolation("http backend requires model_id");
  }
  if (timeout_s <= 0) throw PreconditionViolation("backend timeout must be positive");
  if (max_retries < 0) throw PreconditionViolation("max_retries must be >= 0");
  if (max_in_flight < 1) throw PreconditionViolation("max_in_flight must be >= 1");
  if (backoff_ms < 0) throw PreconditionViolation("backoff_ms must be >= 0");
}

ImageRef ImageRef::from_path(std::string path, std::string id) {
  ImageRef r;
  r.kind = ImageSourceKind::path;
  r.source = std::move(path);
  r.id = std::move(id);
  return r;
}

ImageRef ImageRef::from_url(std::string url, std::string id) {
  ImageRef r;
  r.kind = ImageSourceKind::url;
  r.source = std::move(url);
  r.id = std::move(id);
  return r;
}

ImageRef ImageRef::from_base64(std::string payload, std::string media_type, std::string id) {
  ImageRef r;
  r.kind = ImageSourceKind::inline_base64;
  r.source = std::move(payload);
  r.media_type = std::move(media_type);
  r.id = std::move(id);
  return r;
}

ImageRef ImageRef::parse(const std::string& text, std::string id) {
  if (text.rfind("http://", 0) == 0 || text.rfind("https://", 0) == 0)
    return from_url(text, std::move(id));
  if (text.rfind("data:", 0) == 0) {
    auto comma = text.find(',');
    auto meta = text.substr(5, comma == std::string::npos ? std::string::npos : comma - 5);
    const std::string suffix = ";base64";
    if (comma == std::string::npos || meta.size() < suffix.size() ||
        meta.compare(meta.size() - suffix.size(), suffix.size(), suffix) != 0)
      throw PreconditionViolation("only base64 data URLs are supported");
    return from_base64(text.substr(comma + 1), meta.substr(0, meta.size() - suffix.size()), std::move(id));
  }
  if (text.empty()) throw PreconditionViolation("empty image reference");
  return from_path(text, std::move(id));
}

std::string ImageRef::to_string() const {
  if (kind == ImageSourceKind::inline_base64)
    return "data:" + (media_type.empty() ? std::string("application/octet-stream") : media_type) +
           ";base64," + source;
  return source;
}

namespace {

void require_instruction(std::string_view instruction) {
  if (text::trim(instruction).empty()) throw PreconditionViolation("instruction must be non-empty");
}

std::string require_text(std::string out, std::string_view what) {
  if (text::trim(out).empty()) throw EmptyResponse(std::string(what) + " returned empty text");
  return out;
}

}  // namespace

std::string Backend::generate_caption(const ImageRef& image, std::string_view instruction) const {
  require_instruction(instruction);
  return require_text(do_generate_caption(image, instruction), name() + " caption");
}

std::string Backend::answer_visual_question(const ImageRef& image, std::string_view instruction) const {
  require_instruction(instruction);
  return require_text(do_answer_visual_question(image, instruction), name() + " answer");
}

ScoredContinuation Backend::score_continuation(const PromptParts& prefix,
                                               std::string_view continuation) const {
  if (text::trim(prefix.user_text).empty()) throw PreconditionViolation("prompt user_text must be non-empty");
  if (continuation.empty()) return {};
  auto scored = do_score_continuation(prefix, continuation);
  if (scored.tokens.size() != scored.probs.size())
    throw ProtocolError(name() + ": token and probability counts differ");
  std::string joined;
  for (const auto& t : scored.tokens) joined += t;
  if (joined != continuation)
    throw ProtocolError(name() + ": scored tokens do not reproduce the continuation");
  for (double p : scored.probs)
    if (!(p > 0.0 && p <= 1.0)) throw ProtocolError(name() + ": probability outside (0, 1]");
  return scored;
}

std::string Backend::generate_text(const PromptParts& prompt) const {
  if (prompt.image) throw PreconditionViolation("generate_text is text-only; prompt carries an image");
  if (text::trim(prompt.user_text).empty()) throw PreconditionViolation("prompt user_text must be non-empty");
  return require_text(do_generate_text(prompt), name() + " text");
}

}  // namespace detailcap::gateway
