#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace detailcap::gateway {

enum class BackendKind { http, mock };

struct BackendSpec {
  BackendKind kind = BackendKind::mock;
  std::string base_url;     // http only, e.g. "http://localhost:8000/v1"
  std::string model_id;
  std::string api_key_env;  // name of the environment variable holding the key
  double timeout_s = 120.0;
  int max_retries = 3;
  std::uint64_t seed = 0;   // mock only
  int max_in_flight = 8;
  int backoff_ms = 250;     // first retry delay; doubles per attempt

  /// Throws PreconditionViolation when the kind-specific invariants fail.
  void validate() const;
};

enum class ImageSourceKind { path, url, inline_base64 };

struct ImageRef {
  ImageSourceKind kind = ImageSourceKind::path;
  std::string source;  // path, URL, or base64 payload (no data: prefix)
  std::string media_type;
  std::optional<int> width;
  std::optional<int> height;
  /// Caller-assigned identity (dataset id). Used in logs and by the mock.
  std::string id;

  static ImageRef from_path(std::string path, std::string id = {});
  static ImageRef from_url(std::string url, std::string id = {});
  static ImageRef from_base64(std::string payload, std::string media_type, std::string id = {});
  /// Accepts "http(s)://...", "data:<type>;base64,<payload>" or a file path.
  static ImageRef parse(const std::string& text, std::string id = {});

  /// Inverse of parse().
  std::string to_string() const;
};

/// One prompt: optional system text, user text and an optional image.
/// `task` and `slots` describe which template produced the prompt and with
/// which values; they are never sent over the wire.
struct PromptParts {
  std::optional<std::string> system_text;
  std::string user_text;
  std::optional<ImageRef> image;
  std::string task;
  std::map<std::string, std::string> slots;
};

/// Per-token probabilities of a supplied continuation under teacher forcing.
/// Concatenating `tokens` reproduces the continuation byte-for-byte.
struct ScoredContinuation {
  std::vector<std::string> tokens;
  std::vector<double> probs;
};

/// Prompt roles understood by the mock backend.
namespace task {
inline constexpr const char* kObjectInstructions = "object_instructions";
inline constexpr const char* kObjectSummary = "object_summary";
inline constexpr const char* kPositionSummary = "position_summary";
inline constexpr const char* kFinalCaption = "final_caption";
inline constexpr const char* kPrismAnswer = "prism_answer";
}  // namespace task

}  // namespace detailcap::gateway
