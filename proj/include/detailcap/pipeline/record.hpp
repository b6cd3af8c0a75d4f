#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "detailcap/qa/heuristic_qa.hpp"
#include "detailcap/rater/rater.hpp"

namespace detailcap::pipeline {

/// Stage names, in execution order.
inline constexpr std::string_view kStages[] = {"generate_caption",   "rate_caption", "raise_instructions",
                                               "collect_details",    "integrate",    "compose"};

struct CaptionRecord {
  std::string image_id;
  std::string image_ref;
  std::string initial_caption;
  std::vector<rater::RatedSentence> caption_sentences;
  rater::GoldenSentenceSet golden;
  std::vector<qa::Instruction> instructions;
  std::vector<qa::DetailAnswer> answers;  // object answers, then position answers
  std::string c_object;
  std::string c_position;
  std::string final_caption;
  std::map<std::string, std::int64_t> stage_timings;  // milliseconds
  std::string config_hash;
  std::string status = "ok";                          // "ok" or "failed:<stage>"
  std::optional<std::string> error;

  bool ok() const { return status == "ok"; }
};

/// A rating of -infinity (no critical token) is written as null.
nlohmann::ordered_json to_json(const rater::RatedSentence& sentence);
nlohmann::ordered_json to_json(const qa::Instruction& instruction);
nlohmann::ordered_json to_json(const qa::DetailAnswer& answer);
nlohmann::ordered_json to_json(const CaptionRecord& record);

/// Inverse of to_json(CaptionRecord); token-level data is not stored, so
/// RatedSentence::tokens and span come back empty. Throws
/// nlohmann::json::exception on a malformed document.
CaptionRecord record_from_json(const nlohmann::json& doc);

/// Single-line JSON, no trailing newline.
std::string serialize_record(const CaptionRecord& record);

}  // namespace detailcap::pipeline
