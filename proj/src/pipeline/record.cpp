#include "detailcap/pipeline/record.hpp"

#include <cmath>

namespace detailcap::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

rater::RatedSentence sentence_from_json(const json& j) {
  rater::RatedSentence s;
  s.index = j.at("index").get<std::size_t>();
  s.text = j.at("text").get<std::string>();
  s.rating = j.at("rating").is_null() ? rater::kNoRating : j.at("rating").get<double>();
  s.critical_count = j.at("critical_count").get<std::size_t>();
  s.retained = j.at("retained").get<bool>();
  return s;
}

qa::Instruction instruction_from_json(const json& j) {
  qa::Instruction ins;
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "object" && kind != "position") throw std::invalid_argument("unknown instruction kind: " + kind);
  ins.kind = kind == "object" ? qa::InstructionKind::object : qa::InstructionKind::position;
  ins.text = j.at("text").get<std::string>();
  ins.target_object = j.at("target_object").get<std::string>();
  ins.source_sentence = j.at("source_sentence").get<std::size_t>();
  ins.ordinal = j.at("ordinal").get<std::size_t>();
  return ins;
}

}  // namespace

ordered_json to_json(const rater::RatedSentence& s) {
  ordered_json j;
  j["index"] = s.index;
  j["text"] = s.text;
  j["rating"] = std::isinf(s.rating) ? ordered_json(nullptr) : ordered_json(s.rating);
  j["critical_count"] = s.critical_count;
  j["retained"] = s.retained;
  return j;
}

ordered_json to_json(const qa::Instruction& ins) {
  ordered_json j;
  j["kind"] = qa::to_string(ins.kind);
  j["text"] = ins.text;
  j["target_object"] = ins.target_object;
  j["source_sentence"] = ins.source_sentence;
  j["ordinal"] = ins.ordinal;
  return j;
}

ordered_json to_json(const qa::DetailAnswer& a) {
  ordered_json j;
  j["instruction"] = to_json(a.instruction);
  j["raw_text"] = a.raw_text;
  j["filtered_text"] = a.filtered_text;
  j["sentence_ratings"] = ordered_json::array();
  for (const auto& s : a.sentence_ratings) j["sentence_ratings"].push_back(to_json(s));
  j["excluded"] = a.excluded;
  j["error"] = a.error ? ordered_json(*a.error) : ordered_json(nullptr);
  return j;
}

ordered_json to_json(const CaptionRecord& r) {
  ordered_json j;
  j["image_id"] = r.image_id;
  j["image_ref"] = r.image_ref;
  j["initial_caption"] = r.initial_caption;
  j["caption_sentences"] = ordered_json::array();
  for (const auto& s : r.caption_sentences) j["caption_sentences"].push_back(to_json(s));
  j["golden"] = {{"sentences", r.golden.sentences},
                 {"source_indices", r.golden.source_indices},
                 {"tau_used", r.golden.tau_used},
                 {"fallback_applied", r.golden.fallback_applied}};
  j["instructions"] = ordered_json::array();
  for (const auto& i : r.instructions) j["instructions"].push_back(to_json(i));
  j["answers"] = ordered_json::array();
  for (const auto& a : r.answers) j["answers"].push_back(to_json(a));
  j["c_object"] = r.c_object;
  j["c_position"] = r.c_position;
  j["final_caption"] = r.final_caption;
  j["stage_timings"] = ordered_json::object();
  for (auto stage : kStages) {
    auto it = r.stage_timings.find(std::string(stage));
    if (it != r.stage_timings.end()) j["stage_timings"][it->first] = it->second;
  }
  j["config_hash"] = r.config_hash;
  j["status"] = r.status;
  j["error"] = r.error ? ordered_json(*r.error) : ordered_json(nullptr);
  return j;
}

CaptionRecord record_from_json(const json& j) {
  CaptionRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  r.image_ref = j.at("image_ref").get<std::string>();
  r.initial_caption = j.at("initial_caption").get<std::string>();
  for (const auto& s : j.at("caption_sentences")) r.caption_sentences.push_back(sentence_from_json(s));
  const auto& g = j.at("golden");
  r.golden.sentences = g.at("sentences").get<std::vector<std::string>>();
  r.golden.source_indices = g.at("source_indices").get<std::vector<std::size_t>>();
  r.golden.tau_used = g.at("tau_used").get<double>();
  r.golden.fallback_applied = g.at("fallback_applied").get<bool>();
  for (const auto& i : j.at("instructions")) r.instructions.push_back(instruction_from_json(i));
  for (const auto& aj : j.at("answers")) {
    qa::DetailAnswer a;
    a.instruction = instruction_from_json(aj.at("instruction"));
    a.raw_text = aj.at("raw_text").get<std::string>();
    a.filtered_text = aj.at("filtered_text").get<std::string>();
    for (const auto& s : aj.at("sentence_ratings")) a.sentence_ratings.push_back(sentence_from_json(s));
    a.excluded = aj.at("excluded").get<bool>();
    if (!aj.at("error").is_null()) a.error = aj.at("error").get<std::string>();
    r.answers.push_back(std::move(a));
  }
  r.c_object = j.at("c_object").get<std::string>();
  r.c_position = j.at("c_position").get<std::string>();
  r.final_caption = j.at("final_caption").get<std::string>();
  r.stage_timings = j.at("stage_timings").get<std::map<std::string, std::int64_t>>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.status = j.at("status").get<std::string>();
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  return r;
}

std::string serialize_record(const CaptionRecord& record) {
  return to_json(record).dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace detailcap::pipeline
