#include "detailcap/qa/heuristic_qa.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "detailcap/gateway/errors.hpp"
#include "detailcap/text/text_util.hpp"

namespace detailcap::qa {

namespace {

bool iequals_prefix(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  return true;
}

std::string_view strip_list_marker(std::string_view line) {
  line = text::trim(line);
  if (!line.empty() && (line.front() == '-' || line.front() == '*' || line.front() == '+'))
    return text::trim(line.substr(1));
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) return text::trim(line.substr(i + 1));
  return line;
}

std::string_view after_stem(std::string_view instruction_text) {
  auto s = text::trim(instruction_text);
  if (!iequals_prefix(s, kInstructionStem)) return {};
  return text::trim(s.substr(kInstructionStem.size()));
}

}  // namespace

std::string_view to_string(InstructionKind kind) {
  return kind == InstructionKind::object ? "object" : "position";
}

std::size_t RaisedInstructions::total() const {
  std::size_t n = 0;
  for (const auto& s : per_sentence) n += s.size();
  return n;
}

std::size_t DetailSets::kept() const {
  auto count = [](const std::vector<DetailAnswer>& v) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](const auto& a) { return !a.excluded; }));
  };
  return count(object) + count(position);
}

std::size_t DetailSets::excluded() const { return object.size() + position.size() - kept(); }

std::string extract_target_object(std::string_view instruction_text) {
  auto rest = after_stem(instruction_text);
  for (std::string_view article : {"the ", "a ", "an "}) {
    if (iequals_prefix(rest, article)) {
      rest = text::trim(rest.substr(article.size()));
      break;
    }
  }
  return text::normalize_whitespace(text::strip_punct(rest));
}

std::vector<Instruction> parse_instruction_lines(std::string_view response, std::size_t sentence_index) {
  std::vector<Instruction> out;
  for (auto raw : text::split_lines(response)) {
    auto line = strip_list_marker(raw);
    if (!iequals_prefix(line, kInstructionStem)) continue;
    auto target = extract_target_object(line);
    if (target.empty()) continue;
    Instruction ins;
    ins.kind = InstructionKind::object;
    ins.text = text::normalize_whitespace(line);
    ins.target_object = std::move(target);
    ins.source_sentence = sentence_index;
    out.push_back(std::move(ins));
  }
  if (out.empty()) {
    throw ParseFailure("no line starting with \"" + std::string(kInstructionStem) + "\" in response for sentence " +
                       std::to_string(sentence_index));
  }
  return out;
}

RaisedInstructions raise_object_instructions(const gateway::Backend& text_backend,
                                             const rater::GoldenSentenceSet& golden,
                                             const text::PromptTemplate& t_ict) {
  t_ict.require({"sentence"}, "object instruction");
  RaisedInstructions raised;
  raised.per_sentence.resize(golden.size());

  std::vector<std::future<std::string>> responses;
  responses.reserve(golden.size());
  for (const auto& sentence : golden.sentences) {
    gateway::PromptParts prompt;
    prompt.user_text = t_ict.render({{"sentence", sentence}});
    prompt.task = gateway::task::kObjectInstructions;
    prompt.slots = {{"sentence", sentence}};
    responses.push_back(std::async(std::launch::async, [&text_backend, prompt = std::move(prompt)] {
      return text_backend.generate_text(prompt);
    }));
  }

  std::unordered_set<std::string> seen;
  std::vector<std::string> responses_text;
  responses_text.reserve(responses.size());
  // Drain every future before rethrowing.
  std::exception_ptr first_error;
  for (auto& f : responses) {
    try {
      responses_text.push_back(f.get());
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
      responses_text.emplace_back();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  for (std::size_t k = 0; k < responses_text.size(); ++k) {
    std::vector<Instruction> parsed;
    try {
      parsed = parse_instruction_lines(responses_text[k], k);
    } catch (const ParseFailure& e) {
      spdlog::warn("instruction generation: {}; sentence skipped", e.what());
      raised.parse_failures.push_back(k);
      continue;
    }
    for (auto& ins : parsed) {
      if (seen.insert(text::to_lower(ins.target_object)).second) raised.per_sentence[k].push_back(std::move(ins));
    }
  }
  return raised;
}

std::vector<Instruction> derive_position_instructions(std::span<const Instruction> object_instructions) {
  std::vector<Instruction> out;
  out.reserve(object_instructions.size());
  for (const auto& obj : object_instructions) {
    Instruction pos = obj;
    pos.kind = InstructionKind::position;
    auto trimmed = text::trim(obj.text);
    auto rest = after_stem(trimmed);
    const auto stem = trimmed.substr(0, kInstructionStem.size());
    pos.text = std::string(stem) + " " + std::string(kPositionPrefix) + " " + std::string(rest);
    out.push_back(std::move(pos));
  }
  return out;
}

InstructionsBySentence derive_position_instructions(const InstructionsBySentence& object_instructions) {
  InstructionsBySentence out;
  out.reserve(object_instructions.size());
  for (const auto& sentence : object_instructions) out.push_back(derive_position_instructions(sentence));
  return out;
}

std::vector<Instruction> schedule_instructions(const InstructionsBySentence& objects,
                                               const InstructionsBySentence& positions, Budget budget,
                                               InstructionMix mix) {
  if (positions.size() != objects.size())
    throw std::invalid_argument("schedule_instructions: position lists do not mirror object lists");
  for (std::size_t k = 0; k < objects.size(); ++k)
    if (positions[k].size() != objects[k].size())
      throw std::invalid_argument("schedule_instructions: position list " + std::to_string(k) +
                                  " does not mirror its object list");

  std::vector<Instruction> out;
  std::size_t rounds = 0;
  for (const auto& s : objects) rounds = std::max(rounds, s.size());
  for (std::size_t r = 0; r < rounds && out.size() < budget.n_max; ++r) {
    for (std::size_t k = 0; k < objects.size() && out.size() < budget.n_max; ++k) {
      if (r >= objects[k].size()) continue;
      if (mix != InstructionMix::position_only) out.push_back(objects[k][r]);
      if (out.size() < budget.n_max && mix != InstructionMix::object_only) out.push_back(positions[k][r]);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].ordinal = i;
  return out;
}

DetailSets collect_details(const gateway::Backend& vision, const gateway::ImageRef& image,
                           std::span<const Instruction> scheduled, const rater::ContrastiveRater& rater,
                           double tau_ans, const text::PromptTemplate& answer_template) {
  answer_template.require({"instruction"}, "answer");
  std::vector<std::future<DetailAnswer>> futures;
  futures.reserve(scheduled.size());
  for (const auto& ins : scheduled) {
    futures.push_back(std::async(std::launch::async, [&, ins] {
      DetailAnswer answer;
      answer.instruction = ins;
      try {
        const auto prompt = answer_template.render({{"instruction", ins.text}});
        answer.raw_text = vision.answer_visual_question(image, prompt);
        auto filtered = rater.filter_answer(vision, image, prompt, answer.raw_text, tau_ans);
        answer.filtered_text = std::move(filtered.text);
        answer.sentence_ratings = std::move(filtered.sentences);
        answer.excluded = filtered.excluded;
      } catch (const std::exception& e) {
        spdlog::warn("instruction {} ('{}') failed: {}", ins.ordinal, ins.text, e.what());
        answer.filtered_text.clear();
        answer.excluded = true;
        answer.error = e.what();
      }
      return answer;
    }));
  }
  DetailSets sets;
  for (auto& f : futures) {
    auto answer = f.get();
    (answer.instruction.kind == InstructionKind::object ? sets.object : sets.position).push_back(std::move(answer));
  }
  return sets;
}

}  // namespace detailcap::qa
