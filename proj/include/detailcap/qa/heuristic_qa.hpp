#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "detailcap/gateway/backend.hpp"
#include "detailcap/rater/rater.hpp"
#include "detailcap/text/prompt_template.hpp"

namespace detailcap::qa {

/// Fixed stem every generated instruction starts with.
inline constexpr std::string_view kInstructionStem = "Describe more details about";
inline constexpr std::string_view kPositionPrefix = "the position of";

class ParseFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InstructionKind { object, position };

std::string_view to_string(InstructionKind kind);

struct Instruction {
  InstructionKind kind = InstructionKind::object;
  std::string text;
  std::string target_object;
  std::size_t source_sentence = 0;  // index into the golden set
  std::size_t ordinal = 0;          // position in the schedule

  bool operator==(const Instruction&) const = default;
};

struct DetailAnswer {
  Instruction instruction;
  std::string raw_text;
  std::string filtered_text;
  std::vector<rater::RatedSentence> sentence_ratings;
  bool excluded = false;
  std::optional<std::string> error;
};

struct Budget {
  std::size_t n_max = 20;
};

/// Which instruction kinds the schedule draws from.
enum class InstructionMix { both, object_only, position_only };

/// Object instructions grouped by golden sentence.
using InstructionsBySentence = std::vector<std::vector<Instruction>>;

struct RaisedInstructions {
  InstructionsBySentence per_sentence;
  /// Golden sentences whose response held no well-formed instruction.
  std::vector<std::size_t> parse_failures;

  std::size_t total() const;
};

/// Parses one model response. Lines are trimmed and stripped of list
/// markers ("-", "*", "1." ...); lines starting with the stem
/// (case-insensitive) become object instructions. Throws ParseFailure when
/// no line qualifies.
std::vector<Instruction> parse_instruction_lines(std::string_view response, std::size_t sentence_index);

/// Target object of an instruction: text after the stem, minus a leading
/// article and trailing punctuation.
std::string extract_target_object(std::string_view instruction_text);

/// One text-model call per golden sentence (issued concurrently), then
/// line parsing and case-folded deduplication of targets across sentences,
/// first occurrence wins. Sentences that fail to parse are logged, recorded
/// in parse_failures and contribute nothing.
RaisedInstructions raise_object_instructions(const gateway::Backend& text_backend,
                                             const rater::GoldenSentenceSet& golden,
                                             const text::PromptTemplate& t_ict);

/// Position counterpart of each object instruction, in the same order:
/// "Describe more details about the X" -> "... about the position of the X".
std::vector<Instruction> derive_position_instructions(std::span<const Instruction> object_instructions);
InstructionsBySentence derive_position_instructions(const InstructionsBySentence& object_instructions);

/// Round-robin over sentences; each object contributes its object
/// instruction immediately followed by its position instruction; truncated at
/// budget.n_max; ordinals renumbered 0..n-1. `positions` must mirror
/// `objects` element for element.
std::vector<Instruction> schedule_instructions(const InstructionsBySentence& objects,
                                               const InstructionsBySentence& positions, Budget budget,
                                               InstructionMix mix = InstructionMix::both);

struct DetailSets {
  std::vector<DetailAnswer> object;    // D_o, schedule order
  std::vector<DetailAnswer> position;  // D_p, schedule order

  std::size_t kept() const;
  std::size_t excluded() const;
};

/// Asks the vision backend every scheduled instruction (concurrently, bounded
/// by the backend) and filters each answer with the rater at tau_ans. A
/// failed call yields an excluded answer carrying the error; the rest of the
/// batch continues. Results keep schedule order.
DetailSets collect_details(const gateway::Backend& vision, const gateway::ImageRef& image,
                           std::span<const Instruction> scheduled, const rater::ContrastiveRater& rater,
                           double tau_ans, const text::PromptTemplate& answer_template);

}  // namespace detailcap::qa
