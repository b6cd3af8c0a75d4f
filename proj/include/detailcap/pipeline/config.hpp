#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "detailcap/gateway/types.hpp"
#include "detailcap/integrate/integrator.hpp"
#include "detailcap/qa/heuristic_qa.hpp"
#include "detailcap/text/prompt_template.hpp"

namespace detailcap::pipeline {

/// Invalid configuration. what() lists every problem, one per line, each
/// prefixed with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct FilterConfig {
  int min_short_edge = 600;
  double complexity_min = 0.4;
  double complexity_max = 0.8;
  /// Shell command; the quoted image path is appended as its last argument.
  std::optional<std::string> complexity_hook;
};

/// Template names accepted as keys of prompt_paths.
inline constexpr std::string_view kPromptNames[] = {"object_instructions", "answer",        "object_summary",
                                                    "position_summary",    "final_caption", "prism_answer"};

struct PipelineConfig {
  gateway::BackendSpec vision_backend;
  gateway::BackendSpec text_backend;
  double tau = 0.0;
  double tau_ans = 0.0;
  std::size_t budget_n = 20;
  std::size_t concurrency_images = 4;
  std::size_t context_limit_tokens = 16384;
  /// Template name -> file; relative paths resolve against base_dir.
  std::map<std::string, std::string> prompt_paths;
  std::string caption_instruction = "Describe this image in detail.";
  qa::InstructionMix instruction_kinds = qa::InstructionMix::both;
  FilterConfig filter;
  /// Directory of the config file; not a config key.
  std::filesystem::path base_dir;

  /// Throws ConfigError.
  void validate() const;
};

/// Strict parse: unknown keys and wrong types are errors, missing keys take
/// their defaults. Throws ConfigError.
PipelineConfig parse_config(const nlohmann::json& doc, std::filesystem::path base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const PipelineConfig& config);

qa::InstructionMix parse_instruction_mix(std::string_view text);
std::string_view to_string(qa::InstructionMix mix);

struct PromptSet {
  text::PromptTemplate object_instructions;
  text::PromptTemplate answer;
  text::PromptTemplate prism_answer;
  integrate::IntegrationPrompts integration;

  static PromptSet builtin();
  const text::PromptTemplate& get(std::string_view name) const;
};

/// Built-in templates overridden by config.prompt_paths; placeholders
/// checked. Throws ConfigError.
PromptSet load_prompts(const PipelineConfig& config);

std::string sha256_hex(std::string_view data);

/// SHA-256 over the settings that change record content: thresholds,
/// budget, instruction mix, context limit, caption instruction, backend
/// identities and the text of every template.
std::string config_hash(const PipelineConfig& config, const PromptSet& prompts);

}  // namespace detailcap::pipeline
