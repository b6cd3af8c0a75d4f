#include "detailcap/pipeline/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>

#include "detailcap/gateway/errors.hpp"
#include "detailcap/text/text_util.hpp"

namespace detailcap::pipeline {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid configuration:";
  for (const auto& p : problems) out += "\n  " + p;
  return out;
}

class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  const json* object(const json& doc, const std::string& path, std::initializer_list<std::string_view> known) {
    if (!doc.is_object()) {
      problems_.push_back(path + ": expected an object");
      return nullptr;
    }
    for (const auto& [key, value] : doc.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end())
        problems_.push_back(prefix(path) + key + ": unknown key");
    }
    return &doc;
  }

  template <typename T>
  void get(const json& obj, const std::string& path, const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw std::invalid_argument("expected a string");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<std::int64_t>() >= 0))
          throw std::invalid_argument("expected a non-negative integer");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
      }
      out = it->template get<T>();
    } catch (const std::exception& e) {
      problems_.push_back(prefix(path) + key + ": " + e.what());
    }
  }

  void fail(std::string message) { problems_.push_back(std::move(message)); }

  static std::string prefix(const std::string& path) { return path.empty() ? "" : path + "."; }

 private:
  std::vector<std::string>& problems_;
};

gateway::BackendSpec parse_backend(Reader& r, const json& doc, const std::string& path) {
  gateway::BackendSpec spec;
  const auto* obj = r.object(doc, path,
                             {"kind", "base_url", "model_id", "api_key_env", "timeout_s", "max_retries", "seed",
                              "max_in_flight", "backoff_ms"});
  if (!obj) return spec;
  std::string kind = "mock";
  r.get(*obj, path, "kind", kind);
  if (kind == "mock") {
    spec.kind = gateway::BackendKind::mock;
  } else if (kind == "http") {
    spec.kind = gateway::BackendKind::http;
  } else {
    r.fail(path + ".kind: expected \"mock\" or \"http\", got \"" + kind + "\"");
  }
  r.get(*obj, path, "base_url", spec.base_url);
  r.get(*obj, path, "model_id", spec.model_id);
  r.get(*obj, path, "api_key_env", spec.api_key_env);
  r.get(*obj, path, "timeout_s", spec.timeout_s);
  r.get(*obj, path, "max_retries", spec.max_retries);
  r.get(*obj, path, "seed", spec.seed);
  r.get(*obj, path, "max_in_flight", spec.max_in_flight);
  r.get(*obj, path, "backoff_ms", spec.backoff_ms);
  return spec;
}

json backend_json(const gateway::BackendSpec& s) {
  json j;
  j["kind"] = s.kind == gateway::BackendKind::http ? "http" : "mock";
  if (s.kind == gateway::BackendKind::http) {
    j["base_url"] = s.base_url;
    j["model_id"] = s.model_id;
    if (!s.api_key_env.empty()) j["api_key_env"] = s.api_key_env;
  } else {
    j["seed"] = s.seed;
  }
  j["timeout_s"] = s.timeout_s;
  j["max_retries"] = s.max_retries;
  j["max_in_flight"] = s.max_in_flight;
  j["backoff_ms"] = s.backoff_ms;
  return j;
}

// Only the fields that decide what the backend returns.
json backend_identity(const gateway::BackendSpec& s) {
  if (s.kind == gateway::BackendKind::mock) return {{"kind", "mock"}, {"seed", s.seed}};
  return {{"kind", "http"}, {"base_url", s.base_url}, {"model_id", s.model_id}};
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

qa::InstructionMix parse_instruction_mix(std::string_view text) {
  if (text == "both") return qa::InstructionMix::both;
  if (text == "object") return qa::InstructionMix::object_only;
  if (text == "position") return qa::InstructionMix::position_only;
  throw std::invalid_argument("expected \"both\", \"object\" or \"position\", got \"" + std::string(text) + "\"");
}

std::string_view to_string(qa::InstructionMix mix) {
  switch (mix) {
    case qa::InstructionMix::object_only: return "object";
    case qa::InstructionMix::position_only: return "position";
    default: return "both";
  }
}

void PipelineConfig::validate() const {
  std::vector<std::string> problems;
  auto check_backend = [&](const gateway::BackendSpec& spec, const char* name) {
    try {
      spec.validate();
    } catch (const gateway::PreconditionViolation& e) {
      problems.push_back(std::string(name) + ": " + e.what());
    }
  };
  check_backend(vision_backend, "vision_backend");
  check_backend(text_backend, "text_backend");
  if (!(tau > -1.0 && tau < 1.0)) problems.push_back("tau: must lie in (-1, 1), got " + std::to_string(tau));
  if (!(tau_ans > -1.0 && tau_ans < 1.0))
    problems.push_back("tau_ans: must lie in (-1, 1), got " + std::to_string(tau_ans));
  if (concurrency_images < 1) problems.push_back("concurrency_images: must be >= 1");
  if (context_limit_tokens < 1) problems.push_back("context_limit_tokens: must be >= 1");
  if (text::trim(caption_instruction).empty()) problems.push_back("caption_instruction: must not be empty");
  for (const auto& [name, file] : prompt_paths) {
    if (std::find(std::begin(kPromptNames), std::end(kPromptNames), name) == std::end(kPromptNames))
      problems.push_back("prompt_paths." + name + ": unknown template name");
  }
  if (filter.min_short_edge < 0) problems.push_back("filter.min_short_edge: must be >= 0");
  if (!(filter.complexity_min <= filter.complexity_max))
    problems.push_back("filter: complexity_min must not exceed complexity_max");
  if (filter.complexity_hook && text::trim(*filter.complexity_hook).empty())
    problems.push_back("filter.complexity_hook: must not be empty when present");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

PipelineConfig parse_config(const json& doc, std::filesystem::path base_dir) {
  std::vector<std::string> problems;
  Reader r(problems);
  PipelineConfig config;
  config.base_dir = std::move(base_dir);

  const auto* root = r.object(doc, "",
                              {"vision_backend", "text_backend", "tau", "tau_ans", "budget_n", "concurrency_images",
                               "context_limit_tokens", "prompt_paths", "caption_instruction", "instruction_kinds",
                               "filter"});
  if (!root) throw ConfigError(std::move(problems));

  if (auto it = root->find("vision_backend"); it != root->end()) {
    config.vision_backend = parse_backend(r, *it, "vision_backend");
  } else {
    problems.push_back("vision_backend: required");
  }
  if (auto it = root->find("text_backend"); it != root->end()) {
    config.text_backend = parse_backend(r, *it, "text_backend");
  } else {
    problems.push_back("text_backend: required");
  }
  r.get(*root, "", "tau", config.tau);
  r.get(*root, "", "tau_ans", config.tau_ans);
  r.get(*root, "", "budget_n", config.budget_n);
  r.get(*root, "", "concurrency_images", config.concurrency_images);
  r.get(*root, "", "context_limit_tokens", config.context_limit_tokens);
  r.get(*root, "", "caption_instruction", config.caption_instruction);

  if (auto it = root->find("instruction_kinds"); it != root->end()) {
    if (!it->is_string()) {
      problems.push_back("instruction_kinds: expected a string");
    } else {
      try {
        config.instruction_kinds = parse_instruction_mix(it->get<std::string>());
      } catch (const std::invalid_argument& e) {
        problems.push_back(std::string("instruction_kinds: ") + e.what());
      }
    }
  }

  if (auto it = root->find("prompt_paths"); it != root->end()) {
    if (!it->is_object()) {
      problems.push_back("prompt_paths: expected an object");
    } else {
      for (const auto& [name, value] : it->items()) {
        if (!value.is_string()) {
          problems.push_back("prompt_paths." + name + ": expected a string");
          continue;
        }
        config.prompt_paths[name] = value.get<std::string>();
      }
    }
  }

  if (auto it = root->find("filter"); it != root->end()) {
    if (const auto* f =
            r.object(*it, "filter", {"min_short_edge", "complexity_min", "complexity_max", "complexity_hook"})) {
      r.get(*f, "filter", "min_short_edge", config.filter.min_short_edge);
      r.get(*f, "filter", "complexity_min", config.filter.complexity_min);
      r.get(*f, "filter", "complexity_max", config.filter.complexity_max);
      if (auto h = f->find("complexity_hook"); h != f->end() && !h->is_null()) {
        std::string hook;
        r.get(*f, "filter", "complexity_hook", hook);
        config.filter.complexity_hook = hook;
      }
    }
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open"});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return parse_config(doc, path.parent_path());
}

nlohmann::ordered_json to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["vision_backend"] = backend_json(c.vision_backend);
  j["text_backend"] = backend_json(c.text_backend);
  j["tau"] = c.tau;
  j["tau_ans"] = c.tau_ans;
  j["budget_n"] = c.budget_n;
  j["concurrency_images"] = c.concurrency_images;
  j["context_limit_tokens"] = c.context_limit_tokens;
  j["prompt_paths"] = c.prompt_paths;
  j["caption_instruction"] = c.caption_instruction;
  j["instruction_kinds"] = to_string(c.instruction_kinds);
  j["filter"] = {{"min_short_edge", c.filter.min_short_edge},
                 {"complexity_min", c.filter.complexity_min},
                 {"complexity_max", c.filter.complexity_max}};
  if (c.filter.complexity_hook) j["filter"]["complexity_hook"] = *c.filter.complexity_hook;
  return j;
}

PromptSet PromptSet::builtin() {
  return {text::PromptTemplate::builtin("object_instructions"), text::PromptTemplate::builtin("answer"),
          text::PromptTemplate::builtin("prism_answer"), integrate::IntegrationPrompts::builtin()};
}

const text::PromptTemplate& PromptSet::get(std::string_view name) const {
  if (name == "object_instructions") return object_instructions;
  if (name == "answer") return answer;
  if (name == "prism_answer") return prism_answer;
  if (name == "object_summary") return integration.t_object;
  if (name == "position_summary") return integration.t_position;
  if (name == "final_caption") return integration.t_final;
  throw std::out_of_range("unknown template name: " + std::string(name));
}

PromptSet load_prompts(const PipelineConfig& config) {
  auto prompts = PromptSet::builtin();
  std::vector<std::string> problems;
  for (const auto& [name, file] : config.prompt_paths) {
    auto path = std::filesystem::path(file);
    if (path.is_relative()) path = config.base_dir / path;
    try {
      auto tmpl = text::PromptTemplate::from_file(path.string());
      if (name == "object_instructions") prompts.object_instructions = std::move(tmpl);
      else if (name == "answer") prompts.answer = std::move(tmpl);
      else if (name == "prism_answer") prompts.prism_answer = std::move(tmpl);
      else if (name == "object_summary") prompts.integration.t_object = std::move(tmpl);
      else if (name == "position_summary") prompts.integration.t_position = std::move(tmpl);
      else if (name == "final_caption") prompts.integration.t_final = std::move(tmpl);
      else problems.push_back("prompt_paths." + name + ": unknown template name");
    } catch (const std::exception& e) {
      problems.push_back("prompt_paths." + name + ": " + e.what());
    }
  }
  auto require = [&](const text::PromptTemplate& t, const std::vector<std::string>& names, const char* name) {
    try {
      t.require(names, name);
    } catch (const std::exception& e) {
      problems.push_back(std::string("prompt_paths.") + name + ": " + e.what());
    }
  };
  require(prompts.object_instructions, {"sentence"}, "object_instructions");
  require(prompts.answer, {"instruction"}, "answer");
  require(prompts.prism_answer, {"caption", "question"}, "prism_answer");
  require(prompts.integration.t_object, {"golden", "details"}, "object_summary");
  require(prompts.integration.t_position, {"golden", "details"}, "position_summary");
  require(prompts.integration.t_final, {"golden", "c_o", "c_p"}, "final_caption");
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return prompts;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string config_hash(const PipelineConfig& c, const PromptSet& prompts) {
  json prompt_hashes = json::object();
  for (auto name : kPromptNames) prompt_hashes[std::string(name)] = sha256_hex(prompts.get(name).source());
  const json doc = {
      {"vision_backend", backend_identity(c.vision_backend)},
      {"text_backend", backend_identity(c.text_backend)},
      {"tau", c.tau},
      {"tau_ans", c.tau_ans},
      {"budget_n", c.budget_n},
      {"context_limit_tokens", c.context_limit_tokens},
      {"caption_instruction", c.caption_instruction},
      {"instruction_kinds", to_string(c.instruction_kinds)},
      {"prompts", prompt_hashes},
  };
  return sha256_hex(doc.dump());
}

}  // namespace detailcap::pipeline
