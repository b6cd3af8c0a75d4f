#include <gtest/gtest.h>

#include "detailcap/pipeline/config.hpp"
#include "test_support.hpp"

using namespace detailcap;
using namespace detailcap::pipeline;
using nlohmann::json;

namespace {

json minimal() {
  return json{{"vision_backend", {{"kind", "mock"}, {"seed", 7}}}, {"text_backend", {{"kind", "mock"}, {"seed", 7}}}};
}

std::string problems_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsApplyToMissingKeys) {
  const auto c = parse_config(minimal());
  EXPECT_EQ(c.tau, 0.0);
  EXPECT_EQ(c.tau_ans, 0.0);
  EXPECT_EQ(c.budget_n, 20u);
  EXPECT_EQ(c.concurrency_images, 4u);
  EXPECT_EQ(c.context_limit_tokens, 16384u);
  EXPECT_EQ(c.instruction_kinds, qa::InstructionMix::both);
  EXPECT_EQ(c.filter.min_short_edge, 600);
  EXPECT_EQ(c.filter.complexity_min, 0.4);
  EXPECT_EQ(c.filter.complexity_max, 0.8);
  EXPECT_FALSE(c.filter.complexity_hook);
  EXPECT_EQ(c.vision_backend.seed, 7u);
}

TEST(Config, TauOutsideOpenIntervalRejected) {
  auto doc = minimal();
  doc["tau"] = 1.5;
  EXPECT_NE(problems_of(doc).find("tau: must lie in (-1, 1)"), std::string::npos);
  doc["tau"] = -1.0;
  EXPECT_NE(problems_of(doc).find("tau:"), std::string::npos);
  doc["tau"] = 0.99;
  EXPECT_EQ(problems_of(doc), "");
}

TEST(Config, UnknownKeyNamesThePath) {
  auto doc = minimal();
  doc["taus"] = 0.1;
  doc["text_backend"]["modle_id"] = "x";
  const auto what = problems_of(doc);
  EXPECT_NE(what.find("taus"), std::string::npos);
  EXPECT_NE(what.find("text_backend.modle_id"), std::string::npos);
}

TEST(Config, ApiKeyValuesAreNotAcceptedInline) {
  auto doc = minimal();
  doc["vision_backend"]["api_key"] = "sk-123";
  EXPECT_NE(problems_of(doc).find("vision_backend.api_key"), std::string::npos);
}

TEST(Config, WrongTypesReported) {
  auto doc = minimal();
  doc["budget_n"] = "twenty";
  doc["filter"] = {{"min_short_edge", 1.5}};
  const auto what = problems_of(doc);
  EXPECT_NE(what.find("budget_n"), std::string::npos);
  EXPECT_NE(what.find("filter.min_short_edge"), std::string::npos);
}

TEST(Config, BackendsRequiredAndHttpNeedsUrl) {
  EXPECT_NE(problems_of(json::object()).find("vision_backend: required"), std::string::npos);
  auto doc = minimal();
  doc["text_backend"] = {{"kind", "http"}};
  EXPECT_NE(problems_of(doc).find("text_backend"), std::string::npos);
}

TEST(Config, InstructionKindsParsed) {
  auto doc = minimal();
  doc["instruction_kinds"] = "position";
  EXPECT_EQ(parse_config(doc).instruction_kinds, qa::InstructionMix::position_only);
  doc["instruction_kinds"] = "colour";
  EXPECT_NE(problems_of(doc).find("instruction_kinds"), std::string::npos);
}

TEST(Config, LoadResolvesPromptsAgainstConfigDirectory) {
  testsupport::TempDir dir;
  std::filesystem::create_directory(dir / "prompts");
  testsupport::write_text(dir / "prompts" / "answer.txt", "Answer briefly. {{instruction}}");
  auto doc = minimal();
  doc["prompt_paths"] = {{"answer", "prompts/answer.txt"}};
  testsupport::write_text(dir / "config.json", doc.dump());
  const auto config = load_config(dir / "config.json");
  const auto prompts = load_prompts(config);
  EXPECT_EQ(prompts.answer.render({{"instruction", "Q?"}}), "Answer briefly. Q?");
}

TEST(Config, PromptMissingPlaceholderRejected) {
  testsupport::TempDir dir;
  testsupport::write_text(dir / "bad.txt", "No placeholder here.");
  auto config = parse_config(minimal());
  config.prompt_paths["object_summary"] = (dir / "bad.txt").string();
  EXPECT_THROW(load_prompts(config), ConfigError);
  config.prompt_paths = {{"nonsense", (dir / "bad.txt").string()}};
  EXPECT_THROW(load_prompts(config), ConfigError);
}

TEST(Config, MalformedFileIsConfigError) {
  testsupport::TempDir dir;
  testsupport::write_text(dir / "c.json", "{ not json");
  EXPECT_THROW(load_config(dir / "c.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(Config, RoundTripsThroughJson) {
  auto doc = minimal();
  doc["tau"] = 0.25;
  doc["instruction_kinds"] = "object";
  doc["filter"] = {{"complexity_hook", "python3 score.py"}};
  const auto c = parse_config(doc);
  const auto again = parse_config(json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(again), to_json(c));
}

TEST(ConfigHash, StableAndSensitiveToContentKnobs) {
  const auto prompts = PromptSet::builtin();
  const auto base = parse_config(minimal());
  const auto h = config_hash(base, prompts);
  EXPECT_EQ(h.size(), 64u);
  EXPECT_EQ(h, config_hash(parse_config(minimal()), PromptSet::builtin()));

  auto c = base;
  c.tau = 0.1;
  EXPECT_NE(config_hash(c, prompts), h);
  c = base;
  c.budget_n = 4;
  EXPECT_NE(config_hash(c, prompts), h);
  c = base;
  c.vision_backend.seed = 8;
  EXPECT_NE(config_hash(c, prompts), h);

  auto changed = prompts;
  changed.answer = text::PromptTemplate(prompts.answer.source() + " ");
  EXPECT_NE(config_hash(base, changed), h);

  // Operational knobs do not change record content.
  c = base;
  c.concurrency_images = 16;
  c.vision_backend.max_retries = 9;
  EXPECT_EQ(config_hash(c, prompts), h);
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, ShippedExamplesLoad) {
  const auto dir = testsupport::test_dir().parent_path() / "configs";
  const auto http = load_config(dir / "example_http.json");
  EXPECT_EQ(http.vision_backend.kind, gateway::BackendKind::http);
  EXPECT_EQ(http.vision_backend.model_id, "Qwen2-VL-7B");
  EXPECT_EQ(http.text_backend.api_key_env, "DETAILCAP_TEXT_KEY");
  EXPECT_EQ(load_config(dir / "mock.json").budget_n, 4u);
}
