#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "detailcap/eval/chair.hpp"
#include "detailcap/eval/prism.hpp"
#include "detailcap/eval/stats.hpp"
#include "detailcap/eval/sweep.hpp"
#include "detailcap/gateway/image.hpp"
#include "detailcap/pipeline/annotator.hpp"
#include "detailcap/pipeline/batch.hpp"
#include "detailcap/pipeline/config.hpp"
#include "detailcap/pipeline/image_filter.hpp"

using namespace detailcap;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return in;
}

// Yields (line number, parsed object) for every non-blank JSONL line.
template <typename Fn>
void for_each_json_line(const std::string& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      spdlog::warn("{}:{}: not a JSON object, skipped", path, line_no);
      continue;
    }
    fn(line_no, doc);
  }
}

std::string string_field(const json& doc, std::initializer_list<const char*> keys) {
  for (auto key : keys) {
    auto it = doc.find(key);
    if (it != doc.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

int run_annotate(const std::string& config_path, const std::string& input, const std::string& output,
                 std::optional<std::size_t> limit, std::optional<std::size_t> budget, std::optional<double> tau) {
  auto config = pipeline::load_config(config_path);
  if (budget) config.budget_n = *budget;
  if (tau) config.tau = *tau;
  config.validate();
  const auto annotator = pipeline::Annotator::from_config(config);
  const auto summary = pipeline::annotate_batch(input, output, annotator, {limit});
  std::cout << summary.to_json().dump(2) << '\n';
  return summary.failed == 0 ? 0 : 3;
}

int run_rate(const std::string& config_path, const std::string& image, const std::string& caption) {
  const auto config = pipeline::load_config(config_path);
  const auto vision = gateway::make_backend(config.vision_backend);
  const auto ref = gateway::materialize(gateway::ImageRef::parse(image));
  const rater::ContrastiveRater rater;
  const auto rated = rater.rate_caption(*vision, ref, config.caption_instruction, caption, config.tau);

  ordered_json out;
  out["tau"] = config.tau;
  out["sentences"] = ordered_json::array();
  for (const auto& s : rated.sentences) {
    auto j = pipeline::to_json(s);
    j["tokens"] = ordered_json::array();
    for (auto t = s.tokens.begin; t < s.tokens.end; ++t) {
      const auto& tok = rated.tokens[t];
      j["tokens"].push_back({{"token", tok.token},
                             {"p_with", tok.p_with},
                             {"p_without", tok.p_without},
                             {"delta", tok.delta},
                             {"critical", tok.is_critical}});
    }
    out["sentences"].push_back(std::move(j));
  }
  out["golden"] = {{"sentences", rated.golden.sentences},
                   {"source_indices", rated.golden.source_indices},
                   {"fallback_applied", rated.golden.fallback_applied}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_filter(const std::string& config_path, const std::string& input, const std::string& output) {
  const auto config = pipeline::load_config(config_path);
  const auto summary =
      pipeline::filter_dataset(input, output, config.filter, pipeline::hook_scorer(config.filter));
  std::cout << summary.to_json().dump(2) << '\n';
  return 0;
}

int run_stats(const std::string& records) {
  auto in = open_input(records);
  std::cout << eval::caption_stats(in).to_json().dump(2) << '\n';
  return 0;
}

int run_eval_chair(const std::string& captions, const std::string& gt, const std::string& synonyms_path) {
  eval::Vocabulary vocab;
  if (!synonyms_path.empty()) {
    auto in = open_input(synonyms_path);
    vocab.synonyms = eval::parse_synonyms(json::parse(in));
  }
  std::map<std::string, std::set<std::string>> truth;
  for_each_json_line(gt, [&](std::size_t line_no, const json& doc) {
    const auto id = string_field(doc, {"id", "image_id"});
    auto objects = doc.find("objects");
    if (id.empty() || objects == doc.end() || !objects->is_array()) {
      spdlog::warn("{}:{}: expected {{\"id\", \"objects\"}}, skipped", gt, line_no);
      return;
    }
    for (const auto& o : *objects) {
      truth[id].insert(o.get<std::string>());
      vocab.objects.push_back(o.get<std::string>());
    }
  });
  for (const auto& [canonical, aliases] : vocab.synonyms) vocab.objects.push_back(canonical);

  eval::ChairInput input;
  input.synonym_map = vocab.synonyms;
  for_each_json_line(captions, [&](std::size_t line_no, const json& doc) {
    const auto id = string_field(doc, {"id", "image_id"});
    const auto caption = string_field(doc, {"caption", "final_caption"});
    if (id.empty()) {
      spdlog::warn("{}:{}: missing id, skipped", captions, line_no);
      return;
    }
    if (!truth.contains(id)) {
      spdlog::warn("{}:{}: no ground truth for '{}', skipped", captions, line_no, id);
      return;
    }
    input.items.push_back({id, eval::extract_mentions(caption, vocab), truth[id]});
  });
  std::cout << eval::chair_scores(input).to_json().dump(2) << '\n';
  return 0;
}

int run_prism(const std::string& config_path, const std::string& records, const std::string& questions) {
  const auto config = pipeline::load_config(config_path);
  const auto prompts = pipeline::load_prompts(config);
  const auto text_backend = gateway::make_backend(config.text_backend);

  std::map<std::string, std::string> captions;
  for_each_json_line(records, [&](std::size_t, const json& doc) {
    const auto id = string_field(doc, {"image_id", "id"});
    const auto caption = string_field(doc, {"final_caption", "caption"});
    if (!id.empty() && !caption.empty()) captions[id] = caption;
  });
  int status = 0;
  for_each_json_line(questions, [&](std::size_t line_no, const json& doc) {
    const auto id = string_field(doc, {"id", "image_id"});
    const auto question = string_field(doc, {"question"});
    ordered_json out{{"id", id}, {"question", question}};
    auto it = captions.find(id);
    try {
      if (it == captions.end()) throw std::runtime_error("no caption for id '" + id + "'");
      out["answer"] = eval::prism_answer(*text_backend, it->second, question, prompts.prism_answer);
    } catch (const std::exception& e) {
      spdlog::warn("{}:{}: {}", questions, line_no, e.what());
      out["answer"] = nullptr;
      out["error"] = e.what();
      status = 3;
    }
    std::cout << out.dump() << '\n';
  });
  return status;
}

int run_sweep(const std::string& config_path, const std::string& image, const std::string& id,
              std::vector<std::size_t> n_values) {
  const auto config = pipeline::load_config(config_path);
  const auto annotator = pipeline::Annotator::from_config(config);
  for (const auto& point : eval::budget_sweep(annotator, gateway::ImageRef::parse(image, id), n_values)) {
    ordered_json out{{"n", point.n},
                     {"kept_answers", eval::kept_answers(point.record)},
                     {"record", pipeline::to_json(point.record)}};
    std::cout << out.dump() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("detailcap"));

  CLI::App app{"Detailed image captioning with contrastive sentence rating"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string config, input, output, image, caption, records, captions, gt, synonyms, questions, id;
  std::optional<std::size_t> limit, budget;
  std::optional<double> tau;
  std::vector<std::size_t> n_values;

  auto* annotate = app.add_subcommand("annotate", "Annotate a JSONL batch of images");
  annotate->add_option("--input", input, "JSONL of {\"id\", \"image\"}")->required();
  annotate->add_option("--output", output, "JSONL of records (appended; existing ids are skipped)")->required();
  annotate->add_option("--config", config, "Config file")->required();
  annotate->add_option("--limit", limit, "Stop after N new images");
  annotate->add_option("--budget", budget, "Override budget_n");
  annotate->add_option("--tau", tau, "Override tau");

  auto* rate = app.add_subcommand("rate", "Print per-sentence ratings of a caption");
  rate->add_option("--image", image, "Image path, URL or data URL")->required();
  rate->add_option("--caption", caption, "Caption text")->required();
  rate->add_option("--config", config, "Config file")->required();

  auto* filter = app.add_subcommand("filter", "Drop low-resolution or out-of-range-complexity images");
  filter->add_option("--input", input, "JSONL of {\"id\", \"image\"}")->required();
  filter->add_option("--output", output, "JSONL of kept lines")->required();
  filter->add_option("--config", config, "Config file")->required();

  auto* stats = app.add_subcommand("stats", "Caption length statistics of a record file");
  stats->add_option("--records", records, "JSONL of records")->required();

  auto* chair = app.add_subcommand("eval-chair", "Object hallucination rates");
  chair->add_option("--captions", captions, "JSONL of {\"id\", \"caption\"} or records")->required();
  chair->add_option("--gt", gt, "JSONL of {\"id\", \"objects\": [...]}")->required();
  chair->add_option("--synonyms", synonyms, "JSON object canonical -> [aliases]");

  auto* prism = app.add_subcommand("prism", "Answer questions from captions alone");
  prism->add_option("--records", records, "JSONL of records or {\"id\", \"caption\"}")->required();
  prism->add_option("--questions", questions, "JSONL of {\"id\", \"question\"}")->required();
  prism->add_option("--config", config, "Config file")->required();

  auto* sweep = app.add_subcommand("sweep", "Annotate one image at several budgets");
  sweep->add_option("--image", image, "Image path, URL or data URL")->required();
  sweep->add_option("--config", config, "Config file")->required();
  sweep->add_option("--n", n_values, "Budgets, ascending")->required()->delimiter(',');
  sweep->add_option("--id", id, "Image id");

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*annotate) return run_annotate(config, input, output, limit, budget, tau);
    if (*rate) return run_rate(config, image, caption);
    if (*filter) return run_filter(config, input, output);
    if (*stats) return run_stats(records);
    if (*chair) return run_eval_chair(captions, gt, synonyms);
    if (*prism) return run_prism(config, records, questions);
    if (*sweep) return run_sweep(config, image, id.empty() ? image : id, n_values);
  } catch (const pipeline::ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
