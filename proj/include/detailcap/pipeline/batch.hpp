#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "detailcap/gateway/types.hpp"
#include "detailcap/pipeline/annotator.hpp"

namespace detailcap::pipeline {

struct BatchOptions {
  /// Stop after this many new images have been annotated.
  std::optional<std::size_t> limit;
};

struct BatchSummary {
  std::size_t ok = 0;
  std::size_t failed = 0;
  std::size_t skipped_resume = 0;
  std::size_t malformed = 0;
  std::size_t peak_in_flight = 0;

  nlohmann::ordered_json to_json() const;
};

struct InputItem {
  std::string id;
  std::string image;
};

/// Parses one input line {"id": string, "image": string}; nullopt when the
/// line is not such an object.
std::optional<InputItem> parse_input_line(std::string_view line);

/// image_id of every parseable record line of an existing output file.
std::set<std::string> completed_ids(const std::filesystem::path& output);

/// Annotates every image of a JSONL input whose id is not already in the
/// output, up to config.concurrency_images at a time, appending one record
/// line per image in completion order. Malformed input lines and repeated
/// ids are counted as malformed and skipped. Throws std::runtime_error on
/// I/O failure.
BatchSummary annotate_batch(const std::filesystem::path& input, const std::filesystem::path& output,
                            const Annotator& annotator, const BatchOptions& options = {});

}  // namespace detailcap::pipeline
