#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "detailcap/gateway/image.hpp"
#include "detailcap/pipeline/config.hpp"

namespace detailcap::pipeline {

enum class DropReason { resolution, complexity, unreadable };

std::string_view to_string(DropReason reason);

struct FilterDecision {
  bool keep = true;
  std::optional<DropReason> reason;
  std::optional<double> complexity;
  bool hook_failed = false;
};

/// Complexity score for an image path, or nullopt when scoring failed.
using ComplexityScorer = std::function<std::optional<double>(const std::string& image_path)>;

/// Runs `command` with the shell-quoted image path appended and parses the
/// first number it prints. nullopt on a non-zero exit or unparseable output.
std::optional<double> run_complexity_hook(const std::string& command, const std::string& image_path);

/// Drops images whose short edge is below min_short_edge, then, when a
/// scorer is given, images whose score falls outside the inclusive
/// [complexity_min, complexity_max] range. A failed score keeps the image
/// and sets hook_failed.
FilterDecision filter_image(const gateway::ImageDims& dims, const std::string& image_path,
                            const FilterConfig& config, const ComplexityScorer& scorer = {});

/// Scorer backed by config.complexity_hook, or empty when none is set.
ComplexityScorer hook_scorer(const FilterConfig& config);

struct FilterSummary {
  std::size_t kept = 0;
  std::size_t dropped_resolution = 0;
  std::size_t dropped_complexity = 0;
  std::size_t unreadable = 0;
  std::size_t hook_failures = 0;
  std::size_t malformed = 0;

  nlohmann::ordered_json to_json() const;
};

/// Copies the input lines ({"id", "image"}) whose image passes the filter to
/// `output`, adding "width" and "height". Throws std::runtime_error on I/O
/// failure.
FilterSummary filter_dataset(const std::filesystem::path& input, const std::filesystem::path& output,
                             const FilterConfig& config, const ComplexityScorer& scorer);

}  // namespace detailcap::pipeline
