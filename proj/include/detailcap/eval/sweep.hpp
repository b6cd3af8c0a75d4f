#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "detailcap/pipeline/annotator.hpp"

namespace detailcap::eval {

struct SweepPoint {
  std::size_t n = 0;
  pipeline::CaptionRecord record;
};

/// Annotates one image at every budget in `n_values`, generating and rating
/// the initial caption once and reusing it for every budget. Throws
/// std::invalid_argument when n_values is not sorted ascending; failures of
/// individual budgets are reported in their records.
std::vector<SweepPoint> budget_sweep(const pipeline::Annotator& annotator, const gateway::ImageRef& image,
                                     std::span<const std::size_t> n_values);

/// Non-excluded answers of a record.
std::size_t kept_answers(const pipeline::CaptionRecord& record);

}  // namespace detailcap::eval
