#include "detailcap/eval/sweep.hpp"

#include <algorithm>
#include <stdexcept>

namespace detailcap::eval {

std::vector<SweepPoint> budget_sweep(const pipeline::Annotator& annotator, const gateway::ImageRef& image,
                                     std::span<const std::size_t> n_values) {
  if (!std::is_sorted(n_values.begin(), n_values.end()))
    throw std::invalid_argument("budget_sweep: n_values must be sorted ascending");
  std::vector<SweepPoint> points;
  if (n_values.empty()) return points;
  const auto prepared = annotator.prepare(image);
  for (auto n : n_values) points.push_back({n, annotator.complete(prepared, n)});
  return points;
}

std::size_t kept_answers(const pipeline::CaptionRecord& record) {
  return static_cast<std::size_t>(
      std::count_if(record.answers.begin(), record.answers.end(), [](const auto& a) { return !a.excluded; }));
}

}  // namespace detailcap::eval
