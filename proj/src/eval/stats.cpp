#include "detailcap/eval/stats.hpp"

#include <string>

#include "detailcap/text/text_util.hpp"

namespace detailcap::eval {

namespace {

nlohmann::ordered_json summary_json(const std::optional<LengthSummary>& s) {
  if (!s) return nullptr;
  return {{"mean", s->mean}, {"median", s->median}, {"max", s->max}};
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

void LengthAccumulator::add(std::size_t value) {
  ++histogram_[value];
  ++count_;
  sum_ += value;
}

std::optional<LengthSummary> LengthAccumulator::summary() const {
  if (count_ == 0) return std::nullopt;
  LengthSummary s;
  s.mean = static_cast<double>(sum_ / count_);
  s.max = histogram_.rbegin()->first;
  // 0-based ranks of the middle element(s).
  const std::size_t lo_rank = (count_ - 1) / 2;
  const std::size_t hi_rank = count_ / 2;
  std::optional<std::size_t> lo, hi;
  std::size_t seen = 0;
  for (const auto& [value, n] : histogram_) {
    if (!lo && lo_rank < seen + n) lo = value;
    if (!hi && hi_rank < seen + n) {
      hi = value;
      break;
    }
    seen += n;
  }
  s.median = (static_cast<double>(*lo) + static_cast<double>(*hi)) / 2.0;
  return s;
}

std::size_t count_code_points(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

void CaptionStatsAccumulator::add(const pipeline::CaptionRecord& record) {
  if (!record.ok()) {
    ++failed_;
    return;
  }
  final_chars_.add(count_code_points(record.final_caption));
  final_words_.add(text::whitespace_words(record.final_caption).size());
  initial_chars_.add(count_code_points(record.initial_caption));
  initial_words_.add(text::whitespace_words(record.initial_caption).size());
  golden_total_ += record.golden.size();
  for (const auto& a : record.answers) (a.excluded ? excluded_total_ : kept_total_)++;
}

void CaptionStatsAccumulator::add_line(std::string_view line) {
  if (text::trim(line).empty()) return;
  const auto doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_discarded()) {
    ++malformed_;
    return;
  }
  try {
    add(pipeline::record_from_json(doc));
  } catch (const std::exception&) {
    ++malformed_;
  }
}

CaptionStats CaptionStatsAccumulator::result() const {
  CaptionStats s;
  s.count = final_chars_.count();
  s.failed = failed_;
  s.malformed = malformed_;
  s.final_chars = final_chars_.summary();
  s.final_words = final_words_.summary();
  s.initial_chars = initial_chars_.summary();
  s.initial_words = initial_words_.summary();
  if (s.count > 0) {
    const auto n = static_cast<double>(s.count);
    s.mean_golden_sentences = static_cast<double>(golden_total_) / n;
    s.mean_answers_kept = static_cast<double>(kept_total_) / n;
    s.mean_answers_excluded = static_cast<double>(excluded_total_) / n;
  }
  return s;
}

nlohmann::ordered_json CaptionStats::to_json() const {
  nlohmann::ordered_json j;
  j["count"] = count;
  j["failed"] = failed;
  j["malformed"] = malformed;
  j["final_caption_chars"] = summary_json(final_chars);
  j["final_caption_words"] = summary_json(final_words);
  j["initial_caption_chars"] = summary_json(initial_chars);
  j["initial_caption_words"] = summary_json(initial_words);
  j["mean_golden_sentences"] = optional_json(mean_golden_sentences);
  j["mean_answers_kept"] = optional_json(mean_answers_kept);
  j["mean_answers_excluded"] = optional_json(mean_answers_excluded);
  return j;
}

CaptionStats caption_stats(std::istream& records) {
  CaptionStatsAccumulator acc;
  std::string line;
  while (std::getline(records, line)) acc.add_line(line);
  return acc.result();
}

}  // namespace detailcap::eval
