#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "detailcap/pipeline/record.hpp"

namespace detailcap::eval {

struct LengthSummary {
  double mean = 0;
  double median = 0;
  std::size_t max = 0;
};

/// Streaming mean/median/max of non-negative integers. The median is exact;
/// memory grows with the number of distinct values, not the number of
/// samples.
class LengthAccumulator {
 public:
  void add(std::size_t value);
  std::size_t count() const { return count_; }
  std::optional<LengthSummary> summary() const;

 private:
  std::map<std::size_t, std::size_t> histogram_;
  std::size_t count_ = 0;
  long double sum_ = 0;
};

struct CaptionStats {
  std::size_t count = 0;      // records with status ok
  std::size_t failed = 0;
  std::size_t malformed = 0;
  std::optional<LengthSummary> final_chars;
  std::optional<LengthSummary> final_words;
  std::optional<LengthSummary> initial_chars;
  std::optional<LengthSummary> initial_words;
  std::optional<double> mean_golden_sentences;
  std::optional<double> mean_answers_kept;
  std::optional<double> mean_answers_excluded;

  nlohmann::ordered_json to_json() const;
};

/// Characters are Unicode code points of the UTF-8 text.
std::size_t count_code_points(std::string_view text);

class CaptionStatsAccumulator {
 public:
  void add(const pipeline::CaptionRecord& record);
  /// Parses one JSONL line; unparseable lines count as malformed.
  void add_line(std::string_view line);
  CaptionStats result() const;

 private:
  std::size_t failed_ = 0;
  std::size_t malformed_ = 0;
  LengthAccumulator final_chars_, final_words_, initial_chars_, initial_words_;
  std::size_t golden_total_ = 0;
  std::size_t kept_total_ = 0;
  std::size_t excluded_total_ = 0;
};

/// Statistics over every line of a record stream.
CaptionStats caption_stats(std::istream& records);

}  // namespace detailcap::eval
