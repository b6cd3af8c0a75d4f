#include "detailcap/pipeline/batch.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "detailcap/text/text_util.hpp"

namespace detailcap::pipeline {

using nlohmann::json;

nlohmann::ordered_json BatchSummary::to_json() const {
  return {{"ok", ok},
          {"failed", failed},
          {"skipped_resume", skipped_resume},
          {"malformed", malformed},
          {"peak_in_flight", peak_in_flight}};
}

std::optional<InputItem> parse_input_line(std::string_view line) {
  const auto doc = json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  auto id = doc.find("id");
  auto image = doc.find("image");
  if (id == doc.end() || image == doc.end() || !id->is_string() || !image->is_string()) return std::nullopt;
  InputItem item{id->get<std::string>(), image->get<std::string>()};
  if (item.id.empty() || item.image.empty()) return std::nullopt;
  return item;
}

std::set<std::string> completed_ids(const std::filesystem::path& output) {
  std::set<std::string> ids;
  std::ifstream in(output);
  if (!in) return ids;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      spdlog::warn("{}: ignoring unparseable output line", output.string());
      continue;
    }
    auto id = doc.find("image_id");
    if (id != doc.end() && id->is_string()) ids.insert(id->get<std::string>());
  }
  return ids;
}

BatchSummary annotate_batch(const std::filesystem::path& input, const std::filesystem::path& output,
                            const Annotator& annotator, const BatchOptions& options) {
  std::ifstream in(input);
  if (!in) throw std::runtime_error(input.string() + ": cannot open input");

  BatchSummary summary;
  const auto done = completed_ids(output);
  std::set<std::string> seen;
  std::vector<InputItem> pending;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto item = parse_input_line(line);
    if (!item) {
      spdlog::warn("{}:{}: malformed input line skipped", input.string(), line_no);
      ++summary.malformed;
      continue;
    }
    if (!seen.insert(item->id).second) {
      spdlog::warn("{}:{}: duplicate id '{}' skipped", input.string(), line_no, item->id);
      ++summary.malformed;
      continue;
    }
    if (done.contains(item->id)) {
      ++summary.skipped_resume;
      continue;
    }
    pending.push_back(std::move(*item));
  }
  if (in.bad()) throw std::runtime_error(input.string() + ": read error");
  if (options.limit && pending.size() > *options.limit) pending.resize(*options.limit);

  // A previous run may have died mid-line; start on a fresh line.
  bool needs_newline = false;
  if (std::filesystem::exists(output) && std::filesystem::file_size(output) > 0) {
    std::ifstream tail(output, std::ios::binary);
    tail.seekg(-1, std::ios::end);
    needs_newline = tail.get() != '\n';
  }
  std::ofstream out(output, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error(output.string() + ": cannot open output");
  if (needs_newline) out << '\n';

  std::mutex write_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> in_flight{0};
  std::atomic<std::size_t> peak{0};
  std::atomic<std::size_t> ok{0};
  std::atomic<std::size_t> failed{0};
  std::exception_ptr io_error;

  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= pending.size()) return;
      {
        std::lock_guard lock(write_mutex);
        if (io_error) return;
      }
      const auto now = ++in_flight;
      auto prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
      }

      CaptionRecord record;
      try {
        record = annotator.annotate(gateway::ImageRef::parse(pending[i].image, pending[i].id));
      } catch (const std::exception& e) {
        record.status = "failed:generate_caption";
        record.error = e.what();
      }
      record.image_id = pending[i].id;
      if (record.image_ref.empty()) record.image_ref = pending[i].image;
      --in_flight;
      (record.ok() ? ok : failed)++;

      const auto serialized = serialize_record(record) + "\n";
      std::lock_guard lock(write_mutex);
      if (io_error) return;
      out.write(serialized.data(), static_cast<std::streamsize>(serialized.size()));
      out.flush();
      if (!out) io_error = std::make_exception_ptr(std::runtime_error(output.string() + ": write failed"));
    }
  };

  const auto workers = std::min(annotator.config().concurrency_images, pending.size());
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (io_error) std::rethrow_exception(io_error);

  summary.ok = ok;
  summary.failed = failed;
  summary.peak_in_flight = peak;
  return summary;
}

}  // namespace detailcap::pipeline
