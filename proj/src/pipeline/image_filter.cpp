#include "detailcap/pipeline/image_filter.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>

#include <spdlog/spdlog.h>

#include "detailcap/text/text_util.hpp"

namespace detailcap::pipeline {

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

class TempFile {
 public:
  explicit TempFile(const std::vector<std::uint8_t>& bytes) {
    auto pattern = (std::filesystem::temp_directory_path() / "detailcap-hook-XXXXXX").string();
    const int fd = ::mkstemp(pattern.data());
    if (fd < 0) throw std::runtime_error("cannot create temporary file");
    ::close(fd);
    path_ = pattern;
    std::ofstream(path_, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                 static_cast<std::streamsize>(bytes.size()));
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::resolution: return "resolution";
    case DropReason::complexity: return "complexity";
    default: return "unreadable";
  }
}

std::optional<double> run_complexity_hook(const std::string& command, const std::string& image_path) {
  const auto full = command + " " + shell_quote(image_path);
  FILE* pipe = ::popen(full.c_str(), "r");
  if (!pipe) {
    spdlog::warn("complexity hook: cannot start '{}'", command);
    return std::nullopt;
  }
  std::string output;
  std::array<char, 256> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    spdlog::warn("complexity hook '{}' failed for {} (status {})", command, image_path, status);
    return std::nullopt;
  }
  const auto trimmed = std::string(text::trim(output));
  char* end = nullptr;
  const double score = std::strtod(trimmed.c_str(), &end);
  if (trimmed.empty() || end == trimmed.c_str()) {
    spdlog::warn("complexity hook '{}' printed no number for {}", command, image_path);
    return std::nullopt;
  }
  return score;
}

ComplexityScorer hook_scorer(const FilterConfig& config) {
  if (!config.complexity_hook) return {};
  return [command = *config.complexity_hook](const std::string& path) { return run_complexity_hook(command, path); };
}

FilterDecision filter_image(const gateway::ImageDims& dims, const std::string& image_path,
                            const FilterConfig& config, const ComplexityScorer& scorer) {
  FilterDecision d;
  if (std::min(dims.width, dims.height) < config.min_short_edge) {
    d.keep = false;
    d.reason = DropReason::resolution;
    return d;
  }
  if (!scorer) return d;
  d.complexity = scorer(image_path);
  if (!d.complexity) {
    d.hook_failed = true;
    return d;
  }
  if (*d.complexity < config.complexity_min || *d.complexity > config.complexity_max) {
    d.keep = false;
    d.reason = DropReason::complexity;
  }
  return d;
}

nlohmann::ordered_json FilterSummary::to_json() const {
  return {{"kept", kept},
          {"dropped_resolution", dropped_resolution},
          {"dropped_complexity", dropped_complexity},
          {"unreadable", unreadable},
          {"hook_failures", hook_failures},
          {"malformed", malformed}};
}

FilterSummary filter_dataset(const std::filesystem::path& input, const std::filesystem::path& output,
                             const FilterConfig& config, const ComplexityScorer& scorer) {
  std::ifstream in(input);
  if (!in) throw std::runtime_error(input.string() + ": cannot open input");
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(output.string() + ": cannot open output");

  FilterSummary summary;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto doc = nlohmann::ordered_json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("id") || !doc["id"].is_string() ||
        !doc.contains("image") || !doc["image"].is_string()) {
      ++summary.malformed;
      continue;
    }
    const auto ref = gateway::ImageRef::parse(doc["image"].get<std::string>(), doc["id"].get<std::string>());
    gateway::LoadedImage image;
    try {
      image = gateway::load_image(ref);
    } catch (const std::exception& e) {
      spdlog::warn("image '{}' dropped: {}", ref.id, e.what());
      ++summary.unreadable;
      continue;
    }

    FilterDecision d;
    if (ref.kind == gateway::ImageSourceKind::path || !scorer) {
      d = filter_image(image.dims, ref.source, config, scorer);
    } else {
      TempFile tmp(image.bytes);
      d = filter_image(image.dims, tmp.path(), config, scorer);
    }
    if (d.hook_failed) ++summary.hook_failures;
    if (!d.keep) {
      ++(*d.reason == DropReason::resolution ? summary.dropped_resolution : summary.dropped_complexity);
      continue;
    }
    ++summary.kept;
    doc["width"] = image.dims.width;
    doc["height"] = image.dims.height;
    if (d.complexity) doc["complexity"] = *d.complexity;
    out << doc.dump() << '\n';
  }
  if (!out.flush()) throw std::runtime_error(output.string() + ": write failed");
  return summary;
}

}  // namespace detailcap::pipeline
