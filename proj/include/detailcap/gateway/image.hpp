#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detailcap/gateway/types.hpp"

namespace detailcap::gateway {

struct ImageDims {
  int width = 0;
  int height = 0;
};

struct LoadedImage {
  std::vector<std::uint8_t> bytes;
  std::string media_type;
  ImageDims dims;
};

/// Reads width/height from a PNG, JPEG, GIF, BMP or WebP header. Returns
/// nullopt when the bytes are not a recognised image.
std::optional<ImageDims> probe_dimensions(std::span<const std::uint8_t> bytes);
std::string sniff_media_type(std::span<const std::uint8_t> bytes);

/// Fetches and validates the image. Throws ImageDecodeError when the source
/// cannot be read or is not a recognised image, BackendUnreachable when a
/// URL cannot be fetched.
LoadedImage load_image(const ImageRef& ref, double timeout_s = 30.0);

/// Loads the image once and returns an inline copy with dimensions filled in,
/// so later backend calls do not refetch it. Keeps `id`.
ImageRef materialize(const ImageRef& ref, double timeout_s = 30.0);

/// "data:<media_type>;base64,<payload>"
std::string data_url(const LoadedImage& image);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ImageDecodeError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace detailcap::gateway
