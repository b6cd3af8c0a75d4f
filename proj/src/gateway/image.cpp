#include "detailcap/gateway/image.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "detailcap/gateway/errors.hpp"
#include "http_fetch.hpp"

namespace detailcap::gateway {

namespace {

std::uint32_t be16(std::span<const std::uint8_t> b, std::size_t i) {
  return (std::uint32_t{b[i]} << 8) | b[i + 1];
}
std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t i) {
  return (be16(b, i) << 16) | be16(b, i + 2);
}
std::uint32_t le16(std::span<const std::uint8_t> b, std::size_t i) {
  return std::uint32_t{b[i]} | (std::uint32_t{b[i + 1]} << 8);
}
std::uint32_t le24(std::span<const std::uint8_t> b, std::size_t i) {
  return le16(b, i) | (std::uint32_t{b[i + 2]} << 16);
}
std::int32_t le32s(std::span<const std::uint8_t> b, std::size_t i) {
  return static_cast<std::int32_t>(le16(b, i) | (le16(b, i + 2) << 16));
}

bool starts_with(std::span<const std::uint8_t> b, std::string_view magic, std::size_t at = 0) {
  if (b.size() < at + magic.size()) return false;
  return std::memcmp(b.data() + at, magic.data(), magic.size()) == 0;
}

std::optional<ImageDims> probe_jpeg(std::span<const std::uint8_t> b) {
  std::size_t i = 2;
  while (i + 3 < b.size()) {
    if (b[i] != 0xFF) return std::nullopt;
    std::uint8_t marker = b[i + 1];
    if (marker == 0xFF) {  // fill byte
      ++i;
      continue;
    }
    if ((marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) {
      i += 2;
      continue;
    }
    const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC;
    if (sof) {
      if (i + 8 >= b.size()) return std::nullopt;
      return ImageDims{static_cast<int>(be16(b, i + 7)), static_cast<int>(be16(b, i + 5))};
    }
    std::size_t len = be16(b, i + 2);
    if (len < 2) return std::nullopt;
    i += 2 + len;
  }
  return std::nullopt;
}

std::optional<ImageDims> probe_webp(std::span<const std::uint8_t> b) {
  if (starts_with(b, "VP8 ", 12) && b.size() >= 30)
    return ImageDims{static_cast<int>(le16(b, 26) & 0x3FFF), static_cast<int>(le16(b, 28) & 0x3FFF)};
  if (starts_with(b, "VP8L", 12) && b.size() >= 25) {
    std::uint32_t b0 = b[21], b1 = b[22], b2 = b[23], b3 = b[24];
    int w = 1 + static_cast<int>(((b1 & 0x3F) << 8) | b0);
    int h = 1 + static_cast<int>(((b3 & 0xF) << 10) | (b2 << 2) | ((b1 & 0xC0) >> 6));
    return ImageDims{w, h};
  }
  if (starts_with(b, "VP8X", 12) && b.size() >= 30)
    return ImageDims{1 + static_cast<int>(le24(b, 24)), 1 + static_cast<int>(le24(b, 27))};
  return std::nullopt;
}

}  // namespace

std::string sniff_media_type(std::span<const std::uint8_t> b) {
  if (starts_with(b, "\x89PNG\r\n\x1a\n")) return "image/png";
  if (b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF) return "image/jpeg";
  if (starts_with(b, "GIF87a") || starts_with(b, "GIF89a")) return "image/gif";
  if (starts_with(b, "BM")) return "image/bmp";
  if (starts_with(b, "RIFF") && starts_with(b, "WEBP", 8)) return "image/webp";
  return {};
}

std::optional<ImageDims> probe_dimensions(std::span<const std::uint8_t> b) {
  const auto type = sniff_media_type(b);
  std::optional<ImageDims> dims;
  if (type == "image/png") {
    if (b.size() >= 24 && starts_with(b, "IHDR", 12))
      dims = ImageDims{static_cast<int>(be32(b, 16)), static_cast<int>(be32(b, 20))};
  } else if (type == "image/jpeg") {
    dims = probe_jpeg(b);
  } else if (type == "image/gif") {
    if (b.size() >= 10) dims = ImageDims{static_cast<int>(le16(b, 6)), static_cast<int>(le16(b, 8))};
  } else if (type == "image/bmp") {
    if (b.size() >= 26) {
      auto h = le32s(b, 22);
      dims = ImageDims{le32s(b, 18), h < 0 ? -h : h};
    }
  } else if (type == "image/webp") {
    dims = probe_webp(b);
  }
  if (dims && (dims->width <= 0 || dims->height <= 0)) return std::nullopt;
  return dims;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  if (bytes.empty()) return out;
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text)
    if (c != '\n' && c != '\r' && c != ' ' && c != '\t') clean.push_back(c);
  if (clean.size() % 4 != 0) throw ImageDecodeError("base64 payload length is not a multiple of 4");
  std::vector<std::uint8_t> out(clean.size() / 4 * 3);
  if (clean.empty()) return out;
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                          static_cast<int>(clean.size()));
  if (n < 0) throw ImageDecodeError("malformed base64 payload");
  std::size_t pad = 0;
  if (clean.back() == '=') ++pad;
  if (clean.size() >= 2 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

LoadedImage load_image(const ImageRef& ref, double timeout_s) {
  LoadedImage img;
  switch (ref.kind) {
    case ImageSourceKind::path: {
      std::ifstream in(ref.source, std::ios::binary);
      if (!in) throw ImageDecodeError("cannot read image file '" + ref.source + "'");
      img.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
      break;
    }
    case ImageSourceKind::url:
      img.bytes = detail::http_get(ref.source, timeout_s);
      break;
    case ImageSourceKind::inline_base64:
      img.bytes = base64_decode(ref.source);
      break;
  }
  auto dims = probe_dimensions(img.bytes);
  if (!dims) {
    throw ImageDecodeError("'" + (ref.id.empty() ? ref.to_string().substr(0, 64) : ref.id) +
                           "' is not a recognised PNG/JPEG/GIF/BMP/WebP image");
  }
  img.dims = *dims;
  img.media_type = sniff_media_type(img.bytes);
  return img;
}

ImageRef materialize(const ImageRef& ref, double timeout_s) {
  auto img = load_image(ref, timeout_s);
  auto out = ImageRef::from_base64(base64_encode(img.bytes), img.media_type, ref.id);
  out.width = img.dims.width;
  out.height = img.dims.height;
  return out;
}

std::string data_url(const LoadedImage& image) {
  return "data:" + image.media_type + ";base64," + base64_encode(image.bytes);
}

}  // namespace detailcap::gateway
