#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace visloop {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

// A PNG-encoded image. Every image entering the system (user inputs, kernel
// figures) is held in this canonical form; dimensions always agree with the
// encoded IHDR header.
class ImageBlob {
 public:
  // Validates the signature and reads the header. Throws InvariantError.
  static ImageBlob from_png(Bytes png);

  // PNG files are taken as-is; JPEG files are decoded and re-encoded as PNG.
  // Throws MissingImage if the file cannot be read, InvariantError if it is
  // neither format.
  static ImageBlob from_file(const std::filesystem::path& path);

  // Encodes tightly packed 8-bit RGB pixels (row-major, width*height*3 bytes).
  static ImageBlob from_rgb(std::uint32_t width, std::uint32_t height,
                            std::span<const std::uint8_t> rgb);

  // A width x height image filled with one colour.
  static ImageBlob solid(std::uint32_t width, std::uint32_t height, std::uint8_t r,
                         std::uint8_t g, std::uint8_t b);

  const Bytes& bytes() const noexcept { return bytes_; }
  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }

  // Base64 of the PNG bytes, as carried in trace documents and kernel frames.
  std::string to_base64() const;
  static ImageBlob from_base64(std::string_view text);

  // Decodes back to 8-bit RGB, row-major.
  std::vector<std::uint8_t> decode_rgb() const;

  bool operator==(const ImageBlob&) const = default;

 private:
  ImageBlob(Bytes bytes, std::uint32_t width, std::uint32_t height)
      : bytes_(std::move(bytes)), width_(width), height_(height) {}

  Bytes bytes_;
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
};

bool has_png_signature(std::span<const std::uint8_t> bytes) noexcept;

}  // namespace visloop
