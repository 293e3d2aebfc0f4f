#include "visloop/image.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

#include "visloop/base64.hpp"
#include "visloop/errors.hpp"

namespace visloop {
namespace {

struct PngImageGuard {
  png_image* image;
  ~PngImageGuard() { png_image_free(image); }
};

Bytes encode_png(std::uint32_t width, std::uint32_t height, std::span<const std::uint8_t> rgb) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = width;
  image.height = height;
  image.format = PNG_FORMAT_RGB;
  PngImageGuard guard{&image};

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw InvariantError(std::string("png encode failed: ") + image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw InvariantError(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

// Decodes a JPEG into packed RGB. Kept free of C++ objects with destructors
// between setjmp and longjmp.
bool decode_jpeg(const Bytes& data, std::vector<std::uint8_t>& rgb, std::uint32_t& width,
                 std::uint32_t& height, std::string& error) {
  jpeg_decompress_struct info{};
  JpegErrorManager err{};
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = on_jpeg_error;
  if (setjmp(err.jump)) {
    error = err.message;
    jpeg_destroy_decompress(&info);
    return false;
  }
  jpeg_create_decompress(&info);
  jpeg_mem_src(&info, data.data(), static_cast<unsigned long>(data.size()));
  jpeg_read_header(&info, TRUE);
  info.out_color_space = JCS_RGB;
  jpeg_start_decompress(&info);
  width = info.output_width;
  height = info.output_height;
  rgb.resize(static_cast<std::size_t>(width) * height * 3);
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(info.output_scanline) * width * 3;
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  return true;
}

}  // namespace

bool has_png_signature(std::span<const std::uint8_t> bytes) noexcept {
  return bytes.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature), bytes.begin());
}

ImageBlob ImageBlob::from_png(Bytes png) {
  if (!has_png_signature(png)) {
    throw InvariantError("image bytes do not start with the PNG signature");
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  PngImageGuard guard{&image};
  if (!png_image_begin_read_from_memory(&image, png.data(), png.size())) {
    throw InvariantError(std::string("unreadable PNG header: ") + image.message);
  }
  if (image.width < 1 || image.height < 1) {
    throw InvariantError("PNG has a zero dimension");
  }
  const auto width = image.width;
  const auto height = image.height;
  return ImageBlob(std::move(png), width, height);
}

ImageBlob ImageBlob::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MissingImage("cannot read image: " + path.string());
  }
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (has_png_signature(data)) {
    return from_png(std::move(data));
  }
  if (data.size() >= 3 && data[0] == 0xFF && data[1] == 0xD8 && data[2] == 0xFF) {
    std::vector<std::uint8_t> rgb;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::string error;
    if (!decode_jpeg(data, rgb, width, height, error)) {
      throw InvariantError("cannot decode JPEG " + path.string() + ": " + error);
    }
    return from_rgb(width, height, rgb);
  }
  throw InvariantError("unsupported image format (expected PNG or JPEG): " + path.string());
}

ImageBlob ImageBlob::from_rgb(std::uint32_t width, std::uint32_t height,
                              std::span<const std::uint8_t> rgb) {
  if (width < 1 || height < 1) {
    throw InvariantError("image dimensions must be at least 1x1");
  }
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw InvariantError("RGB buffer size does not match dimensions");
  }
  return ImageBlob(encode_png(width, height, rgb), width, height);
}

ImageBlob ImageBlob::solid(std::uint32_t width, std::uint32_t height, std::uint8_t r,
                           std::uint8_t g, std::uint8_t b) {
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
  return from_rgb(width, height, rgb);
}

std::string ImageBlob::to_base64() const { return base64_encode(bytes_); }

ImageBlob ImageBlob::from_base64(std::string_view text) { return from_png(base64_decode(text)); }

std::vector<std::uint8_t> ImageBlob::decode_rgb() const {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  PngImageGuard guard{&image};
  if (!png_image_begin_read_from_memory(&image, bytes_.data(), bytes_.size())) {
    throw InvariantError(std::string("unreadable PNG: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    throw InvariantError(std::string("PNG decode failed: ") + image.message);
  }
  return rgb;
}

}  // namespace visloop
