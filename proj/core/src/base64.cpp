#include "visloop/base64.hpp"

#include <openssl/evp.h>

#include "visloop/errors.hpp"

namespace visloop {

std::string base64_encode(std::span<const std::uint8_t> data) {
  if (data.empty()) {
    return {};
  }
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                      data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.empty()) {
    return {};
  }
  if (text.size() % 4 != 0) {
    throw SchemaError("base64 text length is not a multiple of 4");
  }
  // EVP_DecodeBlock tolerates '=' in the middle of the input; padding is only
  // valid as the last one or two characters.
  const auto first_pad = text.find('=');
  if (first_pad != std::string_view::npos &&
      (first_pad < text.size() - 2 || text.find_first_not_of('=', first_pad) != std::string_view::npos)) {
    throw SchemaError("misplaced base64 padding");
  }
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int written = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                      static_cast<int>(text.size()));
  if (written < 0) {
    throw SchemaError("invalid base64 text");
  }
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t padding = 0;
  if (text.back() == '=') {
    ++padding;
    if (text[text.size() - 2] == '=') {
      ++padding;
    }
  }
  out.resize(static_cast<std::size_t>(written) - padding);
  return out;
}

}  // namespace visloop
