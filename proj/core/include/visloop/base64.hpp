#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace visloop {

// Standard alphabet with '=' padding (RFC 4648 section 4).
std::string base64_encode(std::span<const std::uint8_t> data);

// Throws SchemaError on characters outside the alphabet or a bad length.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace visloop
