#include <random>

#include <gtest/gtest.h>
#include <visloop/base64.hpp>
#include <visloop/errors.hpp>
#include <visloop/image.hpp>

#include "support.hpp"

namespace visloop {
namespace {

using testing::reference_base64;

TEST(Base64, KnownVectors) {
  auto enc = [](std::string_view s) {
    return base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
}

TEST(Base64, MatchesBitwiseOracleAndRoundTrips) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::uint8_t> data(rng() % 70);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    const std::string text = base64_encode(data);
    ASSERT_EQ(text, reference_base64(data));
    ASSERT_EQ(base64_decode(text), data);
  }
}

TEST(Base64, RejectsMalformedInput) {
  EXPECT_THROW(base64_decode("abc"), SchemaError);
  EXPECT_THROW(base64_decode("ab!d"), SchemaError);
  EXPECT_THROW(base64_decode("a=bc"), SchemaError);
}

TEST(Image, SolidImageHasPngHeaderAndDimensions) {
  const auto img = ImageBlob::solid(37, 23, 1, 2, 3);
  EXPECT_EQ(img.width(), 37u);
  EXPECT_EQ(img.height(), 23u);
  EXPECT_TRUE(has_png_signature(img.bytes()));
  const auto rgb = img.decode_rgb();
  ASSERT_EQ(rgb.size(), 37u * 23u * 3u);
  EXPECT_EQ(rgb[0], 1);
  EXPECT_EQ(rgb[1], 2);
  EXPECT_EQ(rgb[rgb.size() - 1], 3);
}

TEST(Image, RgbRoundTrip) {
  std::vector<std::uint8_t> rgb(5 * 4 * 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = static_cast<std::uint8_t>(i * 7);
  const auto img = ImageBlob::from_rgb(5, 4, rgb);
  EXPECT_EQ(img.decode_rgb(), rgb);
  EXPECT_EQ(ImageBlob::from_base64(img.to_base64()), img);
  EXPECT_EQ(ImageBlob::from_png(img.bytes()), img);
}

TEST(Image, RejectsNonPng) {
  EXPECT_THROW(ImageBlob::from_png(Bytes{1, 2, 3}), InvariantError);
  Bytes truncated(kPngSignature, kPngSignature + 8);
  EXPECT_THROW(ImageBlob::from_png(truncated), InvariantError);
  EXPECT_THROW(ImageBlob::from_rgb(2, 2, std::vector<std::uint8_t>(5)), Error);
}

TEST(Image, FromFile) {
  const auto img = ImageBlob::from_file(testing::fixture("images/ebbinghaus.png"));
  EXPECT_EQ(img.width(), 480u);
  EXPECT_EQ(img.height(), 240u);
  EXPECT_THROW(ImageBlob::from_file(testing::fixture("images/nope.png")), MissingImage);
  EXPECT_THROW(ImageBlob::from_file(testing::fixture("datasets/replay20.jsonl")), InvariantError);
}

}  // namespace
}  // namespace visloop
