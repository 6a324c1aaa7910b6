#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ironbench {

// Byte-level vocabulary: five specials followed by the 256 byte values.
namespace vocab {
inline constexpr std::int32_t pad = 0;
inline constexpr std::int32_t cls = 1;
inline constexpr std::int32_t sep = 2;
inline constexpr std::int32_t unk = 3;
inline constexpr std::int32_t mask = 4;
inline constexpr std::int32_t byte_offset = 5;
inline constexpr std::int32_t size = 261;

constexpr std::int32_t from_byte(unsigned char b) noexcept { return static_cast<std::int32_t>(b) + byte_offset; }
constexpr bool is_byte(std::int32_t id) noexcept { return id >= byte_offset && id < size; }
constexpr bool is_special(std::int32_t id) noexcept { return id >= 0 && id < byte_offset; }
}  // namespace vocab

struct EncodedInput {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> segment_ids;
  std::vector<std::uint8_t> attention_mask;

  std::size_t length() const noexcept { return ids.size(); }
  bool operator==(const EncodedInput&) const = default;
};

/// [CLS] bytes [SEP], right-truncated so the result fits max_seq_len with
/// [SEP] kept last.
EncodedInput encode(std::string_view text, std::size_t max_seq_len);

/// [CLS] a [SEP] b [SEP]. Segment 0 runs through the first [SEP]. When too
/// long, bytes are dropped one at a time from whichever span is longer (the
/// second span on ties).
EncodedInput encode_pair(std::string_view text_a, std::string_view text_b, std::size_t max_seq_len);

// Row-major batch, right-padded with [PAD].
struct Batch {
  std::size_t rows = 0;
  std::size_t width = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> segments;
  std::vector<std::uint8_t> mask;

  std::int32_t id(std::size_t r, std::size_t c) const { return ids[r * width + c]; }
  std::int32_t segment(std::size_t r, std::size_t c) const { return segments[r * width + c]; }
  bool valid(std::size_t r, std::size_t c) const { return mask[r * width + c] != 0; }
};

Batch pad_batch(std::span<const EncodedInput> inputs);
Batch pad_batch(std::span<const EncodedInput* const> inputs);

/// Drops specials and padding, undoes the byte shift and checks the result is
/// UTF-8.
std::string decode(std::span<const std::int32_t> ids);

}  // namespace ironbench
