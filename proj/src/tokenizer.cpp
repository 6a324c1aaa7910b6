#include "ironbench/tokenizer.hpp"

#include <algorithm>

#include "ironbench/error.hpp"
#include "ironbench/utf8.hpp"

namespace ironbench {

namespace {

void append_bytes(EncodedInput& out, std::string_view bytes, std::int32_t segment) {
  for (const char c : bytes) {
    out.ids.push_back(vocab::from_byte(static_cast<unsigned char>(c)));
    out.segment_ids.push_back(segment);
  }
}

void append_special(EncodedInput& out, std::int32_t id, std::int32_t segment) {
  out.ids.push_back(id);
  out.segment_ids.push_back(segment);
}

}  // namespace

EncodedInput encode(std::string_view text, std::size_t max_seq_len) {
  require(max_seq_len >= 2, Errc::config, "encode needs max_seq_len >= 2");
  const std::size_t keep = std::min(text.size(), max_seq_len - 2);
  EncodedInput out;
  out.ids.reserve(keep + 2);
  out.segment_ids.reserve(keep + 2);
  append_special(out, vocab::cls, 0);
  append_bytes(out, text.substr(0, keep), 0);
  append_special(out, vocab::sep, 0);
  out.attention_mask.assign(out.ids.size(), 1);
  return out;
}

EncodedInput encode_pair(std::string_view text_a, std::string_view text_b, std::size_t max_seq_len) {
  require(max_seq_len >= 4, Errc::config, "encode_pair needs max_seq_len >= 4");
  std::size_t len_a = text_a.size();
  std::size_t len_b = text_b.size();
  const std::size_t budget = max_seq_len - 3;
  while (len_a + len_b > budget) {
    if (len_a > len_b) --len_a;
    else --len_b;
  }
  EncodedInput out;
  out.ids.reserve(len_a + len_b + 3);
  out.segment_ids.reserve(len_a + len_b + 3);
  append_special(out, vocab::cls, 0);
  append_bytes(out, text_a.substr(0, len_a), 0);
  append_special(out, vocab::sep, 0);
  append_bytes(out, text_b.substr(0, len_b), 1);
  append_special(out, vocab::sep, 1);
  out.attention_mask.assign(out.ids.size(), 1);
  return out;
}

Batch pad_batch(std::span<const EncodedInput* const> inputs) {
  if (inputs.empty()) fail(Errc::empty_batch, "pad_batch called with no inputs");
  Batch batch;
  batch.rows = inputs.size();
  for (const auto* in : inputs) batch.width = std::max(batch.width, in->length());
  batch.ids.assign(batch.rows * batch.width, vocab::pad);
  batch.segments.assign(batch.rows * batch.width, 0);
  batch.mask.assign(batch.rows * batch.width, 0);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const auto& in = *inputs[r];
    std::copy(in.ids.begin(), in.ids.end(), batch.ids.begin() + static_cast<std::ptrdiff_t>(r * batch.width));
    std::copy(in.segment_ids.begin(), in.segment_ids.end(),
              batch.segments.begin() + static_cast<std::ptrdiff_t>(r * batch.width));
    std::copy(in.attention_mask.begin(), in.attention_mask.end(),
              batch.mask.begin() + static_cast<std::ptrdiff_t>(r * batch.width));
  }
  return batch;
}

Batch pad_batch(std::span<const EncodedInput> inputs) {
  std::vector<const EncodedInput*> ptrs;
  ptrs.reserve(inputs.size());
  for (const auto& in : inputs) ptrs.push_back(&in);
  return pad_batch(std::span<const EncodedInput* const>(ptrs));
}

std::string decode(std::span<const std::int32_t> ids) {
  std::string out;
  out.reserve(ids.size());
  for (const auto id : ids) {
    if (vocab::is_byte(id)) out.push_back(static_cast<char>(id - vocab::byte_offset));
    else if (!vocab::is_special(id)) fail(Errc::decode, "id " + std::to_string(id) + " is outside the vocabulary");
  }
  if (!is_valid_utf8(out)) fail(Errc::decode, "decoded bytes are not valid UTF-8");
  return out;
}

}  // namespace ironbench
