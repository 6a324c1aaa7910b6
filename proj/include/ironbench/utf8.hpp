#pragma once

#include <string_view>

namespace ironbench {

// Strict UTF-8 validation: rejects overlongs, surrogates and code points past U+10FFFF.
bool is_valid_utf8(std::string_view bytes) noexcept;

}  // namespace ironbench
