#pragma once

#include <string>
#include <string_view>

namespace visret {

// Number of Unicode scalar values in a UTF-8 string. Bytes that do not
// start a valid sequence are counted as one character each, so the result
// is defined for any byte string.
size_t utf8_length(std::string_view text);

// ASCII-only lowercase copy. Non-ASCII bytes pass through unchanged.
std::string ascii_lower(std::string_view text);

}  // namespace visret
