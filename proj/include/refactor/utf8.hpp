#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace refactor::utf8 {

/// Decode UTF-8 into Unicode scalar values. Invalid byte sequences decode
/// to one U+FFFD per offending byte so that counting stays total.
std::vector<char32_t> decode(std::string_view text);

/// Number of Unicode scalar values in `text`.
std::size_t count_scalars(std::string_view text);

/// True if `text` is well-formed UTF-8.
bool is_valid(std::string_view text);

}  // namespace refactor::utf8
