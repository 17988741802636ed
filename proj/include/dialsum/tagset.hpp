#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace dialsum {

// The 25-symbol Twitter part-of-speech inventory. The order here fixes the
// label ids used by the tagging head and the column order of style matrices.
inline constexpr std::array<std::string_view, 25> kTagSymbols = {
    "N", "O", "^", "S", "Z", "V", "A", "R", "!", "D", "P", "&", "T",
    "X", "Y", "#", "@", "~", "U", "E", "$", ",", "G", "L", "M"};

inline constexpr int kNumTags = static_cast<int>(kTagSymbols.size());

// Label for structural positions (speaker names, separators, [EOU]).
// Not a member of the tag set; excluded from the tagging loss.
inline constexpr int kIgnoreLabel = -1;

using TagId = int;

inline std::optional<TagId> tag_id(std::string_view symbol) {
  for (int i = 0; i < kNumTags; ++i) {
    if (kTagSymbols[static_cast<std::size_t>(i)] == symbol) return i;
  }
  return std::nullopt;
}

inline std::string_view tag_symbol(TagId id) {
  return kTagSymbols.at(static_cast<std::size_t>(id));
}

inline bool is_tag(std::string_view symbol) { return tag_id(symbol).has_value(); }

}  // namespace dialsum
