#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace streetsafe {

enum class Label { Safe, Unsafe };

inline std::string_view to_string(Label l) { return l == Label::Safe ? "Safe" : "Unsafe"; }

/// Exact, case-sensitive inverse of to_string.
inline std::optional<Label> label_from_string(std::string_view s) {
  if (s == "Safe") return Label::Safe;
  if (s == "Unsafe") return Label::Unsafe;
  return std::nullopt;
}

inline Label flip(Label l) { return l == Label::Safe ? Label::Unsafe : Label::Safe; }

}  // namespace streetsafe
