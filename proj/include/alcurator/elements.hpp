//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_ELEMENTS_HPP_
#define ALCURATOR_ELEMENTS_HPP_

#include <string_view>

namespace alcurator {

/// Atomic number for a case-sensitive element symbol ("H", "Cl"), or 0 when
/// the symbol is not a known element.
int atomic_number(std::string_view symbol) noexcept;

inline bool is_element(std::string_view symbol) noexcept {
  return atomic_number(symbol) != 0;
}

}  // namespace alcurator

#endif  // ALCURATOR_ELEMENTS_HPP_
