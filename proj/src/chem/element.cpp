//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/chem/element.h"

#include <array>

namespace molsearch::chem {
namespace {
// Masses follow the standard atomic weights used by common cheminformatics
// toolkits; valences are the lowest default valence of the organic subset.
constexpr std::array kElements = {
  ElementInfo { "H", 1, 1.008, 1, false, false },
  ElementInfo { "Li", 3, 6.941, 0, false, false },
  ElementInfo { "B", 5, 10.812, 3, true, true },
  ElementInfo { "C", 6, 12.011, 4, true, true },
  ElementInfo { "N", 7, 14.007, 3, true, true },
  ElementInfo { "O", 8, 15.999, 2, true, true },
  ElementInfo { "F", 9, 18.998, 1, true, false },
  ElementInfo { "Na", 11, 22.990, 0, false, false },
  ElementInfo { "Mg", 12, 24.305, 0, false, false },
  ElementInfo { "Si", 14, 28.086, 0, false, false },
  ElementInfo { "P", 15, 30.974, 3, true, true },
  ElementInfo { "S", 16, 32.067, 2, true, true },
  ElementInfo { "Cl", 17, 35.453, 1, true, false },
  ElementInfo { "K", 19, 39.098, 0, false, false },
  ElementInfo { "Ca", 20, 40.078, 0, false, false },
  ElementInfo { "Fe", 26, 55.845, 0, false, false },
  ElementInfo { "Zn", 30, 65.39, 0, false, false },
  ElementInfo { "Se", 34, 78.96, 0, false, true },
  ElementInfo { "Br", 35, 79.904, 1, true, false },
  ElementInfo { "I", 53, 126.904, 1, true, false },
};
}  // namespace

const ElementInfo *find_element(std::string_view symbol) noexcept {
  for (const ElementInfo &e: kElements) {
    if (e.symbol == symbol)
      return &e;
  }
  return nullptr;
}

}  // namespace molsearch::chem
