//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "molsearch/chem/molecule.h"
#include "molsearch/error.h"

namespace molsearch::chem {

enum class SmilesErrc {
  kEmptyInput,
  kUnsupportedToken,
  kUnclosedRing,
  kUnclosedBranch,
  // Misplaced bond symbol, branch without a preceding atom, and the like.
  kSyntax,
  // Ring closure onto the opening atom itself or onto an existing bond.
  kInvalidRingClosure,
};

class SmilesError : public CodedError<SmilesErrc> {
public:
  SmilesError(SmilesErrc code, std::size_t position, const std::string &what)
      : CodedError(code, what), position_(position) { }

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

// Parses the supported SMILES subset:
//   - organic-subset atoms B C N O P S F Cl Br I, aromatic b c n o p s;
//   - bracket atoms with optional isotope, H count, charge and atom class;
//   - branches, ring closures 1-9 and %nn, bond symbols - = # :.
// Stereo markers (@, /, \) are accepted and ignored; each occurrence appends
// a message to `warnings` when given. An unmarked bond between two aromatic
// atoms is aromatic, otherwise single.
Molecule parse_smiles(std::string_view text,
                      std::vector<std::string> *warnings = nullptr);

}  // namespace molsearch::chem
