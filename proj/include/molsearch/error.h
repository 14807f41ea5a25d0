//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <stdexcept>
#include <string>

namespace molsearch {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Error carrying a module-specific code, so callers can branch on the kind
// without parsing messages.
template <class Code>
class CodedError : public Error {
public:
  CodedError(Code code, const std::string &what): Error(what), code_(code) { }

  Code code() const noexcept { return code_; }

private:
  Code code_;
};

}  // namespace molsearch
