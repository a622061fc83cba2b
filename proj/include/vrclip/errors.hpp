#pragma once

#include <stdexcept>
#include <string>

namespace vrclip {

// Caller broke an API contract (mismatched lengths, missing diagnostics, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Invalid user-supplied parameter (bad batch size, inadmissible epsilon, ...).
struct ParamError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An oracle left its numerical domain (overflow guard, diverged iterate).
struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vrclip
