#pragma once

#include <stdexcept>
#include <string>

namespace snapiso {

/// A request the store or pipeline refuses because it would break a state
/// invariant (out-of-order block, removing a live key, ...). State is unchanged.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// API misuse: operating on a finished or aborted simulation and the like.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed snapshot, ledger or history bytes.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace snapiso
