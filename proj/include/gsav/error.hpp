// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gsav {

/// Base of every error thrown by the library. The CLI maps each subclass to
/// a distinct exit code.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input: bad files, failed invariants on
/// user-supplied values, missing joints.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// A runtime cost or resource guard tripped (e.g. oracle splat limit).
class GuardError : public Error {
  public:
    using Error::Error;
};

/// An internal invariant did not hold; indicates a bug or a misbehaving
/// plug-in.
class InvariantError : public Error {
  public:
    using Error::Error;
};

} // namespace gsav
