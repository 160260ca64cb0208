// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace styldiff {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operand shapes that cannot be combined.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Arguments outside an operation's precondition box.
class DomainError : public Error {
public:
    using Error::Error;
};

class NonFiniteError : public Error {
public:
    using Error::Error;
};

// Malformed, truncated or corrupted container files.
class FormatError : public Error {
public:
    using Error::Error;
};

class ConfigMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

// Cached artifacts produced under a different model or plan.
class ProvenanceError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace styldiff
