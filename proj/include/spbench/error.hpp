// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spbench {

/// Base of every error thrown by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data is unusable: bad schema, bad rows, too few issues, failed preconditions on data.
class DataError : public Error {
public:
    using Error::Error;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class PreconditionError : public DataError {
public:
    using DataError::DataError;
};

/// Argument outside an operation's domain (empty training set, k < 1, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what), attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class CredentialError : public Error {
public:
    using Error::Error;
};

/// Training diverged (NaN/Inf loss).
class NumericError : public Error {
public:
    using Error::Error;
};

struct RowError {
    std::size_t row = 0;  // 1-based data row, header excluded
    std::string message;
};

}  // namespace spbench
