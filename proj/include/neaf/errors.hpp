// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace neaf {

/// Base class of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, sizes, formats).
/// The CLI maps these to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (degeneracy, divergence, singular systems).
/// The CLI maps these to exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError final : public DataError {
 public:
  using DataError::DataError;
};

class ParseError final : public DataError {
 public:
  using DataError::DataError;
};

class LengthMismatch final : public DataError {
 public:
  using DataError::DataError;
};

class CoordinateMismatch final : public DataError {
 public:
  using DataError::DataError;
};

class MissingNormals final : public DataError {
 public:
  using DataError::DataError;
};

class EmptyResult final : public DataError {
 public:
  using DataError::DataError;
};

class BadMagic final : public DataError {
 public:
  using DataError::DataError;
};

class VersionMismatch final : public DataError {
 public:
  using DataError::DataError;
};

class TruncatedFile final : public DataError {
 public:
  using DataError::DataError;
};

class DegeneratePatch final : public NumericError {
 public:
  using NumericError::NumericError;
};

class RankDeficient final : public NumericError {
 public:
  using NumericError::NumericError;
};

class SingularSystem final : public NumericError {
 public:
  using NumericError::NumericError;
};

class NonFinite final : public NumericError {
 public:
  using NumericError::NumericError;
};

class ZeroVector final : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateMean final : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace neaf
