// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ftpm {

enum class Errc {
  // crypto-core
  InvalidKey,
  InvalidLength,
  InvalidNonce,
  AuthFailure,
  // nv-format
  SizeMismatch,
  FormatError,
  TruncatedEntry,
  AmbiguousSections,
  IntegrityError,
  CapacityError,
  // ccp-sim
  WriteProtected,
  ReadProtected,
  BadAddress,
  AlignmentViolation,
  ExtractionFailed,
  ExtractionImpossible,
  // tpm-objects
  BadPcrIndex,
  WrongSeedOrTampered,
  SeedNotFound,
  UnsealFailed,
  // fde-protectors
  WrongPin,
  Exhausted,
  InvalidPin,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace ftpm
