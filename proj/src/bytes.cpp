// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#include "ftpm/bytes.hpp"

#include "ftpm/errors.hpp"

namespace ftpm {

namespace {

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(ByteSpan data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0F]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw Error(Errc::FormatError, "hex string has odd length");
  }
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_nibble(hex[i]);
    int lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw Error(Errc::FormatError, "invalid hex character");
    }
    out.push_back(static_cast<uint8_t>((hi << 4) | lo));
  }
  return out;
}

void throw_hex_length_error(size_t expected, size_t got) {
  throw Error(Errc::FormatError, "expected " + std::to_string(expected) + " bytes of hex, got " +
                                     std::to_string(got));
}

std::string base64_encode(ByteSpan data) {
  static const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(alphabet[(v >> 18) & 0x3F]);
    out.push_back(alphabet[(v >> 12) & 0x3F]);
    out.push_back(alphabet[(v >> 6) & 0x3F]);
    out.push_back(alphabet[v & 0x3F]);
  }
  size_t rem = data.size() - i;
  if (rem == 1) {
    uint32_t v = data[i] << 16;
    out.push_back(alphabet[(v >> 18) & 0x3F]);
    out.push_back(alphabet[(v >> 12) & 0x3F]);
    out.append("==");
  } else if (rem == 2) {
    uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(alphabet[(v >> 18) & 0x3F]);
    out.push_back(alphabet[(v >> 12) & 0x3F]);
    out.push_back(alphabet[(v >> 6) & 0x3F]);
    out.push_back('=');
  }
  return out;
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidKey: return "InvalidKey";
    case Errc::InvalidLength: return "InvalidLength";
    case Errc::InvalidNonce: return "InvalidNonce";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::FormatError: return "FormatError";
    case Errc::TruncatedEntry: return "TruncatedEntry";
    case Errc::AmbiguousSections: return "AmbiguousSections";
    case Errc::IntegrityError: return "IntegrityError";
    case Errc::CapacityError: return "CapacityError";
    case Errc::WriteProtected: return "WriteProtected";
    case Errc::ReadProtected: return "ReadProtected";
    case Errc::BadAddress: return "BadAddress";
    case Errc::AlignmentViolation: return "AlignmentViolation";
    case Errc::ExtractionFailed: return "ExtractionFailed";
    case Errc::ExtractionImpossible: return "ExtractionImpossible";
    case Errc::BadPcrIndex: return "BadPcrIndex";
    case Errc::WrongSeedOrTampered: return "WrongSeedOrTampered";
    case Errc::SeedNotFound: return "SeedNotFound";
    case Errc::UnsealFailed: return "UnsealFailed";
    case Errc::WrongPin: return "WrongPin";
    case Errc::Exhausted: return "Exhausted";
    case Errc::InvalidPin: return "InvalidPin";
  }
  return "UnknownError";
}

}  // namespace ftpm
