// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ftpm {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

using Block128 = std::array<uint8_t, 16>;
using SymKey128 = std::array<uint8_t, 16>;
using Iv128 = std::array<uint8_t, 16>;
using Digest256 = std::array<uint8_t, 32>;
using MacKey256 = std::array<uint8_t, 32>;

std::string to_hex(ByteSpan data);
Bytes from_hex(std::string_view hex);  // throws Error{FormatError} on bad input

[[noreturn]] void throw_hex_length_error(size_t expected, size_t got);

template <size_t N>
std::array<uint8_t, N> from_hex_fixed(std::string_view hex) {
  Bytes b = from_hex(hex);
  if (b.size() != N) {
    throw_hex_length_error(N, b.size());
  }
  std::array<uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

inline ByteSpan as_span(const Bytes& b) { return ByteSpan(b.data(), b.size()); }

template <size_t N>
ByteSpan as_span(const std::array<uint8_t, N>& a) {
  return ByteSpan(a.data(), N);
}

inline ByteSpan str_span(std::string_view s) {
  return ByteSpan(reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

inline void append(Bytes& out, ByteSpan data) {
  out.insert(out.end(), data.begin(), data.end());
}

inline void append_u16le(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

inline void append_u32le(Bytes& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void append_u16be(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

inline void append_u32be(Bytes& out, uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline uint16_t load_u16le(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

inline uint32_t load_u32le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline uint16_t load_u16be(const uint8_t* p) {
  return static_cast<uint16_t>((p[0] << 8) | p[1]);
}

std::string base64_encode(ByteSpan data);

}  // namespace ftpm
