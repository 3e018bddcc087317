// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0
//
// SHA-NI fast path for the PIN-stretch chaining loop. The stretch hashes an
// 88-byte record 2^20 times; with the padding precomputed that is exactly two
// compression-function calls per round, which the generic EVP path cannot
// sustain at the required rate.

#if defined(__x86_64__) || defined(_M_X64)

#include <cpuid.h>
#include <immintrin.h>

#include <cstdint>
#include <cstring>

namespace ftpm::fde::detail {

bool cpu_has_sha_ni() {
  unsigned int eax = 0, ebx = 0, ecx = 0, edx = 0;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  return (ebx & (1u << 29)) != 0;
}

namespace {

alignas(16) constexpr uint32_t kRoundConstants[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

inline void compress(__m128i state[2],
                                                                 const uint8_t block[64]) {
  const __m128i shuffle = _mm_set_epi64x(0x0c0d0e0f08090a0bULL, 0x0405060700010203ULL);
  __m128i s0 = state[0];
  __m128i s1 = state[1];
  __m128i msg;
  __m128i m0 = _mm_shuffle_epi8(_mm_loadu_si128(reinterpret_cast<const __m128i*>(block)), shuffle);
  __m128i m1 =
      _mm_shuffle_epi8(_mm_loadu_si128(reinterpret_cast<const __m128i*>(block + 16)), shuffle);
  __m128i m2 =
      _mm_shuffle_epi8(_mm_loadu_si128(reinterpret_cast<const __m128i*>(block + 32)), shuffle);
  __m128i m3 =
      _mm_shuffle_epi8(_mm_loadu_si128(reinterpret_cast<const __m128i*>(block + 48)), shuffle);

  auto round4 = [&](const __m128i& m, int k) {
    msg = _mm_add_epi32(m, _mm_load_si128(reinterpret_cast<const __m128i*>(kRoundConstants + k)));
    s1 = _mm_sha256rnds2_epu32(s1, s0, msg);
    msg = _mm_shuffle_epi32(msg, 0x0E);
    s0 = _mm_sha256rnds2_epu32(s0, s1, msg);
  };
  auto schedule = [](__m128i& a, const __m128i& b, const __m128i& c, const __m128i& d) {
    a = _mm_add_epi32(_mm_sha256msg1_epu32(a, b), _mm_alignr_epi8(d, c, 4));
    a = _mm_sha256msg2_epu32(a, d);
  };

  round4(m0, 0);
  round4(m1, 4);
  round4(m2, 8);
  round4(m3, 12);
  for (int k = 16; k < 64; k += 16) {
    schedule(m0, m1, m2, m3);
    round4(m0, k);
    schedule(m1, m2, m3, m0);
    round4(m1, k + 4);
    schedule(m2, m3, m0, m1);
    round4(m2, k + 8);
    schedule(m3, m0, m1, m2);
    round4(m3, k + 12);
  }
  state[0] = _mm_add_epi32(state[0], s0);
  state[1] = _mm_add_epi32(state[1], s1);
}

}  // namespace

void stretch_rounds_shani(uint8_t record[128],
                                                                      uint32_t rounds) {
  // Initial hash values packed as {ABEF, CDGH} for sha256rnds2.
  const __m128i init0 = _mm_set_epi32(0x6a09e667, 0xbb67ae85, 0x510e527f, 0x9b05688c);
  const __m128i init1 = _mm_set_epi32(0x3c6ef372, 0xa54ff53a, 0x1f83d9ab, 0x5be0cd19);

  for (uint64_t counter = 0; counter < rounds; ++counter) {
    std::memcpy(record + 80, &counter, 8);  // little-endian counter field
    __m128i state[2] = {init0, init1};
    compress(state, record);
    compress(state, record + 64);

    // Unpack {f,e,b,a} / {h,g,d,c} lanes into the big-endian digest that
    // becomes the next round's leading 32 bytes.
    alignas(16) uint32_t a[4], b[4];
    _mm_store_si128(reinterpret_cast<__m128i*>(a), state[0]);
    _mm_store_si128(reinterpret_cast<__m128i*>(b), state[1]);
    const uint32_t words[8] = {a[3], a[2], b[3], b[2], a[1], a[0], b[1], b[0]};
    for (int i = 0; i < 8; ++i) {
      record[4 * i] = static_cast<uint8_t>(words[i] >> 24);
      record[4 * i + 1] = static_cast<uint8_t>(words[i] >> 16);
      record[4 * i + 2] = static_cast<uint8_t>(words[i] >> 8);
      record[4 * i + 3] = static_cast<uint8_t>(words[i]);
    }
  }
}

}  // namespace ftpm::fde::detail

#endif  // x86-64
