// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "ftpm/bytes.hpp"
#include "ftpm/errors.hpp"

namespace ftpm::tpm {

inline constexpr uint16_t kAlgSha256 = 0x000B;
inline constexpr uint16_t kAlgKeyedHash = 0x0008;
inline constexpr size_t kPcrCount = 24;

// Sealed-object public area. Canonical byte form (big-endian integers, 16-bit
// length-prefixed variable fields):
//   name_alg u16 | object_attributes u32 | len(auth_policy) u16 | auth_policy
//   | object_type u16 | len(public_unique) u16 | public_unique
struct TpmPublic {
  uint16_t name_alg = kAlgSha256;
  uint32_t object_attributes = 0;
  Bytes auth_policy;  // possibly empty; never evaluated by the unseal path
  uint16_t object_type = kAlgKeyedHash;
  Bytes public_unique;
};

Bytes serialize_public(const TpmPublic& pub);
// Consumes exactly one public area; *consumed reports the bytes read.
TpmPublic parse_public(ByteSpan raw, size_t* consumed = nullptr);

// name = name_alg (u16 be) || sha256(canonical public bytes); 34 bytes.
Bytes compute_name(const TpmPublic& pub);

// Sensitive area. Canonical form: three 16-bit big-endian length-prefixed
// fields (auth_value, seed_value, sensitive_data), in that order.
struct TpmSensitive {
  Bytes auth_value;
  std::array<uint8_t, 32> seed_value{};
  Bytes sensitive_data;
};

Bytes serialize_sensitive(const TpmSensitive& s);
TpmSensitive parse_sensitive(ByteSpan raw);

// Private blob: mac length u16 be (= 32) | mac | iv (16) | ciphertext.
struct TpmPrivate {
  Digest256 integrity_mac{};
  Iv128 iv{};
  Bytes encrypted_sensitive;  // non-empty
};

Bytes serialize_private(const TpmPrivate& priv);
TpmPrivate parse_private(ByteSpan raw, size_t* consumed = nullptr);

using PrimarySeed = std::array<uint8_t, 32>;

struct ObjectKeys {
  MacKey256 hmac_key{};  // KDFa(seed, "INTEGRITY", "", "", 256)
  SymKey128 sym_key{};   // KDFa(seed, "STORAGE", name, "", 128)
};

ObjectKeys derive_object_keys(const PrimarySeed& parent_seed, ByteSpan name);

// Encrypt-then-MAC: ciphertext = CFB(sym_key, iv, sensitive bytes),
// mac = HMAC(hmac_key, iv || ciphertext || name).
TpmPrivate seal_object(const TpmSensitive& sensitive, const TpmPublic& pub,
                       const PrimarySeed& parent_seed, const Iv128& iv);

// MAC verified before any decryption. Succeeds with nothing but the parent
// seed: auth_policy and auth_value never gate this path.
TpmSensitive unseal_object(const TpmPublic& pub, const TpmPrivate& priv,
                           const PrimarySeed& parent_seed);

struct SeedHit {
  size_t offset = 0;
  PrimarySeed seed{};
};

// Slides a 32-byte window over decrypted NV plaintext one byte at a time and
// MAC-tests each candidate as the parent seed. Lowest verifying offset wins.
std::optional<SeedHit> find_primary_seed(ByteSpan nv_plaintext, const TpmPublic& pub,
                                         const TpmPrivate& priv);

// Serial reference implementation, kept for testing the parallel kernel.
std::optional<SeedHit> find_primary_seed_serial(ByteSpan nv_plaintext, const TpmPublic& pub,
                                                const TpmPrivate& priv);

// All verifying offsets, for verbose reporting.
std::vector<size_t> find_all_seed_offsets(ByteSpan nv_plaintext, const TpmPublic& pub,
                                          const TpmPrivate& priv);

// PCR bank: 24 SHA-256 registers, extend-only, resettable to all zeros.
class PcrBank {
 public:
  void extend(size_t index, ByteSpan value);  // PCR[i] = sha256(old || value)
  void reset();
  const Digest256& at(size_t index) const;

 private:
  std::array<Digest256, kPcrCount> regs_{};
};

struct PcrPolicy {
  // (register index, expected value); non-empty by construction.
  std::vector<std::pair<uint8_t, Digest256>> expected;

  static PcrPolicy make(std::vector<std::pair<uint8_t, Digest256>> expected);
};

bool check_pcr_policy(const PcrBank& bank, const PcrPolicy& policy);

// Wire form: count u16 le | count x (index u8 | digest 32).
Bytes serialize_pcr_policy(const PcrPolicy& policy);
PcrPolicy parse_pcr_policy(ByteSpan raw);

}  // namespace ftpm::tpm
