// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "ftpm/bytes.hpp"
#include "ftpm/errors.hpp"
#include "ftpm/tpm.hpp"

namespace ftpm::fde {

// Volume-metadata fixture container. Wire form, little-endian:
//   magic "FVMD" | version u16 = 1 | count u16 |
//   count x (datum_type u16 | payload_len u32 | payload)
enum class DatumType : uint16_t {
  TpmEncoded = 1,
  Stretch = 2,
  AesCcmBlob = 3,
  SealedSecret = 4,
  Inner = 5,
};

struct Datum {
  DatumType type = DatumType::Inner;
  Bytes payload;
};

struct VolumeMetadata {
  std::vector<Datum> datums;

  const Datum* find(DatumType type) const;
  const Datum& require(DatumType type) const;  // FormatError when absent
};

Bytes serialize_metadata(const VolumeMetadata& metadata);
VolumeMetadata parse_volume_metadata(ByteSpan raw);

// TPM-encoded datum payload: u32 le lengths framing the private blob, the
// public area, and the appended PCR-policy structure.
struct TpmEncodedParts {
  tpm::TpmPrivate priv;
  tpm::TpmPublic pub;
  tpm::PcrPolicy policy;
  Bytes priv_raw;
  Bytes pub_raw;
  Bytes policy_raw;
};

TpmEncodedParts split_tpm_encoded_datum(const Datum& datum);
Bytes build_tpm_encoded_payload(ByteSpan priv, ByteSpan pub, ByteSpan policy);

using Vmk = std::array<uint8_t, 32>;

// TPM-only protector: seed window search, unseal, inner datum parse, VMK =
// last 32 bytes of the inner payload. The PCR policy is parsed, never
// evaluated.
Vmk extract_vmk_tpm_only(const Datum& datum, ByteSpan nv_plaintext);

struct StretchParams {
  std::array<uint8_t, 16> salt{};
  uint32_t rounds = 1u << 20;
};

// PIN key stretching: initial = sha256(sha256(utf16le(pin))), then 2^20
// iterations of sha256 over the 88-byte chaining record
// {last(32) | initial(32) | salt(16) | counter u64 le}.
std::array<uint8_t, 32> stretch_pin(std::string_view pin, const StretchParams& params);

// Instrumentation for the zero-stretch-invocations check.
size_t stretch_invocations();
void reset_stretch_invocations();

// TPM+PIN protector: unseal the 32-byte intermediate, stretch the pin, CCM
// key = first 16 bytes of sha256(unsealed || stretched), decrypt the blob,
// VMK = last 32 bytes of the plaintext. A wrong pin fails the CCM tag and
// never yields key material.
Vmk extract_vmk_tpm_pin(const VolumeMetadata& metadata, ByteSpan nv_plaintext,
                        std::string_view pin);

struct CrackResult {
  std::string pin;
  Vmk vmk{};
  size_t attempts = 0;
  double elapsed_s = 0.0;
};

// Sequential semantics: the returned pin is the earliest match in candidate
// order and attempts = its index + 1.
CrackResult brute_force_pin(const VolumeMetadata& metadata, ByteSpan nv_plaintext,
                            const std::vector<std::string>& candidates);

// Parallel kernel with the same contract; kept separate so the serial path
// stays the reference.
CrackResult brute_force_pin_parallel(const VolumeMetadata& metadata, ByteSpan nv_plaintext,
                                     const std::vector<std::string>& candidates);

// Fixed-width ascending digit strings, the default candidate space.
std::vector<std::string> digit_pin_space(size_t length);

// Naive sealed-secret protector: the sealed 32-byte secret base64-encoded is
// the volume passphrase; no stretching involved, PIN guard or not.
std::string extract_key_naive(const VolumeMetadata& metadata, ByteSpan nv_plaintext);

// Recommended mitigation: passphrase = base64(secret) ":" pin.
std::string mitigated_naive_key(const std::array<uint8_t, 32>& secret, std::string_view pin);

// Brute-force model: 2^entropy_bits / rate.
double estimate_bruteforce_seconds(int entropy_bits, double rate);
std::string render_duration(double seconds);

struct EntropyRow {
  const char* description;
  int min_entropy_bits;
};

inline constexpr EntropyRow kEntropyRows[] = {
    {"4 digits", 9},
    {"10 digits", 15},
    {"10 characters", 21},
    {"20 characters", 36},
};
inline constexpr double kFtpmGuessRate = 1000.0;        // stretched guesses per second
inline constexpr double kDtpmGuessRate = 1.0 / 600.0;   // one attempt per ten minutes

}  // namespace ftpm::fde
