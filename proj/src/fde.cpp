// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#include "ftpm/fde.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "ftpm/crypto.hpp"

namespace ftpm::fde {

using namespace crypto;

namespace {

constexpr char kMetadataMagic[4] = {'F', 'V', 'M', 'D'};
constexpr uint16_t kMetadataVersion = 1;

std::atomic<size_t> g_stretch_invocations{0};

}  // namespace

const Datum* VolumeMetadata::find(DatumType type) const {
  for (const Datum& d : datums) {
    if (d.type == type) return &d;
  }
  return nullptr;
}

const Datum& VolumeMetadata::require(DatumType type) const {
  const Datum* d = find(type);
  if (!d) {
    throw Error(Errc::FormatError,
                "metadata lacks datum type " + std::to_string(static_cast<int>(type)));
  }
  return *d;
}

Bytes serialize_metadata(const VolumeMetadata& metadata) {
  Bytes out;
  append(out, ByteSpan(reinterpret_cast<const uint8_t*>(kMetadataMagic), 4));
  append_u16le(out, kMetadataVersion);
  append_u16le(out, static_cast<uint16_t>(metadata.datums.size()));
  for (const Datum& d : metadata.datums) {
    append_u16le(out, static_cast<uint16_t>(d.type));
    append_u32le(out, static_cast<uint32_t>(d.payload.size()));
    append(out, as_span(d.payload));
  }
  return out;
}

VolumeMetadata parse_volume_metadata(ByteSpan raw) {
  if (raw.size() < 8 || std::memcmp(raw.data(), kMetadataMagic, 4) != 0) {
    throw Error(Errc::FormatError, "bad volume-metadata magic");
  }
  if (load_u16le(raw.data() + 4) != kMetadataVersion) {
    throw Error(Errc::FormatError, "unsupported volume-metadata version");
  }
  uint16_t count = load_u16le(raw.data() + 6);
  VolumeMetadata meta;
  size_t off = 8;
  for (uint16_t i = 0; i < count; ++i) {
    if (off + 6 > raw.size()) {
      throw Error(Errc::FormatError, "truncated datum header");
    }
    Datum d;
    d.type = static_cast<DatumType>(load_u16le(raw.data() + off));
    uint32_t len = load_u32le(raw.data() + off + 2);
    off += 6;
    if (off + len > raw.size()) {
      throw Error(Errc::FormatError, "truncated datum payload");
    }
    d.payload.assign(raw.begin() + off, raw.begin() + off + len);
    off += len;
    meta.datums.push_back(std::move(d));
  }
  if (off != raw.size()) {
    throw Error(Errc::FormatError, "trailing bytes after datums");
  }
  return meta;
}

Bytes build_tpm_encoded_payload(ByteSpan priv, ByteSpan pub, ByteSpan policy) {
  Bytes out;
  append_u32le(out, static_cast<uint32_t>(priv.size()));
  append(out, priv);
  append_u32le(out, static_cast<uint32_t>(pub.size()));
  append(out, pub);
  append_u32le(out, static_cast<uint32_t>(policy.size()));
  append(out, policy);
  return out;
}

TpmEncodedParts split_tpm_encoded_datum(const Datum& datum) {
  if (datum.type != DatumType::TpmEncoded && datum.type != DatumType::SealedSecret) {
    throw Error(Errc::FormatError, "datum is not TPM-encoded");
  }
  ByteSpan raw = as_span(datum.payload);
  size_t off = 0;
  auto take_framed = [&]() {
    if (off + 4 > raw.size()) {
      throw Error(Errc::FormatError, "short TPM-encoded datum");
    }
    uint32_t len = load_u32le(raw.data() + off);
    off += 4;
    if (off + len > raw.size()) {
      throw Error(Errc::FormatError, "TPM-encoded datum length overruns payload");
    }
    Bytes out(raw.begin() + off, raw.begin() + off + len);
    off += len;
    return out;
  };
  Bytes priv_raw = take_framed();
  Bytes pub_raw = take_framed();
  Bytes policy_raw = take_framed();
  if (off != raw.size()) {
    throw Error(Errc::FormatError, "leftover bytes in TPM-encoded datum");
  }
  if (policy_raw.empty()) {
    throw Error(Errc::FormatError, "TPM-encoded datum has an empty PCR-policy section");
  }
  TpmEncodedParts parts{tpm::parse_private(as_span(priv_raw)), tpm::parse_public(as_span(pub_raw)),
                        tpm::parse_pcr_policy(as_span(policy_raw)), std::move(priv_raw),
                        std::move(pub_raw), std::move(policy_raw)};
  return parts;
}

namespace {

tpm::TpmSensitive unseal_from_nv(const TpmEncodedParts& parts, ByteSpan nv_plaintext) {
  auto hit = tpm::find_primary_seed(nv_plaintext, parts.pub, parts.priv);
  if (!hit) {
    throw Error(Errc::SeedNotFound, "no primary seed in the decrypted NV state verifies the blob");
  }
  try {
    return tpm::unseal_object(parts.pub, parts.priv, hit->seed);
  } catch (const Error& e) {
    throw Error(Errc::UnsealFailed, e.what());
  }
}

Vmk last_32_bytes(ByteSpan payload, const char* what) {
  if (payload.size() < 32) {
    throw Error(Errc::FormatError, std::string(what) + " shorter than 32 bytes");
  }
  Vmk vmk{};
  std::copy(payload.end() - 32, payload.end(), vmk.begin());
  return vmk;
}

}  // namespace

Vmk extract_vmk_tpm_only(const Datum& datum, ByteSpan nv_plaintext) {
  TpmEncodedParts parts = split_tpm_encoded_datum(datum);
  tpm::TpmSensitive sensitive = unseal_from_nv(parts, nv_plaintext);
  // The sensitive data carries one inner datum record; its payload's last 256
  // bits are the VMK.
  ByteSpan inner = as_span(sensitive.sensitive_data);
  if (inner.size() < 6 ||
      static_cast<DatumType>(load_u16le(inner.data())) != DatumType::Inner) {
    throw Error(Errc::FormatError, "unsealed object does not hold an inner datum");
  }
  uint32_t len = load_u32le(inner.data() + 2);
  if (6 + static_cast<size_t>(len) != inner.size()) {
    throw Error(Errc::FormatError, "inner datum length mismatch");
  }
  return last_32_bytes(inner.subspan(6), "inner datum payload");
}

// -------- PIN stretching --------

#if defined(__x86_64__) || defined(_M_X64)
#define FTPM_HAVE_SHANI_PATH 1
#endif

#ifdef FTPM_HAVE_SHANI_PATH
namespace detail {
bool cpu_has_sha_ni();
void stretch_rounds_shani(uint8_t record[128], uint32_t rounds);
}  // namespace detail
#endif

namespace {

// Portable chaining loop over the pre-padded two-block record.
void stretch_rounds_generic(uint8_t record[128], uint32_t rounds) {
  for (uint64_t counter = 0; counter < rounds; ++counter) {
    for (int i = 0; i < 8; ++i) record[80 + i] = static_cast<uint8_t>(counter >> (8 * i));
    Digest256 d = sha256(ByteSpan(record, 88));
    std::memcpy(record, d.data(), 32);
  }
}

}  // namespace

std::array<uint8_t, 32> stretch_pin(std::string_view pin, const StretchParams& params) {
  if (pin.empty()) {
    throw Error(Errc::InvalidPin, "pin must be non-empty");
  }
  g_stretch_invocations.fetch_add(1, std::memory_order_relaxed);

  // UTF-16LE code units of the pin (code points beyond the BMP are not used
  // by numeric/alphanumeric pins).
  Bytes utf16;
  for (unsigned char c : pin) {
    utf16.push_back(c);
    utf16.push_back(0x00);
  }
  Digest256 initial = sha256(as_span(sha256(as_span(utf16))));

  // 88-byte chaining record padded in place to two SHA-256 blocks:
  // last(32) | initial(32) | salt(16) | counter u64 le | 0x80 | zeros | bitlen.
  uint8_t record[128] = {0};
  std::memcpy(record + 32, initial.data(), 32);
  std::memcpy(record + 64, params.salt.data(), 16);
  record[88] = 0x80;
  record[126] = 0x02;  // 88 * 8 = 704 = 0x2C0 bits, big-endian
  record[127] = 0xC0;

#ifdef FTPM_HAVE_SHANI_PATH
  if (detail::cpu_has_sha_ni()) {
    detail::stretch_rounds_shani(record, params.rounds);
  } else {
    stretch_rounds_generic(record, params.rounds);
  }
#else
  stretch_rounds_generic(record, params.rounds);
#endif

  std::array<uint8_t, 32> out{};
  std::memcpy(out.data(), record, 32);
  return out;
}

size_t stretch_invocations() { return g_stretch_invocations.load(std::memory_order_relaxed); }
void reset_stretch_invocations() { g_stretch_invocations.store(0, std::memory_order_relaxed); }

// -------- TPM+PIN --------

namespace {

SymKey128 combine_keys(const std::array<uint8_t, 32>& unsealed,
                       const std::array<uint8_t, 32>& stretched) {
  Bytes msg;
  append(msg, as_span(unsealed));
  append(msg, as_span(stretched));
  Digest256 d = sha256(as_span(msg));
  SymKey128 key{};
  std::copy(d.begin(), d.begin() + 16, key.begin());
  return key;
}

struct PinProtector {
  std::array<uint8_t, 32> unsealed{};
  StretchParams params;
  Bytes nonce;
  Bytes blob;  // ciphertext || tag
};

PinProtector load_pin_protector(const VolumeMetadata& metadata, ByteSpan nv_plaintext) {
  PinProtector prot;

  TpmEncodedParts parts = split_tpm_encoded_datum(metadata.require(DatumType::TpmEncoded));
  tpm::TpmSensitive sensitive = unseal_from_nv(parts, nv_plaintext);
  if (sensitive.sensitive_data.size() != 32) {
    throw Error(Errc::FormatError, "TPM+PIN intermediate key material must be 32 bytes");
  }
  std::copy(sensitive.sensitive_data.begin(), sensitive.sensitive_data.end(),
            prot.unsealed.begin());

  const Datum& stretch = metadata.require(DatumType::Stretch);
  if (stretch.payload.size() != 20) {
    throw Error(Errc::FormatError, "stretch datum must be salt(16) || rounds(u32)");
  }
  std::copy_n(stretch.payload.begin(), 16, prot.params.salt.begin());
  prot.params.rounds = load_u32le(stretch.payload.data() + 16);

  const Datum& blob = metadata.require(DatumType::AesCcmBlob);
  if (blob.payload.size() < kCcmNonceLen + kCcmTagLen) {
    throw Error(Errc::FormatError, "CCM blob too short");
  }
  prot.nonce.assign(blob.payload.begin(), blob.payload.begin() + kCcmNonceLen);
  prot.blob.assign(blob.payload.begin() + kCcmNonceLen, blob.payload.end());
  return prot;
}

Vmk try_pin(const PinProtector& prot, std::string_view pin) {
  SymKey128 key = combine_keys(prot.unsealed, stretch_pin(pin, prot.params));
  Bytes plain;
  try {
    plain = aes_ccm(key, as_span(prot.nonce), {}, as_span(prot.blob), Direction::Decrypt);
  } catch (const Error& e) {
    if (e.code() == Errc::AuthFailure) {
      throw Error(Errc::WrongPin, "CCM authentication failed");
    }
    throw;
  }
  return last_32_bytes(as_span(plain), "CCM plaintext");
}

}  // namespace

Vmk extract_vmk_tpm_pin(const VolumeMetadata& metadata, ByteSpan nv_plaintext,
                        std::string_view pin) {
  return try_pin(load_pin_protector(metadata, nv_plaintext), pin);
}

CrackResult brute_force_pin(const VolumeMetadata& metadata, ByteSpan nv_plaintext,
                            const std::vector<std::string>& candidates) {
  PinProtector prot = load_pin_protector(metadata, nv_plaintext);
  auto start = std::chrono::steady_clock::now();
  for (size_t i = 0; i < candidates.size(); ++i) {
    try {
      Vmk vmk = try_pin(prot, candidates[i]);
      CrackResult res;
      res.pin = candidates[i];
      res.vmk = vmk;
      res.attempts = i + 1;
      res.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return res;
    } catch (const Error& e) {
      if (e.code() != Errc::WrongPin) throw;
    }
  }
  throw Error(Errc::Exhausted, "candidate space exhausted after " +
                                   std::to_string(candidates.size()) + " attempts");
}

CrackResult brute_force_pin_parallel(const VolumeMetadata& metadata, ByteSpan nv_plaintext,
                                     const std::vector<std::string>& candidates) {
  PinProtector prot = load_pin_protector(metadata, nv_plaintext);
  auto start = std::chrono::steady_clock::now();
  const ptrdiff_t count = static_cast<ptrdiff_t>(candidates.size());
  ptrdiff_t best = count;

#pragma omp parallel for schedule(dynamic, 16) reduction(min : best)
  for (ptrdiff_t i = 0; i < count; ++i) {
    if (i >= best) continue;  // a lower match is already known
    try {
      try_pin(prot, candidates[static_cast<size_t>(i)]);
      if (i < best) best = i;
    } catch (const Error&) {
    }
  }

  if (best >= count) {
    throw Error(Errc::Exhausted, "candidate space exhausted after " +
                                     std::to_string(candidates.size()) + " attempts");
  }
  CrackResult res;
  res.pin = candidates[static_cast<size_t>(best)];
  res.vmk = try_pin(prot, res.pin);
  res.attempts = static_cast<size_t>(best) + 1;
  res.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

std::vector<std::string> digit_pin_space(size_t length) {
  size_t total = 1;
  for (size_t i = 0; i < length; ++i) total *= 10;
  std::vector<std::string> out;
  out.reserve(total);
  for (size_t v = 0; v < total; ++v) {
    std::string s = std::to_string(v);
    out.push_back(std::string(length - s.size(), '0') + s);
  }
  return out;
}

std::string extract_key_naive(const VolumeMetadata& metadata, ByteSpan nv_plaintext) {
  TpmEncodedParts parts = split_tpm_encoded_datum(metadata.require(DatumType::SealedSecret));
  tpm::TpmSensitive sensitive = unseal_from_nv(parts, nv_plaintext);
  if (sensitive.sensitive_data.size() != 32) {
    throw Error(Errc::FormatError, "sealed secret must be 32 bytes");
  }
  return base64_encode(as_span(sensitive.sensitive_data));
}

std::string mitigated_naive_key(const std::array<uint8_t, 32>& secret, std::string_view pin) {
  if (pin.empty()) {
    throw Error(Errc::InvalidPin, "pin must be non-empty");
  }
  return base64_encode(as_span(secret)) + ":" + std::string(pin);
}

// -------- brute-force estimator --------

double estimate_bruteforce_seconds(int entropy_bits, double rate) {
  if (entropy_bits < 0 || rate <= 0) {
    throw Error(Errc::FormatError, "entropy must be >= 0 and rate positive");
  }
  return std::exp2(static_cast<double>(entropy_bits)) / rate;
}

namespace {

double trunc1(double x) { return std::floor(x * 10.0) / 10.0; }

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::string render_duration(double seconds) {
  constexpr double kMinute = 60.0;
  constexpr double kHour = 3600.0;
  constexpr double kDay = 86400.0;
  constexpr double kYear = 365.25 * kDay;
  constexpr double kMonth = kYear / 12.0;

  if (seconds < 10.0) return fmt("%.1f sec", seconds);
  if (seconds < kMinute) return fmt("%.0f sec", seconds);
  if (seconds < kHour) return fmt("%.0f min", std::floor(seconds / kMinute));
  if (seconds < kDay) return fmt("%.1f hr", trunc1(seconds / kHour));
  if (seconds < 60.0 * kDay) return fmt("%.1f days", trunc1(seconds / kDay));
  if (seconds < 2.0 * kYear) return fmt("%.1f mo", trunc1(seconds / kMonth));
  double years = seconds / kYear;
  if (years < 10.0) return fmt("%.1f yr", trunc1(years));
  if (years < 1e5) return fmt("%.0f yr", years);
  int exponent = static_cast<int>(std::floor(std::log10(years)));
  double mantissa = years / std::pow(10.0, exponent);
  if (mantissa >= 9.95) {
    mantissa /= 10.0;
    ++exponent;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f·10^%d yr", mantissa, exponent);
  return buf;
}

}  // namespace ftpm::fde
