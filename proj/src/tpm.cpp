// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#include "ftpm/tpm.hpp"

#include <algorithm>
#include <cstring>

#include "ftpm/crypto.hpp"

namespace ftpm::tpm {

using namespace crypto;

namespace {

class Cursor {
 public:
  explicit Cursor(ByteSpan data) : data_(data) {}

  ByteSpan take(size_t n) {
    if (pos_ + n > data_.size()) {
      throw Error(Errc::FormatError, "truncated structure");
    }
    ByteSpan out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  uint16_t u16be() {
    ByteSpan b = take(2);
    return load_u16be(b.data());
  }

  uint32_t u32be() {
    ByteSpan hi = take(4);
    return (static_cast<uint32_t>(hi[0]) << 24) | (hi[1] << 16) | (hi[2] << 8) | hi[3];
  }

  Bytes sized_field() {
    uint16_t len = u16be();
    ByteSpan b = take(len);
    return Bytes(b.begin(), b.end());
  }

  size_t pos() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  ByteSpan data_;
  size_t pos_ = 0;
};

void append_sized(Bytes& out, ByteSpan field) {
  if (field.size() > 0xFFFF) {
    throw Error(Errc::FormatError, "field exceeds 16-bit length prefix");
  }
  append_u16be(out, static_cast<uint16_t>(field.size()));
  append(out, field);
}

}  // namespace

Bytes serialize_public(const TpmPublic& pub) {
  Bytes out;
  append_u16be(out, pub.name_alg);
  append_u32be(out, pub.object_attributes);
  append_sized(out, as_span(pub.auth_policy));
  append_u16be(out, pub.object_type);
  append_sized(out, as_span(pub.public_unique));
  return out;
}

TpmPublic parse_public(ByteSpan raw, size_t* consumed) {
  Cursor c(raw);
  TpmPublic pub;
  pub.name_alg = c.u16be();
  if (pub.name_alg != kAlgSha256) {
    throw Error(Errc::FormatError, "only SHA-256 name_alg is supported");
  }
  pub.object_attributes = c.u32be();
  pub.auth_policy = c.sized_field();
  pub.object_type = c.u16be();
  pub.public_unique = c.sized_field();
  if (consumed) {
    *consumed = c.pos();
  } else if (!c.done()) {
    throw Error(Errc::FormatError, "trailing bytes after public area");
  }
  return pub;
}

Bytes compute_name(const TpmPublic& pub) {
  Bytes out;
  append_u16be(out, pub.name_alg);
  Digest256 d = sha256(as_span(serialize_public(pub)));
  append(out, as_span(d));
  return out;
}

Bytes serialize_sensitive(const TpmSensitive& s) {
  Bytes out;
  append_sized(out, as_span(s.auth_value));
  append_sized(out, as_span(s.seed_value));
  append_sized(out, as_span(s.sensitive_data));
  return out;
}

TpmSensitive parse_sensitive(ByteSpan raw) {
  Cursor c(raw);
  TpmSensitive s;
  s.auth_value = c.sized_field();
  Bytes seed = c.sized_field();
  if (seed.size() != 32) {
    throw Error(Errc::FormatError, "sensitive seed_value must be 32 bytes");
  }
  std::copy(seed.begin(), seed.end(), s.seed_value.begin());
  s.sensitive_data = c.sized_field();
  if (!c.done()) {
    throw Error(Errc::FormatError, "trailing bytes after sensitive area");
  }
  return s;
}

Bytes serialize_private(const TpmPrivate& priv) {
  Bytes out;
  append_u16be(out, 32);
  append(out, as_span(priv.integrity_mac));
  append(out, as_span(priv.iv));
  append(out, as_span(priv.encrypted_sensitive));
  return out;
}

TpmPrivate parse_private(ByteSpan raw, size_t* consumed) {
  Cursor c(raw);
  uint16_t mac_len = c.u16be();
  if (mac_len != 32) {
    throw Error(Errc::FormatError, "private blob MAC length must be 32");
  }
  TpmPrivate priv;
  ByteSpan mac = c.take(32);
  std::copy(mac.begin(), mac.end(), priv.integrity_mac.begin());
  ByteSpan iv = c.take(16);
  std::copy(iv.begin(), iv.end(), priv.iv.begin());
  ByteSpan rest = c.take(raw.size() - c.pos());
  priv.encrypted_sensitive.assign(rest.begin(), rest.end());
  if (priv.encrypted_sensitive.empty()) {
    throw Error(Errc::FormatError, "private blob has no ciphertext");
  }
  if (consumed) *consumed = raw.size();
  return priv;
}

ObjectKeys derive_object_keys(const PrimarySeed& parent_seed, ByteSpan name) {
  ObjectKeys keys;
  Bytes hk = kdfa_tpm(as_span(parent_seed), "INTEGRITY", {}, {}, 256);
  std::copy(hk.begin(), hk.end(), keys.hmac_key.begin());
  Bytes sk = kdfa_tpm(as_span(parent_seed), "STORAGE", name, {}, 128);
  std::copy(sk.begin(), sk.end(), keys.sym_key.begin());
  return keys;
}

namespace {

Bytes private_mac_input(const Iv128& iv, ByteSpan ciphertext, ByteSpan name) {
  Bytes msg;
  append(msg, as_span(iv));
  append(msg, ciphertext);
  append(msg, name);
  return msg;
}

}  // namespace

TpmPrivate seal_object(const TpmSensitive& sensitive, const TpmPublic& pub,
                       const PrimarySeed& parent_seed, const Iv128& iv) {
  Bytes name = compute_name(pub);
  ObjectKeys keys = derive_object_keys(parent_seed, as_span(name));
  TpmPrivate priv;
  priv.iv = iv;
  priv.encrypted_sensitive =
      aes128_cfb(keys.sym_key, iv, as_span(serialize_sensitive(sensitive)), Direction::Encrypt);
  priv.integrity_mac = hmac_sha256(
      as_span(keys.hmac_key),
      as_span(private_mac_input(iv, as_span(priv.encrypted_sensitive), as_span(name))));
  return priv;
}

TpmSensitive unseal_object(const TpmPublic& pub, const TpmPrivate& priv,
                           const PrimarySeed& parent_seed) {
  Bytes name = compute_name(pub);
  ObjectKeys keys = derive_object_keys(parent_seed, as_span(name));
  Digest256 expect = hmac_sha256(
      as_span(keys.hmac_key),
      as_span(private_mac_input(priv.iv, as_span(priv.encrypted_sensitive), as_span(name))));
  if (expect != priv.integrity_mac) {
    throw Error(Errc::WrongSeedOrTampered, "private-blob MAC verification failed");
  }
  Bytes plain =
      aes128_cfb(keys.sym_key, priv.iv, as_span(priv.encrypted_sensitive), Direction::Decrypt);
  return parse_sensitive(as_span(plain));
}

namespace {

// The INTEGRITY derivation ignores the object name, so a candidate seed costs
// one KDFa plus one HMAC over the private blob.
bool seed_verifies(ByteSpan window, const Bytes& mac_msg, const Digest256& mac) {
  PrimarySeed seed{};
  std::copy(window.begin(), window.end(), seed.begin());
  Bytes hk = kdfa_tpm(as_span(seed), "INTEGRITY", {}, {}, 256);
  return hmac_sha256(as_span(hk), as_span(mac_msg)) == mac;
}

}  // namespace

std::optional<SeedHit> find_primary_seed_serial(ByteSpan nv_plaintext, const TpmPublic& pub,
                                                const TpmPrivate& priv) {
  if (nv_plaintext.size() < 32) return std::nullopt;
  Bytes name = compute_name(pub);
  Bytes mac_msg = private_mac_input(priv.iv, as_span(priv.encrypted_sensitive), as_span(name));
  for (size_t off = 0; off + 32 <= nv_plaintext.size(); ++off) {
    if (seed_verifies(nv_plaintext.subspan(off, 32), mac_msg, priv.integrity_mac)) {
      SeedHit hit;
      hit.offset = off;
      std::copy_n(nv_plaintext.begin() + off, 32, hit.seed.begin());
      return hit;
    }
  }
  return std::nullopt;
}

std::optional<SeedHit> find_primary_seed(ByteSpan nv_plaintext, const TpmPublic& pub,
                                         const TpmPrivate& priv) {
  if (nv_plaintext.size() < 32) return std::nullopt;
  Bytes name = compute_name(pub);
  Bytes mac_msg = private_mac_input(priv.iv, as_span(priv.encrypted_sensitive), as_span(name));
  const ptrdiff_t count = static_cast<ptrdiff_t>(nv_plaintext.size() - 31);
  ptrdiff_t best = count;  // sentinel: one past the last valid offset

#pragma omp parallel for schedule(static) reduction(min : best) if (count > 4096)
  for (ptrdiff_t off = 0; off < count; ++off) {
    if (seed_verifies(nv_plaintext.subspan(static_cast<size_t>(off), 32), mac_msg,
                      priv.integrity_mac)) {
      if (off < best) best = off;
    }
  }
  if (best >= count) return std::nullopt;
  SeedHit hit;
  hit.offset = static_cast<size_t>(best);
  std::copy_n(nv_plaintext.begin() + best, 32, hit.seed.begin());
  return hit;
}

std::vector<size_t> find_all_seed_offsets(ByteSpan nv_plaintext, const TpmPublic& pub,
                                          const TpmPrivate& priv) {
  std::vector<size_t> hits;
  if (nv_plaintext.size() < 32) return hits;
  Bytes name = compute_name(pub);
  Bytes mac_msg = private_mac_input(priv.iv, as_span(priv.encrypted_sensitive), as_span(name));
  for (size_t off = 0; off + 32 <= nv_plaintext.size(); ++off) {
    if (seed_verifies(nv_plaintext.subspan(off, 32), mac_msg, priv.integrity_mac)) {
      hits.push_back(off);
    }
  }
  return hits;
}

void PcrBank::extend(size_t index, ByteSpan value) {
  if (index >= kPcrCount) {
    throw Error(Errc::BadPcrIndex, "PCR index " + std::to_string(index) + " out of range");
  }
  Bytes msg;
  append(msg, as_span(regs_[index]));
  append(msg, value);
  regs_[index] = sha256(as_span(msg));
}

void PcrBank::reset() {
  for (auto& r : regs_) r.fill(0);
}

const Digest256& PcrBank::at(size_t index) const {
  if (index >= kPcrCount) {
    throw Error(Errc::BadPcrIndex, "PCR index " + std::to_string(index) + " out of range");
  }
  return regs_[index];
}

PcrPolicy PcrPolicy::make(std::vector<std::pair<uint8_t, Digest256>> expected) {
  if (expected.empty()) {
    throw Error(Errc::FormatError, "PCR policy selection must be non-empty");
  }
  for (const auto& [idx, digest] : expected) {
    if (idx >= kPcrCount) {
      throw Error(Errc::BadPcrIndex, "PCR index " + std::to_string(idx) + " out of range");
    }
  }
  return PcrPolicy{std::move(expected)};
}

bool check_pcr_policy(const PcrBank& bank, const PcrPolicy& policy) {
  for (const auto& [idx, digest] : policy.expected) {
    if (bank.at(idx) != digest) return false;
  }
  return true;
}

Bytes serialize_pcr_policy(const PcrPolicy& policy) {
  Bytes out;
  append_u16le(out, static_cast<uint16_t>(policy.expected.size()));
  for (const auto& [idx, digest] : policy.expected) {
    out.push_back(idx);
    append(out, as_span(digest));
  }
  return out;
}

PcrPolicy parse_pcr_policy(ByteSpan raw) {
  if (raw.size() < 2) {
    throw Error(Errc::FormatError, "PCR policy too short");
  }
  uint16_t count = load_u16le(raw.data());
  if (count == 0 || raw.size() != 2 + count * 33u) {
    throw Error(Errc::FormatError, "PCR policy length mismatch");
  }
  std::vector<std::pair<uint8_t, Digest256>> expected;
  for (size_t i = 0; i < count; ++i) {
    const uint8_t* p = raw.data() + 2 + i * 33;
    Digest256 d{};
    std::copy(p + 1, p + 33, d.begin());
    expected.emplace_back(*p, d);
  }
  return PcrPolicy::make(std::move(expected));
}

}  // namespace ftpm::tpm
