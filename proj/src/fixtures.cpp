// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#include "ftpm/fixtures.hpp"

#include "ftpm/crypto.hpp"

namespace ftpm::fixtures {

Bytes random_bytes(Rng& rng, size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<uint8_t>(rng());
  return out;
}

tpm::PcrPolicy random_pcr_policy(Rng& rng) {
  size_t count = 1 + rng() % 4;
  std::vector<std::pair<uint8_t, Digest256>> expected;
  for (size_t i = 0; i < count; ++i) {
    expected.emplace_back(static_cast<uint8_t>(rng() % tpm::kPcrCount), random_array<32>(rng));
  }
  return tpm::PcrPolicy::make(std::move(expected));
}

SealedFixture make_sealed_object(Rng& rng, const Bytes& sensitive_data, bool guarded) {
  SealedFixture fx;
  fx.parent_seed = random_array<32>(rng);
  fx.pub.object_attributes = static_cast<uint32_t>(rng());
  fx.pub.public_unique = random_bytes(rng, 16 + rng() % 16);
  if (guarded) {
    fx.pub.auth_policy = random_bytes(rng, 32);
    fx.sensitive.auth_value = random_bytes(rng, 8 + rng() % 8);
  }
  fx.sensitive.seed_value = random_array<32>(rng);
  fx.sensitive.sensitive_data = sensitive_data;
  fx.priv = tpm::seal_object(fx.sensitive, fx.pub, fx.parent_seed, random_array<16>(rng));
  return fx;
}

Bytes plant_seed(Rng& rng, size_t len, const tpm::PrimarySeed& seed, size_t offset) {
  if (offset + 32 > len) {
    throw Error(Errc::BadAddress, "seed does not fit at the requested offset");
  }
  Bytes buf = random_bytes(rng, len);
  std::copy(seed.begin(), seed.end(), buf.begin() + offset);
  return buf;
}

namespace {

fde::Datum tpm_encoded_datum(const SealedFixture& fx, const tpm::PcrPolicy& policy,
                             fde::DatumType type) {
  fde::Datum d;
  d.type = type;
  d.payload = fde::build_tpm_encoded_payload(
      as_span(tpm::serialize_private(fx.priv)), as_span(tpm::serialize_public(fx.pub)),
      as_span(tpm::serialize_pcr_policy(policy)));
  return d;
}

}  // namespace

ProtectorFixture make_tpm_only(Rng& rng, const fde::Vmk& vmk) {
  // Inner datum: random filler with the VMK as the final 256 bits.
  Bytes payload = random_bytes(rng, 16 + rng() % 32);
  append(payload, as_span(vmk));
  Bytes inner;
  append_u16le(inner, static_cast<uint16_t>(fde::DatumType::Inner));
  append_u32le(inner, static_cast<uint32_t>(payload.size()));
  append(inner, as_span(payload));

  SealedFixture fx = make_sealed_object(rng, inner, /*guarded=*/true);

  ProtectorFixture out;
  out.parent_seed = fx.parent_seed;
  out.metadata.datums.push_back(
      tpm_encoded_datum(fx, random_pcr_policy(rng), fde::DatumType::TpmEncoded));
  out.nv_plaintext = plant_seed(rng, 4096, fx.parent_seed, 512 + rng() % 2048);
  return out;
}

ProtectorFixture make_tpm_pin(Rng& rng, const fde::Vmk& vmk, std::string_view pin,
                              uint32_t rounds) {
  Bytes intermediate = random_bytes(rng, 32);
  SealedFixture fx = make_sealed_object(rng, intermediate, /*guarded=*/true);

  fde::StretchParams params;
  params.salt = random_array<16>(rng);
  params.rounds = rounds;

  std::array<uint8_t, 32> unsealed{};
  std::copy(intermediate.begin(), intermediate.end(), unsealed.begin());
  std::array<uint8_t, 32> stretched = fde::stretch_pin(pin, params);

  Bytes both;
  append(both, as_span(unsealed));
  append(both, as_span(stretched));
  Digest256 combined = crypto::sha256(as_span(both));
  SymKey128 ccm_key{};
  std::copy(combined.begin(), combined.begin() + 16, ccm_key.begin());

  Bytes plaintext = random_bytes(rng, 8 + rng() % 24);
  append(plaintext, as_span(vmk));
  Bytes nonce = random_bytes(rng, crypto::kCcmNonceLen);
  Bytes blob = crypto::aes_ccm(ccm_key, as_span(nonce), {}, as_span(plaintext),
                               crypto::Direction::Encrypt);

  ProtectorFixture out;
  out.parent_seed = fx.parent_seed;
  out.metadata.datums.push_back(
      tpm_encoded_datum(fx, random_pcr_policy(rng), fde::DatumType::TpmEncoded));

  fde::Datum stretch;
  stretch.type = fde::DatumType::Stretch;
  append(stretch.payload, as_span(params.salt));
  append_u32le(stretch.payload, params.rounds);
  out.metadata.datums.push_back(std::move(stretch));

  fde::Datum ccm;
  ccm.type = fde::DatumType::AesCcmBlob;
  ccm.payload = nonce;
  append(ccm.payload, as_span(blob));
  out.metadata.datums.push_back(std::move(ccm));

  out.nv_plaintext = plant_seed(rng, 4096, fx.parent_seed, 512 + rng() % 2048);
  return out;
}

ProtectorFixture make_naive(Rng& rng, const std::array<uint8_t, 32>& secret, bool pin_guarded) {
  SealedFixture fx = make_sealed_object(rng, Bytes(secret.begin(), secret.end()), pin_guarded);
  ProtectorFixture out;
  out.parent_seed = fx.parent_seed;
  out.metadata.datums.push_back(
      tpm_encoded_datum(fx, random_pcr_policy(rng), fde::DatumType::SealedSecret));
  out.nv_plaintext = plant_seed(rng, 4096, fx.parent_seed, 512 + rng() % 2048);
  return out;
}

}  // namespace ftpm::fixtures
