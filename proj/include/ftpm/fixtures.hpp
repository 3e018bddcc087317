// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "ftpm/fde.hpp"
#include "ftpm/keyderiv.hpp"
#include "ftpm/nv.hpp"
#include "ftpm/tpm.hpp"

// Deterministic fixture generators. These build the data the attack pipeline
// consumes -- forged NV states, sealed objects, protector metadata -- and act
// as the independent oracles the test suites check the decoders against.

namespace ftpm::fixtures {

using Rng = std::mt19937_64;

Bytes random_bytes(Rng& rng, size_t n);

template <size_t N>
std::array<uint8_t, N> random_array(Rng& rng) {
  Bytes b = random_bytes(rng, N);
  std::array<uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

// A sealed object with random attributes and, when guarded, a random
// non-empty auth policy and auth value (which the unseal path must ignore).
struct SealedFixture {
  tpm::TpmPublic pub;
  tpm::TpmPrivate priv;
  tpm::TpmSensitive sensitive;
  tpm::PrimarySeed parent_seed{};
};

SealedFixture make_sealed_object(Rng& rng, const Bytes& sensitive_data, bool guarded);

// Random buffer with the seed planted at the given offset.
Bytes plant_seed(Rng& rng, size_t len, const tpm::PrimarySeed& seed, size_t offset);

tpm::PcrPolicy random_pcr_policy(Rng& rng);

// Protector fixtures. Each returns metadata plus the NV plaintext holding the
// parent seed, mirroring what NV decryption would yield on a real image.
struct ProtectorFixture {
  fde::VolumeMetadata metadata;
  Bytes nv_plaintext;
  tpm::PrimarySeed parent_seed{};
};

ProtectorFixture make_tpm_only(Rng& rng, const fde::Vmk& vmk);
ProtectorFixture make_tpm_pin(Rng& rng, const fde::Vmk& vmk, std::string_view pin,
                              uint32_t rounds = 1u << 20);
ProtectorFixture make_naive(Rng& rng, const std::array<uint8_t, 32>& secret, bool pin_guarded);

}  // namespace ftpm::fixtures
