// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ftpm/bytes.hpp"
#include "ftpm/nv.hpp"

namespace ftpm::kd {

using ChipSecret = std::array<uint8_t, 16>;       // per-CPU secret, LSB slot 0
using DerivationSeed = std::array<uint8_t, 16>;   // step-1 output; sufficient on its own
using DerivationConstant = std::array<uint8_t, 16>;

struct AppIdentity {
  Bytes signing_modulus;               // big-endian RSA modulus, non-empty
  std::array<uint8_t, 16> app_id{};    // opaque 16-byte application id
};

inline constexpr std::string_view kStorageLabel = "AES key for wrapping data";
inline constexpr std::string_view kIntegrityLabel = "HMAC key for wrapping data";

// Step 1: AES-128 decrypt of the firmware constant under the chip secret.
DerivationSeed derive_seed(const ChipSecret& secret, const DerivationConstant& constant);

// Steps 2-5: two SP 800-108 derivations from the seed, the signing-key digest
// and application id mixed in via chained HMACs, the storage key truncated to
// 128 bits and the integrity key kept at 256.
nv::NvKeys derive_nv_keys(const DerivationSeed& seed, const AppIdentity& identity);

// Full pipeline. Identical to derive_nv_keys(derive_seed(...), ...): the chip
// secret is never consumed after step 1, so a leaked seed suffices.
nv::NvKeys derive_from_chip_secret(const ChipSecret& secret, const DerivationConstant& constant,
                                   const AppIdentity& identity);

}  // namespace ftpm::kd
