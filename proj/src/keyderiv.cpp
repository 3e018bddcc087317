// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#include "ftpm/keyderiv.hpp"

#include "ftpm/crypto.hpp"

namespace ftpm::kd {

using namespace crypto;

DerivationSeed derive_seed(const ChipSecret& secret, const DerivationConstant& constant) {
  return aes128_decrypt_block(secret, constant);
}

nv::NvKeys derive_nv_keys(const DerivationSeed& seed, const AppIdentity& identity) {
  if (identity.signing_modulus.empty()) {
    throw Error(Errc::InvalidKey, "signing modulus must be non-empty");
  }
  Digest256 modulus_digest = sha256(as_span(identity.signing_modulus));

  auto mix = [&](std::string_view label) {
    Bytes v = kdf_ctr_sp800_108(as_span(seed), str_span(label), {}, 256);
    Digest256 v1 = hmac_sha256(as_span(v), as_span(modulus_digest));
    return hmac_sha256(as_span(v1), as_span(identity.app_id));
  };

  Digest256 storage_full = mix(kStorageLabel);
  Digest256 integrity_full = mix(kIntegrityLabel);

  nv::NvKeys keys;
  std::copy(storage_full.begin(), storage_full.begin() + 16, keys.storage.begin());
  keys.integrity = integrity_full;
  return keys;
}

nv::NvKeys derive_from_chip_secret(const ChipSecret& secret, const DerivationConstant& constant,
                                   const AppIdentity& identity) {
  return derive_nv_keys(derive_seed(secret, constant), identity);
}

}  // namespace ftpm::kd
