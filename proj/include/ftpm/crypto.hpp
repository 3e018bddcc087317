// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

#include "ftpm/bytes.hpp"
#include "ftpm/errors.hpp"

namespace ftpm::crypto {

enum class Direction { Encrypt, Decrypt };

Digest256 sha256(ByteSpan message);

// RFC 2104 HMAC with SHA-256. Rejects empty keys.
Digest256 hmac_sha256(ByteSpan key, ByteSpan message);

Block128 aes128_encrypt_block(const SymKey128& key, const Block128& block);
Block128 aes128_decrypt_block(const SymKey128& key, const Block128& block);

// AES-128 counter mode. The counter block is the IV with its final 32 bits
// incremented big-endian per block. Its own inverse.
Bytes aes128_ctr(const SymKey128& key, const Iv128& iv, ByteSpan data);

// Full-block CFB-128, partial final block permitted.
Bytes aes128_cfb(const SymKey128& key, const Iv128& iv, ByteSpan data, Direction dir);

// NIST SP 800-108 KDF in counter mode, PRF = HMAC-SHA256. Per-iteration PRF
// input: i(32be) || label || 0x00 || context || L(32be).
Bytes kdf_ctr_sp800_108(ByteSpan key, ByteSpan label, ByteSpan context, size_t bits);

// TPM 2.0 KDFa: same construction with two context fields,
// i(32be) || label || 0x00 || context_u || context_v || L(32be).
Bytes kdfa_tpm(ByteSpan seed, std::string_view label, ByteSpan context_u, ByteSpan context_v,
               size_t bits);

// AES-CCM, 12-byte nonce, 16-byte tag. Decrypt verifies the tag before
// releasing any plaintext; a mismatch raises AuthFailure.
Bytes aes_ccm(const SymKey128& key, ByteSpan nonce, ByteSpan aad, ByteSpan data, Direction dir);

inline constexpr size_t kCcmNonceLen = 12;
inline constexpr size_t kCcmTagLen = 16;

}  // namespace ftpm::crypto
