// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#include "ftpm/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <cstring>
#include <memory>

namespace ftpm::crypto {

namespace {

struct CtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, CtxDeleter>;

[[noreturn]] void crypto_fail(const char* what) {
  throw std::runtime_error(std::string("openssl failure in ") + what);
}

Block128 aes128_ecb(const SymKey128& key, const Block128& block, Direction dir) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  int enc = dir == Direction::Encrypt ? 1 : 0;
  if (EVP_CipherInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, key.data(), nullptr, enc) != 1) {
    crypto_fail("aes128 init");
  }
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  Block128 out{};
  int len = 0;
  if (EVP_CipherUpdate(ctx.get(), out.data(), &len, block.data(), 16) != 1 || len != 16) {
    crypto_fail("aes128 update");
  }
  return out;
}

}  // namespace

Digest256 sha256(ByteSpan message) {
  Digest256 out{};
  unsigned int len = 0;
  if (EVP_Digest(message.data(), message.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != 32) {
    crypto_fail("sha256");
  }
  return out;
}

Digest256 hmac_sha256(ByteSpan key, ByteSpan message) {
  if (key.empty()) {
    throw Error(Errc::InvalidKey, "HMAC key must be non-empty");
  }
  Digest256 out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(),
           out.data(), &len) == nullptr ||
      len != 32) {
    crypto_fail("hmac");
  }
  return out;
}

Block128 aes128_encrypt_block(const SymKey128& key, const Block128& block) {
  return aes128_ecb(key, block, Direction::Encrypt);
}

Block128 aes128_decrypt_block(const SymKey128& key, const Block128& block) {
  return aes128_ecb(key, block, Direction::Decrypt);
}

Bytes aes128_ctr(const SymKey128& key, const Iv128& iv, ByteSpan data) {
  // The counter wraps within the final 32 bits only, so the keystream is built
  // block by block rather than through a stream cipher context.
  Bytes out(data.size());
  Block128 counter = iv;
  uint32_t ctr = (static_cast<uint32_t>(iv[12]) << 24) | (iv[13] << 16) | (iv[14] << 8) | iv[15];
  for (size_t off = 0; off < data.size(); off += 16) {
    counter[12] = static_cast<uint8_t>(ctr >> 24);
    counter[13] = static_cast<uint8_t>(ctr >> 16);
    counter[14] = static_cast<uint8_t>(ctr >> 8);
    counter[15] = static_cast<uint8_t>(ctr);
    Block128 keystream = aes128_encrypt_block(key, counter);
    size_t n = std::min<size_t>(16, data.size() - off);
    for (size_t i = 0; i < n; ++i) {
      out[off + i] = data[off + i] ^ keystream[i];
    }
    ++ctr;
  }
  return out;
}

Bytes aes128_cfb(const SymKey128& key, const Iv128& iv, ByteSpan data, Direction dir) {
  Bytes out(data.size());
  Block128 feedback = iv;
  for (size_t off = 0; off < data.size(); off += 16) {
    Block128 keystream = aes128_encrypt_block(key, feedback);
    size_t n = std::min<size_t>(16, data.size() - off);
    for (size_t i = 0; i < n; ++i) {
      out[off + i] = data[off + i] ^ keystream[i];
    }
    const uint8_t* next = dir == Direction::Encrypt ? out.data() + off : data.data() + off;
    // Partial final block never feeds back.
    if (n == 16) {
      std::memcpy(feedback.data(), next, 16);
    }
  }
  return out;
}

Bytes kdf_ctr_sp800_108(ByteSpan key, ByteSpan label, ByteSpan context, size_t bits) {
  if (bits == 0 || bits % 8 != 0) {
    throw Error(Errc::InvalidLength, "KDF output length must be a positive multiple of 8 bits");
  }
  size_t out_len = bits / 8;
  Bytes out;
  out.reserve(out_len);
  for (uint32_t i = 1; out.size() < out_len; ++i) {
    Bytes fixed;
    append_u32be(fixed, i);
    append(fixed, label);
    fixed.push_back(0x00);
    append(fixed, context);
    append_u32be(fixed, static_cast<uint32_t>(bits));
    Digest256 block = hmac_sha256(key, fixed);
    size_t take = std::min<size_t>(32, out_len - out.size());
    out.insert(out.end(), block.begin(), block.begin() + take);
  }
  return out;
}

Bytes kdfa_tpm(ByteSpan seed, std::string_view label, ByteSpan context_u, ByteSpan context_v,
               size_t bits) {
  if (bits == 0 || bits % 8 != 0) {
    throw Error(Errc::InvalidLength, "KDFa output length must be a positive multiple of 8 bits");
  }
  size_t out_len = bits / 8;
  Bytes out;
  out.reserve(out_len);
  for (uint32_t i = 1; out.size() < out_len; ++i) {
    Bytes fixed;
    append_u32be(fixed, i);
    append(fixed, str_span(label));
    fixed.push_back(0x00);
    append(fixed, context_u);
    append(fixed, context_v);
    append_u32be(fixed, static_cast<uint32_t>(bits));
    Digest256 block = hmac_sha256(seed, fixed);
    size_t take = std::min<size_t>(32, out_len - out.size());
    out.insert(out.end(), block.begin(), block.begin() + take);
  }
  return out;
}

Bytes aes_ccm(const SymKey128& key, ByteSpan nonce, ByteSpan aad, ByteSpan data, Direction dir) {
  if (nonce.size() != kCcmNonceLen) {
    throw Error(Errc::InvalidNonce, "CCM nonce must be 12 bytes");
  }
  if (dir == Direction::Decrypt && data.size() < kCcmTagLen) {
    throw Error(Errc::AuthFailure, "CCM ciphertext shorter than tag");
  }

  CipherCtx ctx(EVP_CIPHER_CTX_new());
  int enc = dir == Direction::Encrypt ? 1 : 0;
  if (EVP_CipherInit_ex(ctx.get(), EVP_aes_128_ccm(), nullptr, nullptr, nullptr, enc) != 1) {
    crypto_fail("ccm init");
  }
  EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_IVLEN, static_cast<int>(kCcmNonceLen), nullptr);

  size_t msg_len = dir == Direction::Encrypt ? data.size() : data.size() - kCcmTagLen;
  Bytes tag(kCcmTagLen);
  if (dir == Direction::Decrypt) {
    std::copy(data.end() - kCcmTagLen, data.end(), tag.begin());
    EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, static_cast<int>(kCcmTagLen),
                        tag.data());
  } else {
    EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, static_cast<int>(kCcmTagLen), nullptr);
  }
  if (EVP_CipherInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data(), enc) != 1) {
    crypto_fail("ccm key init");
  }

  int len = 0;
  // CCM requires the total message length before any AAD or payload.
  if (EVP_CipherUpdate(ctx.get(), nullptr, &len, nullptr, static_cast<int>(msg_len)) != 1) {
    crypto_fail("ccm length");
  }
  if (!aad.empty() &&
      EVP_CipherUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    crypto_fail("ccm aad");
  }

  // The payload update must run even for a zero-length message (with a valid
  // input pointer) or the CCM tag is never computed.
  Bytes out(msg_len);
  uint8_t empty_in = 0;
  uint8_t empty_out[16];
  const uint8_t* in_ptr = msg_len > 0 ? data.data() : &empty_in;
  uint8_t* out_ptr = msg_len > 0 ? out.data() : empty_out;
  if (EVP_CipherUpdate(ctx.get(), out_ptr, &len, in_ptr, static_cast<int>(msg_len)) != 1) {
    if (dir == Direction::Decrypt) {
      throw Error(Errc::AuthFailure, "CCM tag mismatch");
    }
    crypto_fail("ccm payload");
  }

  if (dir == Direction::Encrypt) {
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, static_cast<int>(kCcmTagLen),
                            tag.data()) != 1) {
      crypto_fail("ccm get tag");
    }
    append(out, as_span(tag));
  }
  return out;
}

}  // namespace ftpm::crypto
