// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "ftpm/bytes.hpp"
#include "ftpm/errors.hpp"

namespace ftpm::ccp {

inline constexpr size_t kSlotSize = 16;
inline constexpr size_t kDefaultSlots = 8;

enum class AlignmentPolicy {
  UnalignedAllowed,  // pre-Zen 3: byte-granular key addresses
  AlignedOnly,       // Zen 3: unaligned key addresses error out
};

// Simulated Local Storage Buffer: N slots of 16 bytes, with per-slot read and
// write protection fixed at construction. Slot 0 holds the chip-unique secret
// and is protected by default.
class LsbState {
 public:
  LsbState(size_t num_slots, std::vector<bool> protected_slots);

  // Slot 0 = secret, protected; remaining slots zeroed and open.
  static LsbState with_secret(const Block128& secret, size_t num_slots = kDefaultSlots);

  void write(size_t slot, const Block128& value);  // WriteProtected / BadAddress
  Block128 read(size_t slot) const;                // ReadProtected / BadAddress

  size_t num_slots() const { return protected_.size(); }
  bool is_protected(size_t slot) const;

 private:
  friend class Ccp;
  Bytes mem_;
  std::vector<bool> protected_;
};

struct AesJob {
  size_t key_addr = 0;  // byte-granular offset into the LSB
  Block128 input{};
};

// The co-processor front end: runs AES jobs against LSB-resident keys without
// ever disclosing key bytes. Under AlignedOnly, a key_addr that is not a
// multiple of 16 raises AlignmentViolation.
class Ccp {
 public:
  Ccp(LsbState& lsb, AlignmentPolicy policy) : lsb_(lsb), policy_(policy) {}

  Block128 aes_encrypt(const AesJob& job) const;

  LsbState& lsb() { return lsb_; }
  AlignmentPolicy policy() const { return policy_; }

 private:
  LsbState& lsb_;
  AlignmentPolicy policy_;
};

struct ExtractionResult {
  Block128 recovered{};
  size_t op_count = 0;                           // total encrypt invocations
  std::array<uint16_t, 16> window_candidates{};  // candidates tried per window
};

// For the complexity bound asserted in tests: 16 windows x (1 reference + 256
// candidate encryptions).
inline constexpr size_t kMaxExtractionOps = 16 * 256 + 16;

using EncryptOracle = std::function<Block128(const AesJob&)>;
using SlotWriter = std::function<void(const Block128&)>;

// Recovers a read-protected slot through the unaligned-key oversight: slides a
// 16-byte key window one byte at a time across the slot boundary and
// brute-forces the single unknown byte per window by loading each candidate
// key into the writable slot and comparing ciphertexts.
//
// The routine receives only an encrypt oracle and a writer for the one
// writable slot; it has no other access to the LSB. The writable slot must be
// adjacent to the target. Raises ExtractionImpossible when the oracle enforces
// aligned keys and ExtractionFailed when no candidate matches.
ExtractionResult extract_protected_slot(const EncryptOracle& encrypt, const SlotWriter& write_slot,
                                        size_t writable_slot, size_t target_slot);

}  // namespace ftpm::ccp
