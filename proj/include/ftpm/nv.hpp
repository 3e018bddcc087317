// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>

#include "ftpm/bytes.hpp"
#include "ftpm/crypto.hpp"
#include "ftpm/errors.hpp"

#include <nlohmann/json_fwd.hpp>

namespace ftpm::nv {

// On-flash layout, little-endian throughout.
//
// Image: two 64 KiB append-only sections.
// Section header (16 bytes): magic "FTNV" | version u16 = 1 | section_sequence
// u32 | 6 reserved zero bytes.
// Entry header (72 bytes): magic u16 = 0x4E56 | context u16 | sequence u32 |
// field_lengths 7 x u16 | pad u16 = 0 | iv (16) | mac (32). The body of
// sum(field_lengths) bytes follows, then zero padding to 4-byte alignment.
// An entry-magic read of 0xFFFF terminates the section scan (erased flash).
//
// Entry bodies are AES-128-CTR encrypted and authenticated with
// HMAC-SHA256(integrity, iv || field-length table || body). Context 0 is
// reserved for section MACs: a single 32-byte field holding
// HMAC(integrity, section bytes from the section start up to the entry).
// Section-MAC bodies are stored in the clear so they can be checked with the
// integrity key alone.

inline constexpr size_t kSectionSize = 65536;
inline constexpr size_t kImageSize = 2 * kSectionSize;
inline constexpr size_t kSectionHeaderSize = 16;
inline constexpr size_t kEntryHeaderSize = 72;
inline constexpr size_t kMaxFields = 7;
inline constexpr uint16_t kEntryMagic = 0x4E56;
inline constexpr uint16_t kSectionMacContext = 0;
inline constexpr char kSectionMagic[4] = {'F', 'T', 'N', 'V'};
inline constexpr uint16_t kFormatVersion = 1;

// Section-MAC cadence used by the encoder: one after every 8 data entries
// plus one when the section is finalized.
inline constexpr size_t kSectionMacInterval = 8;

struct NvKeys {
  SymKey128 storage{};
  MacKey256 integrity{};
};

struct NvEntry {
  uint16_t context = 0;
  uint32_t sequence = 0;
  std::array<uint16_t, kMaxFields> field_lengths{};
  Iv128 iv{};
  Digest256 mac{};
  Bytes ciphertext;
  size_t offset = 0;  // byte offset of the entry header within its section

  size_t body_len() const;
  Bytes mac_input() const;  // iv || field-length table || ciphertext
};

struct NvSection {
  uint32_t section_sequence = 0;
  std::vector<NvEntry> entries;
  Bytes raw;  // full 64 KiB section, kept for section-MAC verification
};

struct NvImage {
  std::array<NvSection, 2> sections;
};

struct DecryptedEntry {
  uint16_t context = 0;
  uint32_t sequence = 0;
  std::vector<Bytes> fields;  // one per non-zero field length; empty if unverified
  bool verified = false;
};

struct DecryptedImage {
  uint32_t active_section = 0;
  std::map<uint16_t, std::vector<DecryptedEntry>> contexts;
};

// Structure-only parse; no keys required. Total over arbitrary input of the
// right size: returns a structured error, never reads out of bounds.
NvImage parse_image(ByteSpan raw);

// The newer section holds all live data.
const NvSection& select_active_section(const NvImage& image);

bool verify_entry(const NvEntry& entry, const MacKey256& integrity);

// True iff every context-0 entry matches the HMAC of the section bytes
// preceding it. Vacuously true without section-MAC entries.
bool verify_section_macs(const NvSection& section, const MacKey256& integrity);

// MAC check first; refuses to decrypt tampered entries (IntegrityError).
DecryptedEntry decrypt_entry(const NvEntry& entry, const NvKeys& keys);

// Decrypts the active section. Per-entry MAC failures are flagged in the
// result, not fatal for sibling entries.
DecryptedImage decrypt_image(const NvImage& image, const NvKeys& keys);

// Contexts whose entry sequence numbers are not strictly increasing.
std::vector<uint16_t> non_monotonic_contexts(const NvSection& section);

// Test-oracle encoder, the bit-exact inverse of parse + decrypt.
struct PlainEntry {
  uint16_t context = 0;
  uint32_t sequence = 0;
  std::vector<Bytes> fields;  // at most 7
};

Bytes encode_image(const std::array<std::vector<PlainEntry>, 2>& sections, const NvKeys& keys,
                   const std::array<uint32_t, 2>& section_sequences);

nlohmann::json to_json(const DecryptedImage& model);

// Concatenated plaintext of all verified fields in context/sequence order;
// the substrate for the primary-seed window search.
Bytes flatten_plaintext(const DecryptedImage& model);

}  // namespace ftpm::nv
