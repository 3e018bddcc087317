// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#include "ftpm/nv.hpp"

#include <algorithm>
#include <cstring>

#include <nlohmann/json.hpp>

namespace ftpm::nv {

namespace {

using crypto::aes128_ctr;
using crypto::hmac_sha256;

Iv128 derive_entry_iv(const NvKeys& keys, size_t section_index, uint16_t context,
                      uint32_t sequence) {
  // Deterministic per-entry IV so forging the same manifest twice yields a
  // byte-identical image.
  Bytes msg;
  append(msg, str_span("ftpm-nv-iv"));
  append_u32le(msg, static_cast<uint32_t>(section_index));
  append_u16le(msg, context);
  append_u32le(msg, sequence);
  Digest256 d = hmac_sha256(as_span(keys.integrity), as_span(msg));
  Iv128 iv{};
  std::copy(d.begin(), d.begin() + 16, iv.begin());
  return iv;
}

void append_entry(Bytes& section, const NvEntry& entry) {
  append_u16le(section, kEntryMagic);
  append_u16le(section, entry.context);
  append_u32le(section, entry.sequence);
  for (uint16_t len : entry.field_lengths) append_u16le(section, len);
  append_u16le(section, 0);  // pad
  append(section, as_span(entry.iv));
  append(section, as_span(entry.mac));
  append(section, as_span(entry.ciphertext));
  while (section.size() % 4 != 0) section.push_back(0x00);
}

NvSection parse_section(ByteSpan raw) {
  NvSection sec;
  sec.raw.assign(raw.begin(), raw.end());
  if (std::memcmp(raw.data(), kSectionMagic, 4) != 0) {
    throw Error(Errc::FormatError, "bad section magic");
  }
  if (load_u16le(raw.data() + 4) != kFormatVersion) {
    throw Error(Errc::FormatError, "unsupported section version");
  }
  sec.section_sequence = load_u32le(raw.data() + 6);

  size_t off = kSectionHeaderSize;
  while (off + 2 <= kSectionSize) {
    uint16_t magic = load_u16le(raw.data() + off);
    if (magic == 0xFFFF) break;  // erased flash, end of entries
    if (magic != kEntryMagic) {
      throw Error(Errc::FormatError, "bad entry magic");
    }
    if (off + kEntryHeaderSize > kSectionSize) {
      throw Error(Errc::TruncatedEntry, "entry header overruns section");
    }
    NvEntry e;
    e.offset = off;
    const uint8_t* p = raw.data() + off;
    e.context = load_u16le(p + 2);
    e.sequence = load_u32le(p + 4);
    size_t body = 0;
    for (size_t i = 0; i < kMaxFields; ++i) {
      e.field_lengths[i] = load_u16le(p + 8 + 2 * i);
      body += e.field_lengths[i];
    }
    if (off + kEntryHeaderSize + body > kSectionSize) {
      throw Error(Errc::TruncatedEntry, "entry body overruns section");
    }
    std::copy(p + 24, p + 40, e.iv.begin());
    std::copy(p + 40, p + 72, e.mac.begin());
    e.ciphertext.assign(p + kEntryHeaderSize, p + kEntryHeaderSize + body);
    sec.entries.push_back(std::move(e));
    off += kEntryHeaderSize + body;
    off = (off + 3) & ~size_t{3};
  }
  return sec;
}

NvEntry make_entry(uint16_t context, uint32_t sequence, const std::vector<Bytes>& fields,
                   const NvKeys& keys, size_t section_index, bool encrypt_body) {
  if (fields.size() > kMaxFields) {
    throw Error(Errc::CapacityError, "more than 7 fields in one entry");
  }
  NvEntry e;
  e.context = context;
  e.sequence = sequence;
  Bytes body;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].size() > 0xFFFF) {
      throw Error(Errc::CapacityError, "field exceeds 16-bit length");
    }
    e.field_lengths[i] = static_cast<uint16_t>(fields[i].size());
    append(body, as_span(fields[i]));
  }
  e.iv = derive_entry_iv(keys, section_index, context, sequence);
  e.ciphertext = encrypt_body ? aes128_ctr(keys.storage, e.iv, as_span(body)) : body;
  e.mac = hmac_sha256(as_span(keys.integrity), as_span(e.mac_input()));
  return e;
}

}  // namespace

size_t NvEntry::body_len() const {
  size_t n = 0;
  for (uint16_t len : field_lengths) n += len;
  return n;
}

Bytes NvEntry::mac_input() const {
  Bytes msg;
  append(msg, as_span(iv));
  for (uint16_t len : field_lengths) append_u16le(msg, len);
  append(msg, as_span(ciphertext));
  return msg;
}

NvImage parse_image(ByteSpan raw) {
  if (raw.size() != kImageSize) {
    throw Error(Errc::SizeMismatch, "NV image must be exactly 131072 bytes, got " +
                                        std::to_string(raw.size()));
  }
  NvImage img;
  img.sections[0] = parse_section(raw.subspan(0, kSectionSize));
  img.sections[1] = parse_section(raw.subspan(kSectionSize, kSectionSize));
  return img;
}

const NvSection& select_active_section(const NvImage& image) {
  const auto& a = image.sections[0];
  const auto& b = image.sections[1];
  if (a.section_sequence == b.section_sequence) {
    throw Error(Errc::AmbiguousSections, "both sections carry sequence " +
                                             std::to_string(a.section_sequence));
  }
  return a.section_sequence > b.section_sequence ? a : b;
}

bool verify_entry(const NvEntry& entry, const MacKey256& integrity) {
  Digest256 expect = hmac_sha256(as_span(integrity), as_span(entry.mac_input()));
  return expect == entry.mac;
}

bool verify_section_macs(const NvSection& section, const MacKey256& integrity) {
  for (const NvEntry& e : section.entries) {
    if (e.context != kSectionMacContext) continue;
    bool one_field = e.field_lengths[0] == 32;
    for (size_t i = 1; i < kMaxFields; ++i) one_field = one_field && e.field_lengths[i] == 0;
    if (!one_field || e.ciphertext.size() != 32) {
      throw Error(Errc::FormatError, "section-MAC entry must hold a single 32-byte field");
    }
    Digest256 expect =
        hmac_sha256(as_span(integrity), ByteSpan(section.raw.data(), e.offset));
    if (!std::equal(expect.begin(), expect.end(), e.ciphertext.begin())) {
      return false;
    }
  }
  return true;
}

DecryptedEntry decrypt_entry(const NvEntry& entry, const NvKeys& keys) {
  if (!verify_entry(entry, keys.integrity)) {
    throw Error(Errc::IntegrityError, "entry MAC verification failed; decryption refused");
  }
  DecryptedEntry out;
  out.context = entry.context;
  out.sequence = entry.sequence;
  out.verified = true;
  // Section-MAC bodies are stored unencrypted.
  Bytes body = entry.context == kSectionMacContext
                   ? entry.ciphertext
                   : aes128_ctr(keys.storage, entry.iv, as_span(entry.ciphertext));
  size_t pos = 0;
  for (uint16_t len : entry.field_lengths) {
    if (len == 0) continue;
    out.fields.emplace_back(body.begin() + pos, body.begin() + pos + len);
    pos += len;
  }
  return out;
}

DecryptedImage decrypt_image(const NvImage& image, const NvKeys& keys) {
  const NvSection& active = select_active_section(image);
  DecryptedImage model;
  model.active_section = active.section_sequence;
  for (const NvEntry& e : active.entries) {
    DecryptedEntry d;
    if (verify_entry(e, keys.integrity)) {
      d = decrypt_entry(e, keys);
    } else {
      d.context = e.context;
      d.sequence = e.sequence;
      d.verified = false;
    }
    model.contexts[e.context].push_back(std::move(d));
  }
  for (auto& [ctx, entries] : model.contexts) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const DecryptedEntry& a, const DecryptedEntry& b) {
                       return a.sequence < b.sequence;
                     });
  }
  return model;
}

std::vector<uint16_t> non_monotonic_contexts(const NvSection& section) {
  std::map<uint16_t, uint32_t> last;
  std::vector<uint16_t> bad;
  for (const NvEntry& e : section.entries) {
    auto it = last.find(e.context);
    if (it != last.end() && e.sequence <= it->second) {
      if (bad.empty() || bad.back() != e.context) bad.push_back(e.context);
    }
    last[e.context] = e.sequence;
  }
  return bad;
}

Bytes encode_image(const std::array<std::vector<PlainEntry>, 2>& sections, const NvKeys& keys,
                   const std::array<uint32_t, 2>& section_sequences) {
  Bytes image;
  image.reserve(kImageSize);
  for (size_t s = 0; s < 2; ++s) {
    Bytes sec;
    sec.reserve(kSectionSize);
    append(sec, ByteSpan(reinterpret_cast<const uint8_t*>(kSectionMagic), 4));
    append_u16le(sec, kFormatVersion);
    append_u32le(sec, section_sequences[s]);
    for (int i = 0; i < 6; ++i) sec.push_back(0x00);

    uint32_t mac_seq = 0;
    size_t since_mac = 0;
    auto emit = [&](const NvEntry& e) {
      Bytes staged = sec;
      append_entry(staged, e);
      if (staged.size() > kSectionSize) {
        throw Error(Errc::CapacityError, "section capacity exceeded");
      }
      sec = std::move(staged);
    };
    auto emit_section_mac = [&]() {
      Digest256 mac = hmac_sha256(as_span(keys.integrity), as_span(sec));
      std::vector<Bytes> fields{Bytes(mac.begin(), mac.end())};
      emit(make_entry(kSectionMacContext, ++mac_seq, fields, keys, s, /*encrypt_body=*/false));
      since_mac = 0;
    };

    for (const PlainEntry& pe : sections[s]) {
      if (pe.context == kSectionMacContext) {
        throw Error(Errc::FormatError, "context 0 is reserved for section MACs");
      }
      emit(make_entry(pe.context, pe.sequence, pe.fields, keys, s, /*encrypt_body=*/true));
      if (++since_mac == kSectionMacInterval) emit_section_mac();
    }
    if (since_mac > 0) emit_section_mac();

    sec.resize(kSectionSize, 0xFF);
    append(image, as_span(sec));
  }
  return image;
}

nlohmann::json to_json(const DecryptedImage& model) {
  nlohmann::json contexts = nlohmann::json::object();
  for (const auto& [ctx, entries] : model.contexts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const DecryptedEntry& e : entries) {
      nlohmann::json fields = nlohmann::json::array();
      for (const Bytes& f : e.fields) fields.push_back(to_hex(as_span(f)));
      arr.push_back({{"sequence", e.sequence}, {"fields", fields}, {"verified", e.verified}});
    }
    contexts[std::to_string(ctx)] = std::move(arr);
  }
  return {{"active_section", model.active_section}, {"contexts", contexts}};
}

Bytes flatten_plaintext(const DecryptedImage& model) {
  Bytes out;
  for (const auto& [ctx, entries] : model.contexts) {
    if (ctx == kSectionMacContext) continue;
    for (const DecryptedEntry& e : entries) {
      for (const Bytes& f : e.fields) append(out, as_span(f));
    }
  }
  return out;
}

}  // namespace ftpm::nv
