// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0
//
// ftpmtool: command-line front end for the NV decryption / unsealing / FDE
// key-recovery pipeline. The hardware stages that produce a chip secret are
// out of scope; every command takes their data products (hex secrets, seeds,
// dumped images) as explicit inputs.
//
// Exit codes: 0 success, 1 domain failure (nothing found / wrong pin /
// integrity failure), 2 usage or format error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ftpm/ccp.hpp"
#include "ftpm/fde.hpp"
#include "ftpm/keyderiv.hpp"
#include "ftpm/nv.hpp"
#include "ftpm/tpm.hpp"

using namespace ftpm;
using nlohmann::json;

namespace {

struct Globals {
  bool json = false;
  bool verbose = false;
};

bool is_usage_error(Errc c) {
  switch (c) {
    case Errc::InvalidKey:
    case Errc::InvalidLength:
    case Errc::InvalidNonce:
    case Errc::SizeMismatch:
    case Errc::FormatError:
    case Errc::TruncatedEntry:
    case Errc::CapacityError:
    case Errc::BadAddress:
    case Errc::BadPcrIndex:
    case Errc::InvalidPin:
      return true;
    default:
      return false;
  }
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::FormatError, "cannot open " + path);
  }
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, ByteSpan data) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(reinterpret_cast<const char*>(data.data()),
                         static_cast<std::streamsize>(data.size()))) {
    throw Error(Errc::FormatError, "cannot write " + path);
  }
}

// -------- shared key-flag handling --------

struct KeyFlags {
  std::string secret_hex;
  std::string seed_hex;
  std::string constant_hex;
  std::string modulus_hex;
  std::string app_id_hex;
};

void add_key_flags(CLI::App* cmd, KeyFlags& kf) {
  cmd->add_option("--secret", kf.secret_hex, "chip-unique secret (hex, 16 bytes)");
  cmd->add_option("--seed", kf.seed_hex, "derivation seed (hex, 16 bytes)");
  cmd->add_option("--constant", kf.constant_hex, "firmware derivation constant (hex, 16 bytes)");
  cmd->add_option("--modulus", kf.modulus_hex, "application signing-key modulus (hex)")
      ->required();
  cmd->add_option("--app-id", kf.app_id_hex, "application id (hex, 16 bytes)")->required();
}

struct ResolvedKeys {
  kd::DerivationSeed seed{};
  nv::NvKeys keys;
};

ResolvedKeys resolve_keys(const KeyFlags& kf) {
  if (kf.secret_hex.empty() == kf.seed_hex.empty()) {
    throw Error(Errc::FormatError, "exactly one of --secret and --seed must be given");
  }
  ResolvedKeys out;
  if (!kf.secret_hex.empty()) {
    if (kf.constant_hex.empty()) {
      throw Error(Errc::FormatError, "--constant is required with --secret");
    }
    out.seed = kd::derive_seed(from_hex_fixed<16>(kf.secret_hex),
                               from_hex_fixed<16>(kf.constant_hex));
  } else {
    if (!kf.constant_hex.empty()) {
      throw Error(Errc::FormatError, "--constant only applies to the --secret path");
    }
    out.seed = from_hex_fixed<16>(kf.seed_hex);
  }
  kd::AppIdentity id;
  id.signing_modulus = from_hex(kf.modulus_hex);
  id.app_id = from_hex_fixed<16>(kf.app_id_hex);
  out.keys = kd::derive_nv_keys(out.seed, id);
  return out;
}

// -------- sealed-object input handling --------

struct ObjectFlags {
  std::string public_path;
  std::string private_path;
  std::string blob_path;
};

void add_object_flags(CLI::App* cmd, ObjectFlags& of) {
  cmd->add_option("--public", of.public_path, "serialized public area file");
  cmd->add_option("--private", of.private_path, "serialized private blob file");
  cmd->add_option("--blob", of.blob_path,
                  "combined blob file: private length u16 be | private | public");
}

struct LoadedObject {
  tpm::TpmPublic pub;
  tpm::TpmPrivate priv;
};

LoadedObject load_object(const ObjectFlags& of) {
  LoadedObject obj;
  if (!of.blob_path.empty()) {
    if (!of.public_path.empty() || !of.private_path.empty()) {
      throw Error(Errc::FormatError, "--blob excludes --public/--private");
    }
    Bytes raw = read_file(of.blob_path);
    if (raw.size() < 2) {
      throw Error(Errc::FormatError, "combined blob too short");
    }
    size_t priv_len = load_u16be(raw.data());
    if (2 + priv_len > raw.size()) {
      throw Error(Errc::FormatError, "combined blob private length overruns file");
    }
    obj.priv = tpm::parse_private(ByteSpan(raw.data() + 2, priv_len));
    obj.pub = tpm::parse_public(ByteSpan(raw.data() + 2 + priv_len, raw.size() - 2 - priv_len));
  } else {
    if (of.public_path.empty() || of.private_path.empty()) {
      throw Error(Errc::FormatError, "need --public and --private, or --blob");
    }
    obj.pub = tpm::parse_public(as_span(read_file(of.public_path)));
    obj.priv = tpm::parse_private(as_span(read_file(of.private_path)));
  }
  return obj;
}

// -------- subcommand bodies --------

int cmd_derive_keys(const Globals& g, const KeyFlags& kf) {
  ResolvedKeys rk = resolve_keys(kf);
  if (g.json) {
    json j{{"storage", to_hex(as_span(rk.keys.storage))},
           {"integrity", to_hex(as_span(rk.keys.integrity))}};
    if (g.verbose) j["seed"] = to_hex(as_span(rk.seed));
    std::cout << j.dump() << "\n";
  } else {
    if (g.verbose) std::cout << "seed: " << to_hex(as_span(rk.seed)) << "\n";
    std::cout << "storage: " << to_hex(as_span(rk.keys.storage)) << "\n"
              << "integrity: " << to_hex(as_span(rk.keys.integrity)) << "\n";
  }
  return 0;
}

int cmd_nv_decrypt(const Globals& g, const KeyFlags& kf, const std::string& image_path) {
  ResolvedKeys rk = resolve_keys(kf);
  nv::NvImage image = nv::parse_image(as_span(read_file(image_path)));
  nv::DecryptedImage model = nv::decrypt_image(image, rk.keys);

  size_t total = 0, verified = 0;
  for (const auto& [ctx, entries] : model.contexts) {
    for (const auto& e : entries) {
      ++total;
      if (e.verified) ++verified;
    }
  }
  json j = nv::to_json(model);
  if (g.verbose) {
    const nv::NvSection& active = nv::select_active_section(image);
    j["section_macs_ok"] = nv::verify_section_macs(active, rk.keys.integrity);
    json bad = json::array();
    for (uint16_t c : nv::non_monotonic_contexts(active)) bad.push_back(c);
    j["non_monotonic_contexts"] = bad;
  }
  std::cout << (g.json ? j.dump() : j.dump(2)) << "\n";
  if (total > 0 && verified == 0) {
    std::cerr << "error: no entry verified; wrong keys or tampered image\n";
    return 1;
  }
  return 0;
}

int cmd_nv_forge(const KeyFlags& kf, std::string manifest_path, const std::string& out_path) {
  ResolvedKeys rk = resolve_keys(kf);
  if (!std::ifstream(manifest_path)) {
    if (const char* dir = std::getenv("FTPM_FORGE_FIXTURES")) {
      manifest_path = std::string(dir) + "/" + manifest_path;
    }
  }
  Bytes raw = read_file(manifest_path);
  json manifest;
  try {
    manifest = json::parse(raw.begin(), raw.end());
  } catch (const json::exception& e) {
    throw Error(Errc::FormatError, std::string("manifest is not valid JSON: ") + e.what());
  }

  std::array<std::vector<nv::PlainEntry>, 2> sections;
  std::array<uint32_t, 2> sequences{2, 1};
  try {
    if (manifest.contains("section_sequences")) {
      sequences[0] = manifest["section_sequences"].at(0).get<uint32_t>();
      sequences[1] = manifest["section_sequences"].at(1).get<uint32_t>();
    }
    if (manifest.contains("sections")) {
      for (size_t s = 0; s < 2 && s < manifest["sections"].size(); ++s) {
        for (const json& je : manifest["sections"][s]) {
          nv::PlainEntry e;
          e.context = je.at("context").get<uint16_t>();
          e.sequence = je.at("sequence").get<uint32_t>();
          for (const json& f : je.at("fields")) e.fields.push_back(from_hex(f.get<std::string>()));
          sections[s].push_back(std::move(e));
        }
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::FormatError, std::string("bad manifest shape: ") + e.what());
  }

  Bytes image = nv::encode_image(sections, rk.keys, sequences);
  write_file(out_path, as_span(image));
  return 0;
}

int cmd_unseal(const Globals& g, const ObjectFlags& of, const std::string& nv_path,
               const std::string& seed_hex, bool search_only) {
  LoadedObject obj = load_object(of);

  tpm::PrimarySeed seed{};
  std::optional<size_t> offset;
  Bytes nv;
  if (!seed_hex.empty()) {
    if (!nv_path.empty()) {
      throw Error(Errc::FormatError, "--seed and --nv-plaintext are mutually exclusive");
    }
    if (search_only) {
      throw Error(Errc::FormatError, "seed search needs --nv-plaintext, not --seed");
    }
    seed = from_hex_fixed<32>(seed_hex);
  } else {
    if (nv_path.empty()) {
      throw Error(Errc::FormatError, "need --nv-plaintext or --seed");
    }
    nv = read_file(nv_path);
    auto hit = tpm::find_primary_seed(as_span(nv), obj.pub, obj.priv);
    if (!hit) {
      throw Error(Errc::SeedNotFound, "no 32-byte window in the NV plaintext verifies the blob");
    }
    seed = hit->seed;
    offset = hit->offset;
  }

  json j;
  if (offset) {
    j["seed_offset"] = *offset;
    j["seed"] = to_hex(as_span(seed));
    if (g.verbose) {
      json all = json::array();
      for (size_t o : tpm::find_all_seed_offsets(as_span(nv), obj.pub, obj.priv)) all.push_back(o);
      j["all_offsets"] = all;
    }
  }
  if (!search_only) {
    tpm::TpmSensitive s = tpm::unseal_object(obj.pub, obj.priv, seed);
    j["auth_value"] = to_hex(as_span(s.auth_value));
    j["seed_value"] = to_hex(as_span(s.seed_value));
    j["sensitive_data"] = to_hex(as_span(s.sensitive_data));
  }

  if (g.json) {
    std::cout << j.dump() << "\n";
  } else {
    for (const auto& [key, value] : j.items()) {
      std::cout << key << ": "
                << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
    }
  }
  return 0;
}

int cmd_vmk(const Globals& g, const std::string& mode, const std::string& metadata_path,
            const std::string& nv_path, const std::string& pin, bool crack,
            const std::string& charset, size_t length) {
  fde::VolumeMetadata meta = fde::parse_volume_metadata(as_span(read_file(metadata_path)));
  Bytes nv = read_file(nv_path);

  json j{{"protector", mode}};
  if (mode == "tpm-only") {
    fde::Vmk vmk = fde::extract_vmk_tpm_only(meta.require(fde::DatumType::TpmEncoded), as_span(nv));
    j["vmk"] = to_hex(as_span(vmk));
  } else if (mode == "tpm-pin") {
    if (crack) {
      if (charset != "digits") {
        throw Error(Errc::FormatError, "only --charset digits is supported");
      }
      fde::CrackResult res =
          fde::brute_force_pin_parallel(meta, as_span(nv), fde::digit_pin_space(length));
      j["vmk"] = to_hex(as_span(res.vmk));
      j["pin"] = res.pin;
      j["attempts"] = res.attempts;
      j["elapsed_s"] = res.elapsed_s;
      j["rate"] = res.elapsed_s > 0 ? static_cast<double>(res.attempts) / res.elapsed_s : 0.0;
    } else {
      if (pin.empty()) {
        throw Error(Errc::FormatError, "tpm-pin mode needs --pin or --crack");
      }
      j["vmk"] = to_hex(as_span(fde::extract_vmk_tpm_pin(meta, as_span(nv), pin)));
    }
  } else {  // naive
    j["passphrase"] = fde::extract_key_naive(meta, as_span(nv));
  }

  if (g.json) {
    std::cout << j.dump() << "\n";
  } else if (j.contains("passphrase")) {
    std::cout << j["passphrase"].get<std::string>() << "\n";
  } else {
    if (j.contains("pin")) {
      std::cout << "pin: " << j["pin"].get<std::string>() << "\n"
                << "attempts: " << j["attempts"].get<size_t>() << "\n"
                << "elapsed_s: " << j["elapsed_s"].get<double>() << "\n"
                << "rate: " << j["rate"].get<double>() << "\n";
    }
    std::cout << j["vmk"].get<std::string>() << "\n";
  }
  return 0;
}

int cmd_lsb_demo(const Globals& g, size_t slots, const std::string& mode,
                 const std::string& seed_slot_hex) {
  Block128 secret{};
  if (seed_slot_hex.empty()) {
    for (size_t i = 0; i < 16; ++i) secret[i] = static_cast<uint8_t>(0xA0 + i);
  } else {
    secret = from_hex_fixed<16>(seed_slot_hex);
  }
  ccp::LsbState lsb = ccp::LsbState::with_secret(secret, slots);
  ccp::Ccp dev(lsb, mode == "aligned" ? ccp::AlignmentPolicy::AlignedOnly
                                      : ccp::AlignmentPolicy::UnalignedAllowed);

  ccp::ExtractionResult res = ccp::extract_protected_slot(
      [&](const ccp::AesJob& job) { return dev.aes_encrypt(job); },
      [&](const Block128& v) { dev.lsb().write(1, v); }, 1, 0);

  bool match = res.recovered == secret;
  if (g.json) {
    std::cout << json{{"planted", to_hex(as_span(secret))},
                      {"recovered", to_hex(as_span(res.recovered))},
                      {"match", match},
                      {"op_count", res.op_count}}
                     .dump()
              << "\n";
  } else {
    std::cout << "planted:   " << to_hex(as_span(secret)) << "\n"
              << "recovered: " << to_hex(as_span(res.recovered)) << "\n"
              << "match: " << (match ? "yes" : "no") << "\n"
              << "op_count: " << res.op_count << "\n";
  }
  return match ? 0 : 1;
}

int cmd_estimate(const Globals& g, bool table, int entropy, const std::string& tpm) {
  auto cell = [](int bits, double rate) {
    return fde::render_duration(fde::estimate_bruteforce_seconds(bits, rate));
  };
  if (table) {
    if (g.json) {
      json rows = json::array();
      for (const auto& row : fde::kEntropyRows) {
        rows.push_back({{"description", row.description},
                        {"entropy_bits", row.min_entropy_bits},
                        {"ftpm", cell(row.min_entropy_bits, fde::kFtpmGuessRate)},
                        {"dtpm", cell(row.min_entropy_bits, fde::kDtpmGuessRate)}});
      }
      std::cout << rows.dump() << "\n";
    } else {
      std::printf("%-16s %6s  %-12s %-12s\n", "secret", "bits", "fTPM", "dTPM lockout");
      for (const auto& row : fde::kEntropyRows) {
        std::printf("%-16s %6d  %-12s %-12s\n", row.description, row.min_entropy_bits,
                    cell(row.min_entropy_bits, fde::kFtpmGuessRate).c_str(),
                    cell(row.min_entropy_bits, fde::kDtpmGuessRate).c_str());
      }
    }
    return 0;
  }
  double rate = tpm == "dtpm" ? fde::kDtpmGuessRate : fde::kFtpmGuessRate;
  std::string rendered = cell(entropy, rate);
  if (g.json) {
    std::cout << json{{"entropy_bits", entropy}, {"tpm", tpm}, {"estimate", rendered}}.dump()
              << "\n";
  } else {
    std::cout << rendered << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fTPM NV decryption, object unsealing, and FDE key-recovery toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_flag("--json", g.json, "machine-readable JSON output");
  app.add_flag("--verbose", g.verbose, "extra diagnostics");

  KeyFlags dk_keys;
  CLI::App* derive = app.add_subcommand("derive-keys", "derive NV storage/integrity keys");
  add_key_flags(derive, dk_keys);

  KeyFlags nvd_keys;
  std::string nvd_image;
  CLI::App* nvdec = app.add_subcommand("nv-decrypt", "parse, verify, and decrypt an NV image");
  add_key_flags(nvdec, nvd_keys);
  nvdec->add_option("--image", nvd_image, "131072-byte NV image file")->required();

  KeyFlags nvf_keys;
  std::string nvf_manifest, nvf_out;
  CLI::App* nvforge = app.add_subcommand("nv-forge", "encode a fixture NV image from a manifest");
  add_key_flags(nvforge, nvf_keys);
  nvforge->add_option("--manifest", nvf_manifest, "JSON manifest of sections/entries")->required();
  nvforge->add_option("--out", nvf_out, "output image path")->required();

  ObjectFlags un_obj;
  std::string un_nv, un_seed;
  CLI::App* unseal = app.add_subcommand("unseal", "unseal an object given a seed or NV plaintext");
  add_object_flags(unseal, un_obj);
  unseal->add_option("--nv-plaintext", un_nv, "decrypted NV plaintext to search for the seed");
  unseal->add_option("--seed", un_seed, "parent primary seed (hex, 32 bytes)");

  ObjectFlags fs_obj;
  std::string fs_nv;
  CLI::App* findseed = app.add_subcommand("find-seed", "search NV plaintext for the parent seed");
  add_object_flags(findseed, fs_obj);
  findseed->add_option("--nv-plaintext", fs_nv, "decrypted NV plaintext to search")->required();

  std::string vmk_mode, vmk_meta, vmk_nv, vmk_pin, vmk_charset = "digits";
  bool vmk_crack = false;
  size_t vmk_length = 4;
  CLI::App* vmk = app.add_subcommand("vmk", "recover the volume master key or passphrase");
  vmk->add_option("--mode", vmk_mode, "protector type")
      ->required()
      ->check(CLI::IsMember({"tpm-only", "tpm-pin", "naive"}));
  vmk->add_option("--metadata", vmk_meta, "volume-metadata fixture file")->required();
  vmk->add_option("--nv-plaintext", vmk_nv, "decrypted NV plaintext")->required();
  vmk->add_option("--pin", vmk_pin, "pin for tpm-pin mode");
  vmk->add_flag("--crack", vmk_crack, "brute-force the pin");
  vmk->add_option("--charset", vmk_charset, "candidate charset (digits)");
  vmk->add_option("--length", vmk_length, "pin length for --crack");

  size_t lsb_slots = ccp::kDefaultSlots;
  std::string lsb_mode = "unaligned", lsb_seed;
  CLI::App* lsb = app.add_subcommand("lsb-demo", "run the protected-slot extraction demo");
  lsb->add_option("--slots", lsb_slots, "number of LSB slots");
  lsb->add_option("--mode", lsb_mode, "key-address alignment policy")
      ->check(CLI::IsMember({"unaligned", "aligned"}));
  lsb->add_option("--seed-slot", lsb_seed, "planted protected-slot value (hex, 16 bytes)");

  bool est_table = false;
  int est_entropy = -1;
  std::string est_tpm = "ftpm";
  CLI::App* est = app.add_subcommand("estimate", "brute-force time estimates");
  est->add_flag("--table", est_table, "print the full reference table");
  est->add_option("--entropy", est_entropy, "min-entropy in bits");
  est->add_option("--tpm", est_tpm, "attack rate model")->check(CLI::IsMember({"ftpm", "dtpm"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (derive->parsed()) return cmd_derive_keys(g, dk_keys);
    if (nvdec->parsed()) return cmd_nv_decrypt(g, nvd_keys, nvd_image);
    if (nvforge->parsed()) return cmd_nv_forge(nvf_keys, nvf_manifest, nvf_out);
    if (unseal->parsed()) return cmd_unseal(g, un_obj, un_nv, un_seed, /*search_only=*/false);
    if (findseed->parsed()) return cmd_unseal(g, fs_obj, fs_nv, "", /*search_only=*/true);
    if (vmk->parsed())
      return cmd_vmk(g, vmk_mode, vmk_meta, vmk_nv, vmk_pin, vmk_crack, vmk_charset, vmk_length);
    if (lsb->parsed()) return cmd_lsb_demo(g, lsb_slots, lsb_mode, lsb_seed);
    if (est->parsed()) {
      if (!est_table && est_entropy < 0) {
        throw Error(Errc::FormatError, "estimate needs --table or --entropy");
      }
      return cmd_estimate(g, est_table, est_entropy, est_tpm);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_usage_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
