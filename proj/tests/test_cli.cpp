// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ftpm/fde.hpp"
#include "ftpm/fixtures.hpp"
#include "ftpm/keyderiv.hpp"
#include "ftpm/tpm.hpp"

using namespace ftpm;
using fixtures::Rng;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  std::string cmd = std::string(FTPM_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult res;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, n);
  int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::filesystem::path scratch_dir() {
  static std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() / "ftpmtool-cli-test";
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_scratch(const std::string& name, ByteSpan data) {
  auto path = scratch_dir() / name;
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  REQUIRE(out.good());
  return path.string();
}

std::string write_scratch(const std::string& name, const std::string& text) {
  return write_scratch(name, str_span(text));
}

const std::string kModulusHex = std::string(64, 'a');
const std::string kAppIdHex = "000102030405060708090a0b0c0d0e0f";
const std::string kSecretHex = "8899aabbccddeeff0011223344556677";
const std::string kConstantHex = "5a5a5a5a5a5a5a5a5a5a5a5a5a5a5a5a";

std::string key_flags_secret() {
  return "--secret " + kSecretHex + " --constant " + kConstantHex + " --modulus " + kModulusHex +
         " --app-id " + kAppIdHex;
}

}  // namespace

TEST_CASE("estimate: table, single cells, usage errors") {
  RunResult table = run_cli("--json estimate --table");
  REQUIRE(table.exit_code == 0);
  json rows = json::parse(table.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0]["ftpm"] == "0.5 sec");
  CHECK(rows[0]["dtpm"] == "3.5 days");
  CHECK(rows[1]["ftpm"] == "33 sec");
  CHECK(rows[2]["ftpm"] == "34 min");
  CHECK(rows[3]["ftpm"] == "2.1 yr");
  CHECK(rows[3]["dtpm"] == "1.3·10^6 yr");

  RunResult one = run_cli("estimate --entropy 0");
  CHECK(one.exit_code == 0);
  CHECK(one.out == "0.0 sec\n");

  CHECK(run_cli("estimate").exit_code == 2);
  CHECK(run_cli("estimate --entropy 9 --tpm quantum").exit_code == 2);
}

TEST_CASE("derive-keys: seed path equals secret+constant path") {
  RunResult via_secret = run_cli("--json derive-keys " + key_flags_secret());
  REQUIRE(via_secret.exit_code == 0);

  kd::DerivationSeed seed =
      kd::derive_seed(from_hex_fixed<16>(kSecretHex), from_hex_fixed<16>(kConstantHex));
  RunResult via_seed = run_cli("--json derive-keys --seed " + to_hex(as_span(seed)) +
                               " --modulus " + kModulusHex + " --app-id " + kAppIdHex);
  REQUIRE(via_seed.exit_code == 0);
  CHECK(json::parse(via_secret.out) == json::parse(via_seed.out));

  // library agreement
  kd::AppIdentity id;
  id.signing_modulus = from_hex(kModulusHex);
  id.app_id = from_hex_fixed<16>(kAppIdHex);
  nv::NvKeys keys = kd::derive_nv_keys(seed, id);
  json j = json::parse(via_secret.out);
  CHECK(j["storage"] == to_hex(as_span(keys.storage)));
  CHECK(j["integrity"] == to_hex(as_span(keys.integrity)));

  CHECK(run_cli("derive-keys --seed zzzz --modulus aa --app-id " + kAppIdHex).exit_code == 2);
  CHECK(run_cli("derive-keys --secret " + kSecretHex + " --seed " + to_hex(as_span(seed)) +
                " --constant " + kConstantHex + " --modulus aa --app-id " + kAppIdHex)
            .exit_code == 2);
  CHECK(run_cli("derive-keys --secret " + kSecretHex + " --modulus aa --app-id " + kAppIdHex)
            .exit_code == 2);
}

TEST_CASE("nv-forge / nv-decrypt round trip") {
  json manifest = {
      {"section_sequences", {7, 3}},
      {"sections",
       {{{{"context", 1}, {"sequence", 1}, {"fields", {"deadbeef", "00ff"}}},
         {{"context", 2}, {"sequence", 5}, {"fields", {"aa"}}}},
        json::array()}}};
  std::string mpath = write_scratch("manifest.json", manifest.dump());
  std::string ipath = (scratch_dir() / "forged.img").string();

  REQUIRE(run_cli("nv-forge " + key_flags_secret() + " --manifest " + mpath + " --out " + ipath)
              .exit_code == 0);
  REQUIRE(std::filesystem::file_size(ipath) == 131072);

  RunResult dec = run_cli("--json nv-decrypt " + key_flags_secret() + " --image " + ipath);
  REQUIRE(dec.exit_code == 0);
  json model = json::parse(dec.out);
  CHECK(model["active_section"] == 7);
  CHECK(model["contexts"]["1"][0]["fields"] == json({"deadbeef", "00ff"}));
  CHECK(model["contexts"]["1"][0]["verified"] == true);
  CHECK(model["contexts"]["2"][0]["sequence"] == 5);

  // forging twice is byte-identical
  std::string ipath2 = (scratch_dir() / "forged2.img").string();
  REQUIRE(run_cli("nv-forge " + key_flags_secret() + " --manifest " + mpath + " --out " + ipath2)
              .exit_code == 0);
  std::ifstream a(ipath, std::ios::binary), b(ipath2, std::ios::binary);
  CHECK(std::equal(std::istreambuf_iterator<char>(a), std::istreambuf_iterator<char>(),
                   std::istreambuf_iterator<char>(b)));

  // wrong secret: parses but every entry is flagged, exit 1
  std::string wrong = key_flags_secret();
  wrong.replace(wrong.find("8899"), 4, "0000");
  RunResult bad = run_cli("--json nv-decrypt " + wrong + " --image " + ipath);
  CHECK(bad.exit_code == 1);

  CHECK(run_cli("nv-decrypt " + key_flags_secret() + " --image /nonexistent.img").exit_code == 2);
  CHECK(run_cli("nv-forge " + key_flags_secret() + " --manifest /nonexistent.json --out " + ipath)
            .exit_code == 2);

  // empty manifest is a valid empty image
  std::string empty = write_scratch("empty.json", std::string("{}"));
  CHECK(run_cli("nv-forge " + key_flags_secret() + " --manifest " + empty + " --out " + ipath2)
            .exit_code == 0);

  // overfull manifest: capacity error
  json big = {{"sections", {json::array(), json::array()}}};
  std::string huge(2 * 0xFFFF, 'a');
  for (int i = 0; i < 3; ++i) {
    big["sections"][0].push_back(
        {{"context", 1}, {"sequence", i + 1}, {"fields", {huge, huge, huge, huge}}});
  }
  std::string bpath = write_scratch("big.json", big.dump());
  CHECK(run_cli("nv-forge " + key_flags_secret() + " --manifest " + bpath + " --out " + ipath2)
            .exit_code == 2);
}

TEST_CASE("unseal and find-seed") {
  Rng rng(81);
  Bytes sensitive_data = fixtures::random_bytes(rng, 24);
  fixtures::SealedFixture fx = fixtures::make_sealed_object(rng, sensitive_data, true);

  Bytes priv = tpm::serialize_private(fx.priv);
  Bytes pub = tpm::serialize_public(fx.pub);
  Bytes blob;
  append_u16be(blob, static_cast<uint16_t>(priv.size()));
  append(blob, as_span(priv));
  append(blob, as_span(pub));
  std::string blob_path = write_scratch("object.blob", as_span(blob));
  std::string pub_path = write_scratch("object.pub", as_span(pub));
  std::string priv_path = write_scratch("object.priv", as_span(priv));

  Bytes nv = fixtures::plant_seed(rng, 4096, fx.parent_seed, 1234);
  std::string nv_path = write_scratch("nv.bin", as_span(nv));

  RunResult searched = run_cli("--json unseal --blob " + blob_path + " --nv-plaintext " + nv_path);
  REQUIRE(searched.exit_code == 0);
  json j = json::parse(searched.out);
  CHECK(j["seed_offset"] == 1234);
  CHECK(j["seed"] == to_hex(as_span(fx.parent_seed)));
  CHECK(j["sensitive_data"] == to_hex(as_span(sensitive_data)));
  CHECK(j["auth_value"] == to_hex(as_span(fx.sensitive.auth_value)));

  // explicit seed, split public/private files: same sensitive, no search
  RunResult direct = run_cli("--json unseal --public " + pub_path + " --private " + priv_path +
                             " --seed " + to_hex(as_span(fx.parent_seed)));
  REQUIRE(direct.exit_code == 0);
  json jd = json::parse(direct.out);
  CHECK(jd["sensitive_data"] == j["sensitive_data"]);
  CHECK(!jd.contains("seed_offset"));

  RunResult fs = run_cli("--json find-seed --blob " + blob_path + " --nv-plaintext " + nv_path);
  REQUIRE(fs.exit_code == 0);
  json jf = json::parse(fs.out);
  CHECK(jf["seed_offset"] == 1234);
  CHECK(!jf.contains("sensitive_data"));

  // seedless plaintext: domain failure
  std::string noise_path = write_scratch("noise.bin", as_span(fixtures::random_bytes(rng, 4096)));
  CHECK(run_cli("unseal --blob " + blob_path + " --nv-plaintext " + noise_path).exit_code == 1);

  CHECK(run_cli("unseal --blob " + blob_path).exit_code == 2);
  CHECK(run_cli("unseal --blob " + blob_path + " --seed " + to_hex(as_span(fx.parent_seed)) +
                " --nv-plaintext " + nv_path)
            .exit_code == 2);
}

TEST_CASE("vmk: tpm-only, tpm-pin, crack, naive") {
  Rng rng(82);
  fde::Vmk vmk = fixtures::random_array<32>(rng);

  fixtures::ProtectorFixture tpm_only = fixtures::make_tpm_only(rng, vmk);
  std::string meta1 = write_scratch("tpm_only.fvmd",
                                    as_span(fde::serialize_metadata(tpm_only.metadata)));
  std::string nv1 = write_scratch("tpm_only.nv", as_span(tpm_only.nv_plaintext));
  RunResult only = run_cli("--json vmk --mode tpm-only --metadata " + meta1 +
                           " --nv-plaintext " + nv1);
  REQUIRE(only.exit_code == 0);
  CHECK(json::parse(only.out)["vmk"] == to_hex(as_span(vmk)));

  fixtures::ProtectorFixture tpm_pin = fixtures::make_tpm_pin(rng, vmk, "0042", /*rounds=*/128);
  std::string meta2 = write_scratch("tpm_pin.fvmd",
                                    as_span(fde::serialize_metadata(tpm_pin.metadata)));
  std::string nv2 = write_scratch("tpm_pin.nv", as_span(tpm_pin.nv_plaintext));

  RunResult pin = run_cli("--json vmk --mode tpm-pin --metadata " + meta2 + " --nv-plaintext " +
                          nv2 + " --pin 0042");
  REQUIRE(pin.exit_code == 0);
  CHECK(json::parse(pin.out)["vmk"] == to_hex(as_span(vmk)));

  CHECK(run_cli("vmk --mode tpm-pin --metadata " + meta2 + " --nv-plaintext " + nv2 +
                " --pin 9999")
            .exit_code == 1);
  CHECK(run_cli("vmk --mode tpm-pin --metadata " + meta2 + " --nv-plaintext " + nv2).exit_code ==
        2);

  RunResult crack = run_cli("--json vmk --mode tpm-pin --metadata " + meta2 + " --nv-plaintext " +
                            nv2 + " --crack --charset digits --length 4");
  REQUIRE(crack.exit_code == 0);
  json jc = json::parse(crack.out);
  CHECK(jc["pin"] == "0042");
  CHECK(jc["vmk"] == to_hex(as_span(vmk)));
  CHECK(jc["attempts"] == 43);
  CHECK(jc["elapsed_s"].get<double>() >= 0.0);

  CHECK(run_cli("vmk --mode tpm-pin --metadata " + meta2 + " --nv-plaintext " + nv2 +
                " --crack --length 2")
            .exit_code == 1);  // exhausted

  auto secret = fixtures::random_array<32>(rng);
  fixtures::ProtectorFixture naive = fixtures::make_naive(rng, secret, /*pin_guarded=*/true);
  std::string meta3 = write_scratch("naive.fvmd",
                                    as_span(fde::serialize_metadata(naive.metadata)));
  std::string nv3 = write_scratch("naive.nv", as_span(naive.nv_plaintext));
  RunResult np = run_cli("vmk --mode naive --metadata " + meta3 + " --nv-plaintext " + nv3);
  REQUIRE(np.exit_code == 0);
  CHECK(np.out == base64_encode(as_span(secret)) + "\n");
}

TEST_CASE("lsb-demo modes") {
  RunResult fixed = run_cli("--json lsb-demo --seed-slot ffeeddccbbaa99887766554433221100");
  REQUIRE(fixed.exit_code == 0);
  json j = json::parse(fixed.out);
  CHECK(j["recovered"] == "ffeeddccbbaa99887766554433221100");
  CHECK(j["match"] == true);
  CHECK(j["op_count"].get<size_t>() <= 4112);

  // deterministic report
  CHECK(run_cli("--json lsb-demo --seed-slot ffeeddccbbaa99887766554433221100").out == fixed.out);

  RunResult aligned = run_cli("lsb-demo --mode aligned");
  CHECK(aligned.exit_code == 1);
  CHECK(aligned.out.find("ExtractionImpossible") != std::string::npos);

  CHECK(run_cli("lsb-demo --mode sideways").exit_code == 2);
  CHECK(run_cli("lsb-demo --seed-slot 1234").exit_code == 2);
}

TEST_CASE("usage basics") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("no-such-command").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}
