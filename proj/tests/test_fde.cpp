// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "ftpm/crypto.hpp"
#include "ftpm/fde.hpp"
#include "ftpm/fixtures.hpp"

using namespace ftpm;
using fixtures::Rng;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Independent oracle for the stretch, composed directly from the documented
// record layout and the hash primitive.
std::array<uint8_t, 32> stretch_oracle(std::string_view pin, const fde::StretchParams& p) {
  Bytes utf16;
  for (unsigned char c : pin) {
    utf16.push_back(c);
    utf16.push_back(0);
  }
  Digest256 initial = crypto::sha256(as_span(crypto::sha256(as_span(utf16))));
  Digest256 last{};  // zero-initialized chaining state
  for (uint64_t counter = 0; counter < p.rounds; ++counter) {
    Bytes msg;
    append(msg, as_span(last));
    append(msg, as_span(initial));
    append(msg, as_span(p.salt));
    for (int i = 0; i < 8; ++i) msg.push_back(static_cast<uint8_t>(counter >> (8 * i)));
    last = crypto::sha256(as_span(msg));
  }
  std::array<uint8_t, 32> out{};
  std::copy(last.begin(), last.end(), out.begin());
  return out;
}

}  // namespace

TEST_CASE("volume metadata round trip") {
  Rng rng(61);
  for (int i = 0; i < 100; ++i) {
    fde::VolumeMetadata meta;
    size_t n = rng() % 6;
    for (size_t d = 0; d < n; ++d) {
      fde::Datum datum;
      datum.type = static_cast<fde::DatumType>(1 + rng() % 5);
      datum.payload = fixtures::random_bytes(rng, rng() % 100);
      meta.datums.push_back(std::move(datum));
    }
    Bytes raw = fde::serialize_metadata(meta);
    fde::VolumeMetadata back = fde::parse_volume_metadata(as_span(raw));
    REQUIRE(back.datums.size() == meta.datums.size());
    for (size_t d = 0; d < n; ++d) {
      CHECK(back.datums[d].type == meta.datums[d].type);
      CHECK(back.datums[d].payload == meta.datums[d].payload);
    }
  }

  fde::VolumeMetadata meta;
  fde::Datum d;
  d.type = fde::DatumType::Stretch;
  d.payload = fixtures::random_bytes(rng, 20);
  meta.datums.push_back(d);
  Bytes raw = fde::serialize_metadata(meta);

  CHECK(fde::parse_volume_metadata(as_span(raw)).find(fde::DatumType::Stretch) != nullptr);
  CHECK(fde::parse_volume_metadata(as_span(raw)).find(fde::DatumType::Inner) == nullptr);
  CHECK_THROWS_WITH_AS(meta.require(fde::DatumType::Inner), doctest::Contains("lacks"), Error);

  Bytes bad = raw;
  bad[0] = 'X';
  CHECK_THROWS_AS(fde::parse_volume_metadata(as_span(bad)), Error);
  bad = raw;
  bad[4] = 9;
  CHECK_THROWS_WITH_AS(fde::parse_volume_metadata(as_span(bad)), doctest::Contains("version"),
                       Error);
  CHECK_THROWS_WITH_AS(fde::parse_volume_metadata(ByteSpan(raw.data(), raw.size() - 1)),
                       doctest::Contains("truncated"), Error);
  raw.push_back(0);
  CHECK_THROWS_WITH_AS(fde::parse_volume_metadata(as_span(raw)), doctest::Contains("trailing"),
                       Error);
}

TEST_CASE("tpm-encoded datum framing") {
  Rng rng(62);
  Bytes priv = fixtures::random_bytes(rng, 60);
  Bytes pub = fixtures::random_bytes(rng, 30);
  fixtures::SealedFixture fx = fixtures::make_sealed_object(rng, fixtures::random_bytes(rng, 8),
                                                            false);
  Bytes real_priv = tpm::serialize_private(fx.priv);
  Bytes real_pub = tpm::serialize_public(fx.pub);
  Bytes policy = tpm::serialize_pcr_policy(fixtures::random_pcr_policy(rng));

  fde::Datum d;
  d.type = fde::DatumType::TpmEncoded;
  d.payload = fde::build_tpm_encoded_payload(as_span(real_priv), as_span(real_pub),
                                             as_span(policy));
  fde::TpmEncodedParts parts = fde::split_tpm_encoded_datum(d);
  CHECK(parts.priv_raw == real_priv);
  CHECK(parts.pub_raw == real_pub);
  CHECK(parts.policy_raw == policy);

  fde::Datum empty_policy = d;
  empty_policy.payload = fde::build_tpm_encoded_payload(as_span(real_priv), as_span(real_pub), {});
  CHECK_THROWS_WITH_AS(fde::split_tpm_encoded_datum(empty_policy),
                       doctest::Contains("PCR-policy"), Error);

  fde::Datum wrong_type = d;
  wrong_type.type = fde::DatumType::Stretch;
  CHECK_THROWS_AS(fde::split_tpm_encoded_datum(wrong_type), Error);

  fde::Datum short_payload = d;
  short_payload.payload.resize(3);
  CHECK_THROWS_AS(fde::split_tpm_encoded_datum(short_payload), Error);
  fde::Datum extra = d;
  extra.payload.push_back(0);
  CHECK_THROWS_WITH_AS(fde::split_tpm_encoded_datum(extra), doctest::Contains("leftover"), Error);
}

TEST_CASE("tpm-only protector yields the planted vmk") {
  Rng rng(63);
  for (int i = 0; i < 10; ++i) {
    fde::Vmk vmk = fixtures::random_array<32>(rng);
    fixtures::ProtectorFixture fx = fixtures::make_tpm_only(rng, vmk);
    CHECK(fde::extract_vmk_tpm_only(fx.metadata.require(fde::DatumType::TpmEncoded),
                                    as_span(fx.nv_plaintext)) == vmk);
  }
}

TEST_CASE("pcr policy never gates the tpm-only extraction") {
  Rng rng(64);
  fde::Vmk vmk = fixtures::random_array<32>(rng);
  fixtures::ProtectorFixture fx = fixtures::make_tpm_only(rng, vmk);

  // Swap in a completely different policy: same result.
  fde::TpmEncodedParts parts =
      fde::split_tpm_encoded_datum(fx.metadata.require(fde::DatumType::TpmEncoded));
  Bytes other_policy = tpm::serialize_pcr_policy(fixtures::random_pcr_policy(rng));
  REQUIRE(other_policy != parts.policy_raw);
  fde::Datum swapped;
  swapped.type = fde::DatumType::TpmEncoded;
  swapped.payload = fde::build_tpm_encoded_payload(as_span(parts.priv_raw), as_span(parts.pub_raw),
                                                   as_span(other_policy));
  CHECK(fde::extract_vmk_tpm_only(swapped, as_span(fx.nv_plaintext)) == vmk);
}

TEST_CASE("tpm-only failure modes") {
  Rng rng(65);
  fde::Vmk vmk = fixtures::random_array<32>(rng);
  fixtures::ProtectorFixture fx = fixtures::make_tpm_only(rng, vmk);
  const fde::Datum& datum = fx.metadata.require(fde::DatumType::TpmEncoded);

  Bytes seedless = fixtures::random_bytes(rng, fx.nv_plaintext.size());
  CHECK_THROWS_WITH_AS(fde::extract_vmk_tpm_only(datum, as_span(seedless)),
                       doctest::Contains("SeedNotFound"), Error);

  // A sealed object without an inner datum is a format error.
  fixtures::SealedFixture plain =
      fixtures::make_sealed_object(rng, fixtures::random_bytes(rng, 40), false);
  fde::Datum bad;
  bad.type = fde::DatumType::TpmEncoded;
  bad.payload = fde::build_tpm_encoded_payload(
      as_span(tpm::serialize_private(plain.priv)), as_span(tpm::serialize_public(plain.pub)),
      as_span(tpm::serialize_pcr_policy(fixtures::random_pcr_policy(rng))));
  Bytes nv = fixtures::plant_seed(rng, 2048, plain.parent_seed, 77);
  CHECK_THROWS_WITH_AS(fde::extract_vmk_tpm_only(bad, as_span(nv)),
                       doctest::Contains("inner datum"), Error);
}

TEST_CASE("stretch_pin matches the record-layout oracle") {
  Rng rng(66);
  for (uint32_t rounds : {1u, 2u, 3u, 100u, 1000u}) {
    fde::StretchParams p;
    p.salt = fixtures::random_array<16>(rng);
    p.rounds = rounds;
    CHECK(fde::stretch_pin("1234", p) == stretch_oracle("1234", p));
    CHECK(fde::stretch_pin("longer alphanumeric pin 42", p) ==
          stretch_oracle("longer alphanumeric pin 42", p));
  }

  fde::StretchParams p;
  p.salt = fixtures::random_array<16>(rng);
  p.rounds = 64;
  CHECK(fde::stretch_pin("0000", p) != fde::stretch_pin("0001", p));
  fde::StretchParams q = p;
  q.salt[3] ^= 1;
  CHECK(fde::stretch_pin("0000", p) != fde::stretch_pin("0000", q));
  CHECK_THROWS_WITH_AS(fde::stretch_pin("", p), doctest::Contains("InvalidPin"), Error);

  fde::reset_stretch_invocations();
  fde::stretch_pin("1", p);
  fde::stretch_pin("2", p);
  CHECK(fde::stretch_invocations() == 2);
}

TEST_CASE("stretch cost grows linearly in the round count") {
  Rng rng(67);
  fde::StretchParams p;
  p.salt = fixtures::random_array<16>(rng);

  const uint32_t rounds[] = {1u << 10, 1u << 12, 1u << 14};
  double times[3];
  for (int i = 0; i < 3; ++i) {
    p.rounds = rounds[i];
    double best = 1e9;
    for (int rep = 0; rep < 5; ++rep) {
      double t0 = now_s();
      fde::stretch_pin("1234", p);
      best = std::min(best, now_s() - t0);
    }
    times[i] = best;
  }

  double mx = 0, my = 0;
  for (int i = 0; i < 3; ++i) {
    mx += rounds[i] / 3.0;
    my += times[i] / 3.0;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (rounds[i] - mx) * (times[i] - my);
    sxx += (rounds[i] - mx) * (rounds[i] - mx);
    syy += (times[i] - my) * (times[i] - my);
  }
  double corr = sxy / std::sqrt(sxx * syy);
  CHECK(corr >= 0.99);
}

TEST_CASE("tpm+pin protector round trip and wrong-pin rejection") {
  Rng rng(68);
  fde::Vmk vmk = fixtures::random_array<32>(rng);
  fixtures::ProtectorFixture fx = fixtures::make_tpm_pin(rng, vmk, "4217", /*rounds=*/512);

  CHECK(fde::extract_vmk_tpm_pin(fx.metadata, as_span(fx.nv_plaintext), "4217") == vmk);

  for (int i = 0; i < 20; ++i) {
    std::string wrong = std::to_string(1000 + rng() % 9000);
    if (wrong == "4217") continue;
    CHECK_THROWS_WITH_AS(fde::extract_vmk_tpm_pin(fx.metadata, as_span(fx.nv_plaintext), wrong),
                         doctest::Contains("WrongPin"), Error);
  }
}

TEST_CASE("pin brute force: sequential semantics and parallel agreement") {
  Rng rng(69);
  fde::Vmk vmk = fixtures::random_array<32>(rng);
  fixtures::ProtectorFixture fx = fixtures::make_tpm_pin(rng, vmk, "0042", /*rounds=*/256);

  std::vector<std::string> space = fde::digit_pin_space(4);
  REQUIRE(space.size() == 10000);
  CHECK(space[0] == "0000");
  CHECK(space[42] == "0042");
  CHECK(space.back() == "9999");

  fde::CrackResult serial = fde::brute_force_pin(fx.metadata, as_span(fx.nv_plaintext), space);
  CHECK(serial.pin == "0042");
  CHECK(serial.vmk == vmk);
  CHECK(serial.attempts == 43);
  CHECK(serial.elapsed_s >= 0.0);

  fde::CrackResult par = fde::brute_force_pin_parallel(fx.metadata, as_span(fx.nv_plaintext),
                                                      space);
  CHECK(par.pin == serial.pin);
  CHECK(par.vmk == serial.vmk);
  CHECK(par.attempts == serial.attempts);

  std::vector<std::string> misses(space.begin() + 100, space.begin() + 140);
  CHECK_THROWS_WITH_AS(fde::brute_force_pin(fx.metadata, as_span(fx.nv_plaintext), misses),
                       doctest::Contains("Exhausted"), Error);
  CHECK_THROWS_WITH_AS(
      fde::brute_force_pin_parallel(fx.metadata, as_span(fx.nv_plaintext), misses),
      doctest::Contains("Exhausted"), Error);
}

TEST_CASE("naive sealed-secret protector collapses without the pin") {
  Rng rng(70);
  auto secret = fixtures::random_array<32>(rng);

  for (bool pin_guarded : {false, true}) {
    fixtures::ProtectorFixture fx = fixtures::make_naive(rng, secret, pin_guarded);
    fde::reset_stretch_invocations();
    std::string passphrase = fde::extract_key_naive(fx.metadata, as_span(fx.nv_plaintext));
    CHECK(passphrase == base64_encode(as_span(secret)));
    CHECK(fde::stretch_invocations() == 0);
  }

  // The mitigation mixes the pin into the passphrase itself.
  std::string mitigated = fde::mitigated_naive_key(secret, "9876");
  CHECK(mitigated == base64_encode(as_span(secret)) + ":9876");
  CHECK(mitigated != base64_encode(as_span(secret)));
  CHECK_THROWS_AS(fde::mitigated_naive_key(secret, ""), Error);
}

TEST_CASE("brute-force estimate arithmetic") {
  CHECK(fde::estimate_bruteforce_seconds(9, 1000.0) == doctest::Approx(0.512));
  CHECK(fde::estimate_bruteforce_seconds(0, 1.0) == doctest::Approx(1.0));
  CHECK(fde::estimate_bruteforce_seconds(15, fde::kFtpmGuessRate) == doctest::Approx(32.768));
  CHECK(fde::estimate_bruteforce_seconds(9, fde::kDtpmGuessRate) == doctest::Approx(512 * 600.0));
  CHECK_THROWS_AS(fde::estimate_bruteforce_seconds(-1, 1.0), Error);
  CHECK_THROWS_AS(fde::estimate_bruteforce_seconds(4, 0.0), Error);
}

TEST_CASE("duration rendering reproduces the reference cells") {
  using fde::estimate_bruteforce_seconds;
  using fde::render_duration;

  // fTPM column: 1000 stretched guesses per second.
  CHECK(render_duration(estimate_bruteforce_seconds(9, 1000.0)) == "0.5 sec");
  CHECK(render_duration(estimate_bruteforce_seconds(15, 1000.0)) == "33 sec");
  CHECK(render_duration(estimate_bruteforce_seconds(21, 1000.0)) == "34 min");
  CHECK(render_duration(estimate_bruteforce_seconds(36, 1000.0)) == "2.1 yr");

  // dTPM column: one attempt per ten minutes.
  double dtpm = 1.0 / 600.0;
  CHECK(render_duration(estimate_bruteforce_seconds(9, dtpm)) == "3.5 days");
  CHECK(render_duration(estimate_bruteforce_seconds(15, dtpm)) == "7.4 mo");
  CHECK(render_duration(estimate_bruteforce_seconds(21, dtpm)) == "40 yr");
  CHECK(render_duration(estimate_bruteforce_seconds(36, dtpm)) == "1.3·10^6 yr");

  // band boundaries
  CHECK(render_duration(0.0) == "0.0 sec");
  CHECK(render_duration(59.4) == "59 sec");
  CHECK(render_duration(3600.0) == "1.0 hr");
  CHECK(render_duration(86400.0) == "1.0 days");
}
