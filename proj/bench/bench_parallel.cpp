// Copyright (c) 2026 the ftpm-kit authors
// SPDX-License-Identifier: Apache-2.0
//
// Compares the OpenMP kernels against their serial reference implementations:
// the primary-seed window search and the PIN brute force, plus the raw
// stretch throughput that bounds both.

#include <benchmark/benchmark.h>

#include "ftpm/fde.hpp"
#include "ftpm/fixtures.hpp"
#include "ftpm/tpm.hpp"

using namespace ftpm;
using fixtures::Rng;

namespace {

struct SeedSearchInput {
  fixtures::SealedFixture fx;
  Bytes buf;
};

SeedSearchInput seed_input(size_t len) {
  Rng rng(0xBE9C);
  SeedSearchInput in;
  in.fx = fixtures::make_sealed_object(rng, fixtures::random_bytes(rng, 32), false);
  in.buf = fixtures::plant_seed(rng, len, in.fx.parent_seed, len - 32);  // worst case: last window
  return in;
}

void BM_seed_search_serial(benchmark::State& state) {
  SeedSearchInput in = seed_input(static_cast<size_t>(state.range(0)));
  for (auto _ : state) {
    auto hit = tpm::find_primary_seed_serial(as_span(in.buf), in.fx.pub, in.fx.priv);
    benchmark::DoNotOptimize(hit);
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}

void BM_seed_search_parallel(benchmark::State& state) {
  SeedSearchInput in = seed_input(static_cast<size_t>(state.range(0)));
  for (auto _ : state) {
    auto hit = tpm::find_primary_seed(as_span(in.buf), in.fx.pub, in.fx.priv);
    benchmark::DoNotOptimize(hit);
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}

struct CrackInput {
  fixtures::ProtectorFixture fx;
  std::vector<std::string> space;
};

CrackInput crack_input(uint32_t rounds, const std::string& pin) {
  Rng rng(0xC4AC);
  CrackInput in;
  in.fx = fixtures::make_tpm_pin(rng, fixtures::random_array<32>(rng), pin, rounds);
  in.space = fde::digit_pin_space(4);
  return in;
}

void BM_pin_crack_serial(benchmark::State& state) {
  CrackInput in = crack_input(static_cast<uint32_t>(state.range(0)), "0999");
  for (auto _ : state) {
    fde::CrackResult res = fde::brute_force_pin(in.fx.metadata, as_span(in.fx.nv_plaintext),
                                                in.space);
    benchmark::DoNotOptimize(res);
  }
}

void BM_pin_crack_parallel(benchmark::State& state) {
  CrackInput in = crack_input(static_cast<uint32_t>(state.range(0)), "0999");
  for (auto _ : state) {
    fde::CrackResult res =
        fde::brute_force_pin_parallel(in.fx.metadata, as_span(in.fx.nv_plaintext), in.space);
    benchmark::DoNotOptimize(res);
  }
}

void BM_stretch_full_rounds(benchmark::State& state) {
  fde::StretchParams params;
  params.salt.fill(0x5A);
  params.rounds = 1u << 20;
  for (auto _ : state) {
    auto key = fde::stretch_pin("1234", params);
    benchmark::DoNotOptimize(key);
  }
  state.counters["stretches/s"] =
      benchmark::Counter(static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}

}  // namespace

BENCHMARK(BM_seed_search_serial)->Arg(1 << 14)->Arg(1 << 16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_seed_search_parallel)->Arg(1 << 14)->Arg(1 << 16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_pin_crack_serial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_pin_crack_parallel)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_stretch_full_rounds)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
