#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>

#include "dtams/channel.hpp"
#include "dtams/compensation.hpp"
#include "dtams/layered.hpp"
#include "dtams/pgd.hpp"
#include "dtams/pipeline.hpp"
#include "dtams/select.hpp"

using namespace dtams;

namespace {

PlaneGrid state(int side, int c = 1) { return sample_standard_normal(KeyedRng(1, "bench"), side, side, c); }

template <bool Serial>
void BM_SampleNormal(benchmark::State& st) {
  const KeyedRng rng(2, "bench");
  const int side = static_cast<int>(st.range(0));
  for (auto _ : st) {
    auto g = Serial ? sample_standard_normal_serial(rng, side, side, 3) : sample_standard_normal(rng, side, side, 3);
    benchmark::DoNotOptimize(g.values.data());
  }
  st.SetItemsProcessed(st.iterations() * side * side * 3);
}

template <bool Serial>
void BM_Transition(benchmark::State& st) {
  const int side = static_cast<int>(st.range(0));
  const auto x = state(side, 3), target = state(side, 3);
  const auto sched = Schedule::linear(100, 0.998, 0.96, 0.05);
  const KeyedRng rng(3, noise_label(50));
  for (auto _ : st) {
    auto y = Serial ? transition_step_serial(x, 50, sched, rng, target) : transition_step(x, 50, sched, rng, target);
    benchmark::DoNotOptimize(y.values.data());
  }
  st.SetItemsProcessed(st.iterations() * x.size());
}

template <bool Serial>
void BM_PgdGradient(benchmark::State& st) {
  const int side = static_cast<int>(st.range(0));
  const auto y = state(side), t = sample_standard_normal(KeyedRng(4, "t"), side, side, 1);
  for (auto _ : st) {
    auto g = Serial ? total_gradient_serial(y, t, {}, 0.1) : total_gradient(y, t, {}, 0.1);
    benchmark::DoNotOptimize(g.data());
  }
  st.SetItemsProcessed(st.iterations() * y.size());
}

template <bool Serial>
void BM_WarpPlace(benchmark::State& st) {
  const int side = static_cast<int>(st.range(0));
  const auto v = state(side).values;
  NestLevel lv;
  lv.part = snap_partition(build_partition(std::span<const double>(v), 3));
  lv.P = solve_optimal_mapping(build_cost_matrix(v, lv.part));
  std::vector<std::uint32_t> s(v.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::uint32_t>(i * 2654435761u % 8);
  for (auto _ : st) {
    auto z = Serial ? warp_place_serial(v, lv, s, 0.08) : warp_place(v, lv, s, 0.08);
    benchmark::DoNotOptimize(z.data());
  }
  st.SetItemsProcessed(st.iterations() * v.size());
}

template <bool Serial>
void BM_Roundtrip(benchmark::State& st) {
  const auto x = state(static_cast<int>(st.range(0)), 3);
  for (auto _ : st) {
    auto y = Serial ? roundtrip_transform_serial(x) : roundtrip_transform(x);
    benchmark::DoNotOptimize(y.values.data());
  }
  st.SetItemsProcessed(st.iterations() * x.size());
}

template <bool Serial>
void BM_Jpeg(benchmark::State& st) {
  auto img = clamp_quantize(PlaneGrid(static_cast<int>(st.range(0)), static_cast<int>(st.range(0)), 3), 256);
  const auto n = state(static_cast<int>(st.range(0)), 3);
  for (std::size_t i = 0; i < img.size(); ++i) img.values[i] = std::round(255 * std::clamp(0.5 + 0.2 * n.values[i], 0.0, 1.0)) / 255;
  const auto spec = AttackSpec::parse("jpeg:70");
  const KeyedRng rng(5, "attack");
  for (auto _ : st) {
    auto y = Serial ? apply_attack_serial(img, spec, rng) : apply_attack(img, spec, rng);
    benchmark::DoNotOptimize(y.values.data());
  }
  st.SetItemsProcessed(st.iterations() * img.size());
}

template <bool Serial>
void BM_ScoreTimesteps(benchmark::State& st) {
  const int side = static_cast<int>(st.range(0));
  const auto clean = run_reverse(6, Schedule::standard(), generate_target(6, side, side, 1), HookFn{});
  const std::vector<double> pB(8, 0.125);
  for (auto _ : st) {
    auto t = Serial ? score_timesteps_serial(clean, 3, pB) : score_timesteps(clean, 3, pB);
    benchmark::DoNotOptimize(t.rows.data());
  }
}

void BM_EmbedExtract(benchmark::State& st) {
  EmbedParams p;
  p.g = 2;
  p.n = static_cast<int>(st.range(0));
  const auto pay = random_payload(1, capacity_bits(p.height, p.width, 1, p.g, p.n) / 8);
  for (auto _ : st) {
    const auto r = embed(pay, p);
    auto x = extract(r.package, r.key);
    benchmark::DoNotOptimize(x.payload.data());
  }
  st.SetBytesProcessed(st.iterations() * static_cast<std::int64_t>(pay.size()));
}

}  // namespace

BENCHMARK(BM_SampleNormal<true>)->Name("SampleNormal/serial")->Arg(256)->Arg(512);
BENCHMARK(BM_SampleNormal<false>)->Name("SampleNormal/omp")->Arg(256)->Arg(512);
BENCHMARK(BM_Transition<true>)->Name("Transition/serial")->Arg(256)->Arg(512);
BENCHMARK(BM_Transition<false>)->Name("Transition/omp")->Arg(256)->Arg(512);
BENCHMARK(BM_PgdGradient<true>)->Name("PgdGradient/serial")->Arg(256)->Arg(512);
BENCHMARK(BM_PgdGradient<false>)->Name("PgdGradient/omp")->Arg(256)->Arg(512);
BENCHMARK(BM_WarpPlace<true>)->Name("WarpPlace/serial")->Arg(256)->Arg(512);
BENCHMARK(BM_WarpPlace<false>)->Name("WarpPlace/omp")->Arg(256)->Arg(512);
BENCHMARK(BM_Roundtrip<true>)->Name("Roundtrip/serial")->Arg(256)->Arg(512);
BENCHMARK(BM_Roundtrip<false>)->Name("Roundtrip/omp")->Arg(256)->Arg(512);
BENCHMARK(BM_Jpeg<true>)->Name("Jpeg/serial")->Arg(256);
BENCHMARK(BM_Jpeg<false>)->Name("Jpeg/omp")->Arg(256);
BENCHMARK(BM_ScoreTimesteps<true>)->Name("ScoreTimesteps/serial")->Arg(64);
BENCHMARK(BM_ScoreTimesteps<false>)->Name("ScoreTimesteps/omp")->Arg(64);
BENCHMARK(BM_EmbedExtract)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
