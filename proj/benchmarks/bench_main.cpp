#include <benchmark/benchmark.h>

#include "hairstep/annotate.hpp"
#include "hairstep/hair3d.hpp"
#include "hairstep/random.hpp"
#include "hairstep/render.hpp"
#include "hairstep/repr.hpp"

using namespace hairstep;

namespace {

HairModel wig(std::size_t strands) {
    WigParams p;
    p.strands = strands;
    return make_procedural_wig(p, 1);
}

Camera camera(int size) { return Camera::orbit(Vec3(0, -0.1, 0), 3.0, 0, 0, 35, size, size); }

void BM_CodecRoundTrip(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    DirectionField field(n, 1);
    for (int i = 0; i < n; ++i) {
        const double a = rng.uniform(0, 6.283185307179586);
        field(i, 0) = Vec2(std::cos(a), std::sin(a));
    }
    const Mask mask(n, 1, 1);
    for (auto _ : state) benchmark::DoNotOptimize(decode_strand_map(quantize_8bit(encode_strand_map(mask, field))));
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_CodecRoundTrip)->Arg(10000)->Arg(512 * 512);

void BM_Render(benchmark::State& state) {
    const auto model = wig(static_cast<std::size_t>(state.range(0)));
    const auto cam = camera(static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(render_hair(model, cam));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(model.vertex_count()));
}
BENCHMARK(BM_Render)->Args({2000, 256})->Args({10000, 512})->Unit(benchmark::kMillisecond);

void BM_StrandsToFields(benchmark::State& state) {
    const auto model = wig(2000);
    const int n = static_cast<int>(state.range(0));
    const Box3 box{Vec3::Constant(-1.6), Vec3::Constant(1.6)};
    for (auto _ : state) benchmark::DoNotOptimize(strands_to_fields(model, {n, n, n}, box, 1.5));
}
BENCHMARK(BM_StrandsToFields)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Interpolation(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Mask mask(n, n, 1);
    StrokeSet strokes{"bench", {}};
    for (int k = 1; k < 8; ++k) strokes.strokes.push_back({Vec2(k * n / 8.0, 1), Vec2(k * n / 8.0 + n / 16.0, n - 2.0)});
    const auto sparse = rasterize_strokes(strokes, mask).sparse;
    for (auto _ : state) benchmark::DoNotOptimize(interpolate_strand_map(sparse, mask));
}
BENCHMARK(BM_Interpolation)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Grow(benchmark::State& state) {
    const auto model = wig(2000);
    const int n = static_cast<int>(state.range(0));
    const auto grid = strands_to_fields(model, {n, n, n}, Box3{Vec3::Constant(-1.6), Vec3::Constant(1.6)}, 1.5).grid;
    const auto roots = roots_from_model(model);
    for (auto _ : state) benchmark::DoNotOptimize(grow_strands(grid, roots, GrowParams{}));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(roots.size()));
}
BENCHMARK(BM_Grow)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
