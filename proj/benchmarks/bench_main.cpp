#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "bundletc/covariant.hpp"
#include "bundletc/dsl.hpp"
#include "bundletc/manifolds.hpp"
#include "bundletc/tensor.hpp"
#include "bundletc/variational.hpp"

using namespace bundletc;

namespace {

TypedTensor random_tensor(std::mt19937_64& rng, const std::vector<AxisTag>& tags) {
    TypedTensor t = TypedTensor::zeros(tags);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : t.data()) v = u(rng);
    return t;
}

void bm_contract_rank2(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const AxisTag v = vector_axis("V", 4);
    TypedTensor a = random_tensor(rng, {v, v.dual()});
    TypedTensor b = random_tensor(rng, {v, v.dual()});
    for (auto _ : state) benchmark::DoNotOptimize(contract(a, b, 1));
}
BENCHMARK(bm_contract_rank2);

void bm_permute_rank4(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const AxisTag v = vector_axis("V", 3);
    TypedTensor a = random_tensor(rng, {v, v, v, v});
    std::vector<int> sigma = permutation_from_cycles({{2, 3, 4}}, 4);
    for (auto _ : state) benchmark::DoNotOptimize(permute(a, sigma));
}
BENCHMARK(bm_permute_rank4);

void bm_christoffel_sphere(benchmark::State& state) {
    auto sphere = make_sphere2();
    Vec x(2);
    x << 1.1, 0.7;
    for (auto _ : state) benchmark::DoNotOptimize(sphere->christoffel_at(x));
}
BENCHMARK(bm_christoffel_sphere);

void bm_curvature_halfplane(benchmark::State& state) {
    auto half = make_half_plane();
    Vec x(2);
    x << 0.2, 1.3;
    for (auto _ : state) benchmark::DoNotOptimize(half->curvature_at(x));
}
BENCHMARK(bm_curvature_halfplane);

void bm_tension_eval(benchmark::State& state) {
    auto sphere = make_sphere2();
    auto id = std::make_shared<SmoothMap>(SmoothMap::identity(sphere));
    SectionAlongMap tension = tension_field(id);
    Vec x(2);
    x << 1.2, 0.9;
    for (auto _ : state) benchmark::DoNotOptimize(tension.raw(x));
}
BENCHMARK(bm_tension_eval);

void bm_geodesic_step(benchmark::State& state) {
    auto sphere = make_sphere2();
    Vec x(2), v(2);
    x << M_PI / 2, 0.0;
    v << 0.3, 0.9;
    for (auto _ : state) benchmark::DoNotOptimize(sphere->exp_map(x, v, 1e-3, 1e-3));
}
BENCHMARK(bm_geodesic_step);

void bm_discrete_tension_grid(benchmark::State& state) {
    auto torus = make_flat_torus2();
    EnergyProblem p{torus, torus, kinetic_lagrangian(torus, torus),
                    Grid::rectangle(0, 2 * M_PI, 17, 0, 2 * M_PI, 17), BoundaryMode::Fixed};
    FieldConfiguration phi;
    phi.values = p.grid.points;
    for (auto _ : state) benchmark::DoNotOptimize(discrete_tension(p, phi));
}
BENCHMARK(bm_discrete_tension_grid);

void bm_typecheck_expression(benchmark::State& state) {
    dsl::Environment env;
    for (const auto& form : dsl::parse(R"(
manifold(U, 2) manifold(V, 3) manifold(W, 2)
field(A, otimes(tangent(V), dual(tangent(U))))
field(B, otimes(tangent(W), dual(tangent(V))))
)"))
        dsl::apply_declaration(form, env);
    auto expr = dsl::parse("pair(B, permute(otimes(dual(A), B), (1 3)(2 4)), 2)");
    for (auto _ : state) {
        try {
            benchmark::DoNotOptimize(dsl::typecheck(expr[0], env));
        } catch (const dsl::TypeError&) {
        }
    }
}
BENCHMARK(bm_typecheck_expression);

void bm_parse_source(benchmark::State& state) {
    const std::string src = "pair(dmap(phi), permute(X, (1 2)), 1)";
    for (auto _ : state) benchmark::DoNotOptimize(dsl::parse(src));
}
BENCHMARK(bm_parse_source);

} // namespace

BENCHMARK_MAIN();
