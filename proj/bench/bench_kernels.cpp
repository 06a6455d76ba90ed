// Serial reference vs OpenMP kernels on stiffness matrices of graded cylinder meshes.
// Argument: cells per side (n = 2) with as many y intervals.

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "fracctl/fem.hpp"
#include "fracctl/kernels.hpp"

using namespace fracctl;
using kernels::Exec;

namespace {

const fem::StiffnessOperator& op_for(int m) {
    static std::map<int, fem::StiffnessOperator> cache;
    auto it = cache.find(m);
    if (it == cache.end()) {
        auto mesh = std::make_shared<const mesh::TensorMesh>(mesh::BasePartition(2, m),
                                                             mesh::make_graded_partition(m, mesh::default_grading(0.3), 3.0));
        it = cache.emplace(m, fem::assemble_stiffness(mesh, 0.3)).first;
    }
    return it->second;
}

std::vector<double> random_vector(std::size_t n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

template <Exec E>
void BM_spmv(benchmark::State& st) {
    const auto& a = op_for(int(st.range(0))).matrix();
    const auto x = random_vector(a.rows);
    std::vector<double> y(a.rows);
    for (auto _ : st) {
        kernels::spmv(E, a, x, y);
        benchmark::DoNotOptimize(y.data());
    }
    st.SetItemsProcessed(st.iterations() * a.vals.size());
}

template <Exec E>
void BM_dot(benchmark::State& st) {
    const int n = op_for(int(st.range(0))).size();
    const auto a = random_vector(n), b = random_vector(n);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::dot(E, a, b));
    st.SetItemsProcessed(st.iterations() * n);
}

template <Exec E>
void BM_assemble(benchmark::State& st) {
    const auto& f = op_for(int(st.range(0))).factors();
    for (auto _ : st) {
        auto a = kernels::assemble_kronecker(E, f);
        benchmark::DoNotOptimize(a.vals.data());
    }
    st.SetItemsProcessed(st.iterations() * f.size());
}

template <Exec E>
void BM_transform(benchmark::State& st) {
    const auto& f = op_for(int(st.range(0))).factors();
    const int m = f.per_side(), L = f.layers();
    const auto t = random_vector(std::size_t(m) * m);
    const auto in = random_vector(f.size());
    std::vector<double> out(in.size());
    for (auto _ : st) {
        // the fastest axis of a layer-major vector is x1
        kernels::transform_axis(E, t, false, L * m, m, 1, in, out);
        benchmark::DoNotOptimize(out.data());
    }
    st.SetItemsProcessed(st.iterations() * f.size());
}

template <Exec E>
void BM_tridiagonal(benchmark::State& st) {
    const auto& f = op_for(int(st.range(0))).factors();
    std::vector<double> shift(f.base_size());
    for (std::size_t q = 0; q < shift.size(); ++q) shift[q] = 1.0 + double(q);
    const kernels::TridiagonalBatch batch{shift, &f.y_mass, &f.y_stiffness, 1.0};
    const auto rhs = random_vector(f.size());
    std::vector<double> data(rhs.size());
    for (auto _ : st) {
        data = rhs;
        kernels::tridiagonal_batch_solve(E, batch, data);
        benchmark::DoNotOptimize(data.data());
    }
    st.SetItemsProcessed(st.iterations() * f.size());
}

template <Exec E>
void BM_solve(benchmark::State& st) {
    const int m = int(st.range(0));
    auto mesh = std::make_shared<const mesh::TensorMesh>(mesh::BasePartition(2, m),
                                                         mesh::make_graded_partition(m, mesh::default_grading(0.3), 3.0));
    const fem::StiffnessOperator op(mesh, 0.3, 0.0, E);
    const auto b = random_vector(op.size());
    std::vector<double> x(op.size());
    for (auto _ : st) {
        op.solve(b, x);
        benchmark::DoNotOptimize(x.data());
    }
    st.SetItemsProcessed(st.iterations() * op.size());
}

}  // namespace

#define FRACCTL_PAIR(name)                                                              \
    BENCHMARK_TEMPLATE(name, Exec::serial)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond); \
    BENCHMARK_TEMPLATE(name, Exec::parallel)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond)

FRACCTL_PAIR(BM_spmv);
FRACCTL_PAIR(BM_dot);
FRACCTL_PAIR(BM_assemble);
FRACCTL_PAIR(BM_transform);
FRACCTL_PAIR(BM_tridiagonal);
FRACCTL_PAIR(BM_solve);

BENCHMARK_MAIN();
