// Serial reference against OpenMP variants of the hot kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "ethlab/basis.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/kernels.hpp"

using namespace ethlab;

namespace {

struct Data {
  Eigen::MatrixXcd elements;
  Eigen::VectorXd e_bra, e_ket;
  std::vector<double> edges, grid;
};

const Data& data() {
  static const Data d = [] {
    Data r;
    const int n = 1500;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    r.elements.resize(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) r.elements(i, j) = {g(rng), g(rng)};
    r.e_bra.resize(n);
    r.e_ket.resize(n);
    for (int i = 0; i < n; ++i) {
      r.e_bra[i] = 3.0 * g(rng);
      r.e_ket[i] = 3.0 * g(rng);
    }
    std::sort(r.e_bra.data(), r.e_bra.data() + n);
    std::sort(r.e_ket.data(), r.e_ket.data() + n);
    for (int i = 0; i <= 200; ++i) r.edges.push_back(-20.0 + 0.2 * i);
    for (int i = 0; i <= 2000; ++i) r.grid.push_back(-10.0 + 0.01 * i);
    return r;
  }();
  return d;
}

kernels::Exec exec_of(const benchmark::State& st) {
  return st.range(0) ? kernels::Exec::Parallel : kernels::Exec::Serial;
}

void BM_bin_pairs(benchmark::State& st) {
  const auto& d = data();
  kernels::PairBlock b{&d.elements, &d.e_bra, &d.e_ket};
  for (auto _ : st) {
    std::vector<double> sums(d.edges.size() - 1), counts(d.edges.size() - 1);
    kernels::bin_pairs(b, d.edges, sums, counts, exec_of(st));
    benchmark::DoNotOptimize(sums.data());
  }
}

void BM_broadened_sum(benchmark::State& st) {
  const auto& d = data();
  kernels::PairBlock b{&d.elements, &d.e_bra, &d.e_ket};
  for (auto _ : st) {
    std::vector<double> out(d.grid.size());
    kernels::broadened_sum(b, d.grid, 0.02, out, exec_of(st));
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_assemble_block(benchmark::State& st) {
  basis::SectorSpec s;
  s.L = 10;
  s.M = 0;
  s.eta = 1;
  s.spin_flip = 1;
  static const auto b = basis::build_sym_basis(s);
  ModelParams p;
  const auto h = hamiltonian_operator(p, 10);
  for (auto _ : st) {
    auto m = kernels::assemble_block(h, b, b, true, exec_of(st));
    benchmark::DoNotOptimize(m.data());
  }
}

}  // namespace

BENCHMARK(BM_bin_pairs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_broadened_sum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_assemble_block)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
