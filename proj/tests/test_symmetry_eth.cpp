#include <doctest.h>

#include <cmath>

#include "ethlab/basis.hpp"
#include "ethlab/error.hpp"
#include "ethlab/eth.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/spectra.hpp"
#include "ethlab/symmetry_eth.hpp"
#include "oracle.hpp"

using namespace ethlab;
using symmetry_eth::SectorData;

namespace {

std::vector<SectorData> family(int L, int M, std::optional<int> flip, const ModelParams& p = {}) {
  return symmetry_eth::momentum_family(p, L, M, flip, [](const OperatorBlock& h) { return diagonalize(h); });
}

Eigen::MatrixXcd local_znn(int j, int L) {
  return oracle::at(oracle::sz(), j % L, L) * oracle::at(oracle::sz(), (j + 2) % L, L);
}

}  // namespace

TEST_CASE("full-space oracle for the local operator blocks") {
  const int L = 4;
  const auto fam = family(L, 0, std::nullopt);
  for (const auto& a : fam) {
    for (const auto& b : fam) {
      if (a.basis.dim() == 0 || b.basis.dim() == 0) continue;
      const Eigen::MatrixXcd pa = oracle::embedding(a.basis) * a.spectrum.vectors;
      const Eigen::MatrixXcd pb = oracle::embedding(b.basis) * b.spectrum.vectors;
      const double dk = a.basis.spec().momentum() - b.basis.spec().momentum();
      const Eigen::MatrixXcd o0 = pa.adjoint() * local_znn(0, L) * pb;
      for (int j = 0; j < L; ++j) {
        const Eigen::MatrixXcd oj = pa.adjoint() * local_znn(j, L) * pb;
        const auto blk = cross_sector_block({ObservableKind::ZNNLocal, j}, a.basis, b.basis);
        const auto rotated = eth::rotate(blk.matrix, a.spectrum.vectors, b.spectrum.vectors);
        CHECK((rotated - oj).cwiseAbs().maxCoeff() < 1e-12);
        // O^l = e^{i (j - l)(k_m - k_n)} O^j with j = 0
        const cplx phase = std::polar(1.0, (0 - j) * dk);
        CHECK((oj - phase * o0).cwiseAbs().maxCoeff() < 1e-12);
      }
      const auto pc = symmetry_eth::local_op_phase_check(a, b, 0, 3);
      CHECK(pc.max_violation < 1e-12);
      const auto same = symmetry_eth::local_op_phase_check(a, b, 2, 2);
      CHECK(same.max_violation == 0.0);
    }
  }
}

TEST_CASE("moduli agree inside one momentum sector") {
  const auto fam = family(7, 1, std::nullopt);
  for (const auto& a : fam) {
    const auto pc = symmetry_eth::local_op_phase_check(a, a, 1, 5);
    CHECK(pc.max_modulus_violation < 1e-10);
    CHECK(pc.max_violation < 1e-10);
  }
}

TEST_CASE("momentum selection rule and classes") {
  const auto fam = family(8, 0, 1);
  CHECK(symmetry_eth::selection_rule_violation(fam) < 1e-12);
  CHECK(symmetry_eth::momentum_class(1, 7, 8) == 2);
  CHECK(symmetry_eth::momentum_class(-3, 4, 8) == 1);
  CHECK(symmetry_eth::momentum_class(2, 2, 8) == 0);
  CHECK(symmetry_eth::momentum_class(0, 4, 8) == 4);
}

TEST_CASE("momentum-resolved spectral decomposition") {
  const int L = 8;
  const auto fam = family(L, 0, 1);
  std::vector<double> grid;
  for (int i = 0; i <= 800; ++i) grid.push_back(0.01 * i);
  const auto edges = eth::frequency_edges(1e-3, 1.0, 12, 0.5, 20.0);
  const auto r = symmetry_eth::momentum_resolved_sf(fam, 2, grid, edges);
  CHECK(r.delta0_violation < 1e-8);
  CHECK(r.reconstruction_violation < 1e-8);
  std::size_t blocks = 0;
  for (auto m : r.multiplicity) blocks += m;
  CHECK(blocks == static_cast<std::size_t>(L * L));
  CHECK(r.classes.size() == static_cast<std::size_t>(L / 2 + 1));
  // site independence of the local spectral function
  const auto r5 = symmetry_eth::momentum_resolved_sf(fam, 5, grid, edges);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(r5.local_corr[i] - r.local_corr[i]) <= 1e-10 * (1 + r.local_corr[i]));
  }
  auto partial = fam;
  partial.pop_back();
  CHECK_THROWS_AS(symmetry_eth::momentum_resolved_sf(partial, 0, grid, edges), InvalidInput);
}

TEST_CASE("open-chain distance decomposition") {
  ModelParams p;
  p.bc = basis::Boundary::Open;
  basis::SectorSpec s;
  s.L = 8;
  s.M = 2;
  s.bc = basis::Boundary::Open;
  const auto b = basis::build_sym_basis(s);
  const auto sp = diagonalize(build_hamiltonian(p, b));
  const auto r = symmetry_eth::obc_distance_decomposition(b, sp, eth::frequency_edges(1e-3, 1.0, 12, 0.5, 20.0));
  CHECK(r.reconstruction_violation < 1e-8);
  CHECK(r.bulk_site == 3);
  CHECK(r.contribution.size() == 6);
  CHECK(r.pairs_per_distance[0] == 6);
  CHECK(r.pairs_per_distance[5] == 1);
  basis::SectorSpec pbc;
  pbc.L = 8;
  pbc.M = 2;
  const auto bp = basis::build_sym_basis(pbc);
  ModelParams pp;
  CHECK_THROWS(symmetry_eth::obc_distance_decomposition(bp, diagonalize(build_hamiltonian(pp, bp)),
                                                        eth::frequency_edges()));
}
