#include <doctest.h>

#include <random>

#include "ethlab/basis.hpp"
#include "ethlab/error.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/rmt.hpp"
#include "ethlab/spectra.hpp"
#include "ethlab/stats.hpp"

using namespace ethlab;

namespace {

Spectrum from_values(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  Spectrum s;
  s.spec.L = 2;
  s.energies = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return s;
}

basis::SymBasis sector(int L, int M, std::optional<int> eta, std::optional<int> flip = std::nullopt) {
  basis::SectorSpec s;
  s.L = L;
  s.M = M;
  s.eta = eta;
  s.spin_flip = flip;
  return basis::build_sym_basis(s);
}

}  // namespace

TEST_CASE("one-by-one block") {
  OperatorBlock b;
  b.spec.L = 1;
  b.ket_spec = b.spec;
  b.matrix = Eigen::MatrixXcd::Constant(1, 1, 2.5);
  const auto s = diagonalize(b);
  CHECK(s.energies(0) == 2.5);
  CHECK(std::abs(std::abs(s.vectors(0, 0)) - 1.0) < 1e-15);
}

TEST_CASE("eigensolver: trace, residual, orthonormality and gauge") {
  ModelParams p;
  for (auto b : {sector(7, 0, 1, 1), sector(6, 0, 0, 1), sector(6, 1, std::nullopt)}) {
    const auto h = build_hamiltonian(p, b);
    const auto s = diagonalize(h);
    CHECK(std::abs(s.energies.sum() - h.matrix.trace().real()) < 1e-9 * std::max(1.0, h.matrix.cwiseAbs().sum()));
    CHECK(s.residual < 1e-12);
    CHECK(orthonormality_defect(s.vectors) < 1e-12);
    for (Eigen::Index m = 0; m < s.vectors.cols(); ++m) {
      // among the (possibly tied) largest components one is real positive
      const double top = s.vectors.col(m).cwiseAbs().maxCoeff();
      bool anchored = false;
      for (Eigen::Index i = 0; i < s.vectors.rows(); ++i) {
        const auto c = s.vectors(i, m);
        anchored = anchored || (std::abs(c) >= top * (1 - 1e-9) && std::abs(c.imag()) < 1e-14 && c.real() > 0);
      }
      CHECK(anchored);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.matrix, Eigen::EigenvaluesOnly);
    CHECK((es.eigenvalues() - s.energies).cwiseAbs().maxCoeff() < 1e-10);
    const auto ev = diagonalize(h, 0, false);
    CHECK(!ev.has_vectors());
    CHECK((ev.energies - s.energies).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("time-reversal partners k and -k share their spectrum") {
  ModelParams p;
  for (int eta : {1, 2, 3}) {
    const auto a = diagonalize(build_hamiltonian(p, sector(7, 0, eta, 1)), 0, false);
    const auto b = diagonalize(build_hamiltonian(p, sector(7, 0, -eta, 1)), 0, false);
    CHECK((a.energies - b.energies).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("production family") {
  CHECK(production_sectors(12, true).size() == 10);
  CHECK(production_sectors(12, false).size() == 20);
  for (const auto& s : production_sectors(11, true)) {
    CHECK(s.M == 0);
    CHECK(*s.eta > 0);
    CHECK(2 * *s.eta != 11);
    CHECK(s.spin_flip.has_value());
  }
}

TEST_CASE("spacing ratios: picket fence and Poisson") {
  std::vector<double> fence;
  for (int i = 0; i < 100; ++i) fence.push_back(0.5 * i);
  for (double r : spacing_ratios(from_values(fence).energies)) CHECK(r == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Spectrum> sp;
  for (int k = 0; k < 10; ++k) {
    std::vector<double> v(20000);
    for (auto& x : v) x = u(rng);
    sp.push_back(from_values(v));
  }
  std::vector<const Spectrum*> ptr;
  for (const auto& s : sp) ptr.push_back(&s);
  const auto r = ratio_stats(ptr);
  CHECK(std::abs(r.mean_r - (2.0 * std::log(2.0) - 1.0)) < 4 * r.mean_r_stderr);
  CHECK(r.ks_poisson < r.ks_goe);
}

TEST_CASE("unfolded spacings and GOE spacing distribution") {
  rmt::EnsembleSpec e;
  e.kind = rmt::Ensemble::GOE;
  e.dim = 2000;
  e.seed = 11;
  const auto h = rmt::sample_goe_real(e, 0);
  const auto ev = real_symmetric_eigenvalues(h);
  const auto s = unfolded_spacings(ev, 0.2);
  CHECK(stats::mean(s) == doctest::Approx(1.0).epsilon(1e-12));
  Spectrum spec;
  spec.spec.L = 2;
  spec.energies = ev;
  const auto st = level_spacing_stats({&spec}, 0.2);
  CHECK(st.ks_goe < 0.05);
  CHECK(st.ks_goe < st.ks_poisson);
}

TEST_CASE("density of states") {
  Spectrum one = from_values({1.0});
  CHECK_THROWS_AS(dos({&one}), InvalidInput);
  ModelParams p;
  std::vector<Spectrum> all;
  for (int M = -6; M <= 6; ++M) all.push_back(diagonalize(build_hamiltonian(p, sector(6, M, std::nullopt)), 0, false));
  std::vector<const Spectrum*> ptr;
  for (const auto& s : all) ptr.push_back(&s);
  const auto d = dos(ptr);
  double norm = 0;
  for (std::size_t i = 0; i < d.histogram.bins(); ++i) {
    CHECK(d.histogram.densities[i] >= 0);
    norm += d.histogram.densities[i] * d.histogram.width(i);
  }
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(d.mean) < 1e-12);  // traceless at lambda = 0
  CHECK(d.count == 729);
}
