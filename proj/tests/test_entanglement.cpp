#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ethlab/basis.hpp"
#include "ethlab/entanglement.hpp"
#include "ethlab/error.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/spectra.hpp"

using namespace ethlab;
using namespace ethlab::entanglement;

namespace {

Eigen::VectorXcd random_state(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = {g(rng), g(rng)};
  return v.normalized();
}

}  // namespace

TEST_CASE("expansion into product states") {
  basis::SectorSpec s;
  s.L = 6;
  s.M = 0;
  s.eta = 0;
  const auto b = basis::build_sym_basis(s);
  for (std::size_t i = 0; i < b.dim(); ++i) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b.dim()));
    e(static_cast<Eigen::Index>(i)) = 1.0;
    const auto amps = expand_to_product_basis(e, b);
    const double a = 1.0 / std::sqrt(static_cast<double>(b.period(i)));
    std::size_t nonzero = 0;
    for (const auto& x : amps) {
      if (std::abs(x) < 1e-14) continue;
      ++nonzero;
      CHECK(std::abs(x - a) < 1e-12);
    }
    CHECK(nonzero == static_cast<std::size_t>(b.period(i)));
  }
  s.eta = 2;
  s.spin_flip = -1;
  const auto c = basis::build_sym_basis(s);
  const auto v = random_state(c.dim(), 4);
  CHECK((project_to_basis(expand_to_product_basis(v, c), c) - v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("entropies of simple states") {
  const auto codes = basis::enumerate_m_sector(2, 0);  // {2, 4, 6}
  Eigen::VectorXcd prod = Eigen::VectorXcd::Zero(3);
  prod(1) = 1.0;
  CHECK(std::abs(entanglement_entropy(prod, codes, 2, 1)) < 1e-14);
  const Eigen::VectorXcd singlet = Eigen::VectorXcd::Constant(3, 1.0 / std::sqrt(3.0));
  CHECK(entanglement_entropy(singlet, codes, 2, 1) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  const auto rs = reduced_spectrum(singlet, codes, 2, 1);
  for (double w : rs) CHECK(w == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("Schmidt symmetry and bounds") {
  const int L = 7;
  const auto codes = basis::enumerate_m_sector(L, 1);
  const auto v = random_state(codes.size(), 8);
  // mirrored state: its leading L - la sites are the complement of the leading la
  Eigen::VectorXcd mirrored(v.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto it = std::lower_bound(codes.begin(), codes.end(), basis::reflect(codes[i], L));
    REQUIRE(it != codes.end());
    mirrored(it - codes.begin()) = v(static_cast<Eigen::Index>(i));
  }
  for (int la = 1; la < L; ++la) {
    const double s = entanglement_entropy(v, codes, L, la);
    CHECK(s == doctest::Approx(entanglement_entropy(mirrored, codes, L, L - la)).epsilon(1e-10));
    CHECK(s >= 0.0);
    CHECK(s <= std::min(la, L - la) * std::log(3.0) + 1e-12);
  }
}

TEST_CASE("exact Page sum") {
  for (int L : {4, 7, 8}) {
    for (int N = 0; N <= 2 * L; ++N) {
      for (int la = 1; la < L; ++la) {
        CHECK(page_weight_sum(N, L, la) == doctest::Approx(1.0).epsilon(1e-13));
        const double s = page_exact_sum(N, L, la);
        CHECK(s == doctest::Approx(page_exact_sum(N, L, L - la)).epsilon(1e-12));
        CHECK(s == doctest::Approx(page_exact_sum(2 * L - N, L, la)).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(page_exact_sum(8, 8, 0), InvalidSpec);
  // Haar-random states of the sector as the oracle
  const auto h = haar_state_entropy(8, 8, 4, 200, 21);
  CHECK(std::abs(h.mean - page_exact_sum(8, 8, 4)) < 3 * h.stderr_);
}

TEST_CASE("volume-law coefficient") {
  CHECK(beta_n(1.0) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  const double d = 1e-5;
  CHECK(std::abs(beta_n(1.0 + d) - beta_n(1.0 - d)) / (2 * d) < 1e-8);
  CHECK(beta_n(0.7) == doctest::Approx(beta_n(1.3)).epsilon(1e-12));
  // central trinomial coefficient: ln D - L ln 3 + ln(L)/2 -> ln(3 / (4 pi)) / 2
  const double limit = 0.5 * std::log(3.0 / (4.0 * std::numbers::pi));
  double prev = INFINITY;
  for (int L : {10, 20, 40}) {
    const double lnd = std::log(static_cast<double>(basis::sector_dimension(L, L)));
    const double err = std::abs(lnd - L * beta_n(1.0) + 0.5 * std::log(L) - limit);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.01);
  // subleading terms only shift the leading volume law
  CHECK(page_asymptotic(1.0, 0.25, 40) == doctest::Approx(beta_n(1.0) * 10 + 0.5 * (0.25 + std::log(0.75))));
}

TEST_CASE("eigenstate Page curve") {
  ModelParams p;
  std::vector<Spectrum> spectra;
  std::vector<basis::SymBasis> bases;
  for (const auto& s : production_sectors(8, true)) {
    bases.push_back(basis::build_sym_basis(s));
    spectra.push_back(diagonalize(build_hamiltonian(p, bases.back())));
  }
  std::vector<const Spectrum*> sp;
  std::vector<const basis::SymBasis*> bp;
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    sp.push_back(&spectra[i]);
    bp.push_back(&bases[i]);
  }
  const auto pc = eigenstate_page_curve(sp, bp, 40, {1, 2, 3, 4, 5, 6, 7});
  CHECK(pc.states == 40);
  for (std::size_t i = 0; i < pc.f.size(); ++i) {
    CHECK(pc.mean[i] > 0);
    CHECK(pc.mean[i] <= pc.exact_sum[i] + 1e-12 + 4 * pc.stddev[i]);
    CHECK(pc.mean[i] == doctest::Approx(pc.mean[pc.f.size() - 1 - i]).epsilon(1e-10));
  }
  CHECK(eigenstate_page_curve(sp, bp, 100000, {4}).truncated);
}
