#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "ethlab/basis.hpp"
#include "ethlab/error.hpp"

using namespace ethlab;
using namespace ethlab::basis;

namespace {

// Count product states of magnetization M by brute force.
std::size_t brute_count(int L, int M) {
  std::size_t n = 0;
  for (Code c = 0; c < pow3(L); ++c) {
    int m = 0;
    Code x = c;
    for (int j = 0; j < L; ++j, x /= 3) m += static_cast<int>(x % 3) - 1;
    n += m == M;
  }
  return n;
}

}  // namespace

TEST_CASE("sector dimensions against enumeration") {
  CHECK(sector_dimension(2, 2) == 3);
  CHECK(sector_dimension(0, 5) == 1);
  CHECK(sector_dimension(4, 4) == 19);
  for (int L = 1; L <= 8; ++L) {
    for (int M = -L; M <= L; ++M) {
      CHECK(dim_lm(L, M) == brute_count(L, M));
    }
  }
}

TEST_CASE("dimension recursions") {
  CHECK(dim_lm(3, 0) == 7);
  CHECK(dim_lm(2, 2) == 1);
  for (int L = 2; L <= 14; ++L) {
    for (int M = -L; M <= L; ++M) {
      const auto r = check_dimension_identities(L, M);
      CHECK(r.dimension == r.recursion_sum);
      CHECK(r.weighted_lhs == r.weighted_rhs);
    }
  }
  const auto r = check_dimension_identities(4, 0);
  CHECK(r.weighted_lhs == 0);
}

TEST_CASE("magnetization sector enumeration") {
  CHECK(enumerate_m_sector(2, 0) == std::vector<Code>{2, 4, 6});
  CHECK(enumerate_m_sector(1, 1) == std::vector<Code>{2});
  CHECK(enumerate_m_sector(3, -3) == std::vector<Code>{0});
}

TEST_CASE("digits, translation and magnetization") {
  const Code c = with_trit(with_trit(0, 0, 2), 3, 1);
  CHECK(trit(c, 0) == 2);
  CHECK(trit(c, 3) == 1);
  CHECK(trit(c, 1) == 0);
  const int L = 5;
  for (Code x = 0; x < pow3(L); x += 7) {
    CHECK(magnetization(translate(x, L, 2), L) == magnetization(x, L));
    CHECK(translate(translate(x, L, 2), L, 3) == x);
    CHECK(reflect(reflect(x, L), L) == x);
    CHECK(flip(flip(x, L), L) == x);
    CHECK(magnetization(flip(x, L), L) == -magnetization(x, L));
    const int p = translation_period(x, L);
    CHECK(L % p == 0);
    CHECK(translate(x, L, p) == x);
  }
  // content of site 0 moves to site 1
  CHECK(trit(translate(with_trit(0, 0, 2), 4, 1), 1) == 2);
}

TEST_CASE("momentum sector dimensions from orbit analysis") {
  SectorSpec s;
  s.L = 2;
  s.M = 0;
  s.eta = 0;
  CHECK(build_sym_basis(s).dim() == 2);
  s.eta = 1;
  CHECK(build_sym_basis(s).dim() == 1);

  SectorSpec p;
  p.L = 3;
  p.M = 3;
  p.eta = 0;
  CHECK(build_sym_basis(p).dim() == 1);
  p.eta = 1;
  CHECK(build_sym_basis(p).dim() == 0);
}

TEST_CASE("momentum sectors partition the magnetization sector") {
  for (int L : {4, 5, 6}) {
    for (int M : {0, 1, 2}) {
      std::size_t total = 0;
      for (const auto& s : momentum_sectors(L, M, true)) total += build_sym_basis(s).dim();
      CHECK(total == dim_lm(L, M));
    }
  }
  std::size_t total = 0;
  for (const auto& s : momentum_sectors(4, 0, false)) total += build_sym_basis(s).dim();
  CHECK(total == 19);
}

TEST_CASE("symmetry-adapted states are orthonormal with consistent lookup") {
  for (const auto& s : momentum_sectors(6, 0, true)) {
    const auto b = build_sym_basis(s);
    for (std::size_t i = 0; i < b.dim(); ++i) {
      double norm = 0.0;
      for (const auto& e : b.expansion(i)) {
        norm += std::norm(e.amplitude);
        const auto slot = b.lookup(e.code);
        REQUIRE(slot.index == static_cast<std::int32_t>(i));
        CHECK(std::abs(slot.amplitude - e.amplitude) < 1e-12);
      }
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("period-3 orbit amplitudes at eta = 1") {
  SectorSpec s;
  s.L = 3;
  s.M = 0;
  s.eta = 1;
  const auto b = build_sym_basis(s);
  // rep containing trits (2,1,0) at sites (0,1,2)
  const Code c = with_trit(with_trit(with_trit(0, 0, 2), 1, 1), 2, 0);
  const auto slot = b.lookup(c);
  REQUIRE(slot.index >= 0);
  const std::complex<double> w = std::polar(1.0, -2.0 * std::numbers::pi / 3.0);
  const auto base = b.lookup(c).amplitude;
  CHECK(std::abs(std::abs(base) - 1.0 / std::sqrt(3.0)) < 1e-12);
  const auto a1 = b.lookup(translate(c, 3, 1)).amplitude;
  const auto a2 = b.lookup(translate(c, 3, 2)).amplitude;
  CHECK(b.lookup(translate(c, 3, 1)).index == slot.index);
  // T|psi> = e^{-ik}|psi>: the amplitude ratio between neighbours on the orbit is a cube root of unity
  const auto r1 = a1 / base, r2 = a2 / a1;
  CHECK(std::abs(r1 - r2) < 1e-12);
  CHECK((std::abs(r1 - w) < 1e-12 || std::abs(r1 - std::conj(w)) < 1e-12));
}

TEST_CASE("invalid sector specs are rejected") {
  SectorSpec s;
  s.L = 4;
  s.M = 5;
  CHECK_THROWS_AS(s.validate(), InvalidSpec);
  SectorSpec p;
  p.L = 4;
  p.M = 0;
  p.eta = 1;
  p.parity = 1;
  CHECK_THROWS_AS(p.validate(), InvalidSpec);
  SectorSpec q;
  q.L = 4;
  q.M = 1;
  q.spin_flip = 1;
  CHECK_THROWS_AS(q.validate(), InvalidSpec);
  SectorSpec o;
  o.L = 4;
  o.bc = Boundary::Open;
  o.eta = 0;
  CHECK_THROWS_AS(o.validate(), InvalidSpec);
}
