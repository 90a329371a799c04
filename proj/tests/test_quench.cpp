#include <doctest.h>

#include <cmath>

#include "ethlab/basis.hpp"
#include "ethlab/error.hpp"
#include "ethlab/eth.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/quench.hpp"
#include "ethlab/spectra.hpp"

using namespace ethlab;
using namespace ethlab::quench;

namespace {

struct Fixture {
  basis::SymBasis b;
  Spectrum s;
  OperatorBlock h;
  eth::MatrixElements zn;
  Fixture(int L, double lambda = 0.0) : b([&] {
      basis::SectorSpec spec;
      spec.L = L;
      spec.M = 0;
      spec.eta = 0;
      spec.parity = 1;
      spec.spin_flip = 1;
      return basis::build_sym_basis(spec);
    }()) {
    ModelParams p;
    p.lambda = lambda;
    h = build_hamiltonian(p, b);
    s = diagonalize(h);
    zn = eth::matrix_elements(build_observable({ObservableKind::ZN}, b), s);
  }
};

std::vector<double> times(double tmax, std::size_t n) {
  std::vector<double> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back(tmax * i / (n - 1.0));
  return t;
}

}  // namespace

TEST_CASE("initial-state parsing") {
  CHECK(parse_initial("neel").kind == InitialState::Kind::Neel);
  CHECK(parse_initial("zeros").kind == InitialState::Kind::Zeros);
  const auto e = parse_initial("eig:1,0.55");
  CHECK(e.kind == InitialState::Kind::Eigenstate);
  CHECK(e.lambda == 1.0);
  CHECK(e.delta == 0.55);
  CHECK_THROWS_AS(parse_initial("eig:1"), InvalidSpec);
  CHECK_THROWS_AS(parse_initial("ferro"), InvalidSpec);
  CHECK(basis::magnetization(neel_code(8), 8) == 0);
  CHECK(basis::trit(neel_code(8), 0) == 2);
  CHECK(basis::trit(neel_code(8), 1) == 0);
}

TEST_CASE("eigenstate initial state is stationary") {
  Fixture f(8);
  const Eigen::VectorXcd psi = f.s.vectors.col(5);
  const auto st = make_setup(f.s, psi);
  CHECK(st.norm_defect < 1e-12);
  CHECK(st.delta_e0 < 1e-6);
  const auto ev = evolve_expectation(st, f.zn.elements, times(30, 61));
  for (double v : ev.values) CHECK(v == doctest::Approx(f.zn.elements(5, 5).real()).epsilon(1e-10));
  const auto diag = f.zn.diagonal();
  CHECK(diagonal_ensemble(st, Eigen::VectorXd::Ones(diag.size())) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("product-state quench") {
  Fixture f(8);
  const auto psi = prepare_initial(parse_initial("neel"), f.b, ModelParams{});
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const auto st = make_setup(f.s, psi);
  CHECK(st.norm_defect < 1e-10);
  CHECK(st.e_bar == doctest::Approx((psi.adjoint() * f.h.matrix * psi)(0, 0).real()).epsilon(1e-10));

  // t = 0 computed directly and from the eigen-sum
  const auto zb = build_observable({ObservableKind::ZN}, f.b);
  const double direct = (psi.adjoint() * zb.matrix * psi)(0, 0).real();
  const auto ev = evolve_expectation(st, f.zn.elements, times(20, 201));
  CHECK(ev.values.front() == doctest::Approx(direct).epsilon(1e-10));
  CHECK(ev.max_imag < 1e-10);

  const auto c = conservation_check(st, f.s, f.h.matrix, times(20, 21));
  CHECK(c.max_energy_defect < 1e-10);
  CHECK(c.max_norm_defect < 1e-10);

  const auto fl = temporal_fluctuations(st, f.zn.elements, 200.0, 2001);
  CHECK(fl.empirical <= fl.bound);
  const auto fl2 = temporal_fluctuations(st, f.zn.elements, 2000.0, 20001);
  CHECK(std::abs(fl2.empirical - fl2.analytic) < std::abs(fl.empirical - fl.analytic) + 0.2 * fl.analytic);

  const auto diag = f.zn.diagonal();
  const auto lt = long_time_average(st, f.zn.elements, 400.0, 40001);
  CHECK(std::abs(lt.average - lt.diagonal) <= lt.bound);
  CHECK(lt.diagonal == doctest::Approx(diagonal_ensemble(st, diag)));
  CHECK_THROWS_AS(long_time_average(st, f.zn.elements, 400.0, 3), InvalidSpec);
}

TEST_CASE("eigenstate of another model as initial state") {
  Fixture f(8);
  const auto psi = prepare_initial(parse_initial("eig:1,0.55"), f.b, ModelParams{});
  Fixture g(8, 1.0);
  const Eigen::Index mid = static_cast<Eigen::Index>(g.s.dim() / 2);
  CHECK(std::abs(std::abs(psi.dot(g.s.vectors.col(mid))) - 1.0) < 1e-10);
  // same model: stationary
  const auto same = prepare_initial(parse_initial("eig:0,0.55"), f.b, ModelParams{});
  CHECK(make_setup(f.s, same).delta_e0 < 1e-6);
}

TEST_CASE("microcanonical averages") {
  Fixture f(8);
  const auto diag = f.zn.diagonal();
  const auto& e = f.s.energies;
  const auto all = microcanonical_average(e, diag, 0.5 * (e(0) + e(e.size() - 1)), 10 * (e(e.size() - 1) - e(0)));
  CHECK(all.value == doctest::Approx(diag.mean()).epsilon(1e-12));
  const auto one = microcanonical_average(e, Eigen::VectorXd::Ones(diag.size()), e.mean());
  CHECK(one.value == doctest::Approx(1.0));
  CHECK(one.states >= 20);
  // uniform weights over a window reproduce its microcanonical mean
  const auto mc = microcanonical_average(e, diag, e.mean());
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(e.size());
  std::size_t in = 0;
  for (Eigen::Index m = 0; m < e.size(); ++m) {
    if (std::abs(e(m) - e.mean()) < mc.window / 2) {
      c(m) = 1.0;
      ++in;
    }
  }
  CHECK(in == mc.states);
  c /= std::sqrt(static_cast<double>(in));
  const auto st = make_setup(f.s, f.s.vectors * c);
  CHECK(diagonal_ensemble(st, diag) == doctest::Approx(mc.value).epsilon(1e-10));
}
