#include <doctest.h>

#include <cmath>
#include <random>

#include "ethlab/analysis.hpp"
#include "ethlab/basis.hpp"
#include "ethlab/error.hpp"
#include "ethlab/eth.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/kernels.hpp"
#include "ethlab/spectra.hpp"
#include "oracle.hpp"

using namespace ethlab;

namespace {

basis::SymBasis sector(int L, int M, std::optional<int> eta, std::optional<int> flip = std::nullopt) {
  basis::SectorSpec s;
  s.L = L;
  s.M = M;
  s.eta = eta;
  s.spin_flip = flip;
  return basis::build_sym_basis(s);
}

OperatorBlock identity_block(const basis::SymBasis& b) {
  OperatorBlock o;
  o.spec = o.ket_spec = b.spec();
  o.matrix = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(b.dim()), static_cast<Eigen::Index>(b.dim()));
  o.label = "identity";
  return o;
}

Eigen::MatrixXcd random_complex(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(r, c);
  for (auto& x : m.reshaped()) x = {g(rng), g(rng)};
  return m;
}

}  // namespace

TEST_CASE("rotation in real and complex arithmetic") {
  Eigen::MatrixXcd a = random_complex(30, 20, 1).real().cast<cplx>();
  Eigen::MatrixXcd bra = random_complex(30, 12, 2).real().cast<cplx>();
  Eigen::MatrixXcd ket = random_complex(20, 9, 3).real().cast<cplx>();
  const Eigen::MatrixXcd ref = bra.adjoint() * a * ket;
  CHECK((eth::rotate(a, bra, ket) - ref).cwiseAbs().maxCoeff() < 1e-12);
  bra(0, 0) += cplx(0, 1e-3);
  CHECK((eth::rotate(a, bra, ket) - bra.adjoint() * a * ket).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(eth::rotate(a, ket, bra), InvalidInput);
}

TEST_CASE("matrix elements: identity, trace and sum rule") {
  ModelParams p;
  const auto b = sector(8, 0, 1, 1);
  const auto s = diagonalize(build_hamiltonian(p, b));
  const auto id = eth::matrix_elements(identity_block(b), s);
  CHECK((id.elements - Eigen::MatrixXcd::Identity(id.elements.rows(), id.elements.cols())).cwiseAbs().maxCoeff() <
        1e-12);
  for (auto kind : {ObservableKind::ZN, ObservableKind::ZNN}) {
    const auto o = build_observable({kind}, b);
    const auto me = eth::matrix_elements(o, s);
    CHECK(std::abs(me.diagonal().sum() - o.matrix.trace().real()) < 1e-9);
    CHECK((me.elements - me.elements.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(eth::sum_rule_defect(o, s, me) < 1e-9);
  }
  // J_N is odd under spin inversion: nothing inside one Z2 sector
  const auto jn = build_observable({ObservableKind::JN}, b);
  CHECK(eth::matrix_elements(jn, s).diagonal().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("time-reversal gauge makes even real operators real") {
  ModelParams p;
  const auto b = sector(9, 0, 2, 1);
  auto s = diagonalize(build_hamiltonian(p, b));
  const auto before = eth::matrix_elements(build_observable({ObservableKind::ZN}, b), s);
  const std::size_t skipped = eth::time_reversal_gauge(s, b);
  CHECK(skipped == 0);
  const auto after = eth::matrix_elements(build_observable({ObservableKind::ZN}, b), s);
  CHECK(after.elements.imag().cwiseAbs().maxCoeff() < 1e-10);
  CHECK((after.elements.cwiseAbs() - before.elements.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.residual < 1e-12);
}

TEST_CASE("diagonal statistics on synthetic data") {
  eth::DiagonalSet d;
  d.L = 8;
  d.label = "const";
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.3, 0.05);
  for (int i = 0; i < 4000; ++i) {
    d.energies.push_back(i * 0.01);
    d.values.push_back(0.25);
  }
  d.omega = 100;
  CHECK(eth::diag_fluctuation(d).delta_o == 0.0);
  for (auto& v : d.values) v = g(rng);
  const auto dist = eth::diag_distribution(d, 1.0);
  const double mu = dist.gaussian.param("mu"), sigma = dist.gaussian.param("sigma");
  CHECK(std::abs(mu - 0.3) < 3 * 0.05 / std::sqrt(4000.0));
  CHECK(std::abs(sigma - 0.05) < 3 * 0.05 / std::sqrt(2 * 4000.0));
  CHECK(std::abs(dist.skewness) < 0.15);
}

TEST_CASE("off-diagonal pool and windows") {
  ModelParams p;
  const auto b = sector(8, 0, 1, 1);
  const auto s = diagonalize(build_hamiltonian(p, b));
  const auto me = eth::matrix_elements(build_observable({ObservableKind::ZN}, b), s);
  auto pool = eth::offdiag_pool(8, {&s.energies}, 0.2);
  eth::offdiag_pool_add(pool, me);
  eth::OffdiagWindow w;
  w.central_fraction = 0.2;
  w.min_pairs = 10;
  const auto a = eth::offdiag_sample(pool, w);
  const auto c = eth::offdiag_sample({&me}, w);
  CHECK(a.values.size() == c.values.size());
  CHECK(a.values.size() > 10);
  w.max_abs_omega = 1e-6;
  const auto narrow = eth::offdiag_sample(pool, w);
  CHECK(narrow.values.size() >= 10);
  CHECK(*narrow.omega_window > 1e-6);
  CHECK(!narrow.warnings.empty());
}

TEST_CASE("spectral accumulator identities") {
  ModelParams p;
  const int L = 8;
  const auto edges = eth::frequency_edges(1e-3, 1.0, 24, 0.25, 40.0);
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(0.005 * i);
  eth::SpectralAccumulator acc(L, L, edges, grid), zero(L, L, edges, grid);
  for (const auto& spec : production_sectors(L, true)) {
    const auto b = basis::build_sym_basis(spec);
    const auto s = diagonalize(build_hamiltonian(p, b));
    const auto el = eth::rotate(build_observable({ObservableKind::ZN}, b).matrix, s.vectors, s.vectors);
    eth::SectorContribution c;
    c.multiplicity = 2;
    c.energies = s.energies;
    c.blocks.push_back({&el, &s.energies, &s.energies, true, false});
    acc.add(c);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(el.rows(), el.cols());
    eth::SectorContribution z = c;
    z.blocks[0].elements = &id;
    zero.add(z);
  }
  for (double v : zero.var("id").values) CHECK(v == 0.0);
  for (double v : zero.corr_grid("id").values) CHECK(v == 0.0);

  const auto corr = acc.corr_binned("Z_N");
  double integral = 0;
  for (std::size_t i = 0; i < corr.values.size(); ++i) integral += 2 * corr.values[i] * (edges[i + 1] - edges[i]);
  CHECK(integral == doctest::Approx(acc.total_weight()).epsilon(1e-6));

  const auto cg = acc.corr_grid("Z_N");
  const auto rg = acc.resc_grid("Z_N");
  const auto ref = eth::rescale(cg, acc.sigma_e2());
  for (std::size_t i = 0; i < cg.values.size(); ++i) {
    CHECK(rg.values[i] == ref.values[i]);
    CHECK(rg.values[i] == std::sqrt(2.0) * std::exp(cg.omega[i] * cg.omega[i] / (4 * acc.sigma_e2())) * cg.values[i]);
    CHECK(cg.values[i] >= 0.0);
  }
  const auto var = acc.var("Z_N");
  for (std::size_t i = 0; i < var.values.size(); ++i) CHECK(var.values[i] >= 0.0);
}

TEST_CASE("pair-frequency density") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  std::vector<Eigen::VectorXd> spectra;
  for (int k = 0; k < 4; ++k) {
    Eigen::VectorXd e(1500);
    for (auto& x : e) x = g(rng);
    std::sort(e.begin(), e.end());
    spectra.push_back(e);
  }
  std::vector<const Eigen::VectorXd*> ptr;
  for (const auto& e : spectra) ptr.push_back(&e);
  const auto r = eth::rho_omega_check(ptr);
  CHECK(r.ks < 0.01);
  CHECK(r.asymmetry < 1e-12);
}

TEST_CASE("infinite-temperature traces") {
  const double delta = 0.55;
  for (int L : {5, 6, 7}) {
    const auto f = eth::full_space_traces(ObservableKind::ZN, L, delta, eth::TracePathway::Formula);
    const auto e = eth::full_space_traces(ObservableKind::ZN, L, delta, eth::TracePathway::Enumeration);
    CHECK(f.ho == doctest::Approx(e.ho).epsilon(1e-12));
    CHECK(f.h2 == doctest::Approx(e.h2).epsilon(1e-12));
    CHECK(f.h2o == doctest::Approx(e.h2o).epsilon(1e-12));
    CHECK(std::abs(f.h) < 1e-12);
    CHECK(f.ho - f.h * f.o == doctest::Approx(-delta * 4.0 / 9.0).epsilon(1e-12));
    CHECK(f.h2 - f.h * f.h == doctest::Approx(L * (2 + delta * delta) * 4.0 / 9.0).epsilon(1e-12));
  }
  // dense oracle at L = 5
  const int L = 5;
  const auto h = oracle::hamiltonian(L, delta, 0.0);
  Eigen::MatrixXcd zn = Eigen::MatrixXcd::Zero(h.rows(), h.cols());
  for (int j = 0; j < L; ++j) zn += oracle::at(oracle::sz(), j, L) * oracle::at(oracle::sz(), (j + 1) % L, L) / L;
  const double n = static_cast<double>(h.rows());
  const auto t = eth::full_space_traces(ObservableKind::ZN, L, delta, eth::TracePathway::Formula);
  CHECK(t.ho == doctest::Approx((h * zn).trace().real() / n).epsilon(1e-12));
  CHECK(t.h2o == doctest::Approx((h * h * zn).trace().real() / n).epsilon(1e-12));

  for (int M : {0, 1, 3}) {
    for (auto obs : {ObservableKind::ZN, ObservableKind::ZNN, ObservableKind::JN}) {
      const auto a = eth::trace_moments(obs, 7, M, delta, eth::TracePathway::Formula);
      const auto b = eth::trace_moments(obs, 7, M, delta, eth::TracePathway::Enumeration);
      CHECK(a.o == doctest::Approx(b.o).epsilon(1e-10));
      CHECK(a.ho == doctest::Approx(b.ho).epsilon(1e-10));
      CHECK(a.h2o == doctest::Approx(b.h2o).epsilon(1e-10));
      if (obs == ObservableKind::JN) {
        CHECK(std::abs(a.o) < 1e-12);
        CHECK(std::abs(a.ho) < 1e-12);
        CHECK(std::abs(a.h2o) < 1e-12);
      }
    }
  }
}

TEST_CASE("four-spin sector expectations") {
  for (int L : {4, 6, 8}) {
    for (int M = -L; M <= L; ++M) {
      const auto f = eth::four_spin(L, M, eth::TracePathway::Formula);
      const auto e = eth::four_spin(L, M, eth::TracePathway::Enumeration);
      CHECK(f.zz == doctest::Approx(e.zz).epsilon(1e-10));
      CHECK(f.zzzz == doctest::Approx(e.zzzz).epsilon(1e-10));
      CHECK(f.z_zsq_z == doctest::Approx(e.z_zsq_z).epsilon(1e-10));
      CHECK(f.zsq_zsq == doctest::Approx(e.zsq_zsq).epsilon(1e-10));
      CHECK(f.hop2 == doctest::Approx(e.hop2).epsilon(1e-10));
    }
    const auto frozen = eth::four_spin(L, L, eth::TracePathway::Enumeration);
    CHECK(frozen.zz == 1.0);
    CHECK(frozen.zzzz == 1.0);
    CHECK(frozen.zsq_zsq == 1.0);
  }
  const int L = 6, M = 0;
  const double d = static_cast<double>(basis::dim_lm(L, M));
  const double ref = (static_cast<double>(basis::dim_lm(L - 2, M + 2)) + static_cast<double>(basis::dim_lm(L - 2, M - 2)) +
                      2.0 * static_cast<double>(basis::dim_lm(L - 2, M))) / d;
  CHECK(eth::four_spin(L, M, eth::TracePathway::Formula).zsq_zsq == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("microcanonical expansion coefficients") {
  const auto j = eth::microcanonical_coefficients(ObservableKind::JN, 0, 10, 0.55);
  CHECK(j.linear == 0.0);
  CHECK(j.quadratic == 0.0);
  const auto z = eth::microcanonical_coefficients(ObservableKind::ZN, 0, 10, 0.55);
  CHECK(z.evaluate(z.e_inf) == doctest::Approx(z.o_inf));
  CHECK(z.linear < 0.0);
}

TEST_CASE("serial and parallel kernels agree") {
  const auto el = random_complex(300, 250, 9);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Eigen::VectorXd ea(300), eb(250);
  for (auto& x : ea) x = 2 * g(rng);
  for (auto& x : eb) x = 2 * g(rng);
  std::sort(ea.begin(), ea.end());
  std::sort(eb.begin(), eb.end());
  kernels::PairBlock blk{&el, &ea, &eb};
  std::vector<double> edges;
  for (int i = 0; i <= 80; ++i) edges.push_back(-10 + 0.25 * i);
  std::vector<double> s1(80), c1(80), s2(80), c2(80);
  kernels::bin_pairs(blk, edges, s1, c1, kernels::Exec::Serial);
  kernels::bin_pairs(blk, edges, s2, c2, kernels::Exec::Parallel);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(c1[i] == c2[i]);
    CHECK(s1[i] == doctest::Approx(s2[i]).epsilon(1e-12));
  }
  std::vector<double> grid;
  for (int i = 0; i <= 1000; ++i) grid.push_back(-5 + 0.01 * i);
  std::vector<double> g1(grid.size()), g2(grid.size()), b1(80), b2(80);
  kernels::broadened_sum(blk, grid, 0.03, g1, kernels::Exec::Serial);
  kernels::broadened_sum(blk, grid, 0.03, g2, kernels::Exec::Parallel);
  kernels::broadened_interval_mean(blk, edges, 0.03, b1, kernels::Exec::Serial);
  kernels::broadened_interval_mean(blk, edges, 0.03, b2, kernels::Exec::Parallel);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < b1.size(); ++i) CHECK(b1[i] == doctest::Approx(b2[i]).epsilon(1e-12));

  ModelParams p;
  const auto b = sector(8, 0, 3, -1);
  const auto op = hamiltonian_operator(p, 8);
  const auto m1 = kernels::assemble_block(op, b, b, true, kernels::Exec::Serial);
  const auto m2 = kernels::assemble_block(op, b, b, true, kernels::Exec::Parallel);
  const auto m3 = kernels::assemble_block(op, b, b, false, kernels::Exec::Parallel);
  CHECK((m1 - m2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((m1 - m3).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("frequency edges") {
  const auto e = eth::frequency_edges(1e-3, 1.0, 24, 0.25, 40.0);
  CHECK(e.front() == 0.0);
  CHECK(e.back() == doctest::Approx(40.0));
  for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i] > e[i - 1]);
}

TEST_CASE("low-frequency corr/var ratio and collapse spread") {
  eth::SpectralFunction var, corr;
  var.sigma_e2 = corr.sigma_e2 = 3.0;
  corr.broadening = 0.001;
  for (int i = 0; i <= 40; ++i) var.edges.push_back(0.05 * i);
  corr.edges = var.edges;
  for (int i = 0; i < 40; ++i) {
    const double w = 0.05 * i + 0.025;
    var.omega.push_back(w);
    var.values.push_back(std::exp(-w));
    var.present.push_back(true);
    corr.omega.push_back(w);
    corr.values.push_back(std::exp(-w) * std::exp(-w * w / 12.0) / std::sqrt(2.0));
  }
  const auto [lo, hi] = analysis::low_frequency_window(corr, 0.1);
  CHECK(lo == doctest::Approx(0.2));
  CHECK(hi == 1.0);
  CHECK(analysis::low_frequency_ratio(corr, var, lo, hi) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(analysis::low_frequency_ratio(corr, var, 5.0, 6.0), InvalidInput);

  auto shifted = var;
  for (auto& v : shifted.values) v *= 1.1;
  CHECK(analysis::collapse_spread({var, shifted}, 0.0, 2.0) == doctest::Approx(0.1 / 1.05));
  shifted.present[3] = false;
  CHECK(analysis::collapse_spread({var, shifted}, 0.0, 2.0) == doctest::Approx(0.1 / 1.05));
}
