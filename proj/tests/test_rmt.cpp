#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ethlab/error.hpp"
#include "ethlab/rmt.hpp"
#include "ethlab/stats.hpp"

using namespace ethlab;
using namespace ethlab::rmt;

TEST_CASE("closed-form densities") {
  for (auto d : {Distribution::WignerGOE, Distribution::WignerGUE, Distribution::PoissonS, Distribution::RatioGOE,
                 Distribution::RatioGUE, Distribution::RatioPoisson, Distribution::PorterThomasO,
                 Distribution::PorterThomasU, Distribution::Gumbel, Distribution::Semicircle}) {
    CAPTURE(to_string(d));
    CHECK(moment(d, 0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(parse_distribution(to_string(d)) == d);
  }
  CHECK(pdf(Distribution::WignerGOE, 0.0) == 0.0);
  CHECK(moment(Distribution::WignerGOE, 1) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(moment(Distribution::WignerGUE, 1) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(pdf(Distribution::RatioPoisson, 1.0) == doctest::Approx(0.5));
  CHECK(moment(Distribution::RatioGOE, 1) == doctest::Approx(4.0 - 2.0 * std::sqrt(3.0)).epsilon(1e-6));
  CHECK(moment(Distribution::RatioGOE, 1) == doctest::Approx(0.536).epsilon(1e-3));
  CHECK(moment(Distribution::RatioPoisson, 1) == doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-6));
  CHECK(moment(Distribution::PorterThomasO, 1) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(moment(Distribution::PorterThomasO, 2) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(moment(Distribution::Semicircle, 2) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(cdf(Distribution::Gumbel, 1e9) == doctest::Approx(1.0));
  CHECK(pdf(Distribution::Semicircle, 2.0) == 0.0);
}

TEST_CASE("ensemble sampling is seed-determined") {
  EnsembleSpec s;
  s.kind = Ensemble::GUE;
  s.dim = 6;
  s.seed = 42;
  const auto a = sample_gaussian_ensemble(s, 3);
  const auto b = sample_gaussian_ensemble(s, 3);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - a.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - sample_gaussian_ensemble(s, 4)).cwiseAbs().maxCoeff() > 0.0);
  s.kind = Ensemble::GOE;
  CHECK(sample_gaussian_ensemble(s, 0).imag().cwiseAbs().maxCoeff() == 0.0);
  s.dim = 1;
  CHECK_THROWS_AS(s.validate(), InvalidSpec);
}

TEST_CASE("Gaussian ensembles") {
  EnsembleSpec s;
  s.kind = Ensemble::GOE;
  s.dim = 1000;
  s.seed = 5;
  CHECK(semicircle_ks(s) < 0.03);
  s.dim = 4;
  const auto r = diag_offdiag_variance_ratio(s, 100000);
  CHECK(r.analytic == 2.0);
  CHECK(std::abs(r.empirical - 2.0) < 3 * r.stderr_);

  // entry means vanish
  s.dim = 5;
  double sum = 0, sum2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = sample_goe_real(s, i)(1, 3);
    sum += x;
    sum2 += x * x;
  }
  const double m = sum / n, se = std::sqrt((sum2 / n - m * m) / n);
  CHECK(std::abs(m) < 4 * se);
}

TEST_CASE("Haar matrices") {
  for (auto kind : {Ensemble::HaarO, Ensemble::HaarU}) {
    EnsembleSpec s;
    s.kind = kind;
    s.dim = 7;
    s.seed = 9;
    double mean_x = 0;
    const int draws = 2000;
    for (int i = 0; i < draws; ++i) {
      const auto u = sample_haar(s, i);
      CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-12);
      mean_x += std::norm(u(2, 4));
    }
    CHECK(mean_x / draws == doctest::Approx(1.0 / 7).epsilon(0.05));
  }
  // D = 2 orthogonal: c = cos(theta) with theta uniform, arcsine law
  EnsembleSpec s;
  s.kind = Ensemble::HaarO;
  s.dim = 2;
  s.seed = 1;
  std::vector<double> c;
  for (int i = 0; i < 20000; ++i) c.push_back(sample_haar_orthogonal(s, i)(0, 0));
  const double ks = stats::ks_distance(c, [](double x) { return 1.0 - std::acos(std::clamp(x, -1.0, 1.0)) / std::numbers::pi; });
  CHECK(ks < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("Porter-Thomas") {
  EnsembleSpec s;
  s.kind = Ensemble::HaarU;
  s.dim = 256;
  s.seed = 3;
  const auto u = porter_thomas_test(s, 100000);
  CHECK(u.ks < 0.01);
  CHECK(u.mean_x == doctest::Approx(1.0).epsilon(0.01));
  s.kind = Ensemble::HaarO;
  const auto o = porter_thomas_test(s, 100000);
  CHECK(o.ks < 0.01);
  CHECK(o.var_x == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("Weingarten values and four-point closed forms") {
  for (int D : {3, 5, 8}) {
    CHECK(weingarten_unitary_identity(D) == doctest::Approx(1.0 / (D * D - 1.0)));
    CHECK(weingarten_unitary_swap(D) == doctest::Approx(-1.0 / (D * (D * D - 1.0))));
    CHECK(weingarten_orthogonal_11(D) == doctest::Approx((D + 1.0) / (D * (D - 1.0) * (D + 2.0))));
    CHECK(weingarten_orthogonal_2(D) == doctest::Approx(-1.0 / (D * (D - 1.0) * (D + 2.0))));
  }
  for (int D : {2, 3, 5}) {
    for (auto kind : {Ensemble::HaarU, Ensemble::HaarO}) {
      for (const auto& idx : four_point_patterns(D)) {
        CHECK(four_point_closed_form(kind, D, idx) == doctest::Approx(four_point_pairings(kind, D, idx)).epsilon(1e-12));
      }
    }
  }
  // identity pattern with distinct indices
  const FourIndex id{0, 1, 0, 1, 2, 3, 2, 3};
  CHECK(four_point_closed_form(Ensemble::HaarU, 5, id) == doctest::Approx(1.0 / 24.0));
  // all equal, orthogonal
  const FourIndex eq{0, 0, 0, 0, 0, 0, 0, 0};
  const int D = 5;
  const double denom = D * (D - 1.0) * (D + 2.0);
  CHECK(four_point_closed_form(Ensemble::HaarO, D, eq) == doctest::Approx(3.0 * (D + 1.0) / denom - 6.0 / denom));
  // an unpaired index
  const FourIndex none{0, 1, 0, 2, 0, 0, 0, 0};
  CHECK(four_point_closed_form(Ensemble::HaarU, D, none) == 0.0);
}

TEST_CASE("Monte-Carlo four-point moments") {
  for (auto kind : {Ensemble::HaarU, Ensemble::HaarO}) {
    const auto patterns = four_point_patterns(3);
    const auto res = weingarten_4point_check(kind, 3, 100000, patterns, 17);
    for (const auto& r : res) {
      CHECK(std::abs(r.z) < 5.0);
      CHECK(r.closed_form == doctest::Approx(r.pairings).epsilon(1e-12));
    }
  }
}

TEST_CASE("rotated diagonal operators") {
  std::vector<double> o;
  for (int j = 0; j < 32; ++j) o.push_back(j);
  const auto u = rmt_matrix_element_moments(Ensemble::HaarU, o, 4000, 2);
  CHECK(std::abs(u.var_offdiag - u.pred_var_offdiag) < 4 * u.var_offdiag_err);
  CHECK(u.pred_var_offdiag == doctest::Approx(u.asym_var_offdiag).epsilon(0.1));
  const auto r = rmt_matrix_element_moments(Ensemble::HaarO, o, 4000, 2);
  CHECK(std::abs(r.ratio - 2.0) < 4 * r.ratio_err + 0.1);
  std::vector<double> c(8, 1.5);
  const auto k = rmt_matrix_element_moments(Ensemble::HaarU, c, 100, 1);
  CHECK(k.var_offdiag < 1e-24);
  CHECK(k.mean_diag == doctest::Approx(1.5));
}
