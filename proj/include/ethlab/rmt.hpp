#pragma once

// Random-matrix and Haar reference engine: ensemble sampling, closed-form
// distributions, Weingarten 4-point moments and Monte-Carlo checks.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ethlab::rmt {

enum class Ensemble { GOE, GUE, HaarO, HaarU };

struct EnsembleSpec {
  Ensemble kind = Ensemble::GOE;
  int dim = 2;
  std::uint64_t seed = 0;
  double sigma = 1.0;

  void validate() const;
  bool real() const { return kind == Ensemble::GOE || kind == Ensemble::HaarO; }
};

std::string to_string(Ensemble e);
Ensemble parse_ensemble(const std::string& name);

// Generator for draw `index` of the stream identified by spec; independent of
// how many other draws were taken before.
std::mt19937_64 draw_engine(const EnsembleSpec& spec, std::uint64_t index);

// GOE: H = (M + M^T)/2 with iid N(0, sigma^2) entries (diagonal variance
// sigma^2, off-diagonal sigma^2/2). GUE: the complex analogue with diagonal
// variance sigma^2/2. GOE samples have zero imaginary part.
Eigen::MatrixXcd sample_gaussian_ensemble(const EnsembleSpec& spec, std::uint64_t index);
// Haar-distributed orthogonal (real) or unitary matrix via QR with the
// R-diagonal phase correction.
Eigen::MatrixXcd sample_haar(const EnsembleSpec& spec, std::uint64_t index);
// Real variants used by the hot Monte-Carlo loops.
Eigen::MatrixXd sample_goe_real(const EnsembleSpec& spec, std::uint64_t index);
Eigen::MatrixXd sample_haar_orthogonal(const EnsembleSpec& spec, std::uint64_t index);

enum class Distribution {
  WignerGOE,
  WignerGUE,
  PoissonS,
  RatioGOE,
  RatioGUE,
  RatioPoisson,
  PorterThomasO,
  PorterThomasU,
  Gumbel,
  Semicircle,
};

Distribution parse_distribution(const std::string& name);
std::string to_string(Distribution d);

// Densities vanish outside the support. gumbel uses (mu, sigma); the others
// ignore them.
double pdf(Distribution d, double x, double mu = 0.0, double sigma = 1.0);
double cdf(Distribution d, double x, double mu = 0.0, double sigma = 1.0);
// Support [lo, hi] (hi may be +inf) for quadrature.
std::pair<double, double> support(Distribution d);
// Integral of x^k pdf(x) over the support by adaptive quadrature.
double moment(Distribution d, int k, double mu = 0.0, double sigma = 1.0);

struct McReport {
  std::string statistic;
  double analytic = 0.0;
  double empirical = 0.0;
  double stderr_ = 0.0;
  double z = 0.0;
};

// KS distance of one GOE/GUE draw's rescaled eigenvalues x = lambda/(sigma sqrt(D))
// to the semicircle.
double semicircle_ks(const EnsembleSpec& spec, std::uint64_t index = 0);

// Pools rescaled squared amplitudes from eigenvectors (GOE/GUE) or Haar
// columns until n_samples are collected and returns the KS distance to
// Porter-Thomas (orthogonal) or exponential (unitary).
struct PorterThomasResult {
  double ks = 0.0;
  double mean_x = 0.0;
  double var_x = 0.0;
  std::size_t samples = 0;
};
PorterThomasResult porter_thomas_test(const EnsembleSpec& spec, std::size_t n_samples);

// Ratio of diagonal to off-diagonal entry variance of Gaussian-ensemble draws.
McReport diag_offdiag_variance_ratio(const EnsembleSpec& spec, std::size_t draws);

// ---- Weingarten calculus for N = 2 ----

// Index order (j, k, j', k', m, n, m', n') of
//   < c^m_j c^n_k conj(c^{m'}_{j'}) conj(c^{n'}_{k'}) >  with c^m_j = U(j, m).
using FourIndex = std::array<int, 8>;

double weingarten_unitary_identity(int D);  // Wg([1,1]) = 1/(D^2-1)
double weingarten_unitary_swap(int D);      // Wg([2]) = -1/(D(D^2-1))
double weingarten_orthogonal_11(int D);     // (D+1)/(D(D-1)(D+2))
double weingarten_orthogonal_2(int D);      // -1/(D(D-1)(D+2))

// Closed forms exactly as printed (sum of Kronecker-delta products).
double four_point_closed_form(Ensemble kind, int D, const FourIndex& idx);
// Independent route: enumerate permutation (unitary) or pairing (orthogonal)
// pairs, classify their coset type and sum the Weingarten values.
double four_point_pairings(Ensemble kind, int D, const FourIndex& idx);

// Every distinct equality pattern of the four row and four column indices
// realizable with D labels.
std::vector<FourIndex> four_point_patterns(int D);

struct WeingartenCheck {
  FourIndex index{};
  double closed_form = 0.0;
  double pairings = 0.0;
  double empirical = 0.0;
  double stderr_ = 0.0;
  double z = 0.0;
};

// Monte-Carlo averages of all given index tuples from the same Haar samples.
std::vector<WeingartenCheck> weingarten_4point_check(Ensemble kind, int D, std::size_t n_samples,
                                                     const std::vector<FourIndex>& indices,
                                                     std::uint64_t seed);

// Moments of the matrix elements of diag(O_j) rotated by Haar matrices.
struct MomentReport {
  double mean_diag = 0.0, mean_diag_err = 0.0;
  double var_diag = 0.0, var_diag_err = 0.0;
  double var_offdiag = 0.0, var_offdiag_err = 0.0;
  // Exact finite-D predictions from the N = 2 Weingarten functions.
  double pred_mean_diag = 0.0;
  double pred_var_diag = 0.0;
  double pred_var_offdiag = 0.0;
  // Large-D forms: var_diag -> (2/beta)(O2 - O1^2)/D, var_offdiag -> (O2 - O1^2)/D.
  double asym_var_diag = 0.0;
  double asym_var_offdiag = 0.0;
  double ratio = 0.0, ratio_err = 0.0;
};
MomentReport rmt_matrix_element_moments(Ensemble kind, const std::vector<double>& o, std::size_t n_samples,
                                        std::uint64_t seed);

}  // namespace ethlab::rmt
