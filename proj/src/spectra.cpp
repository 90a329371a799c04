#include "ethlab/spectra.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "ethlab/error.hpp"
#include "ethlab/rmt.hpp"

namespace ethlab {

namespace {

// Columns sampled for the residual check of large blocks.
std::vector<Eigen::Index> residual_columns(Eigen::Index n) {
  if (n <= 400) return {};
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < 64; ++i) cols.push_back(i * (n - 1) / 63);
  return cols;
}

}  // namespace

void fix_gauge(Eigen::MatrixXcd& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      // strict comparison with a tolerance keeps the choice stable under rounding
      const double a = std::norm(v(r, c));
      if (a > best * (1.0 + 1e-10)) {
        best = a;
        imax = r;
      }
    }
    if (best > 0) v.col(c) *= std::conj(v(imax, c)) / std::abs(v(imax, c));
  }
}

double eigen_residual(const Eigen::MatrixXcd& h, const Eigen::VectorXd& e, const Eigen::MatrixXcd& v,
                      const std::vector<Eigen::Index>& columns) {
  if (e.size() == 0) return 0.0;
  const double scale = std::max(e.cwiseAbs().maxCoeff(), 1e-300);
  double worst = 0.0;
  auto check = [&](Eigen::Index m) {
    const double r = (h * v.col(m) - e(m) * v.col(m)).cwiseAbs().maxCoeff();
    worst = std::max(worst, r);
  };
  if (columns.empty()) {
    const Eigen::MatrixXcd r = h * v - v * e.asDiagonal();
    worst = r.cwiseAbs().maxCoeff();
  } else {
    for (auto m : columns) check(m);
  }
  return worst / scale;
}

double orthonormality_defect(const Eigen::MatrixXcd& v) {
  const Eigen::MatrixXcd g = v.adjoint() * v;
  return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

Spectrum diagonalize(const OperatorBlock& block, std::uint64_t params_hash, bool want_vectors) {
  const auto n = block.matrix.rows();
  if (n != block.matrix.cols()) throw InvalidInput("diagonalize: block is not square");
  if (!(block.spec == block.ket_spec)) throw InvalidInput("diagonalize: off-diagonal sector block");
  Spectrum s;
  s.spec = block.spec;
  s.params_hash = params_hash;
  if (n == 0) return s;
  const auto t0 = std::chrono::steady_clock::now();
  Eigen::MatrixXcd a;
  s.energies.resize(n);
  if (block.matrix.imag().cwiseAbs().maxCoeff() == 0.0) {
    // real symmetric blocks (open chains, k = 0, pi) go through dsyevd
    Eigen::MatrixXd r = block.matrix.real();
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L',
                                           static_cast<lapack_int>(n), r.data(), static_cast<lapack_int>(n),
                                           s.energies.data());
    if (info != 0) {
      throw NumericError("dsyevd failed (info " + std::to_string(info) + ") in sector " + block.spec.to_string());
    }
    if (want_vectors) a = r.cast<cplx>();
  } else {
    a = block.matrix;
    const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L',
                                           static_cast<lapack_int>(n), a.data(), static_cast<lapack_int>(n),
                                           s.energies.data());
    if (info != 0) {
      throw NumericError("zheevd failed (info " + std::to_string(info) + ") in sector " + block.spec.to_string());
    }
  }
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (want_vectors) {
    fix_gauge(a);
    s.residual = eigen_residual(block.matrix, s.energies, a, residual_columns(n));
    if (s.residual > 1e-9) {
      throw NumericError("eigen residual " + std::to_string(s.residual) + " in sector " + block.spec.to_string());
    }
    s.vectors = std::move(a);
  }
  return s;
}

Eigen::VectorXd real_symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  Eigen::MatrixXd w = a;
  Eigen::VectorXd e(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', static_cast<lapack_int>(n), w.data(),
                                         static_cast<lapack_int>(n), e.data());
  if (info != 0) throw NumericError("dsyevd failed (info " + std::to_string(info) + ")");
  return e;
}

DosResult dos(const std::vector<const Spectrum*>& spectra, std::size_t bins) {
  if (spectra.empty()) throw InvalidInput("dos: no spectra");
  const int L = spectra.front()->spec.L;
  std::vector<double> x;
  for (const auto* s : spectra) {
    if (s->spec.L != L) throw InvalidInput("dos: spectra with different L");
    for (Eigen::Index i = 0; i < s->energies.size(); ++i) x.push_back(s->energies(i) / L);
  }
  if (x.size() < 2) throw InvalidInput("dos: need at least two eigenvalues");
  DosResult r;
  r.count = x.size();
  r.histogram = bins ? stats::histogram(x, bins) : stats::histogram_auto(x);
  std::size_t populated = 0;
  for (double d : r.histogram.densities)
    if (d > 0) ++populated;
  if (populated < 2) throw InvalidInput("dos: fewer than two populated bins");
  r.gaussian = stats::fit_gaussian_histogram(r.histogram);
  r.mean = stats::mean(x);
  r.sigma = stats::stddev(x);
  return r;
}

SigmaScaling sigma_scaling(const std::vector<int>& sizes, const std::vector<DosResult>& per_size) {
  if (sizes.size() != per_size.size() || sizes.size() < 2) throw InvalidInput("sigma_scaling: need >= 2 sizes");
  SigmaScaling s;
  s.sizes = sizes;
  std::vector<double> xs;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    s.sigma_fit.push_back(per_size[i].gaussian.param("sigma"));
    s.sigma_sample.push_back(per_size[i].sigma);
    xs.push_back(sizes[i]);
  }
  s.fit = stats::fit_power_law(xs, s.sigma_fit);
  s.gamma = -s.fit.param("exponent");
  return s;
}

std::vector<double> unfolded_spacings(const Eigen::VectorXd& e, double central_fraction) {
  if (!(central_fraction > 0 && central_fraction <= 1)) throw InvalidSpec("central fraction must lie in (0, 1]");
  const auto n = e.size();
  const auto keep = static_cast<Eigen::Index>(std::floor(central_fraction * static_cast<double>(n)));
  if (keep < 3) throw InvalidInput("unfolded_spacings: too few levels in the central window");
  const Eigen::Index first = (n - keep) / 2;
  std::vector<double> s;
  s.reserve(keep - 1);
  for (Eigen::Index i = first; i + 1 < first + keep; ++i) s.push_back(e(i + 1) - e(i));
  const double m = stats::mean(s);
  if (!(m > 0)) throw InvalidInput("unfolded_spacings: fully degenerate window");
  for (double& v : s) v /= m;
  return s;
}

std::vector<double> spacing_ratios(const Eigen::VectorXd& e) {
  std::vector<double> r;
  for (Eigen::Index i = 1; i + 1 < e.size(); ++i) {
    const double a = e(i) - e(i - 1);
    const double b = e(i + 1) - e(i);
    const double hi = std::max(a, b);
    r.push_back(hi > 0 ? std::min(a, b) / hi : 0.0);
  }
  return r;
}

SpacingStats level_spacing_stats(const std::vector<const Spectrum*>& spectra, double central_fraction,
                                 std::size_t bins) {
  if (spectra.empty()) throw InvalidInput("level_spacing_stats: no spectra");
  SpacingStats st;
  for (const auto* s : spectra) {
    const double kept = central_fraction * static_cast<double>(s->dim());
    if (kept < 50) {
      throw InvalidInput("level_spacing_stats: sector " + s->spec.to_string() + " keeps fewer than 50 levels");
    }
    const auto u = unfolded_spacings(s->energies, central_fraction);
    st.spacings.insert(st.spacings.end(), u.begin(), u.end());
  }
  st.mean_spacing = stats::mean(st.spacings);
  const double hi = std::max(4.0, *std::max_element(st.spacings.begin(), st.spacings.end()));
  const std::size_t nb = bins ? bins : std::max<std::size_t>(20, stats::fd_bins(st.spacings));
  std::vector<double> edges(nb + 1);
  for (std::size_t i = 0; i <= nb; ++i) edges[i] = hi * static_cast<double>(i) / static_cast<double>(nb);
  st.histogram = stats::histogram(st.spacings, edges);
  st.ks_goe = stats::ks_distance(st.spacings, [](double x) { return rmt::cdf(rmt::Distribution::WignerGOE, x); });
  st.ks_poisson = stats::ks_distance(st.spacings, [](double x) { return rmt::cdf(rmt::Distribution::PoissonS, x); });
  return st;
}

RatioStats ratio_stats(const std::vector<const Spectrum*>& spectra, std::size_t bins) {
  if (spectra.empty()) throw InvalidInput("ratio_stats: no spectra");
  RatioStats st;
  std::vector<double> all;
  for (const auto* s : spectra) {
    const auto r = spacing_ratios(s->energies);
    if (r.empty()) continue;
    st.per_sector_mean.push_back(stats::mean(r));
    all.insert(all.end(), r.begin(), r.end());
  }
  if (all.size() < 2) throw InvalidInput("ratio_stats: need at least two ratios");
  st.count = all.size();
  st.mean_r = stats::mean(all);
  st.mean_r_stderr = stats::stddev(all) / std::sqrt(static_cast<double>(all.size()));
  const std::size_t nb = bins ? bins : 20;
  std::vector<double> edges(nb + 1);
  for (std::size_t i = 0; i <= nb; ++i) edges[i] = static_cast<double>(i) / static_cast<double>(nb);
  st.histogram = stats::histogram(all, edges);
  st.ks_goe = stats::ks_distance(all, [](double x) { return rmt::cdf(rmt::Distribution::RatioGOE, x); });
  st.ks_poisson = stats::ks_distance(all, [](double x) { return rmt::cdf(rmt::Distribution::RatioPoisson, x); });
  return st;
}

std::vector<basis::SectorSpec> production_sectors(int L, bool pair_time_reversal) {
  std::vector<basis::SectorSpec> out;
  const auto [lo, hi] = basis::eta_range(L);
  for (int eta = pair_time_reversal ? 1 : lo; eta <= hi; ++eta) {
    if (eta == 0 || (L % 2 == 0 && eta == L / 2)) continue;
    for (int z : {1, -1}) {
      basis::SectorSpec s;
      s.L = L;
      s.M = 0;
      s.eta = eta;
      s.spin_flip = z;
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace ethlab
