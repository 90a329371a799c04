#pragma once

// Dense diagonalization of sector blocks, density of states and level
// statistics.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ethlab/basis.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/stats.hpp"

namespace ethlab {

struct Spectrum {
  basis::SectorSpec spec;
  std::uint64_t params_hash = 0;
  Eigen::VectorXd energies;   // ascending
  Eigen::MatrixXcd vectors;   // column m = |psi_m>; empty for eigenvalue-only runs
  double residual = 0.0;      // max_m |H v_m - E_m v_m| / max|E| over the checked columns
  bool from_cache = false;
  double seconds = 0.0;       // wall time of the eigensolver (0 on cache hits)

  std::size_t dim() const { return static_cast<std::size_t>(energies.size()); }
  bool has_vectors() const { return vectors.size() > 0; }
};

// Complex Hermitian eigensolver (LAPACK divide and conquer). Eigenvectors are
// gauge fixed: the largest-modulus component of each is real positive.
Spectrum diagonalize(const OperatorBlock& block, std::uint64_t params_hash = 0, bool want_vectors = true);
Eigen::VectorXd real_symmetric_eigenvalues(const Eigen::MatrixXd& a);

void fix_gauge(Eigen::MatrixXcd& v);
// Residual max_m |H v_m - E_m v_m| / max|E| over the given columns (all if empty).
double eigen_residual(const Eigen::MatrixXcd& h, const Eigen::VectorXd& e, const Eigen::MatrixXcd& v,
                      const std::vector<Eigen::Index>& columns = {});
double orthonormality_defect(const Eigen::MatrixXcd& v);

struct DosResult {
  stats::Histogram histogram;  // of E_m / L
  stats::FitResult gaussian;   // least-squares fit to the histogram
  double mean = 0.0;           // of E_m / L
  double sigma = 0.0;          // sample standard deviation of E_m / L
  std::size_t count = 0;
};

// Pooled density of states over the spectra (same L). bins = 0 selects
// Freedman-Diaconis with a floor of 20.
DosResult dos(const std::vector<const Spectrum*>& spectra, std::size_t bins = 0);

struct SigmaScaling {
  std::vector<int> sizes;
  std::vector<double> sigma_fit;     // Gaussian-fit width of E_m/L
  std::vector<double> sigma_sample;  // sample standard deviation of E_m/L
  stats::FitResult fit;              // sigma_fit ~ L^{-gamma}; gamma = -exponent
  double gamma = 0.0;
};
SigmaScaling sigma_scaling(const std::vector<int>& sizes, const std::vector<DosResult>& per_size);

// Spacings of the central fraction of an ascending spectrum, rescaled to unit mean.
std::vector<double> unfolded_spacings(const Eigen::VectorXd& e, double central_fraction);
// r_m = min(s_m, s_{m-1}) / max(s_m, s_{m-1}) over the whole spectrum (0/0 -> 0).
std::vector<double> spacing_ratios(const Eigen::VectorXd& e);

struct SpacingStats {
  stats::Histogram histogram;
  std::vector<double> spacings;
  double mean_spacing = 0.0;
  double ks_goe = 0.0;
  double ks_poisson = 0.0;
};
SpacingStats level_spacing_stats(const std::vector<const Spectrum*>& spectra, double central_fraction = 0.5,
                                 std::size_t bins = 0);

struct RatioStats {
  stats::Histogram histogram;
  double mean_r = 0.0;
  double mean_r_stderr = 0.0;
  std::vector<double> per_sector_mean;
  std::size_t count = 0;
  double ks_goe = 0.0;
  double ks_poisson = 0.0;
};
RatioStats ratio_stats(const std::vector<const Spectrum*>& spectra, std::size_t bins = 0);

// The nontrivial production family {M = 0, Z2 = +-1, k != 0, pi}. With
// pair_time_reversal only eta > 0 is listed (eta < 0 has the identical
// spectrum) and each sector is meant to be counted twice.
std::vector<basis::SectorSpec> production_sectors(int L, bool pair_time_reversal);

}  // namespace ethlab
