#pragma once

// Production pipelines shared by the command-line tool and the acceptance
// runner: one streaming sweep over the sectors of a system size feeds the
// level, diagonal, off-diagonal, spectral and entanglement analyses.

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ethlab/basis.hpp"
#include "ethlab/entanglement.hpp"
#include "ethlab/eth.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/io.hpp"
#include "ethlab/spectra.hpp"

namespace ethlab::analysis {

struct SweepOptions {
  bool pair_time_reversal = true;
  // Diagonal values and off-diagonal pool of this observable (elements in
  // the time-reversal gauge).
  std::optional<ObservableSpec> eth_observable;
  double offdiag_fraction = 0.05;
  // Spectral functions; J_N is built from the blocks between the two
  // spin-inversion sectors of each momentum.
  std::vector<ObservableSpec> spectral;
  std::vector<double> edges;  // |omega| bins
  std::vector<double> grid;   // corr grid
  double broadening = 0.1;
  // Eigenvectors kept per sector around its median energy for Page curves.
  std::size_t page_candidates = 0;
  bool sum_rule = false;
};

struct SectorRecord {
  basis::SectorSpec spec;
  double multiplicity = 1.0;
  Eigen::VectorXd energies;
  Eigen::VectorXd diagonal;  // of the eth observable
  bool from_cache = false;
  double solver_seconds = 0.0;
  double residual = 0.0;
  double sum_rule_defect = 0.0;
  std::size_t gauge_skipped = 0;
  // Page-curve candidates
  std::optional<basis::SymBasis> basis;
  Eigen::VectorXd candidate_energies;
  Eigen::MatrixXcd candidate_vectors;
  double kept_radius = 0.0;  // candidates cover |E - sector median| <= kept_radius
  double median = 0.0;
};

struct Sweep {
  int L = 0;
  ModelParams model;
  std::string eth_label;
  std::vector<SectorRecord> sectors;
  std::optional<eth::OffdiagPool> pool;
  std::map<std::string, eth::SpectralAccumulator> spectral;  // by observable label
  std::vector<std::string> warnings;
  std::vector<std::string> errors;  // failed sectors are skipped, not fatal

  std::vector<const Eigen::VectorXd*> energies() const;
  // Spectra (eigenvalues only) of the successful sectors.
  std::vector<Spectrum> spectra() const;
  eth::DiagonalSet diagonal_set() const;
};

// Sweeps the production family {M = 0, Z2 = +-1, k != 0, pi} of size L.
Sweep sweep(const ModelParams& model, int L, const SweepOptions& opt, io::SpectrumCache& cache);

// Eigenvalue-only spectra of the production family.
std::vector<Spectrum> production_spectra(const ModelParams& model, int L, bool pair_time_reversal,
                                         io::SpectrumCache& cache);

// Page curve of the n_states states closest to the pooled median, from the
// candidates kept by the sweep. Throws ConsistencyError if the candidates do
// not cover the selection.
entanglement::PageCurve page_curve(const Sweep& s, std::size_t n_states, const std::vector<int>& subsystem_sizes);

// omega -> 0 limit of corr/var: mean of (corr/var) exp(omega^2 / (4 sigma_E^2))
// over the bins lying inside [lo, hi]. lo should sit well above the mean level
// spacing, where the discrete pair density is smooth.
double low_frequency_ratio(const eth::SpectralFunction& corr_binned, const eth::SpectralFunction& var, double lo,
                           double hi);
// Plateau window: 20 mean level spacings up to omega = 1. The mean spacing is
// recovered from the broadening sigma = broadening_factor * spacing.
std::pair<double, double> low_frequency_window(const eth::SpectralFunction& corr_binned, double broadening_factor);
// max over bins with lo <= omega <= hi of (max_L - min_L) / mean_L.
double collapse_spread(const std::vector<eth::SpectralFunction>& curves, double lo, double hi);

}  // namespace ethlab::analysis
