#pragma once

// Bipartite entanglement of sector eigenstates and the fixed-particle-number
// Page curve of Haar-random states.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ethlab/basis.hpp"
#include "ethlab/spectra.hpp"

namespace ethlab::entanglement {

// Amplitudes over b.sector_states() of a state given in SymBasis coordinates.
Eigen::VectorXcd expand_to_product_basis(const Eigen::VectorXcd& state, const basis::SymBasis& b);
// Coordinates <psi_i|amps> in the symmetry-adapted basis.
Eigen::VectorXcd project_to_basis(const Eigen::VectorXcd& amps, const basis::SymBasis& b);

// Eigenvalues of rho_A for sites 0..LA-1, from the M_A blocks. All codes must
// share one magnetization.
std::vector<double> reduced_spectrum(const Eigen::VectorXcd& amps, const std::vector<basis::Code>& codes, int L,
                                     int LA);
// von Neumann entropy in nats; negative weights below -1e-10 raise NumericError.
double entanglement_entropy(const Eigen::VectorXcd& amps, const std::vector<basis::Code>& codes, int L, int LA);

// Average entropy of Haar-random states with N = M + L particles on L sites,
// subsystem of LA sites, from the exact digamma sum.
double page_exact_sum(int N, int L, int LA);
// sum over N_A of d_A d_B / d_N; equals 1.
double page_weight_sum(int N, int L, int LA);

// Volume-law coefficient of the sector dimension at filling n = N/L.
double beta_n(double n);
// Leading asymptotic average entropy (volume, sqrt(L) and O(1) terms).
double page_asymptotic(double n, double f, int L);

struct SampledAverage {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};
// Monte-Carlo average over Haar-random states of the N sector.
SampledAverage haar_state_entropy(int N, int L, int LA, std::size_t samples, std::uint64_t seed);

struct PageCurve {
  int L = 0;
  int M = 0;
  std::vector<int> subsystem;  // L_A
  std::vector<double> f;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> exact_sum;
  std::vector<double> asymptotic;
  std::vector<double> volume_term;  // beta(n) f L
  std::size_t states = 0;
  bool truncated = false;  // fewer states available than requested
};

// The n_states eigenstates closest to the median of the pooled spectrum.
// spectra[i] must live in bases[i].
PageCurve eigenstate_page_curve(const std::vector<const Spectrum*>& spectra,
                                const std::vector<const basis::SymBasis*>& bases, std::size_t n_states,
                                const std::vector<int>& subsystem_sizes);

}  // namespace ethlab::entanglement
