#pragma once

// Quasimomentum-resolved spectral functions of a local operator and of its
// translation average, and the distance-resolved cross-site decomposition of
// the site-averaged operator on open chains.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ethlab/basis.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/spectra.hpp"

namespace ethlab::symmetry_eth {

// One diagonalized sector together with its basis.
struct SectorData {
  basis::SymBasis basis;
  Spectrum spectrum;
};

// Every momentum sector of (L, M) under PBC with optional spin inversion,
// ordered by eta. solve maps a Hamiltonian block to its spectrum (plain
// diagonalize or a cached variant).
template <class Solve>
std::vector<SectorData> momentum_family(const ModelParams& p, int L, int M, std::optional<int> spin_flip,
                                        Solve&& solve) {
  std::vector<SectorData> out;
  const auto [lo, hi] = basis::eta_range(L);
  for (int eta = lo; eta <= hi; ++eta) {
    basis::SectorSpec s;
    s.L = L;
    s.M = M;
    s.eta = eta;
    s.spin_flip = spin_flip;
    SectorData d{basis::build_sym_basis(s), {}};
    d.spectrum = solve(build_hamiltonian(p, d.basis));
    out.push_back(std::move(d));
  }
  return out;
}

// min(|eta_m - eta_n| mod L, L - that).
int momentum_class(int eta_m, int eta_n, int L);

struct PhaseCheck {
  double max_violation = 0.0;          // |O^l_mn - O^j_mn e^{i(j-l)(k_m-k_n)}|
  double max_modulus_violation = 0.0;  // ||O^l_mn| - |O^j_mn||
  std::size_t pairs = 0;
  std::size_t degenerate_pairs = 0;    // pairs touching a degenerate level (still compared)
};
// Elements of the local Z_NN operators at sites j and l between two momentum
// sectors, evaluated with the same eigenvectors so the comparison is
// independent of the phase gauge.
PhaseCheck local_op_phase_check(const SectorData& bra, const SectorData& ket, int j, int l);

// Largest entry of the translation-invariant Z_NN between different momentum
// sectors of the family (in the symmetry-adapted basis).
double selection_rule_violation(const std::vector<SectorData>& family);

struct BlockCurve {
  int eta_bra = 0;
  int eta_ket = 0;
  int ell = 0;
  bool discrete_k = false;           // touches k = 0 or pi (parity unresolved there)
  std::vector<double> mean;          // mean |O_mn|^2 per |omega| bin
  std::vector<double> stderr_;
  std::vector<double> count;
};

struct MomentumResolvedSF {
  int L = 0;
  int M = 0;
  int site = 0;
  std::size_t dimension = 0;                     // sum of family dimensions
  std::vector<double> grid;                      // corr grid
  std::vector<int> classes;                      // ell = 0..L/2
  std::vector<std::size_t> multiplicity;         // (k_m, k_n) blocks per class
  std::vector<std::vector<double>> class_corr;   // contribution of each class on the grid
  std::vector<double> local_corr;                // |f_corr|^2 of the local operator
  std::vector<double> invariant_corr;            // |f_corr|^2 of the translation average
  std::vector<double> edges;                     // |omega| bins of the block curves
  std::vector<BlockCurve> blocks;
  double delta0_violation = 0.0;                 // max |class 0 - invariant / L| / max(invariant / L)
  double reconstruction_violation = 0.0;         // max |sum of classes - local| / max(local)
  double collapse_rms_z = 0.0;                   // block curves against their class mean
  std::size_t collapse_points = 0;
};

// family: all momentum sectors of one (L, M, spin flip), with eigenvectors.
MomentumResolvedSF momentum_resolved_sf(const std::vector<SectorData>& family, int site,
                                        const std::vector<double>& grid, const std::vector<double>& edges,
                                        double broadening_factor = 0.1, std::size_t min_bin_pairs = 50);

struct DistanceResolvedSF {
  int L = 0;
  int M = 0;
  int bulk_site = 0;
  std::vector<double> edges;                       // |omega| bins
  std::vector<double> omega;                       // bin centres
  std::vector<std::vector<double>> contribution;   // per d = 0..L-3, binned corr
  std::vector<double> total_corr;                  // from the averaged operator's own elements
  std::vector<double> local_corr;                  // bulk local operator
  std::vector<double> total_resc, local_resc;
  std::vector<double> z_score;                     // per d: sum w / sqrt(sum w^2) over low-frequency central pairs m < n
  std::vector<std::size_t> pairs_per_distance;     // site pairs (j, l) with |j - l| = d
  double reconstruction_violation = 0.0;           // max |sum_d - total| / max(total)
  double sigma_e2 = 0.0;
  // running means of the diagonal elements
  double running_mean_deviation = 0.0;             // max over central half
  double delta_o_average = 0.0;
  double delta_o_local = 0.0;
};

// s must be an open-chain sector of b with eigenvectors. Local operators are
// Z^j_NN for j = 0..L-3 and the bulk site is floor(L/2) - 1.
DistanceResolvedSF obc_distance_decomposition(const basis::SymBasis& b, const Spectrum& s,
                                              const std::vector<double>& edges, double broadening_factor = 0.1,
                                              double z_omega_max = 1.0);

}  // namespace ethlab::symmetry_eth
