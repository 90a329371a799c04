#pragma once

// Hot loops shared by the analysis modules. Every kernel has a serial
// reference and an OpenMP variant selected by Exec; both produce the same
// result up to floating-point summation order.

#include <Eigen/Dense>
#include <vector>

#include "ethlab/basis.hpp"
#include "ethlab/hamiltonian.hpp"

namespace ethlab::kernels {

enum class Exec { Serial, Parallel };

// Matrix of op between two symmetry-adapted bases. With commuting = true the
// operator must commute with the projector of ket (then only each ket
// representative is acted upon); otherwise the full expansion is used.
Eigen::MatrixXcd assemble_block(const SiteOperator& op, const basis::SymBasis& bra,
                                const basis::SymBasis& ket, bool commuting, Exec exec);

// Pairs (m, n) of an eigenbasis block with weight |O_mn|^2 at frequency
// omega = E_bra[m] - E_ket[n]. If weights is set it replaces |O_mn|^2 (and
// elements may be null).
struct PairBlock {
  const Eigen::MatrixXcd* elements = nullptr;
  const Eigen::VectorXd* e_bra = nullptr;
  const Eigen::VectorXd* e_ket = nullptr;
  bool skip_diagonal = false;  // drop m == n (same-sector blocks)
  const Eigen::MatrixXd* weights = nullptr;
};

// Adds |O_mn|^2 into sums[bin] and 1 into counts[bin] for edges[bin] <= omega < edges[bin+1].
void bin_pairs(const PairBlock& block, const std::vector<double>& edges, std::vector<double>& sums,
               std::vector<double>& counts, Exec exec);

// out[g] += sum_mn |O_mn|^2 exp(-(grid[g] - omega_mn)^2 / (2 sigma^2)) / sqrt(2 pi sigma^2).
// grid must be ascending; contributions beyond 9 sigma are dropped.
void broadened_sum(const PairBlock& block, const std::vector<double>& grid, double sigma,
                   std::vector<double>& out, Exec exec);

// out[i] += sum_mn |O_mn|^2 times the mass of the normalized Gaussian centred
// at omega_mn inside [edges[i], edges[i+1]), divided by the interval width.
void broadened_interval_mean(const PairBlock& block, const std::vector<double>& edges, double sigma,
                             std::vector<double>& out, Exec exec);

}  // namespace ethlab::kernels
