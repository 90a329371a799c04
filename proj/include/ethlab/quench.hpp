#pragma once

// Unitary dynamics in the energy eigenbasis: overlaps of an initial state,
// O(t), diagonal and microcanonical ensembles and temporal fluctuations.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ethlab/basis.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/spectra.hpp"

namespace ethlab::quench {

struct InitialState {
  enum class Kind { Neel, Zeros, Eigenstate };
  Kind kind = Kind::Neel;
  double lambda = 0.0;  // eigenstate source model
  double delta = 0.0;
  std::string label() const;
};

// "neel", "zeros" or "eig:<lambda>,<delta>".
InitialState parse_initial(const std::string& text);

// Trits 2,0,2,0,... (S^z = +1,-1,...).
basis::Code neel_code(int L);
// Every site in S^z = 0.
basis::Code zeros_code(int L);

// Normalized coordinates of the initial state in b. Product states are
// projected onto the sector (the symmetrized combination); the eigenstate
// option takes the middle eigenvector (index D/2) of the source model in
// the same sector. Throws InvalidSpec if the state has no weight in b.
Eigen::VectorXcd prepare_initial(const InitialState& init, const basis::SymBasis& b, const ModelParams& target);

struct QuenchSetup {
  Eigen::VectorXcd coeffs;   // c_m = <psi_m|Psi_0>
  Eigen::VectorXd energies;
  double e_bar = 0.0;        // sum |c_m|^2 E_m
  double delta_e0 = 0.0;     // energy uncertainty of the initial state
  double norm_defect = 0.0;  // |sum |c_m|^2 - 1|
};
QuenchSetup make_setup(const Spectrum& target, const Eigen::VectorXcd& psi0);

struct Evolution {
  std::vector<double> times;
  std::vector<double> values;  // Re O(t)
  double max_imag = 0.0;       // max |Im O(t)|
};
// O(t) = sum_mn conj(c_m) c_n e^{i(E_m - E_n)t} O_mn.
Evolution evolve_expectation(const QuenchSetup& s, const Eigen::MatrixXcd& elements,
                             const std::vector<double>& times);

struct Conservation {
  double max_energy_defect = 0.0;  // |<H>(t) - E_bar|, H applied in the sector basis
  double max_norm_defect = 0.0;    // ||Psi(t)|^2 - 1|
};
Conservation conservation_check(const QuenchSetup& s, const Spectrum& target, const Eigen::MatrixXcd& h_block,
                                const std::vector<double>& times);

double diagonal_ensemble(const QuenchSetup& s, const Eigen::VectorXd& diag);

struct MicrocanonicalResult {
  double value = 0.0;
  double window = 0.0;  // full width Delta E actually used
  std::size_t states = 0;
  bool widened = false;
  std::vector<std::string> warnings;
};
// Mean of diag over |E_m - e_bar| < window/2; window defaults to
// 0.4 sigma_E and grows by 1.5x until min_states are inside.
MicrocanonicalResult microcanonical_average(const Eigen::VectorXd& energies, const Eigen::VectorXd& diag,
                                            double e_bar, double window = 0.0, std::size_t min_states = 20);

struct TemporalFluctuations {
  double empirical = 0.0;      // variance of O(t) over the sampled times
  double analytic = 0.0;       // sum_{m != n} |c_m|^2 |c_n|^2 |O_mn|^2
  double bound = 0.0;          // max_{m != n} |O_mn|^2
  std::size_t degenerate_pairs = 0;
  std::size_t samples = 0;
};
// samples equally spaced times in [0, T].
TemporalFluctuations temporal_fluctuations(const QuenchSetup& s, const Eigen::MatrixXcd& elements, double T,
                                           std::size_t samples);

struct LongTimeAverage {
  double average = 0.0;        // midpoint rule on [0, T]
  double diagonal = 0.0;       // diagonal ensemble
  double bound = 0.0;          // sum_{m != n} |c_m c_n O_mn| min(1, pi / (|omega_mn| T))
  double step = 0.0;
  std::size_t samples = 0;
};
// Needs step * max|omega| < pi for the bound to hold; throws InvalidSpec otherwise.
LongTimeAverage long_time_average(const QuenchSetup& s, const Eigen::MatrixXcd& elements, double T,
                                  std::size_t samples);

}  // namespace ethlab::quench
