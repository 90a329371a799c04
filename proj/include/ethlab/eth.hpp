#pragma once

// Eigenstate-thermalization diagnostics: observable matrix elements in the
// energy eigenbasis, diagonal fluctuations, element distributions, spectral
// functions and the infinite-temperature trace expansions.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ethlab/basis.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/spectra.hpp"
#include "ethlab/stats.hpp"

namespace ethlab::eth {

// O_mn = <psi_m|O|psi_n> between the eigenbases of two sectors (equal for
// same-sector sets).
struct MatrixElements {
  std::string label;
  basis::SectorSpec bra;
  basis::SectorSpec ket;
  Eigen::VectorXd e_bra;
  Eigen::VectorXd e_ket;
  Eigen::MatrixXcd elements;
  bool same_sector = true;

  // Real parts of O_mm; throws ConsistencyError if an imaginary part exceeds 1e-10.
  Eigen::VectorXd diagonal() const;
};

// bra^dagger op ket, in real arithmetic when all three are real.
Eigen::MatrixXcd rotate(const Eigen::MatrixXcd& op, const Eigen::MatrixXcd& bra, const Eigen::MatrixXcd& ket);

MatrixElements matrix_elements(const OperatorBlock& o, const Spectrum& s);
MatrixElements matrix_elements(const OperatorBlock& o, const Spectrum& bra, const Spectrum& ket);

// max_m |sum_n |O_mn|^2 - (O^2)_mm| for a same-sector set; (O^2)_mm = |O psi_m|^2.
double sum_rule_defect(const OperatorBlock& o, const Spectrum& s, const MatrixElements& me);

// Antiunitary symmetry (reflection times complex conjugation) that maps a
// momentum sector onto itself. Rephases every nondegenerate eigenvector so
// that it is invariant, which makes the elements of reflection-even real
// operators real. Returns the number of eigenvectors left untouched because
// they sit in a (near-)degenerate multiplet.
std::size_t time_reversal_gauge(Spectrum& s, const basis::SymBasis& b);

// Number of states per unit energy inside the window holding the central
// `fraction` of an ascending spectrum.
double central_dos(const Eigen::VectorXd& e, double fraction = 0.5);
// Mean level spacing inside the central `fraction` (at least the two middle levels).
double central_spacing(const Eigen::VectorXd& e, double fraction = 0.1);

// ---- diagonal ETH ----

struct DiagonalSet {
  int L = 0;
  std::string label;
  std::vector<double> energies;  // pooled, ascending
  std::vector<double> values;    // O_mm, parallel to energies
  double omega = 0.0;            // central-50% density of states averaged over sectors
};

// Pools (E_m, O_mm) over sectors of one L.
DiagonalSet pool_diagonal(const std::vector<const MatrixElements*>& sets);
// Streaming variant: one (energies, diagonal) pair per sector.
DiagonalSet pool_diagonal(int L, const std::string& label,
                          const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& sectors);

struct DiagFluctuation {
  int L = 0;
  double delta_o = 0.0;  // < |O_mm - running mean| > over the central fraction
  double omega = 0.0;
  std::size_t states = 0;
  std::size_t window = 0;
  bool window_shrunk = false;
};
DiagFluctuation diag_fluctuation(const DiagonalSet& d, std::size_t window = 50, double central_fraction = 0.5);

struct DiagScaling {
  std::vector<DiagFluctuation> points;
  stats::FitResult vs_l_omega;  // delta_o ~ (L Omega)^{-gamma}
  stats::FitResult vs_l;        // delta_o ~ L^{-delta}
  double gamma = 0.0;
  double delta = 0.0;
  std::vector<std::string> warnings;
};
DiagScaling diag_fluctuations(const std::vector<DiagonalSet>& sets, std::size_t window = 50,
                              double central_fraction = 0.5);

struct DiagDistribution {
  stats::Histogram histogram;
  stats::FitResult gaussian;  // moments fit, rms against the histogram
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::size_t count = 0;
};
DiagDistribution diag_distribution(const DiagonalSet& d, double central_fraction = 0.05);

// ---- off-diagonal ETH ----

struct OffdiagWindow {
  double central_fraction = 0.05;          // on mean energy of the pair
  std::optional<double> max_abs_omega;     // unset: no frequency constraint
  std::size_t min_pairs = 200;
};

struct OffdiagSample {
  int L = 0;
  std::vector<double> values;  // Re O_mn, one entry per unordered pair m < n
  std::vector<double> abs2;    // |O_mn|^2
  double max_imag_ratio = 0.0; // max |Im O_mn| / max |O_mn|
  double omega = 0.0;          // central-50% density of states averaged over sectors
  double e_lo = 0.0, e_hi = 0.0;
  std::optional<double> omega_window;  // frequency window actually used
  std::vector<std::string> warnings;
};

// Candidate pairs m < n of one system size whose mean energy lies in the
// central fraction of the pooled spectrum. Filled sector by sector so that
// large sectors can be streamed.
struct OffdiagPool {
  struct Pair {
    double abs_omega;
    double re;
    double abs2;
  };
  int L = 0;
  double omega = 0.0;  // central-50% density of states averaged over sectors
  double e_lo = 0.0, e_hi = 0.0;
  std::vector<Pair> pairs;
  double max_abs = 0.0;
  double max_imag = 0.0;
};
// Fixes the energy window from every sector's spectrum.
OffdiagPool offdiag_pool(int L, const std::vector<const Eigen::VectorXd*>& spectra, double central_fraction = 0.05);
void offdiag_pool_add(OffdiagPool& pool, const MatrixElements& me);

// Pairs satisfying the window; widens the frequency window by factors of two
// (with a warning) until min_pairs are found.
OffdiagSample offdiag_sample(const OffdiagPool& pool, OffdiagWindow w);
OffdiagSample offdiag_sample(const std::vector<const MatrixElements*>& sets, OffdiagWindow w);
// One sample per system size, all with the same frequency window: the widest
// window any size needed.
std::vector<OffdiagSample> offdiag_samples_common(const std::vector<const OffdiagPool*>& pools, OffdiagWindow w);

struct OffdiagDistribution {
  stats::Histogram raw_hist;            // of Re O_mn
  stats::FitResult raw_gaussian;        // moments fit
  stats::FitResult raw_gumbel;          // MLE fit on the raw values
  stats::Histogram log_hist;            // of x = |ln |O_mn|^2|
  stats::FitResult log_gaussian;
  stats::FitResult log_gumbel;
  std::size_t pairs = 0;
  std::size_t zero_pairs = 0;           // |O_mn| == 0, excluded from x
  double mean_abs2 = 0.0;
};
OffdiagDistribution offdiag_distribution(const OffdiagSample& s);

struct OffdiagScaling {
  std::vector<int> sizes;
  std::vector<double> l_omega;
  std::vector<double> variance;  // mean |O_mn|^2 in the window
  stats::FitResult fit;          // variance ~ (L Omega)^{-gamma}
  double gamma = 0.0;
  std::optional<double> omega_window;
};
OffdiagScaling offdiag_variance_scaling(const std::vector<OffdiagSample>& samples);

// ---- spectral functions ----

// |omega| bin edges: [0, w_log_min), logarithmic bins up to w_split, then
// linear bins of width dw_lin up to w_max.
std::vector<double> frequency_edges(double w_log_min = 1e-3, double w_split = 1.0, std::size_t n_log = 24,
                                    double dw_lin = 0.25, double w_max = 40.0);

struct SpectralFunction {
  enum class Kind { Var, Corr, Resc };
  Kind kind = Kind::Var;
  std::string label;
  std::vector<double> omega;    // bin centres (var, coarse corr) or grid points
  std::vector<double> values;   // |f|^2
  std::vector<bool> present;    // false where a var bin holds no pairs
  std::vector<double> edges;    // bin edges for binned series, empty for grids
  int L = 0;
  double omega_dos = 0.0;       // D / sqrt(2 pi sigma_E^2) averaged over sectors
  double sigma_e2 = 0.0;
  double broadening = 0.0;      // mean sigma over sectors (corr, resc)
};
std::string to_string(SpectralFunction::Kind k);

// Pairs of one sector contributing to a spectral function: elements between
// the eigenbases of the bra and ket parts of the sector. Blocks with
// elements == nullptr are known to vanish and only contribute pair counts
// (relevant for var, where the mean runs over all pairs).
struct SpectralBlock {
  const Eigen::MatrixXcd* elements = nullptr;
  const Eigen::VectorXd* e_bra = nullptr;
  const Eigen::VectorXd* e_ket = nullptr;
  bool skip_diagonal = false;
  bool with_adjoint = false;  // cross-sector block: also count its adjoint
};

struct SectorContribution {
  std::vector<SpectralBlock> blocks;
  Eigen::VectorXd energies;   // the sector's full spectrum (all parts)
  double multiplicity = 1.0;  // 2 for time-reversal partners not computed
};

// Streaming accumulator over sectors of one L; memory scales with the grid.
class SpectralAccumulator {
 public:
  // prefactor is the Hilbert-Schmidt factor (L for intensive sums of local terms).
  SpectralAccumulator(int L, double prefactor, std::vector<double> edges, std::vector<double> grid,
                      double broadening_factor = 0.1);

  void add(const SectorContribution& c);

  SpectralFunction var(const std::string& label) const;
  SpectralFunction corr_grid(const std::string& label) const;
  SpectralFunction resc_grid(const std::string& label) const;
  // corr coarse-grained over the var bins (exact Gaussian mass per bin).
  SpectralFunction corr_binned(const std::string& label) const;
  SpectralFunction resc_binned(const std::string& label) const;

  // (prefactor / D) sum_{m != n} |O_mn|^2 over everything added.
  double total_weight() const;
  double sigma_e2() const;

 private:
  SpectralFunction resc_from(const SpectralFunction& corr) const;

  int L_;
  double prefactor_;
  double factor_;
  std::vector<double> edges_, grid_;
  std::vector<double> var_sum_, var_count_;
  std::vector<double> corr_grid_, corr_bins_;
  double dim_ = 0.0;
  double weight_ = 0.0;
  double omega_dos_sum_ = 0.0, sector_weight_ = 0.0, sigma_sum_ = 0.0;
  double e_sum_ = 0.0, e2_sum_ = 0.0, e_count_ = 0.0;
};

// Exact resc = sqrt(2) exp(omega^2 / (4 sigma_E^2)) corr on the same grid.
SpectralFunction rescale(const SpectralFunction& corr, double sigma_e2);

struct RhoOmegaCheck {
  stats::Histogram histogram;  // empirical density of omega_mn (m != n), normalized
  double sigma_e2 = 0.0;
  double ks = 0.0;             // KS distance to N(0, 2 sigma_E^2)
  double asymmetry = 0.0;      // max |rho(omega) - rho(-omega)| over the histogram
  std::size_t pairs = 0;
};
// Pair-frequency density of each spectrum compared with a Gaussian of twice
// the (per-sector) energy variance; sectors are pooled after centring.
RhoOmegaCheck rho_omega_check(const std::vector<const Eigen::VectorXd*>& spectra, std::size_t bins = 200);

// ---- infinite-temperature expansion ----

enum class TracePathway { Formula, Enumeration };

// Normalized sector traces <X>_M = Tr_M(X) / D^L_M with the lambda = 0,
// periodic Hamiltonian.
struct SectorTraces {
  int L = 0;
  int M = 0;
  double delta = 0.0;
  double h = 0.0;    // <H>
  double h2 = 0.0;   // <H^2>
  double o = 0.0;    // <O>
  double ho = 0.0;   // <H O>
  double h2o = 0.0;  // <H^2 O>
};
SectorTraces trace_moments(ObservableKind obs, int L, int M, double delta, TracePathway pathway);
// Same traces over the full 3^L space.
SectorTraces full_space_traces(ObservableKind obs, int L, double delta, TracePathway pathway);

// Four-site S^z expectations over distinct sites and the hopping square.
struct FourSpin {
  double zz = 0.0;       // <S^z_i S^z_j>
  double zzzz = 0.0;     // <S^z_i S^z_j S^z_k S^z_l>
  double z_zsq_z = 0.0;  // <S^z_i (S^z_j)^2 S^z_k>
  double zsq_zsq = 0.0;  // <(S^z_i)^2 (S^z_j)^2>
  double hop2 = 0.0;     // (1/4) <(S^+_i S^-_j + h.c.)^2>
};
FourSpin four_spin(int L, int M, TracePathway pathway);

struct MicrocanonicalCoefficients {
  ObservableKind obs = ObservableKind::ZN;
  int L = 0;
  int M = 0;
  double delta = 0.0;
  double e_inf = 0.0;           // <H>_M
  double o_inf = 0.0;           // <O>_M
  double linear = 0.0;          // dO/d(E/L) at E_inf from exact traces
  double linear_leading = 0.0;  // the printed leading-order closed form
  double quadratic = 0.0;       // (1/2) d^2O/d(E/L)^2 from the third joint cumulant

  // O(E) to second order around E_inf.
  double evaluate(double energy) const;
};
MicrocanonicalCoefficients microcanonical_coefficients(ObservableKind obs, int M, int L, double delta);

}  // namespace ethlab::eth
