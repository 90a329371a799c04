#include "ethlab/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>
#include <random>

#include <boost/math/special_functions/digamma.hpp>

#include "ethlab/error.hpp"
#include "ethlab/stats.hpp"

namespace ethlab::entanglement {

Eigen::VectorXcd expand_to_product_basis(const Eigen::VectorXcd& state, const basis::SymBasis& b) {
  if (static_cast<std::size_t>(state.size()) != b.dim()) throw InvalidInput("expand: dimension mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b.sector_states().size()));
  for (std::size_t i = 0; i < b.dim(); ++i) {
    const cplx c = state(static_cast<Eigen::Index>(i));
    if (c == cplx(0.0)) continue;
    for (const auto& e : b.expansion(i)) out(b.sector_position(e.code)) += c * e.amplitude;
  }
  const double n_in = state.norm();
  if (std::abs(out.norm() - n_in) > 1e-10 * std::max(1.0, n_in)) {
    throw ConsistencyError("expand_to_product_basis lost norm in " + b.spec().to_string());
  }
  return out;
}

Eigen::VectorXcd project_to_basis(const Eigen::VectorXcd& amps, const basis::SymBasis& b) {
  if (static_cast<std::size_t>(amps.size()) != b.sector_states().size()) {
    throw InvalidInput("project: dimension mismatch");
  }
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b.dim()));
  for (std::size_t i = 0; i < b.dim(); ++i) {
    cplx s = 0.0;
    for (const auto& e : b.expansion(i)) s += std::conj(e.amplitude) * amps(b.sector_position(e.code));
    out(static_cast<Eigen::Index>(i)) = s;
  }
  return out;
}

std::vector<double> reduced_spectrum(const Eigen::VectorXcd& amps, const std::vector<basis::Code>& codes, int L,
                                     int LA) {
  if (LA < 1 || LA >= L) throw InvalidSpec("need 1 <= L_A <= L - 1");
  if (static_cast<std::size_t>(amps.size()) != codes.size()) throw InvalidInput("amplitude/code size mismatch");
  if (codes.empty()) return {};
  const int M = basis::magnetization(codes.front(), L);
  const basis::Code split = basis::pow3(LA);
  // Group amplitudes into Schmidt blocks labelled by M_A; rows index the A
  // configuration, columns the B configuration inside the block.
  struct Block {
    int rows = 0, cols = 0;
    std::vector<std::tuple<int, int, cplx>> entries;
  };
  std::vector<Block> blocks(2 * LA + 1);
  std::vector<int> row_of(split, -1);
  std::vector<int> col_of(basis::pow3(L - LA), -1);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (basis::magnetization(codes[i], L) != M) throw InvalidInput("reduced_spectrum: mixed magnetization");
    const basis::Code a = codes[i] % split;
    const basis::Code b = codes[i] / split;
    auto& blk = blocks[basis::magnetization(a, LA) + LA];
    if (row_of[a] < 0) row_of[a] = blk.rows++;
    if (col_of[b] < 0) col_of[b] = blk.cols++;
    blk.entries.emplace_back(row_of[a], col_of[b], amps(static_cast<Eigen::Index>(i)));
  }
  std::vector<double> p;
  for (const auto& blk : blocks) {
    if (blk.entries.empty()) continue;
    Eigen::MatrixXcd psi = Eigen::MatrixXcd::Zero(blk.rows, blk.cols);
    for (const auto& [r, c, v] : blk.entries) psi(r, c) += v;
    // the smaller Gram matrix carries the nonzero Schmidt weights
    const Eigen::MatrixXcd g = psi.rows() <= psi.cols() ? Eigen::MatrixXcd(psi * psi.adjoint())
                                                        : Eigen::MatrixXcd(psi.adjoint() * psi);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(g, Eigen::EigenvaluesOnly).eigenvalues();
    p.insert(p.end(), ev.data(), ev.data() + ev.size());
  }
  return p;
}

double entanglement_entropy(const Eigen::VectorXcd& amps, const std::vector<basis::Code>& codes, int L, int LA) {
  const double norm = amps.squaredNorm();
  if (std::abs(norm - 1.0) > 1e-8) throw InvalidInput("entanglement_entropy: state not normalized");
  double s = 0.0;
  for (double w : reduced_spectrum(amps, codes, L, LA)) {
    if (w < -1e-10) throw NumericError("negative reduced density matrix weight " + std::to_string(w));
    if (w > 0) s -= w * std::log(w);
  }
  return s;
}

namespace {

double dim(int N, int L) {
  if (N < 0 || N > 2 * L) return 0.0;
  return static_cast<double>(basis::sector_dimension(N, L));
}

void check_page_args(int N, int L, int LA) {
  if (L < 2 || LA < 1 || LA >= L) throw InvalidSpec("page: need 1 <= L_A <= L - 1");
  if (N < 0 || N > 2 * L) throw InvalidSpec("page: need 0 <= N <= 2L");
}

}  // namespace

double page_weight_sum(int N, int L, int LA) {
  check_page_args(N, L, LA);
  const double dn = dim(N, L);
  double w = 0.0;
  for (int na = 0; na <= std::min(N, 2 * LA); ++na) w += dim(na, LA) * dim(N - na, L - LA) / dn;
  return w;
}

double page_exact_sum(int N, int L, int LA) {
  check_page_args(N, L, LA);
  using boost::math::digamma;
  const double dn = dim(N, L);
  const double psi_n = digamma(dn + 1.0);
  double s = 0.0;
  for (int na = 0; na <= std::min(N, 2 * LA); ++na) {
    const double da = dim(na, LA);
    const double db = dim(N - na, L - LA);
    if (da == 0.0 || db == 0.0) continue;
    const double phi =
        psi_n - digamma(std::max(da, db) + 1.0) - std::min((da - 1.0) / (2.0 * db), (db - 1.0) / (2.0 * da));
    s += da * db / dn * phi;
  }
  return s;
}

double beta_n(double n) {
  if (!(n > 0.0 && n < 2.0)) throw InvalidSpec("beta(n) is defined for 0 < n < 2");
  const double root = std::sqrt(1.0 - 3.0 * n * (n - 2.0));
  return (n - 2.0) * std::log(2.0 - n) + (n - 1.0) * std::log(2.0) + std::log(7.0 - 3.0 * n + root) -
         n * std::log(n - 1.0 + root);
}

double page_asymptotic(double n, double f, int L) {
  if (!(f > 0.0 && f < 1.0)) throw InvalidSpec("page_asymptotic: need 0 < f < 1");
  if (f > 0.5) f = 1.0 - f;
  const double b = beta_n(n);
  const bool half = std::abs(f - 0.5) < 1e-12;
  double s = b * f * L;
  if (half) {
    const double h = 1e-5;
    const double d1 = (beta_n(n + h) - beta_n(n - h)) / (2.0 * h);
    const double d2 = (beta_n(n + h) - 2.0 * b + beta_n(n - h)) / (h * h);
    s -= std::abs(d1) / std::sqrt(2.0 * std::numbers::pi * std::abs(d2)) * std::sqrt(static_cast<double>(L));
  }
  const bool at_max = std::abs(n - 1.0) < 1e-9;
  s += 0.5 * (f + std::log(1.0 - f) - (half && at_max ? 1.0 : 0.0));
  return s;
}

SampledAverage haar_state_entropy(int N, int L, int LA, std::size_t samples, std::uint64_t seed) {
  check_page_args(N, L, LA);
  if (samples < 2) throw InvalidInput("haar_state_entropy: need at least two samples");
  const auto codes = basis::enumerate_m_sector(L, N - L);
  std::vector<double> s(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(N), static_cast<std::uint32_t>(L)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(codes.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double re = g(rng);
      v(i) = {re, g(rng)};
    }
    v.normalize();
    s[k] = entanglement_entropy(v, codes, L, LA);
  }
  SampledAverage r;
  r.samples = samples;
  r.mean = stats::mean(s);
  r.stderr_ = stats::stddev(s) / std::sqrt(static_cast<double>(samples));
  return r;
}

PageCurve eigenstate_page_curve(const std::vector<const Spectrum*>& spectra,
                                const std::vector<const basis::SymBasis*>& bases, std::size_t n_states,
                                const std::vector<int>& subsystem_sizes) {
  if (spectra.empty() || spectra.size() != bases.size()) throw InvalidInput("page curve: spectra/bases mismatch");
  const int L = spectra.front()->spec.L;
  const int M = spectra.front()->spec.M;
  struct Candidate {
    double distance;
    std::size_t sector;
    Eigen::Index index;
  };
  std::vector<double> pooled;
  for (std::size_t s = 0; s < spectra.size(); ++s) {
    const auto* sp = spectra[s];
    if (sp->spec.L != L || sp->spec.M != M) throw InvalidInput("page curve: sectors differ in L or M");
    if (!sp->has_vectors()) throw InvalidInput("page curve: spectrum without eigenvectors");
    if (!(sp->spec == bases[s]->spec())) throw InvalidInput("page curve: spectrum and basis differ");
    pooled.insert(pooled.end(), sp->energies.data(), sp->energies.data() + sp->energies.size());
  }
  const double med = stats::median(pooled);
  std::vector<Candidate> cand;
  for (std::size_t s = 0; s < spectra.size(); ++s)
    for (Eigen::Index i = 0; i < spectra[s]->energies.size(); ++i)
      cand.push_back({std::abs(spectra[s]->energies(i) - med), s, i});
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    return a.distance != b.distance ? a.distance < b.distance
                                    : (a.sector != b.sector ? a.sector < b.sector : a.index < b.index);
  });
  PageCurve pc;
  pc.L = L;
  pc.M = M;
  pc.truncated = cand.size() < n_states;
  pc.states = std::min(n_states, cand.size());

  std::vector<std::vector<double>> values(subsystem_sizes.size());
  for (std::size_t c = 0; c < pc.states; ++c) {
    const auto& b = *bases[cand[c].sector];
    const Eigen::VectorXcd amps = expand_to_product_basis(spectra[cand[c].sector]->vectors.col(cand[c].index), b);
    for (std::size_t q = 0; q < subsystem_sizes.size(); ++q) {
      values[q].push_back(entanglement_entropy(amps, b.sector_states(), L, subsystem_sizes[q]));
    }
  }
  const int N = M + L;
  for (std::size_t q = 0; q < subsystem_sizes.size(); ++q) {
    const int la = subsystem_sizes[q];
    const double f = static_cast<double>(la) / L;
    pc.subsystem.push_back(la);
    pc.f.push_back(f);
    pc.mean.push_back(stats::mean(values[q]));
    pc.stddev.push_back(values[q].size() > 1 ? stats::stddev(values[q]) : 0.0);
    pc.exact_sum.push_back(page_exact_sum(N, L, la));
    const double n = static_cast<double>(N) / L;
    pc.asymptotic.push_back(page_asymptotic(n, f, L));
    pc.volume_term.push_back(beta_n(n) * std::min(f, 1.0 - f) * L);
  }
  return pc;
}

}  // namespace ethlab::entanglement
