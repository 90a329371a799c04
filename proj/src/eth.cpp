#include "ethlab/eth.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include "ethlab/error.hpp"
#include "ethlab/kernels.hpp"

namespace ethlab::eth {

namespace {

using kernels::Exec;

double as_double(basis::Dim d) { return static_cast<double>(d); }

void check_pair(const OperatorBlock& o, const Spectrum& bra, const Spectrum& ket) {
  if (!(o.spec == bra.spec) || !(o.ket_spec == ket.spec)) {
    throw InvalidInput("matrix_elements: operator block " + o.spec.to_string() + " x " + o.ket_spec.to_string() +
                       " does not match spectra " + bra.spec.to_string() + " x " + ket.spec.to_string());
  }
  if (!bra.has_vectors() || !ket.has_vectors()) throw InvalidInput("matrix_elements: spectrum without eigenvectors");
  if (o.matrix.rows() != bra.vectors.rows() || o.matrix.cols() != ket.vectors.rows()) {
    throw InvalidInput("matrix_elements: dimension mismatch");
  }
}

std::pair<Eigen::Index, Eigen::Index> central_range(Eigen::Index n, double fraction) {
  if (!(fraction > 0 && fraction <= 1)) throw InvalidSpec("central fraction must lie in (0, 1]");
  const auto keep = static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(n)));
  return {(n - keep) / 2, keep};
}

bool is_real(const Eigen::MatrixXcd& a) { return a.size() == 0 || a.imag().cwiseAbs().maxCoeff() == 0.0; }

}  // namespace

Eigen::MatrixXcd rotate(const Eigen::MatrixXcd& op, const Eigen::MatrixXcd& bra, const Eigen::MatrixXcd& ket) {
  if (op.rows() != bra.rows() || op.cols() != ket.rows()) throw InvalidInput("rotate: dimension mismatch");
  if (is_real(op) && is_real(bra) && is_real(ket)) {
    const Eigen::MatrixXd o = op.real(), b = bra.real(), k = ket.real();
    Eigen::MatrixXd ok;
    ok.noalias() = o * k;
    Eigen::MatrixXd r;
    r.noalias() = b.transpose() * ok;
    return r.cast<cplx>();
  }
  Eigen::MatrixXcd ov;
  ov.noalias() = op * ket;
  Eigen::MatrixXcd r;
  r.noalias() = bra.adjoint() * ov;
  return r;
}

Eigen::VectorXd MatrixElements::diagonal() const {
  if (!same_sector) throw InvalidInput("diagonal of a cross-sector element set");
  Eigen::VectorXd d(elements.rows());
  for (Eigen::Index m = 0; m < elements.rows(); ++m) {
    if (std::abs(elements(m, m).imag()) > 1e-10) {
      throw ConsistencyError("diagonal element " + std::to_string(m) + " of " + label + " is not real");
    }
    d(m) = elements(m, m).real();
  }
  return d;
}

MatrixElements matrix_elements(const OperatorBlock& o, const Spectrum& s) { return matrix_elements(o, s, s); }

MatrixElements matrix_elements(const OperatorBlock& o, const Spectrum& bra, const Spectrum& ket) {
  check_pair(o, bra, ket);
  MatrixElements me;
  me.label = o.label;
  me.bra = bra.spec;
  me.ket = ket.spec;
  me.e_bra = bra.energies;
  me.e_ket = ket.energies;
  me.same_sector = &bra == &ket || bra.spec == ket.spec;
  me.elements = rotate(o.matrix, bra.vectors, ket.vectors);
  return me;
}

double sum_rule_defect(const OperatorBlock& o, const Spectrum& s, const MatrixElements& me) {
  check_pair(o, s, s);
  Eigen::MatrixXcd ov;
  ov.noalias() = o.matrix * s.vectors;
  double worst = 0.0;
  for (Eigen::Index m = 0; m < me.elements.rows(); ++m) {
    worst = std::max(worst, std::abs(me.elements.row(m).squaredNorm() - ov.col(m).squaredNorm()));
  }
  return worst;
}

std::size_t time_reversal_gauge(Spectrum& s, const basis::SymBasis& b) {
  const auto& spec = b.spec();
  if (!(spec == s.spec)) throw InvalidInput("time_reversal_gauge: spectrum and basis differ");
  if (!spec.eta || spec.parity || spec.bc != basis::Boundary::Periodic) {
    throw InvalidSpec("time_reversal_gauge needs a periodic momentum sector without resolved parity");
  }
  if (!s.has_vectors()) throw InvalidInput("time_reversal_gauge: spectrum without eigenvectors");
  // reflection * conjugation sends |psi_j> to c_j |psi_target[j]>
  const std::size_t n = b.dim();
  std::vector<std::int32_t> target(n);
  std::vector<cplx> c(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto slot = b.lookup(basis::reflect(b.rep(j), spec.L));
    if (slot.index < 0) throw ConsistencyError("reflection leaves sector " + spec.to_string());
    target[j] = slot.index;
    c[j] = b.norm(j) / slot.amplitude;
  }
  std::size_t skipped = 0;
  const auto& e = s.energies;
  for (Eigen::Index m = 0; m < s.vectors.cols(); ++m) {
    const double gap = std::min(m > 0 ? e(m) - e(m - 1) : INFINITY, m + 1 < e.size() ? e(m + 1) - e(m) : INFINITY);
    auto v = s.vectors.col(m);
    cplx z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::conj(v(target[j])) * c[j] * std::conj(v(static_cast<Eigen::Index>(j)));
    if (gap < 1e-9 || std::abs(std::abs(z) - 1.0) > 1e-6) {
      ++skipped;
      continue;
    }
    v *= std::polar(1.0, 0.5 * std::arg(z));
  }
  return skipped;
}

double central_dos(const Eigen::VectorXd& e, double fraction) {
  const auto [first, keep] = central_range(e.size(), fraction);
  if (keep < 2) throw InvalidInput("central_dos: fewer than two states in the window");
  const double width = e(first + keep - 1) - e(first);
  if (!(width > 0)) throw InvalidInput("central_dos: degenerate window");
  return static_cast<double>(keep) / width;
}

double central_spacing(const Eigen::VectorXd& e, double fraction) {
  auto [first, keep] = central_range(e.size(), fraction);
  if (keep < 2 && e.size() >= 2) {
    // small sectors: the two middle levels
    keep = 2;
    first = (e.size() - 2) / 2;
  }
  if (keep < 2) throw InvalidInput("central_spacing: fewer than two states");
  return (e(first + keep - 1) - e(first)) / static_cast<double>(keep - 1);
}

// ---- diagonal ----

DiagonalSet pool_diagonal(const std::vector<const MatrixElements*>& sets) {
  if (sets.empty()) throw InvalidInput("pool_diagonal: no element sets");
  DiagonalSet d;
  d.L = sets.front()->bra.L;
  d.label = sets.front()->label;
  std::vector<std::pair<double, double>> pts;
  double omega = 0.0;
  for (const auto* s : sets) {
    if (!s->same_sector) throw InvalidInput("pool_diagonal: cross-sector set");
    if (s->bra.L != d.L) throw InvalidInput("pool_diagonal: sets with different L");
    const Eigen::VectorXd diag = s->diagonal();
    for (Eigen::Index m = 0; m < diag.size(); ++m) pts.emplace_back(s->e_bra(m), diag(m));
    omega += central_dos(s->e_bra, 0.5);
  }
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [e, v] : pts) {
    d.energies.push_back(e);
    d.values.push_back(v);
  }
  d.omega = omega / static_cast<double>(sets.size());
  return d;
}

DiagonalSet pool_diagonal(int L, const std::string& label,
                          const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& sectors) {
  if (sectors.empty()) throw InvalidInput("pool_diagonal: no sectors");
  DiagonalSet d;
  d.L = L;
  d.label = label;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [e, v] : sectors) {
    if (e.size() != v.size()) throw InvalidInput("pool_diagonal: energies and values differ in length");
    for (Eigen::Index m = 0; m < e.size(); ++m) pts.emplace_back(e(m), v(m));
    d.omega += central_dos(e, 0.5);
  }
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [e, v] : pts) {
    d.energies.push_back(e);
    d.values.push_back(v);
  }
  d.omega /= static_cast<double>(sectors.size());
  return d;
}

DiagFluctuation diag_fluctuation(const DiagonalSet& d, std::size_t window, double central_fraction) {
  const std::size_t n = d.values.size();
  if (n < 2) throw InvalidInput("diag_fluctuation: need at least two states");
  DiagFluctuation f;
  f.L = d.L;
  f.omega = d.omega;
  f.window = std::min(window, n);
  f.window_shrunk = f.window < window;
  const auto avg = stats::running_average(d.values, f.window);
  const auto [first, keep] = central_range(static_cast<Eigen::Index>(n), central_fraction);
  if (keep < 1) throw InvalidInput("diag_fluctuation: empty central window");
  double s = 0.0;
  for (Eigen::Index i = first; i < first + keep; ++i) s += std::abs(d.values[i] - avg[i]);
  f.delta_o = s / static_cast<double>(keep);
  f.states = static_cast<std::size_t>(keep);
  return f;
}

DiagScaling diag_fluctuations(const std::vector<DiagonalSet>& sets, std::size_t window, double central_fraction) {
  if (sets.size() < 3) throw InvalidInput("diag_fluctuations: need at least three system sizes");
  DiagScaling r;
  std::vector<double> lw, ls, y;
  bool positive = true;
  for (const auto& d : sets) {
    r.points.push_back(diag_fluctuation(d, window, central_fraction));
    const auto& p = r.points.back();
    if (p.window_shrunk) {
      r.warnings.push_back("L=" + std::to_string(p.L) + ": running window shrunk to " + std::to_string(p.window));
    }
    positive = positive && p.delta_o > 0;
    lw.push_back(p.L * p.omega);
    ls.push_back(p.L);
    y.push_back(p.delta_o);
  }
  if (!positive) {
    r.warnings.push_back("vanishing fluctuations; power-law fits skipped");
    return r;
  }
  r.vs_l_omega = stats::fit_power_law(lw, y);
  r.vs_l = stats::fit_power_law(ls, y);
  r.gamma = -r.vs_l_omega.param("exponent");
  r.delta = -r.vs_l.param("exponent");
  return r;
}

DiagDistribution diag_distribution(const DiagonalSet& d, double central_fraction) {
  const auto [first, keep] = central_range(static_cast<Eigen::Index>(d.values.size()), central_fraction);
  if (keep < 200) {
    throw InvalidInput("diag_distribution: " + std::to_string(keep) + " states in the window, need 200");
  }
  const std::vector<double> x(d.values.begin() + first, d.values.begin() + first + keep);
  DiagDistribution r;
  r.count = x.size();
  r.histogram = stats::histogram(x, std::min<std::size_t>(stats::fd_bins(x), 100));
  r.gaussian = stats::fit_gaussian_moments(x, &r.histogram);
  r.skewness = stats::skewness(x);
  r.excess_kurtosis = stats::excess_kurtosis(x);
  return r;
}

// ---- off-diagonal ----

OffdiagPool offdiag_pool(int L, const std::vector<const Eigen::VectorXd*>& spectra, double central_fraction) {
  if (spectra.empty()) throw InvalidInput("offdiag_pool: no spectra");
  OffdiagPool p;
  p.L = L;
  std::vector<double> pooled;
  for (const auto* e : spectra) {
    pooled.insert(pooled.end(), e->data(), e->data() + e->size());
    p.omega += central_dos(*e, 0.5);
  }
  p.omega /= static_cast<double>(spectra.size());
  std::sort(pooled.begin(), pooled.end());
  const auto [first, keep] = central_range(static_cast<Eigen::Index>(pooled.size()), central_fraction);
  if (keep < 1) throw InvalidInput("offdiag_pool: empty energy window");
  p.e_lo = pooled[first];
  p.e_hi = pooled[first + keep - 1];
  return p;
}

void offdiag_pool_add(OffdiagPool& pool, const MatrixElements& me) {
  if (!me.same_sector) throw InvalidInput("offdiag_pool_add: cross-sector set");
  if (me.bra.L != pool.L) throw InvalidInput("offdiag_pool_add: set with a different L");
  const auto& e = me.e_bra;
  for (Eigen::Index n = 0; n < e.size(); ++n) {
    for (Eigen::Index m = 0; m < n; ++m) {
      const double ebar = 0.5 * (e(m) + e(n));
      if (ebar < pool.e_lo || ebar > pool.e_hi) continue;
      const cplx v = me.elements(m, n);
      pool.pairs.push_back({std::abs(e(m) - e(n)), v.real(), std::norm(v)});
      pool.max_abs = std::max(pool.max_abs, std::abs(v));
      pool.max_imag = std::max(pool.max_imag, std::abs(v.imag()));
    }
  }
}

namespace {

OffdiagSample filter_pairs(const OffdiagPool& c, std::optional<double> w) {
  OffdiagSample s;
  s.L = c.L;
  s.omega = c.omega;
  s.e_lo = c.e_lo;
  s.e_hi = c.e_hi;
  s.omega_window = w;
  s.max_imag_ratio = c.max_abs > 0 ? c.max_imag / c.max_abs : 0.0;
  for (const auto& p : c.pairs) {
    if (w && !(p.abs_omega < *w)) continue;
    s.values.push_back(p.re);
    s.abs2.push_back(p.abs2);
  }
  return s;
}

std::optional<double> widen(const OffdiagPool& c, OffdiagWindow w, std::vector<std::string>& warnings) {
  if (!w.max_abs_omega) return std::nullopt;
  double win = *w.max_abs_omega;
  if (!(win > 0)) throw InvalidSpec("frequency window must be positive");
  double limit = 0.0;
  for (const auto& p : c.pairs) limit = std::max(limit, p.abs_omega);
  auto count = [&](double x) {
    return static_cast<std::size_t>(
        std::count_if(c.pairs.begin(), c.pairs.end(), [x](const OffdiagPool::Pair& p) { return p.abs_omega < x; }));
  };
  while (count(win) < w.min_pairs && win <= limit) {
    win *= 2.0;
    warnings.push_back("L=" + std::to_string(c.L) + ": fewer than " + std::to_string(w.min_pairs) +
                       " pairs, frequency window widened to " + std::to_string(win));
  }
  return win;
}

}  // namespace

OffdiagSample offdiag_sample(const OffdiagPool& pool, OffdiagWindow w) {
  std::vector<std::string> warnings;
  const auto win = widen(pool, w, warnings);
  auto s = filter_pairs(pool, win);
  s.warnings = std::move(warnings);
  if (s.values.empty()) throw InvalidInput("offdiag_sample: empty window");
  return s;
}

OffdiagSample offdiag_sample(const std::vector<const MatrixElements*>& sets, OffdiagWindow w) {
  if (sets.empty()) throw InvalidInput("offdiag_sample: no element sets");
  std::vector<const Eigen::VectorXd*> spectra;
  for (const auto* s : sets) spectra.push_back(&s->e_bra);
  auto pool = offdiag_pool(sets.front()->bra.L, spectra, w.central_fraction);
  for (const auto* s : sets) offdiag_pool_add(pool, *s);
  return offdiag_sample(pool, w);
}

std::vector<OffdiagSample> offdiag_samples_common(const std::vector<const OffdiagPool*>& pools, OffdiagWindow w) {
  std::vector<std::string> warnings;
  std::optional<double> win;
  for (const auto* p : pools) {
    const auto x = widen(*p, w, warnings);
    if (x) win = std::max(win.value_or(0.0), *x);
  }
  std::vector<OffdiagSample> out;
  for (const auto* p : pools) {
    out.push_back(filter_pairs(*p, win));
    out.back().warnings = warnings;
    if (out.back().values.empty()) throw InvalidInput("offdiag_samples_common: empty window");
  }
  return out;
}

OffdiagDistribution offdiag_distribution(const OffdiagSample& s) {
  if (s.values.size() < 2) throw InvalidInput("offdiag_distribution: need at least two pairs");
  OffdiagDistribution r;
  r.pairs = s.values.size();
  r.mean_abs2 = stats::mean(s.abs2);
  const std::size_t cap = 200;
  r.raw_hist = stats::histogram(s.values, std::min(stats::fd_bins(s.values), cap));
  r.raw_gaussian = stats::fit_gaussian_moments(s.values, &r.raw_hist);
  r.raw_gumbel = stats::fit_gumbel_mle(s.values, &r.raw_hist);
  std::vector<double> x;
  x.reserve(s.abs2.size());
  for (double a : s.abs2) {
    if (a > 0) {
      x.push_back(std::abs(std::log(a)));
    } else {
      ++r.zero_pairs;
    }
  }
  if (x.size() >= 2) {
    r.log_hist = stats::histogram(x, std::min(stats::fd_bins(x), cap));
    r.log_gaussian = stats::fit_gaussian_moments(x, &r.log_hist);
    r.log_gumbel = stats::fit_gumbel_mle(x, &r.log_hist);
  }
  return r;
}

OffdiagScaling offdiag_variance_scaling(const std::vector<OffdiagSample>& samples) {
  if (samples.size() < 2) throw InvalidInput("offdiag_variance_scaling: need at least two sizes");
  OffdiagScaling r;
  r.omega_window = samples.front().omega_window;
  for (const auto& s : samples) {
    r.sizes.push_back(s.L);
    r.l_omega.push_back(s.L * s.omega);
    r.variance.push_back(stats::mean(s.abs2));
  }
  r.fit = stats::fit_power_law(r.l_omega, r.variance);
  r.gamma = -r.fit.param("exponent");
  return r;
}

// ---- spectral functions ----

std::vector<double> frequency_edges(double w_log_min, double w_split, std::size_t n_log, double dw_lin,
                                    double w_max) {
  if (!(w_log_min > 0 && w_split > w_log_min && w_max > w_split && dw_lin > 0 && n_log > 0)) {
    throw InvalidSpec("frequency_edges: need 0 < w_log_min < w_split < w_max and positive widths");
  }
  std::vector<double> e{0.0};
  const double r = std::log(w_split / w_log_min) / static_cast<double>(n_log);
  for (std::size_t i = 0; i < n_log; ++i) e.push_back(w_log_min * std::exp(r * static_cast<double>(i)));
  for (double w = w_split; w < w_max + 0.5 * dw_lin; w += dw_lin) e.push_back(w);
  return e;
}

std::string to_string(SpectralFunction::Kind k) {
  switch (k) {
    case SpectralFunction::Kind::Var: return "var";
    case SpectralFunction::Kind::Corr: return "corr";
    case SpectralFunction::Kind::Resc: return "resc";
  }
  return "?";
}

namespace {

// [-e_N, ..., -e_1, 0 = e_0, e_1, ..., e_N]
std::vector<double> symmetric_edges(const std::vector<double>& pos) {
  std::vector<double> full;
  for (std::size_t i = pos.size(); i-- > 1;) full.push_back(-pos[i]);
  full.insert(full.end(), pos.begin(), pos.end());
  return full;
}

std::vector<double> mirrored(const std::vector<double>& v) {
  std::vector<double> out(v.rbegin(), v.rend());
  for (double& x : out) x = -x;
  return out;
}

void count_pairs(const Eigen::VectorXd& e_bra, const Eigen::VectorXd& e_ket, bool skip_diagonal,
                 const std::vector<double>& edges, std::vector<double>& counts) {
  for (Eigen::Index n = 0; n < e_ket.size(); ++n) {
    for (Eigen::Index m = 0; m < e_bra.size(); ++m) {
      if (skip_diagonal && m == n) continue;
      const double w = e_bra(m) - e_ket(n);
      if (w < edges.front() || w >= edges.back()) continue;
      const auto it = std::upper_bound(edges.begin(), edges.end(), w);
      counts[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
    }
  }
}

}  // namespace

SpectralAccumulator::SpectralAccumulator(int L, double prefactor, std::vector<double> edges, std::vector<double> grid,
                                         double broadening_factor)
    : L_(L), prefactor_(prefactor), factor_(broadening_factor), edges_(std::move(edges)), grid_(std::move(grid)) {
  if (edges_.size() < 2 || edges_.front() != 0.0 || !std::is_sorted(edges_.begin(), edges_.end())) {
    throw InvalidSpec("spectral bins must start at 0 and ascend");
  }
  if (!std::is_sorted(grid_.begin(), grid_.end())) throw InvalidSpec("spectral grid must ascend");
  if (!(factor_ > 0)) throw InvalidSpec("broadening must be positive");
  const std::size_t full = 2 * (edges_.size() - 1);
  var_sum_.assign(full, 0.0);
  var_count_.assign(full, 0.0);
  corr_grid_.assign(grid_.size(), 0.0);
  corr_bins_.assign(full, 0.0);
}

void SpectralAccumulator::add(const SectorContribution& c) {
  const auto n = c.energies.size();
  if (n < 10) throw InvalidInput("spectral accumulator: sector too small");
  Eigen::VectorXd e = c.energies;
  std::sort(e.data(), e.data() + n);
  const double mu = e.mean();
  const double var = (e.array() - mu).square().sum() / static_cast<double>(n);
  const double omega_dos = static_cast<double>(n) / std::sqrt(2.0 * std::numbers::pi * var);
  const double sigma = factor_ * central_spacing(e, 0.1);
  if (!(sigma > 0)) throw InvalidSpec("broadening sigma must be positive");

  const auto full_edges = symmetric_edges(edges_);
  const std::size_t nb = full_edges.size() - 1;
  std::vector<double> sums(nb, 0.0), counts(nb, 0.0), bins(nb, 0.0), grid(grid_.size(), 0.0);
  const auto mirror_edges = mirrored(full_edges);
  const auto mirror_grid = mirrored(grid_);
  for (const auto& b : c.blocks) {
    if (!b.e_bra || !b.e_ket) throw InvalidInput("spectral block without energies");
    if (!b.elements) {
      count_pairs(*b.e_bra, *b.e_ket, b.skip_diagonal, full_edges, counts);
      if (b.with_adjoint) count_pairs(*b.e_ket, *b.e_bra, b.skip_diagonal, full_edges, counts);
      continue;
    }
    const kernels::PairBlock pb{b.elements, b.e_bra, b.e_ket, b.skip_diagonal};
    kernels::bin_pairs(pb, full_edges, sums, counts, Exec::Parallel);
    kernels::broadened_sum(pb, grid_, sigma, grid, Exec::Parallel);
    kernels::broadened_interval_mean(pb, full_edges, sigma, bins, Exec::Parallel);
    weight_ += c.multiplicity * b.elements->squaredNorm() * (b.with_adjoint ? 2.0 : 1.0);
    if (b.skip_diagonal) weight_ -= c.multiplicity * b.elements->diagonal().squaredNorm();
    if (b.with_adjoint) {
      // the adjoint block carries the same weights at -omega
      std::vector<double> s2(nb, 0.0), c2(nb, 0.0), b2(nb, 0.0), g2(grid_.size(), 0.0);
      kernels::bin_pairs(pb, mirror_edges, s2, c2, Exec::Parallel);
      kernels::broadened_sum(pb, mirror_grid, sigma, g2, Exec::Parallel);
      kernels::broadened_interval_mean(pb, mirror_edges, sigma, b2, Exec::Parallel);
      for (std::size_t i = 0; i < nb; ++i) {
        sums[i] += s2[nb - 1 - i];
        counts[i] += c2[nb - 1 - i];
        bins[i] += b2[nb - 1 - i];
      }
      for (std::size_t g = 0; g < grid_.size(); ++g) grid[g] += g2[grid_.size() - 1 - g];
    }
  }
  const double w = c.multiplicity;
  for (std::size_t i = 0; i < nb; ++i) {
    var_sum_[i] += w * omega_dos * sums[i];
    var_count_[i] += w * counts[i];
    corr_bins_[i] += w * bins[i];
  }
  for (std::size_t g = 0; g < grid_.size(); ++g) corr_grid_[g] += w * grid[g];
  dim_ += w * static_cast<double>(n);
  omega_dos_sum_ += w * omega_dos;
  sigma_sum_ += w * sigma;
  sector_weight_ += w;
  e_sum_ += w * e.sum();
  e2_sum_ += w * e.squaredNorm();
  e_count_ += w * static_cast<double>(n);
}

double SpectralAccumulator::sigma_e2() const {
  if (e_count_ == 0) return 0.0;
  const double mu = e_sum_ / e_count_;
  return e2_sum_ / e_count_ - mu * mu;
}

double SpectralAccumulator::total_weight() const { return dim_ > 0 ? prefactor_ * weight_ / dim_ : 0.0; }

SpectralFunction SpectralAccumulator::var(const std::string& label) const {
  if (sector_weight_ == 0) throw InvalidInput("spectral accumulator is empty");
  SpectralFunction f;
  f.kind = SpectralFunction::Kind::Var;
  f.label = label;
  f.L = L_;
  f.edges = edges_;
  f.omega_dos = omega_dos_sum_ / sector_weight_;
  f.sigma_e2 = sigma_e2();
  const std::size_t half = edges_.size() - 1;
  for (std::size_t i = 0; i < half; ++i) {
    const double s = var_sum_[half + i] + var_sum_[half - 1 - i];
    const double c = var_count_[half + i] + var_count_[half - 1 - i];
    f.omega.push_back(0.5 * (edges_[i] + edges_[i + 1]));
    f.present.push_back(c > 0);
    f.values.push_back(c > 0 ? prefactor_ * s / c : 0.0);
  }
  return f;
}

SpectralFunction SpectralAccumulator::corr_grid(const std::string& label) const {
  if (sector_weight_ == 0) throw InvalidInput("spectral accumulator is empty");
  SpectralFunction f;
  f.kind = SpectralFunction::Kind::Corr;
  f.label = label;
  f.L = L_;
  f.omega = grid_;
  f.omega_dos = omega_dos_sum_ / sector_weight_;
  f.sigma_e2 = sigma_e2();
  f.broadening = sigma_sum_ / sector_weight_;
  for (double v : corr_grid_) f.values.push_back(prefactor_ * v / dim_);
  f.present.assign(f.values.size(), true);
  return f;
}

SpectralFunction SpectralAccumulator::corr_binned(const std::string& label) const {
  if (sector_weight_ == 0) throw InvalidInput("spectral accumulator is empty");
  SpectralFunction f;
  f.kind = SpectralFunction::Kind::Corr;
  f.label = label;
  f.L = L_;
  f.edges = edges_;
  f.omega_dos = omega_dos_sum_ / sector_weight_;
  f.sigma_e2 = sigma_e2();
  f.broadening = sigma_sum_ / sector_weight_;
  const std::size_t half = edges_.size() - 1;
  for (std::size_t i = 0; i < half; ++i) {
    // f_corr is even in omega; average the two mirror intervals
    const double v = 0.5 * (corr_bins_[half + i] + corr_bins_[half - 1 - i]);
    f.omega.push_back(0.5 * (edges_[i] + edges_[i + 1]));
    f.values.push_back(prefactor_ * v / dim_);
  }
  f.present.assign(f.values.size(), true);
  return f;
}

SpectralFunction SpectralAccumulator::resc_from(const SpectralFunction& corr) const {
  return rescale(corr, sigma_e2());
}

SpectralFunction SpectralAccumulator::resc_grid(const std::string& label) const {
  return resc_from(corr_grid(label));
}

SpectralFunction SpectralAccumulator::resc_binned(const std::string& label) const {
  return resc_from(corr_binned(label));
}

SpectralFunction rescale(const SpectralFunction& corr, double sigma_e2) {
  if (corr.kind != SpectralFunction::Kind::Corr) throw InvalidInput("rescale expects a corr spectral function");
  if (!(sigma_e2 > 0)) throw InvalidSpec("rescale: energy variance must be positive");
  SpectralFunction r = corr;
  r.kind = SpectralFunction::Kind::Resc;
  r.sigma_e2 = sigma_e2;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    r.values[i] = std::sqrt(2.0) * std::exp(r.omega[i] * r.omega[i] / (4.0 * sigma_e2)) * corr.values[i];
  }
  return r;
}

RhoOmegaCheck rho_omega_check(const std::vector<const Eigen::VectorXd*>& spectra, std::size_t bins) {
  if (spectra.empty()) throw InvalidInput("rho_omega_check: no spectra");
  if (bins < 2) throw InvalidSpec("rho_omega_check: need at least two bins");
  // Work in u = omega / sqrt(2 sigma_s^2), standard normal for a Gaussian DOS.
  const double u_max = 6.0;
  const std::size_t n_grid = 4 * bins;
  std::vector<double> grid(n_grid + 1);
  for (std::size_t i = 0; i <= n_grid; ++i) grid[i] = -u_max + 2.0 * u_max * static_cast<double>(i) / n_grid;
  std::vector<double> below(n_grid + 1, 0.0);  // pairs with u <= grid point
  double total = 0.0, s2_sum = 0.0;
  for (const auto* sp : spectra) {
    const auto n = sp->size();
    if (n < 2) throw InvalidInput("rho_omega_check: spectrum with fewer than two levels");
    std::vector<double> e(sp->data(), sp->data() + n);
    std::sort(e.begin(), e.end());
    const double mu = stats::mean(e);
    double var = 0.0;
    for (double x : e) var += (x - mu) * (x - mu);
    var /= static_cast<double>(n);
    s2_sum += var;
    const double scale = std::sqrt(2.0 * var);
    for (std::size_t g = 0; g <= n_grid; ++g) {
      // pairs (m, n), m != n, with E_m - E_n <= t
      const double t = grid[g] * scale;
      double cnt = 0.0;
      for (Eigen::Index m = 0; m < n; ++m) {
        const auto it = std::lower_bound(e.begin(), e.end(), e[m] - t);
        double c = static_cast<double>(e.end() - it);
        if (t >= 0) c -= 1.0;  // the m == n term
        cnt += c;
      }
      below[g] += cnt;
    }
    total += static_cast<double>(n) * static_cast<double>(n - 1);
  }
  RhoOmegaCheck r;
  r.pairs = static_cast<std::size_t>(total);
  r.sigma_e2 = s2_sum / static_cast<double>(spectra.size());
  for (std::size_t g = 0; g <= n_grid; ++g) {
    const double phi = 0.5 * std::erfc(-grid[g] / std::sqrt(2.0));
    r.ks = std::max(r.ks, std::abs(below[g] / total - phi));
  }
  const std::size_t step = n_grid / bins;
  r.histogram.count = r.pairs;
  for (std::size_t b = 0; b <= bins; ++b) r.histogram.edges.push_back(grid[b * step]);
  for (std::size_t b = 0; b < bins; ++b) {
    const double mass = (below[(b + 1) * step] - below[b * step]) / total;
    r.histogram.densities.push_back(mass / r.histogram.width(b));
  }
  for (std::size_t b = 0; b < bins; ++b) {
    r.asymmetry = std::max(r.asymmetry, std::abs(r.histogram.densities[b] - r.histogram.densities[bins - 1 - b]));
  }
  return r;
}

// ---- trace expansions ----

namespace {

double dim(int L, int M) { return as_double(basis::dim_lm(L, M)); }

// Single-site diagonal factor as a function of m = -1, 0, 1.
using SiteFn = std::array<double, 3>;
constexpr SiteFn kSz{-1.0, 0.0, 1.0};
constexpr SiteFn kSplusSminus{0.0, 2.0, 2.0};   // S^+ S^- = 2 - m^2 + m
constexpr SiteFn kSminusSplus{2.0, 2.0, 0.0};   // S^- S^+ = 2 - m^2 - m

// Tr_M of a product of diagonal single-site factors, by summing over the
// magnetizations of the support and counting completions of the rest.
double diag_string_trace(int L, int M, const std::vector<std::pair<int, SiteFn>>& factors) {
  std::map<int, SiteFn> merged;
  for (const auto& [site, f] : factors) {
    auto [it, inserted] = merged.try_emplace(((site % L) + L) % L, SiteFn{1.0, 1.0, 1.0});
    for (int k = 0; k < 3; ++k) it->second[k] *= f[k];
  }
  std::vector<SiteFn> fs;
  for (const auto& [s, f] : merged) fs.push_back(f);
  const int n = static_cast<int>(fs.size());
  double total = 0.0;
  std::vector<int> m(n, 0);
  // odometer over 3^n assignments
  while (true) {
    double w = 1.0;
    int sum = 0;
    for (int i = 0; i < n && w != 0.0; ++i) {
      w *= fs[i][m[i]];
      sum += m[i] - 1;
    }
    if (w != 0.0) total += w * dim(L - n, M - sum);
    int i = 0;
    while (i < n && ++m[i] == 3) m[i++] = 0;
    if (i == n) break;
  }
  return total;
}

int obs_range(ObservableKind obs) {
  switch (obs) {
    case ObservableKind::ZN: return 1;
    case ObservableKind::ZNN: return 2;
    default: return 0;
  }
}

SectorTraces formula_traces(ObservableKind obs, int L, int M, double delta) {
  if (L < 5) throw InvalidSpec("trace formulas need L >= 5");
  if (M < -L || M > L) throw InvalidSpec("trace formulas: |M| > L");
  if (obs != ObservableKind::ZN && obs != ObservableKind::ZNN && obs != ObservableKind::JN) {
    throw InvalidSpec("trace formulas cover Z_N, Z_NN and J_N only");
  }
  const FourSpin f = four_spin(L, M, TracePathway::Formula);
  const double D = dim(L, M);
  const double r1 = dim(L - 1, M) / D;
  SectorTraces t;
  t.L = L;
  t.M = M;
  t.delta = delta;
  const double z_inf = static_cast<double>(M) * M / (static_cast<double>(L) * (L - 1)) - (1.0 - r1) / (L - 1);
  t.h = -delta * L * z_inf;
  const double hzn = -(delta / L) * (L * (L - 3.0) * f.zzzz + 2.0 * L * f.z_zsq_z + L * f.zsq_zsq);
  t.h2 = -delta * L * hzn + L * f.hop2;
  if (obs == ObservableKind::JN) return t;  // odd under reflection: all traces vanish
  t.o = z_inf;
  t.ho = obs == ObservableKind::ZN ? hzn : -(delta / L) * (L * (L - 4.0) * f.zzzz + 4.0 * L * f.z_zsq_z);
  // <H^2 O>: only diagonal products survive; hopping pairs only on the same bond.
  const int r = obs_range(obs);
  double zz3 = 0.0, hop = 0.0;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      for (int k = 0; k < L; ++k) {
        zz3 += diag_string_trace(L, M, {{i, kSz}, {i + 1, kSz}, {j, kSz}, {j + 1, kSz}, {k, kSz}, {k + r, kSz}});
      }
    }
    for (int k = 0; k < L; ++k) {
      hop += 0.25 * diag_string_trace(L, M, {{i, kSplusSminus}, {i + 1, kSminusSplus}, {k, kSz}, {k + r, kSz}});
      hop += 0.25 * diag_string_trace(L, M, {{i, kSminusSplus}, {i + 1, kSplusSminus}, {k, kSz}, {k + r, kSz}});
    }
  }
  t.h2o = (delta * delta * zz3 + hop) / (L * D);
  return t;
}

using SparseC = Eigen::SparseMatrix<cplx>;

SparseC sector_sparse(const SiteOperator& op, const std::vector<basis::Code>& codes) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (std::size_t c = 0; c < codes.size(); ++c) {
    op.apply(codes[c], [&](basis::Code out, cplx v) {
      const auto it = std::lower_bound(codes.begin(), codes.end(), out);
      if (it == codes.end() || *it != out) throw ConsistencyError("operator leaves the magnetization sector");
      trip.emplace_back(static_cast<int>(it - codes.begin()), static_cast<int>(c), v);
    });
  }
  SparseC m(static_cast<Eigen::Index>(codes.size()), static_cast<Eigen::Index>(codes.size()));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

// Tr(A B) for sparse A, B.
cplx trace_product(const SparseC& a, const SparseC& b) {
  const SparseC bt = b.transpose();
  return a.cwiseProduct(bt).sum();
}

SectorTraces enumerated_traces(ObservableKind obs, int L, int M, double delta) {
  if (L < 3 || L > 10) throw InvalidSpec("enumerated traces need 3 <= L <= 10");
  const auto codes = basis::enumerate_m_sector(L, M);
  ModelParams p;
  p.delta = delta;
  p.lambda = 0.0;
  const SparseC h = sector_sparse(hamiltonian_operator(p, L), codes);
  const SparseC o = sector_sparse(observable_operator(ObservableSpec{obs, 0}, L, basis::Boundary::Periodic), codes);
  const double D = static_cast<double>(codes.size());
  SectorTraces t;
  t.L = L;
  t.M = M;
  t.delta = delta;
  t.h = h.diagonal().sum().real() / D;
  t.o = o.diagonal().sum().real() / D;
  t.h2 = trace_product(h, h).real() / D;
  t.ho = trace_product(h, o).real() / D;
  const SparseC ho = h * o;
  t.h2o = trace_product(h, ho).real() / D;
  return t;
}

}  // namespace

FourSpin four_spin(int L, int M, TracePathway pathway) {
  if (L < 4) throw InvalidSpec("four_spin needs L >= 4");
  if (M < -L || M > L) throw InvalidSpec("four_spin: |M| > L");
  FourSpin f;
  if (pathway == TracePathway::Formula) {
    const double D = dim(L, M);
    auto d = [&](int l, int dm) { return dim(L - l, M + dm); };
    f.zz = (d(2, 2) + d(2, -2) - 2.0 * d(2, 0)) / D;
    f.zzzz = (d(4, 4) + d(4, -4) - 4.0 * (d(4, 2) + d(4, -2)) + 6.0 * d(4, 0)) / D;
    f.z_zsq_z = (d(3, 3) + d(3, -3) - (d(3, 1) + d(3, -1))) / D;
    f.zsq_zsq = (d(2, 2) + d(2, -2) + 2.0 * d(2, 0)) / D;
    f.hop2 = (2.0 * (d(2, 1) + d(2, -1)) + 4.0 * d(2, 0)) / D;
    return f;
  }
  const auto codes = basis::enumerate_m_sector(L, M);
  SiteOperator hop(L);
  hop.add_bond(0, 1, spin1::kron(spin1::splus(), spin1::sminus()) + spin1::kron(spin1::sminus(), spin1::splus()));
  for (const auto c : codes) {
    const double m0 = basis::trit(c, 0) - 1, m1 = basis::trit(c, 1) - 1;
    const double m2 = basis::trit(c, 2) - 1, m3 = basis::trit(c, 3) - 1;
    f.zz += m0 * m1;
    f.zzzz += m0 * m1 * m2 * m3;
    f.z_zsq_z += m0 * m1 * m1 * m2;
    f.zsq_zsq += m0 * m0 * m1 * m1;
    // <s|A^2|s> = |A|s>|^2 for Hermitian A
    double norm2 = 0.0;
    hop.apply(c, [&](basis::Code, cplx v) { norm2 += std::norm(v); });
    f.hop2 += 0.25 * norm2;
  }
  const double D = static_cast<double>(codes.size());
  f.zz /= D;
  f.zzzz /= D;
  f.z_zsq_z /= D;
  f.zsq_zsq /= D;
  f.hop2 /= D;
  return f;
}

SectorTraces trace_moments(ObservableKind obs, int L, int M, double delta, TracePathway pathway) {
  return pathway == TracePathway::Formula ? formula_traces(obs, L, M, delta) : enumerated_traces(obs, L, M, delta);
}

SectorTraces full_space_traces(ObservableKind obs, int L, double delta, TracePathway pathway) {
  SectorTraces t;
  t.L = L;
  t.delta = delta;
  const double total = std::pow(3.0, L);
  for (int M = -L; M <= L; ++M) {
    const double w = dim(L, M) / total;
    const auto s = trace_moments(obs, L, M, delta, pathway);
    t.h += w * s.h;
    t.h2 += w * s.h2;
    t.o += w * s.o;
    t.ho += w * s.ho;
    t.h2o += w * s.h2o;
  }
  return t;
}

MicrocanonicalCoefficients microcanonical_coefficients(ObservableKind obs, int M, int L, double delta) {
  const auto t = formula_traces(obs, L, M, delta);
  MicrocanonicalCoefficients c;
  c.obs = obs;
  c.L = L;
  c.M = M;
  c.delta = delta;
  c.e_inf = t.h;
  c.o_inf = t.o;
  if (obs == ObservableKind::JN) return c;
  const double k2 = t.h2 - t.h * t.h;
  if (!(k2 > 0)) return c;  // frozen sectors have no energy spread
  c.linear = L * (t.ho - t.h * t.o) / k2;
  const double k3 = t.h2o - t.h2 * t.o - 2.0 * t.ho * t.h + 2.0 * t.h * t.h * t.o;
  c.quadratic = 0.5 * static_cast<double>(L) * L * k3 / (k2 * k2);
  const double m = static_cast<double>(M) / L;
  const double D = dim(L, M);
  const double r1 = dim(L - 1, M) / D, r2 = dim(L - 2, M) / D;
  const double a = m * m - 1.0;
  const double den = delta * delta * a * a + 2.0 * (1.0 + delta * delta * a) * r1 + (2.0 + delta * delta) * r2;
  if (obs == ObservableKind::ZN) {
    c.linear_leading = -delta * (a * a + 2.0 * a * r1 + r2) / den;
  } else {
    c.linear_leading =
        delta * ((2.0 * m * m * m * m - 5.0 * m * m + 3.0) + (4.0 * m * m - 6.0 + r1) * r1 - 2.0 * r2) / (L * den);
  }
  return c;
}

double MicrocanonicalCoefficients::evaluate(double energy) const {
  const double x = (energy - e_inf) / L;
  return o_inf + linear * x + quadratic * x * x;
}

}  // namespace ethlab::eth
