#include "ethlab/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "ethlab/error.hpp"
#include "ethlab/stats.hpp"

namespace ethlab::analysis {

std::vector<const Eigen::VectorXd*> Sweep::energies() const {
  std::vector<const Eigen::VectorXd*> out;
  for (const auto& s : sectors) out.push_back(&s.energies);
  return out;
}

std::vector<Spectrum> Sweep::spectra() const {
  std::vector<Spectrum> out;
  for (const auto& s : sectors) {
    Spectrum sp;
    sp.spec = s.spec;
    sp.energies = s.energies;
    out.push_back(std::move(sp));
  }
  return out;
}

eth::DiagonalSet Sweep::diagonal_set() const {
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> parts;
  for (const auto& s : sectors) {
    if (s.diagonal.size() == 0) continue;
    parts.emplace_back(s.energies, s.diagonal);
  }
  if (parts.empty()) throw InvalidInput("sweep holds no diagonal elements");
  return eth::pool_diagonal(L, eth_label, parts);
}

namespace {

struct Loaded {
  basis::SymBasis basis;
  Spectrum spectrum;
};

double sector_median(const Eigen::VectorXd& e) {
  const auto n = e.size();
  return n % 2 ? e(n / 2) : 0.5 * (e(n / 2 - 1) + e(n / 2));
}

void keep_candidates(SectorRecord& r, const Loaded& l, std::size_t k) {
  const auto& e = l.spectrum.energies;
  const Eigen::Index n = e.size();
  r.median = sector_median(e);
  std::vector<Eigen::Index> idx(n);
  for (Eigen::Index i = 0; i < n; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(e(a) - r.median) < std::abs(e(b) - r.median); });
  const auto keep = static_cast<Eigen::Index>(std::min<std::size_t>(k, n));
  std::sort(idx.begin(), idx.begin() + keep);
  r.candidate_energies.resize(keep);
  r.candidate_vectors.resize(l.spectrum.vectors.rows(), keep);
  for (Eigen::Index c = 0; c < keep; ++c) {
    r.candidate_energies(c) = e(idx[c]);
    r.candidate_vectors.col(c) = l.spectrum.vectors.col(idx[c]);
  }
  // radius fully covered: every state closer than this is kept
  r.kept_radius = keep < n ? 0.0 : INFINITY;
  if (keep < n) {
    double inner = 0.0;
    for (Eigen::Index c = 0; c < keep; ++c) inner = std::max(inner, std::abs(r.candidate_energies(c) - r.median));
    r.kept_radius = inner;
  }
  r.basis = l.basis;
}

void add_spectral(Sweep& out, const SweepOptions& opt, const std::vector<Loaded*>& parts, double mult) {
  const int L = out.L;
  for (const auto& obs : opt.spectral) {
    const auto label = obs.label();
    auto it = out.spectral.find(label);
    if (it == out.spectral.end()) {
      it = out.spectral.emplace(label, eth::SpectralAccumulator(L, static_cast<double>(L), opt.edges, opt.grid,
                                                                 opt.broadening))
               .first;
    }
    auto& acc = it->second;
    if (obs.kind == ObservableKind::JN) {
      if (parts.size() != 2) throw InvalidInput("J_N spectral function needs both spin-inversion sectors");
      const auto& a = *parts[0];
      const auto& b = *parts[1];
      const auto el = eth::rotate(cross_sector_block(obs, a.basis, b.basis).matrix, a.spectrum.vectors,
                                  b.spectrum.vectors);
      eth::SectorContribution c;
      c.multiplicity = mult;
      const auto& ea = a.spectrum.energies;
      const auto& eb = b.spectrum.energies;
      c.energies.resize(ea.size() + eb.size());
      c.energies << ea, eb;
      // J_N is odd under spin inversion: only the cross blocks survive
      c.blocks.push_back({&el, &ea, &eb, false, true});
      c.blocks.push_back({nullptr, &ea, &ea, true, false});
      c.blocks.push_back({nullptr, &eb, &eb, true, false});
      acc.add(c);
      continue;
    }
    for (const auto* p : parts) {
      const auto el = eth::rotate(build_observable(obs, p->basis).matrix, p->spectrum.vectors, p->spectrum.vectors);
      eth::SectorContribution c;
      c.multiplicity = mult;
      c.energies = p->spectrum.energies;
      c.blocks.push_back({&el, &p->spectrum.energies, &p->spectrum.energies, true, false});
      acc.add(c);
    }
  }
}

bool needs_vectors(const SweepOptions& opt) {
  return opt.eth_observable || !opt.spectral.empty() || opt.page_candidates > 0 || opt.sum_rule;
}

}  // namespace

Sweep sweep(const ModelParams& model, int L, const SweepOptions& opt, io::SpectrumCache& cache) {
  Sweep out;
  out.L = L;
  out.model = model;
  if (opt.eth_observable) out.eth_label = opt.eth_observable->label();
  const bool vectors = needs_vectors(opt);
  const auto specs = production_sectors(L, opt.pair_time_reversal);
  // group the two spin-inversion sectors of each momentum
  std::map<int, std::vector<basis::SectorSpec>> by_eta;
  for (const auto& s : specs) by_eta[*s.eta].push_back(s);
  std::vector<eth::MatrixElements> kept;
  for (const auto& [eta, group] : by_eta) {
    const double mult = opt.pair_time_reversal ? 2.0 : 1.0;
    std::vector<Loaded> loaded;
    loaded.reserve(group.size());
    for (const auto& spec : group) {
      try {
        Loaded l{basis::build_sym_basis(spec), {}};
        l.spectrum = cache.get(model, l.basis, vectors);
        SectorRecord r;
        r.spec = spec;
        r.multiplicity = mult;
        r.energies = l.spectrum.energies;
        r.from_cache = l.spectrum.from_cache;
        r.solver_seconds = l.spectrum.seconds;
        r.residual = l.spectrum.residual;
        if (opt.eth_observable) {
          r.gauge_skipped = eth::time_reversal_gauge(l.spectrum, l.basis);
          const auto blk = build_observable(*opt.eth_observable, l.basis);
          auto me = eth::matrix_elements(blk, l.spectrum);
          r.diagonal = me.diagonal();
          if (opt.sum_rule) r.sum_rule_defect = eth::sum_rule_defect(blk, l.spectrum, me);
          me.e_ket.resize(0);
          kept.push_back(std::move(me));
        }
        if (opt.page_candidates > 0) keep_candidates(r, l, opt.page_candidates);
        out.sectors.push_back(std::move(r));
        loaded.push_back(std::move(l));
      } catch (const Error& e) {
        out.errors.push_back(spec.to_string() + ": " + e.what());
      }
    }
    if (!opt.spectral.empty()) {
      std::vector<Loaded*> parts;
      for (auto& l : loaded) parts.push_back(&l);
      try {
        add_spectral(out, opt, parts, mult);
      } catch (const Error& e) {
        out.errors.push_back("eta=" + std::to_string(eta) + " spectral: " + e.what());
      }
    }
  }
  if (opt.eth_observable && !out.sectors.empty()) {
    out.pool = eth::offdiag_pool(L, out.energies(), opt.offdiag_fraction);
    for (const auto& me : kept) eth::offdiag_pool_add(*out.pool, me);
    std::size_t skipped = 0;
    for (const auto& s : out.sectors) skipped += s.gauge_skipped;
    if (skipped) {
      out.warnings.push_back(std::to_string(skipped) +
                             " eigenvectors in degenerate multiplets kept their default phase");
    }
  }
  return out;
}

std::vector<Spectrum> production_spectra(const ModelParams& model, int L, bool pair_time_reversal,
                                         io::SpectrumCache& cache) {
  std::vector<Spectrum> out;
  for (const auto& spec : production_sectors(L, pair_time_reversal)) {
    const auto b = basis::build_sym_basis(spec);
    out.push_back(cache.get(model, b, false));
  }
  return out;
}

entanglement::PageCurve page_curve(const Sweep& s, std::size_t n_states, const std::vector<int>& subsystem_sizes) {
  std::vector<double> pooled;
  for (const auto& r : s.sectors) pooled.insert(pooled.end(), r.energies.data(), r.energies.data() + r.energies.size());
  if (pooled.empty()) throw InvalidInput("page_curve: empty sweep");
  const double med = stats::median(pooled);
  struct Pick {
    double distance;
    std::size_t sector;
    Eigen::Index index;
  };
  std::vector<Pick> all;
  for (std::size_t k = 0; k < s.sectors.size(); ++k) {
    const auto& e = s.sectors[k].energies;
    for (Eigen::Index i = 0; i < e.size(); ++i) all.push_back({std::abs(e(i) - med), k, i});
  }
  std::sort(all.begin(), all.end(), [](const Pick& a, const Pick& b) {
    return a.distance != b.distance ? a.distance < b.distance
                                    : (a.sector != b.sector ? a.sector < b.sector : a.index < b.index);
  });
  const std::size_t n = std::min(n_states, all.size());
  std::vector<std::vector<Eigen::Index>> chosen(s.sectors.size());
  for (std::size_t c = 0; c < n; ++c) {
    const auto& r = s.sectors[all[c].sector];
    const double e = r.energies(all[c].index);
    if (!r.basis || std::abs(e - r.median) > r.kept_radius) {
      throw ConsistencyError("page_curve: selected state outside the kept candidates of " + r.spec.to_string());
    }
    chosen[all[c].sector].push_back(all[c].index);
  }
  std::vector<Spectrum> spectra;
  std::vector<const basis::SymBasis*> bases;
  spectra.reserve(s.sectors.size());
  for (std::size_t k = 0; k < s.sectors.size(); ++k) {
    if (chosen[k].empty()) continue;
    const auto& r = s.sectors[k];
    Spectrum sp;
    sp.spec = r.spec;
    sp.energies.resize(static_cast<Eigen::Index>(chosen[k].size()));
    sp.vectors.resize(r.candidate_vectors.rows(), static_cast<Eigen::Index>(chosen[k].size()));
    for (std::size_t c = 0; c < chosen[k].size(); ++c) {
      const double e = r.energies(chosen[k][c]);
      Eigen::Index col = -1;
      for (Eigen::Index q = 0; q < r.candidate_energies.size(); ++q) {
        if (r.candidate_energies(q) == e) {
          col = q;
          break;
        }
      }
      if (col < 0) throw ConsistencyError("page_curve: candidate vector missing in " + r.spec.to_string());
      sp.energies(static_cast<Eigen::Index>(c)) = e;
      sp.vectors.col(static_cast<Eigen::Index>(c)) = r.candidate_vectors.col(col);
    }
    spectra.push_back(std::move(sp));
    bases.push_back(&*r.basis);
  }
  std::vector<const Spectrum*> ptrs;
  for (const auto& sp : spectra) ptrs.push_back(&sp);
  return entanglement::eigenstate_page_curve(ptrs, bases, n, subsystem_sizes);
}

double low_frequency_ratio(const eth::SpectralFunction& corr_binned, const eth::SpectralFunction& var, double lo,
                           double hi) {
  if (corr_binned.values.size() != var.values.size() || var.edges.size() != var.values.size() + 1) {
    throw InvalidInput("low_frequency_ratio: corr and var on different bins");
  }
  if (!(var.sigma_e2 > 0)) throw InvalidInput("low_frequency_ratio: missing sigma_E^2");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < var.values.size(); ++i) {
    if (var.edges[i] < lo || var.edges[i + 1] > hi || !var.present[i] || !(var.values[i] > 0)) continue;
    const double w = var.omega[i];
    sum += corr_binned.values[i] / var.values[i] * std::exp(w * w / (4.0 * var.sigma_e2));
    ++n;
  }
  if (n == 0) throw InvalidInput("low_frequency_ratio: no populated bins in the window");
  return sum / static_cast<double>(n);
}

std::pair<double, double> low_frequency_window(const eth::SpectralFunction& corr_binned, double broadening_factor) {
  if (!(broadening_factor > 0)) throw InvalidSpec("low_frequency_window: broadening factor must be positive");
  return {20.0 * corr_binned.broadening / broadening_factor, 1.0};
}

double collapse_spread(const std::vector<eth::SpectralFunction>& curves, double lo, double hi) {
  if (curves.size() < 2) throw InvalidInput("collapse_spread: need at least two curves");
  const auto& ref = curves.front();
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.omega.size(); ++i) {
    if (ref.omega[i] < lo || ref.omega[i] > hi) continue;
    double mx = -INFINITY, mn = INFINITY, sum = 0.0;
    bool ok = true;
    for (const auto& c : curves) {
      if (c.omega.size() != ref.omega.size()) throw InvalidInput("collapse_spread: curves on different bins");
      if (!c.present[i]) ok = false;
      mx = std::max(mx, c.values[i]);
      mn = std::min(mn, c.values[i]);
      sum += c.values[i];
    }
    if (!ok) continue;
    const double mean = sum / static_cast<double>(curves.size());
    if (mean > 0) worst = std::max(worst, (mx - mn) / mean);
  }
  return worst;
}

}  // namespace ethlab::analysis
