#include "ethlab/symmetry_eth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "ethlab/error.hpp"
#include "ethlab/eth.hpp"
#include "ethlab/kernels.hpp"
#include "ethlab/stats.hpp"

namespace ethlab::symmetry_eth {

namespace {

using kernels::Exec;

std::vector<double> symmetric_edges(const std::vector<double>& pos) {
  std::vector<double> full;
  for (std::size_t i = pos.size(); i-- > 1;) full.push_back(-pos[i]);
  full.insert(full.end(), pos.begin(), pos.end());
  return full;
}

// Adds the mirror intervals of a symmetric-edge series onto the |omega| bins.
std::vector<double> fold(const std::vector<double>& full, bool average) {
  const std::size_t half = full.size() / 2;
  std::vector<double> out(half);
  for (std::size_t i = 0; i < half; ++i) {
    out[i] = full[half + i] + full[half - 1 - i];
    if (average) out[i] *= 0.5;
  }
  return out;
}

void check_edges(const std::vector<double>& edges) {
  if (edges.size() < 2 || edges.front() != 0.0 || !std::is_sorted(edges.begin(), edges.end())) {
    throw InvalidSpec("frequency bins must start at 0 and ascend");
  }
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale > 0 ? diff / scale : diff;
}

std::vector<bool> degenerate_levels(const Eigen::VectorXd& e) {
  std::vector<bool> d(static_cast<std::size_t>(e.size()), false);
  for (Eigen::Index i = 0; i + 1 < e.size(); ++i) {
    if (e(i + 1) - e(i) < 1e-9) d[i] = d[i + 1] = true;
  }
  return d;
}

ObservableSpec local_op(int site) { return {ObservableKind::ZNNLocal, site}; }

}  // namespace

int momentum_class(int eta_m, int eta_n, int L) {
  if (L < 1) throw InvalidSpec("momentum_class: L must be positive");
  const int d = ((eta_m - eta_n) % L + L) % L;
  return std::min(d, L - d);
}

PhaseCheck local_op_phase_check(const SectorData& bra, const SectorData& ket, int j, int l) {
  const auto& a = bra.basis.spec();
  const auto& b = ket.basis.spec();
  if (a.bc != basis::Boundary::Periodic || !a.eta || !b.eta) {
    throw InvalidSpec("phase check needs periodic momentum sectors");
  }
  if (!bra.spectrum.has_vectors() || !ket.spectrum.has_vectors()) {
    throw InvalidInput("phase check: spectrum without eigenvectors");
  }
  const auto oj = eth::rotate(cross_sector_block(local_op(j), bra.basis, ket.basis).matrix, bra.spectrum.vectors,
                              ket.spectrum.vectors);
  const auto ol = eth::rotate(cross_sector_block(local_op(l), bra.basis, ket.basis).matrix, bra.spectrum.vectors,
                              ket.spectrum.vectors);
  const cplx phase = std::polar(1.0, (j - l) * (a.momentum() - b.momentum()));
  const auto deg_m = degenerate_levels(bra.spectrum.energies);
  const auto deg_n = degenerate_levels(ket.spectrum.energies);
  PhaseCheck r;
  for (Eigen::Index n = 0; n < oj.cols(); ++n) {
    for (Eigen::Index m = 0; m < oj.rows(); ++m) {
      r.max_violation = std::max(r.max_violation, std::abs(ol(m, n) - oj(m, n) * phase));
      r.max_modulus_violation = std::max(r.max_modulus_violation, std::abs(std::abs(ol(m, n)) - std::abs(oj(m, n))));
      ++r.pairs;
      if (deg_m[m] || deg_n[n]) ++r.degenerate_pairs;
    }
  }
  return r;
}

namespace {

void check_family(const std::vector<SectorData>& family) {
  if (family.empty()) throw InvalidInput("momentum family is empty");
  const auto& f = family.front().basis.spec();
  if (f.bc != basis::Boundary::Periodic) throw InvalidSpec("momentum family needs periodic boundaries");
  std::set<int> present;
  for (const auto& s : family) {
    const auto& sp = s.basis.spec();
    if (sp.L != f.L || sp.M != f.M || sp.spin_flip != f.spin_flip || !sp.eta || sp.parity) {
      throw InvalidInput("momentum family: sector " + sp.to_string() + " does not belong to the family");
    }
    if (!(s.spectrum.spec == sp)) throw InvalidInput("momentum family: spectrum and basis differ");
    present.insert(*sp.eta);
  }
  const auto [lo, hi] = basis::eta_range(f.L);
  std::string missing;
  for (int eta = lo; eta <= hi; ++eta) {
    if (!present.count(eta)) missing += (missing.empty() ? "" : ", ") + std::to_string(eta);
  }
  if (!missing.empty()) throw InvalidInput("momentum family is missing eta = " + missing);
}

}  // namespace

double selection_rule_violation(const std::vector<SectorData>& family) {
  check_family(family);
  double worst = 0.0;
  for (const auto& a : family) {
    for (const auto& b : family) {
      if (&a == &b) continue;
      const auto blk = cross_sector_block({ObservableKind::ZNN, 0}, a.basis, b.basis);
      if (blk.matrix.size()) worst = std::max(worst, blk.matrix.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

MomentumResolvedSF momentum_resolved_sf(const std::vector<SectorData>& family, int site,
                                        const std::vector<double>& grid, const std::vector<double>& edges,
                                        double broadening_factor, std::size_t min_bin_pairs) {
  check_family(family);
  check_edges(edges);
  if (!std::is_sorted(grid.begin(), grid.end())) throw InvalidSpec("corr grid must ascend");
  for (const auto& s : family) {
    if (!s.spectrum.has_vectors()) throw InvalidInput("momentum family: spectrum without eigenvectors");
  }
  const int L = family.front().basis.spec().L;
  MomentumResolvedSF r;
  r.L = L;
  r.M = family.front().basis.spec().M;
  r.site = site;
  r.grid = grid;
  r.edges = edges;
  for (int ell = 0; ell <= L / 2; ++ell) r.classes.push_back(ell);
  const std::size_t nc = r.classes.size();
  r.multiplicity.assign(nc, 0);
  r.class_corr.assign(nc, std::vector<double>(grid.size(), 0.0));
  r.local_corr.assign(grid.size(), 0.0);
  r.invariant_corr.assign(grid.size(), 0.0);
  for (const auto& s : family) r.dimension += s.basis.dim();
  const double D = static_cast<double>(r.dimension);

  const auto full_edges = symmetric_edges(edges);
  const std::size_t nb = full_edges.size() - 1;
  const ObservableSpec inv{ObservableKind::ZNN, 0};
  for (const auto& a : family) {
    const double sigma = broadening_factor * eth::central_spacing(a.spectrum.energies, 0.1);
    const auto& ea = a.spectrum.energies;
    {
      const auto el = eth::rotate(build_observable(inv, a.basis).matrix, a.spectrum.vectors, a.spectrum.vectors);
      kernels::broadened_sum({&el, &ea, &ea, true}, grid, sigma, r.invariant_corr, Exec::Parallel);
    }
    for (const auto& b : family) {
      const auto& eb = b.spectrum.energies;
      const int eta_a = *a.basis.spec().eta, eta_b = *b.basis.spec().eta;
      const int ell = momentum_class(eta_a, eta_b, L);
      const bool same = &a == &b;
      const auto el = eth::rotate(cross_sector_block(local_op(site), a.basis, b.basis).matrix, a.spectrum.vectors,
                                  b.spectrum.vectors);
      std::vector<double> part(grid.size(), 0.0);
      const kernels::PairBlock pb{&el, &ea, &eb, same};
      kernels::broadened_sum(pb, grid, sigma, part, Exec::Parallel);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        r.class_corr[ell][g] += part[g];
        r.local_corr[g] += part[g];
      }
      ++r.multiplicity[ell];

      const Eigen::MatrixXd w2 = el.cwiseAbs2().cwiseAbs2();
      std::vector<double> s(nb, 0.0), c(nb, 0.0), s2(nb, 0.0), c2(nb, 0.0);
      kernels::bin_pairs(pb, full_edges, s, c, Exec::Parallel);
      kernels::PairBlock pw = pb;
      pw.weights = &w2;
      kernels::bin_pairs(pw, full_edges, s2, c2, Exec::Parallel);
      const auto fs = fold(s, false), fc = fold(c, false), fs2 = fold(s2, false);
      BlockCurve bc;
      bc.eta_bra = eta_a;
      bc.eta_ket = eta_b;
      bc.ell = ell;
      const auto discrete = [L](int eta) { return eta == 0 || (L % 2 == 0 && std::abs(eta) == L / 2); };
      bc.discrete_k = discrete(eta_a) || discrete(eta_b);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const double n = fc[i];
        const double mean = n > 0 ? fs[i] / n : 0.0;
        const double var = n > 0 ? std::max(0.0, fs2[i] / n - mean * mean) : 0.0;
        bc.mean.push_back(mean);
        bc.stderr_.push_back(n > 0 ? std::sqrt(var / n) : 0.0);
        bc.count.push_back(n);
      }
      r.blocks.push_back(std::move(bc));
    }
  }
  for (auto& v : r.local_corr) v /= D;
  for (auto& c : r.class_corr)
    for (auto& v : c) v /= D;
  for (auto& v : r.invariant_corr) v *= L / D;

  std::vector<double> inv_over_l(grid.size()), sum(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    inv_over_l[g] = r.invariant_corr[g] / L;
    for (std::size_t c = 0; c < nc; ++c) sum[g] += r.class_corr[c][g];
  }
  r.delta0_violation = max_rel(r.class_corr[0], inv_over_l);
  r.reconstruction_violation = max_rel(sum, r.local_corr);

  // collapse of the generic-k blocks inside each class
  const std::size_t nbins = edges.size() - 1;
  double z2 = 0.0;
  for (int ell : r.classes) {
    std::vector<double> pooled_sum(nbins, 0.0), pooled_n(nbins, 0.0);
    for (const auto& bc : r.blocks) {
      if (bc.ell != ell || bc.discrete_k) continue;
      for (std::size_t i = 0; i < nbins; ++i) {
        pooled_sum[i] += bc.mean[i] * bc.count[i];
        pooled_n[i] += bc.count[i];
      }
    }
    for (const auto& bc : r.blocks) {
      if (bc.ell != ell || bc.discrete_k) continue;
      for (std::size_t i = 0; i < nbins; ++i) {
        if (bc.count[i] < static_cast<double>(min_bin_pairs) || !(bc.stderr_[i] > 0)) continue;
        const double z = (bc.mean[i] - pooled_sum[i] / pooled_n[i]) / bc.stderr_[i];
        z2 += z * z;
        ++r.collapse_points;
      }
    }
  }
  r.collapse_rms_z = r.collapse_points ? std::sqrt(z2 / static_cast<double>(r.collapse_points)) : 0.0;
  return r;
}

DistanceResolvedSF obc_distance_decomposition(const basis::SymBasis& b, const Spectrum& s,
                                              const std::vector<double>& edges, double broadening_factor,
                                              double z_omega_max) {
  const auto& spec = b.spec();
  if (spec.bc != basis::Boundary::Open) throw InvalidSpec("obc decomposition needs an open-chain sector");
  if (!(s.spec == spec)) throw InvalidInput("obc decomposition: spectrum and basis differ");
  if (!s.has_vectors()) throw InvalidInput("obc decomposition: spectrum without eigenvectors");
  check_edges(edges);
  const int L = spec.L;
  if (L < 5) throw InvalidSpec("obc decomposition needs L >= 5");
  const int nops = L - 2;
  DistanceResolvedSF r;
  r.L = L;
  r.M = spec.M;
  r.bulk_site = L / 2 - 1;
  r.edges = edges;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) r.omega.push_back(0.5 * (edges[i] + edges[i + 1]));

  const auto& e = s.energies;
  const auto& V = s.vectors;
  const double D = static_cast<double>(e.size());
  std::vector<Eigen::MatrixXcd> ops;
  for (int j = 0; j < nops; ++j) ops.push_back(eth::rotate(build_observable(local_op(j), b).matrix, V, V));
  const auto avg = eth::rotate(build_observable({ObservableKind::ZNNAvgObc, 0}, b).matrix, V, V);

  const double sigma = broadening_factor * eth::central_spacing(e, 0.1);
  const auto full_edges = symmetric_edges(edges);
  const std::size_t nb = full_edges.size() - 1;
  auto binned = [&](const kernels::PairBlock& pb, double scale) {
    std::vector<double> acc(nb, 0.0);
    kernels::broadened_interval_mean(pb, full_edges, sigma, acc, Exec::Parallel);
    auto out = fold(acc, true);
    for (double& v : out) v *= scale;
    return out;
  };

  r.total_corr = binned({&avg, &e, &e, true}, nops / D);
  r.local_corr = binned({&ops[r.bulk_site], &e, &e, true}, 1.0 / D);

  // pairs for the significance test: low frequency, central half of the spectrum
  const Eigen::Index n = e.size();
  const double e_lo = e((n - n / 2) / 2), e_hi = e((n - n / 2) / 2 + n / 2 - 1);
  Eigen::MatrixXd w(n, n);
  for (int d = 0; d < nops; ++d) {
    w.setZero();
    std::size_t count = 0;
    for (int j = 0; j + d < nops; ++j) {
      const int l = j + d;
      w += (d == 0 ? 1.0 : 2.0) * (ops[j].array() * ops[l].array().conjugate()).real().matrix();
      ++count;
    }
    kernels::PairBlock pb;
    pb.e_bra = pb.e_ket = &e;
    pb.weights = &w;
    pb.skip_diagonal = true;
    r.contribution.push_back(binned(pb, 1.0 / (nops * D)));
    r.pairs_per_distance.push_back(count);
    double sx = 0.0, sx2 = 0.0;
    for (Eigen::Index q = 0; q < n; ++q) {
      for (Eigen::Index p = q + 1; p < n; ++p) {
        if (std::abs(e(p) - e(q)) >= z_omega_max) continue;
        const double ebar = 0.5 * (e(p) + e(q));
        if (ebar < e_lo || ebar > e_hi) continue;
        sx += w(p, q);
        sx2 += w(p, q) * w(p, q);
      }
    }
    r.z_score.push_back(sx2 > 0 ? sx / std::sqrt(sx2) : 0.0);
  }
  std::vector<double> sum(r.total_corr.size(), 0.0);
  for (const auto& c : r.contribution)
    for (std::size_t i = 0; i < c.size(); ++i) sum[i] += c[i];
  r.reconstruction_violation = max_rel(sum, r.total_corr);

  const double mu = e.mean();
  r.sigma_e2 = (e.array() - mu).square().mean();
  for (std::size_t i = 0; i < r.omega.size(); ++i) {
    const double f = std::sqrt(2.0) * std::exp(r.omega[i] * r.omega[i] / (4.0 * r.sigma_e2));
    r.total_resc.push_back(f * r.total_corr[i]);
    r.local_resc.push_back(f * r.local_corr[i]);
  }

  std::vector<double> da(n), dl(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    da[m] = avg(m, m).real();
    dl[m] = ops[r.bulk_site](m, m).real();
  }
  const std::size_t window = std::min<std::size_t>(50, static_cast<std::size_t>(n));
  const auto ra = stats::running_average(da, window);
  const auto rl = stats::running_average(dl, window);
  const Eigen::Index first = (n - n / 2) / 2, last = first + n / 2;
  double fa = 0.0, fl = 0.0;
  for (Eigen::Index m = first; m < last; ++m) {
    r.running_mean_deviation = std::max(r.running_mean_deviation, std::abs(ra[m] - rl[m]));
    fa += std::abs(da[m] - ra[m]);
    fl += std::abs(dl[m] - rl[m]);
  }
  r.delta_o_average = fa / static_cast<double>(last - first);
  r.delta_o_local = fl / static_cast<double>(last - first);
  return r;
}

}  // namespace ethlab::symmetry_eth
