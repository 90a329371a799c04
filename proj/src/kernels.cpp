#include "ethlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <omp.h>

#include "ethlab/error.hpp"

namespace ethlab::kernels {

namespace {

// Column j of the block.
void assemble_column(const SiteOperator& op, const basis::SymBasis& bra, const basis::SymBasis& ket,
                     bool commuting, std::size_t j, Eigen::MatrixXcd& out) {
  auto col = out.col(static_cast<Eigen::Index>(j));
  if (commuting) {
    // O|psi_j> = P O |rep_j> / a_j(rep_j)
    const double inv = 1.0 / ket.norm(j);
    op.apply(ket.rep(j), [&](basis::Code s, cplx v) {
      const auto slot = bra.lookup(s);
      if (slot.index >= 0) col(slot.index) += std::conj(slot.amplitude) * v * inv;
    });
    return;
  }
  for (const auto& e : ket.expansion(j)) {
    op.apply(e.code, [&](basis::Code s, cplx v) {
      const auto slot = bra.lookup(s);
      if (slot.index >= 0) col(slot.index) += std::conj(slot.amplitude) * v * e.amplitude;
    });
  }
}

template <class Visit>
void for_pairs(const PairBlock& b, Eigen::Index n_first, Eigen::Index n_last, Visit&& visit) {
  const auto& Eb = *b.e_bra;
  const auto& Ek = *b.e_ket;
  if (b.weights) {
    const auto& W = *b.weights;
    for (Eigen::Index n = n_first; n < n_last; ++n) {
      for (Eigen::Index m = 0; m < W.rows(); ++m) {
        if (b.skip_diagonal && m == n) continue;
        visit(Eb(m) - Ek(n), W(m, n));
      }
    }
    return;
  }
  const auto& O = *b.elements;
  for (Eigen::Index n = n_first; n < n_last; ++n) {
    for (Eigen::Index m = 0; m < O.rows(); ++m) {
      if (b.skip_diagonal && m == n) continue;
      visit(Eb(m) - Ek(n), std::norm(O(m, n)));
    }
  }
}

void check_block(const PairBlock& b) {
  if ((!b.elements && !b.weights) || !b.e_bra || !b.e_ket) throw InvalidInput("PairBlock: null member");
  const auto rows = b.weights ? b.weights->rows() : b.elements->rows();
  const auto cols = b.weights ? b.weights->cols() : b.elements->cols();
  if (rows != b.e_bra->size() || cols != b.e_ket->size()) throw InvalidInput("PairBlock: dimension mismatch");
}

Eigen::Index block_cols(const PairBlock& b) { return b.weights ? b.weights->cols() : b.elements->cols(); }

// Runs body(n_first, n_last, partial) over column ranges, one partial output
// vector per thread, and adds the partials into out.
template <class Body>
void reduce_columns(Eigen::Index cols, std::vector<double>& out, Exec exec, Body&& body) {
  if (exec == Exec::Serial) {
    body(0, cols, out);
    return;
  }
  const int threads = omp_get_max_threads();
  std::vector<std::vector<double>> partial(threads, std::vector<double>(out.size(), 0.0));
#pragma omp parallel num_threads(threads)
  {
    const int t = omp_get_thread_num();
    const Eigen::Index chunk = (cols + threads - 1) / threads;
    const Eigen::Index lo = std::min<Eigen::Index>(cols, t * chunk);
    const Eigen::Index hi = std::min<Eigen::Index>(cols, lo + chunk);
    body(lo, hi, partial[t]);
  }
  for (const auto& p : partial) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
  }
}

}  // namespace

Eigen::MatrixXcd assemble_block(const SiteOperator& op, const basis::SymBasis& bra,
                                const basis::SymBasis& ket, bool commuting, Exec exec) {
  if (op.sites() != bra.sites() || op.sites() != ket.sites()) {
    throw InvalidInput("assemble_block: site count mismatch");
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(bra.dim()),
                                                static_cast<Eigen::Index>(ket.dim()));
  const auto n = static_cast<std::int64_t>(ket.dim());
  if (exec == Exec::Serial) {
    for (std::int64_t j = 0; j < n; ++j) assemble_column(op, bra, ket, commuting, j, out);
  } else {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t j = 0; j < n; ++j) assemble_column(op, bra, ket, commuting, j, out);
  }
  return out;
}

void bin_pairs(const PairBlock& block, const std::vector<double>& edges, std::vector<double>& sums,
               std::vector<double>& counts, Exec exec) {
  check_block(block);
  const std::size_t nb = edges.size() < 2 ? 0 : edges.size() - 1;
  if (sums.size() != nb || counts.size() != nb) throw InvalidInput("bin_pairs: accumulator size");
  // sums and counts packed into one vector so a single reduction handles both
  std::vector<double> packed(2 * nb, 0.0);
  reduce_columns(block_cols(block), packed, exec,
                 [&](Eigen::Index lo, Eigen::Index hi, std::vector<double>& acc) {
                   for_pairs(block, lo, hi, [&](double w, double v) {
                     if (w < edges.front() || w >= edges.back()) return;
                     const auto it = std::upper_bound(edges.begin(), edges.end(), w);
                     const std::size_t bin = static_cast<std::size_t>(it - edges.begin()) - 1;
                     acc[bin] += v;
                     acc[nb + bin] += 1.0;
                   });
                 });
  for (std::size_t i = 0; i < nb; ++i) {
    sums[i] += packed[i];
    counts[i] += packed[nb + i];
  }
}

void broadened_sum(const PairBlock& block, const std::vector<double>& grid, double sigma,
                   std::vector<double>& out, Exec exec) {
  check_block(block);
  if (!(sigma > 0)) throw InvalidSpec("broadened_sum: sigma must be positive");
  if (out.size() != grid.size()) throw InvalidInput("broadened_sum: output size");
  const double cut = 9.0 * sigma;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  reduce_columns(block_cols(block), out, exec,
                 [&](Eigen::Index lo, Eigen::Index hi, std::vector<double>& acc) {
                   for_pairs(block, lo, hi, [&](double w, double v) {
                     auto it = std::lower_bound(grid.begin(), grid.end(), w - cut);
                     for (; it != grid.end() && *it <= w + cut; ++it) {
                       const double d = *it - w;
                       acc[static_cast<std::size_t>(it - grid.begin())] += v * norm * std::exp(-d * d * inv2s2);
                     }
                   });
                 });
}

void broadened_interval_mean(const PairBlock& block, const std::vector<double>& edges, double sigma,
                             std::vector<double>& out, Exec exec) {
  check_block(block);
  if (!(sigma > 0)) throw InvalidSpec("broadened_interval_mean: sigma must be positive");
  if (edges.size() < 2 || out.size() != edges.size() - 1) {
    throw InvalidInput("broadened_interval_mean: output size");
  }
  const double cut = 9.0 * sigma;
  const double inv = 1.0 / (std::sqrt(2.0) * sigma);
  reduce_columns(block_cols(block), out, exec,
                 [&](Eigen::Index lo, Eigen::Index hi, std::vector<double>& acc) {
                   for_pairs(block, lo, hi, [&](double w, double v) {
                     // intervals overlapping [w - cut, w + cut]
                     auto it = std::upper_bound(edges.begin(), edges.end(), w - cut);
                     std::size_t i = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
                     for (; i + 1 < edges.size() && edges[i] <= w + cut; ++i) {
                       const double mass =
                           0.5 * (std::erf((edges[i + 1] - w) * inv) - std::erf((edges[i] - w) * inv));
                       acc[i] += v * mass / (edges[i + 1] - edges[i]);
                     }
                   });
                 });
}

}  // namespace ethlab::kernels
