#include "ethlab/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/extreme_value.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <omp.h>

#include "ethlab/error.hpp"
#include "ethlab/stats.hpp"

namespace ethlab::rmt {

namespace {

constexpr double kPi = std::numbers::pi;

double ratio_beta(double r, double beta, double z) {
  return 2.0 / z * std::pow(r + r * r, beta) / std::pow(1.0 + r + r * r, 1.0 + 1.5 * beta);
}

double ratio_z(Distribution d) {
  return d == Distribution::RatioGOE ? 8.0 / 27.0 : 4.0 * kPi / (81.0 * std::sqrt(3.0));
}

double integrate(const std::function<double(double)>& f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
}

Eigen::MatrixXd gaussian_real(std::mt19937_64& rng, int D, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  Eigen::MatrixXd m(D, D);
  for (int j = 0; j < D; ++j)
    for (int i = 0; i < D; ++i) m(i, j) = n(rng);
  return m;
}

Eigen::MatrixXcd gaussian_complex(std::mt19937_64& rng, int D, double sd_part) {
  std::normal_distribution<double> n(0.0, sd_part);
  Eigen::MatrixXcd m(D, D);
  for (int j = 0; j < D; ++j)
    for (int i = 0; i < D; ++i) {
      const double re = n(rng);
      m(i, j) = {re, n(rng)};
    }
  return m;
}

template <class Mat>
Mat haar_from_qr(const Mat& z) {
  Eigen::HouseholderQR<Mat> qr(z);
  Mat q = qr.householderQ();
  const Mat& r = qr.matrixQR();
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const auto d = r(i, i);
    const double a = std::abs(d);
    if (a > 0) q.col(i) *= d / a;
  }
  return q;
}

}  // namespace

void EnsembleSpec::validate() const {
  if (dim < 2) throw InvalidSpec("ensemble dimension must be at least 2");
  if (!(sigma > 0)) throw InvalidSpec("ensemble scale must be positive");
}

std::string to_string(Ensemble e) {
  switch (e) {
    case Ensemble::GOE: return "GOE";
    case Ensemble::GUE: return "GUE";
    case Ensemble::HaarO: return "HaarO";
    case Ensemble::HaarU: return "HaarU";
  }
  return "?";
}

Ensemble parse_ensemble(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "goe") return Ensemble::GOE;
  if (s == "gue") return Ensemble::GUE;
  if (s == "haaro" || s == "o") return Ensemble::HaarO;
  if (s == "haaru" || s == "u") return Ensemble::HaarU;
  throw InvalidSpec("unknown ensemble '" + name + "'");
}

std::mt19937_64 draw_engine(const EnsembleSpec& spec, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(spec.kind), static_cast<std::uint32_t>(spec.dim),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd sample_goe_real(const EnsembleSpec& spec, std::uint64_t index) {
  spec.validate();
  auto rng = draw_engine(spec, index);
  const Eigen::MatrixXd m = gaussian_real(rng, spec.dim, spec.sigma);
  return 0.5 * (m + m.transpose());
}

Eigen::MatrixXcd sample_gaussian_ensemble(const EnsembleSpec& spec, std::uint64_t index) {
  spec.validate();
  if (spec.kind == Ensemble::GOE) return sample_goe_real(spec, index).cast<std::complex<double>>();
  if (spec.kind != Ensemble::GUE) throw InvalidSpec("sample_gaussian_ensemble needs GOE or GUE");
  auto rng = draw_engine(spec, index);
  const Eigen::MatrixXcd m = gaussian_complex(rng, spec.dim, spec.sigma / std::sqrt(2.0));
  return 0.5 * (m + m.adjoint());
}

Eigen::MatrixXd sample_haar_orthogonal(const EnsembleSpec& spec, std::uint64_t index) {
  spec.validate();
  auto rng = draw_engine(spec, index);
  return haar_from_qr<Eigen::MatrixXd>(gaussian_real(rng, spec.dim, 1.0));
}

Eigen::MatrixXcd sample_haar(const EnsembleSpec& spec, std::uint64_t index) {
  spec.validate();
  if (spec.kind == Ensemble::HaarO) return sample_haar_orthogonal(spec, index).cast<std::complex<double>>();
  if (spec.kind != Ensemble::HaarU) throw InvalidSpec("sample_haar needs HaarO or HaarU");
  auto rng = draw_engine(spec, index);
  return haar_from_qr<Eigen::MatrixXcd>(gaussian_complex(rng, spec.dim, std::sqrt(0.5)));
}

Distribution parse_distribution(const std::string& name) {
  static const std::vector<std::pair<std::string, Distribution>> names = {
      {"wigner_s_goe", Distribution::WignerGOE},     {"wigner_s_gue", Distribution::WignerGUE},
      {"poisson_s", Distribution::PoissonS},         {"ratio_goe", Distribution::RatioGOE},
      {"ratio_gue", Distribution::RatioGUE},         {"ratio_poisson", Distribution::RatioPoisson},
      {"porter_thomas_O", Distribution::PorterThomasO}, {"porter_thomas_U", Distribution::PorterThomasU},
      {"gumbel", Distribution::Gumbel},              {"semicircle", Distribution::Semicircle}};
  for (const auto& [n, d] : names)
    if (n == name) return d;
  throw InvalidSpec("unknown distribution '" + name + "'");
}

std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::WignerGOE: return "wigner_s_goe";
    case Distribution::WignerGUE: return "wigner_s_gue";
    case Distribution::PoissonS: return "poisson_s";
    case Distribution::RatioGOE: return "ratio_goe";
    case Distribution::RatioGUE: return "ratio_gue";
    case Distribution::RatioPoisson: return "ratio_poisson";
    case Distribution::PorterThomasO: return "porter_thomas_O";
    case Distribution::PorterThomasU: return "porter_thomas_U";
    case Distribution::Gumbel: return "gumbel";
    case Distribution::Semicircle: return "semicircle";
  }
  return "?";
}

std::pair<double, double> support(Distribution d) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (d) {
    case Distribution::RatioGOE:
    case Distribution::RatioGUE:
    case Distribution::RatioPoisson:
      return {0.0, 1.0};
    case Distribution::Gumbel:
      return {-inf, inf};
    case Distribution::Semicircle:
      return {-std::sqrt(2.0), std::sqrt(2.0)};
    default:
      return {0.0, inf};
  }
}

double pdf(Distribution d, double x, double mu, double sigma) {
  const auto [lo, hi] = support(d);
  if (x < lo || x > hi) return 0.0;
  switch (d) {
    case Distribution::WignerGOE: return kPi / 2.0 * x * std::exp(-kPi * x * x / 4.0);
    case Distribution::WignerGUE: return 32.0 / (kPi * kPi) * x * x * std::exp(-4.0 * x * x / kPi);
    case Distribution::PoissonS: return std::exp(-x);
    case Distribution::RatioGOE: return ratio_beta(x, 1.0, ratio_z(d));
    case Distribution::RatioGUE: return ratio_beta(x, 2.0, ratio_z(d));
    case Distribution::RatioPoisson: return 2.0 / ((1.0 + x) * (1.0 + x));
    case Distribution::PorterThomasO:
      return x > 0 ? std::exp(-x / 2.0) / std::sqrt(2.0 * kPi * x) : 0.0;
    case Distribution::PorterThomasU: return std::exp(-x);
    case Distribution::Gumbel:
      return boost::math::pdf(boost::math::extreme_value_distribution<double>(mu, sigma), x);
    case Distribution::Semicircle: return std::sqrt(std::max(0.0, 2.0 - x * x)) / kPi;
  }
  return 0.0;
}

double cdf(Distribution d, double x, double mu, double sigma) {
  const auto [lo, hi] = support(d);
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  switch (d) {
    case Distribution::WignerGOE: return 1.0 - std::exp(-kPi * x * x / 4.0);
    case Distribution::WignerGUE:
      return std::erf(2.0 * x / std::sqrt(kPi)) - 4.0 * x / kPi * std::exp(-4.0 * x * x / kPi);
    case Distribution::PoissonS:
    case Distribution::PorterThomasU:
      return 1.0 - std::exp(-x);
    case Distribution::RatioGOE:
    case Distribution::RatioGUE:
      return integrate([&](double r) { return pdf(d, r); }, 0.0, x);
    case Distribution::RatioPoisson: return 2.0 * x / (1.0 + x);
    case Distribution::PorterThomasO: return std::erf(std::sqrt(x / 2.0));
    case Distribution::Gumbel:
      return boost::math::cdf(boost::math::extreme_value_distribution<double>(mu, sigma), x);
    case Distribution::Semicircle:
      return 0.5 + x * std::sqrt(2.0 - x * x) / (2.0 * kPi) + std::asin(x / std::sqrt(2.0)) / kPi;
  }
  return 0.0;
}

double moment(Distribution d, int k, double mu, double sigma) {
  auto [lo, hi] = support(d);
  auto f = [&](double x) { return std::pow(x, k) * pdf(d, x, mu, sigma); };
  if (d == Distribution::PorterThomasO) {
    // integrable x^{-1/2} singularity at the origin: substitute x = u^2
    return integrate([&](double u) { return 2.0 * u * f(u * u); }, 0.0, std::numeric_limits<double>::infinity());
  }
  return integrate(f, lo, hi);
}

double semicircle_ks(const EnsembleSpec& spec, std::uint64_t index) {
  if (spec.kind != Ensemble::GOE && spec.kind != Ensemble::GUE) {
    throw InvalidSpec("semicircle check needs a Gaussian ensemble");
  }
  Eigen::VectorXd ev;
  if (spec.kind == Ensemble::GOE) {
    ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sample_goe_real(spec, index), Eigen::EigenvaluesOnly)
             .eigenvalues();
  } else {
    ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(sample_gaussian_ensemble(spec, index),
                                                         Eigen::EigenvaluesOnly)
             .eigenvalues();
  }
  // diagonal variance sigma^2/beta -> unit, then x = lambda / sqrt(beta D)
  const double beta = spec.kind == Ensemble::GOE ? 1.0 : 2.0;
  const double scale = spec.sigma / std::sqrt(beta) * std::sqrt(beta * spec.dim);
  std::vector<double> x(ev.data(), ev.data() + ev.size());
  for (double& v : x) v /= scale;
  return stats::ks_distance(x, [](double v) { return cdf(Distribution::Semicircle, v); });
}

PorterThomasResult porter_thomas_test(const EnsembleSpec& spec, std::size_t n_samples) {
  spec.validate();
  std::vector<double> x;
  x.reserve(n_samples);
  const double D = spec.dim;
  for (std::uint64_t draw = 0; x.size() < n_samples; ++draw) {
    Eigen::MatrixXcd v;
    switch (spec.kind) {
      case Ensemble::GOE:
        v = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sample_goe_real(spec, draw))
                .eigenvectors()
                .cast<std::complex<double>>();
        break;
      case Ensemble::GUE:
        v = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(sample_gaussian_ensemble(spec, draw)).eigenvectors();
        break;
      default:
        v = sample_haar(spec, draw);
    }
    for (Eigen::Index c = 0; c < v.cols() && x.size() < n_samples; ++c)
      for (Eigen::Index r = 0; r < v.rows() && x.size() < n_samples; ++r) x.push_back(D * std::norm(v(r, c)));
  }
  PorterThomasResult res;
  res.samples = x.size();
  res.mean_x = stats::mean(x);
  res.var_x = stats::variance(x);
  const Distribution ref = spec.real() ? Distribution::PorterThomasO : Distribution::PorterThomasU;
  res.ks = stats::ks_distance(std::move(x), [&](double v) { return cdf(ref, v); });
  return res;
}

McReport diag_offdiag_variance_ratio(const EnsembleSpec& spec, std::size_t draws) {
  if (spec.kind != Ensemble::GOE && spec.kind != Ensemble::GUE) {
    throw InvalidSpec("variance ratio needs a Gaussian ensemble");
  }
  double sd = 0.0, so = 0.0;
  std::size_t nd = 0, no = 0;
  for (std::uint64_t k = 0; k < draws; ++k) {
    const Eigen::MatrixXcd h = sample_gaussian_ensemble(spec, k);
    for (int j = 0; j < spec.dim; ++j) {
      sd += std::norm(h(j, j));
      ++nd;
      for (int i = j + 1; i < spec.dim; ++i) {
        // real-part variance per entry so GOE and GUE compare like for like
        so += spec.kind == Ensemble::GOE ? std::norm(h(i, j)) : std::norm(h(i, j)) / 2.0;
        ++no;
      }
    }
  }
  const double vd = sd / nd;
  const double vo = so / no;
  McReport r;
  r.statistic = "diag/offdiag variance ratio";
  r.analytic = 2.0;
  r.empirical = vd / vo;
  // Gaussian sample variances have relative error sqrt(2/n)
  r.stderr_ = r.empirical * std::sqrt(2.0 / nd + 2.0 / no);
  r.z = (r.empirical - r.analytic) / r.stderr_;
  return r;
}

// ---- Weingarten ----

double weingarten_unitary_identity(int D) { return 1.0 / (double(D) * D - 1.0); }
double weingarten_unitary_swap(int D) { return -1.0 / (double(D) * (double(D) * D - 1.0)); }
double weingarten_orthogonal_11(int D) { return (D + 1.0) / (double(D) * (D - 1.0) * (D + 2.0)); }
double weingarten_orthogonal_2(int D) { return -1.0 / (double(D) * (D - 1.0) * (D + 2.0)); }

double four_point_closed_form(Ensemble kind, int D, const FourIndex& idx) {
  const auto [j, k, jp, kp, m, n, mp, np] = idx;
  auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  if (kind == Ensemble::HaarU) {
    return 1.0 / (double(D) * D - 1.0) *
               (d(j, jp) * d(k, kp) * d(m, mp) * d(n, np) + d(j, kp) * d(k, jp) * d(m, np) * d(n, mp)) -
           1.0 / (double(D) * (double(D) * D - 1.0)) *
               (d(j, jp) * d(k, kp) * d(m, np) * d(n, mp) + d(j, kp) * d(k, jp) * d(m, mp) * d(n, np));
  }
  if (kind != Ensemble::HaarO) throw InvalidSpec("four-point moments need HaarO or HaarU");
  const double Dd = D;
  return (Dd + 1.0) / (Dd * (Dd - 1.0) * (Dd + 2.0)) *
         (d(j, jp) * d(k, kp) * (d(m, mp) * d(n, np) - (d(m, n) * d(mp, np) + d(m, np) * d(n, mp)) / (Dd + 1.0)) +
          d(j, k) * d(jp, kp) * (d(m, n) * d(mp, np) - (d(m, mp) * d(n, np) + d(m, np) * d(n, mp)) / (Dd + 1.0)) +
          d(j, kp) * d(k, jp) * (d(m, np) * d(n, mp) - (d(m, mp) * d(n, np) + d(m, n) * d(mp, np)) / (Dd + 1.0)));
}

namespace {

// Pairings of positions {0,1,2,3} as partner arrays.
constexpr std::array<std::array<int, 4>, 3> kPairings = {{{1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}}};

// Coset type of two pairings: half-lengths of the cycles of their union graph.
std::vector<int> coset_type(const std::array<int, 4>& p, const std::array<int, 4>& q) {
  std::array<bool, 4> seen{};
  std::vector<int> type;
  for (int s = 0; s < 4; ++s) {
    if (seen[s]) continue;
    int len = 0, v = s;
    bool use_p = true;
    do {
      seen[v] = true;
      v = use_p ? p[v] : q[v];
      seen[v] = true;
      use_p = !use_p;
      ++len;
    } while (!(v == s && use_p));
    type.push_back(len / 2);
  }
  std::sort(type.rbegin(), type.rend());
  return type;
}

bool paired(const std::array<int, 4>& p, const std::array<int, 4>& labels) {
  for (int a = 0; a < 4; ++a)
    if (labels[a] != labels[p[a]]) return false;
  return true;
}

}  // namespace

double four_point_pairings(Ensemble kind, int D, const FourIndex& idx) {
  const std::array<int, 4> rows{idx[0], idx[1], idx[2], idx[3]};
  const std::array<int, 4> cols{idx[4], idx[5], idx[6], idx[7]};
  double sum = 0.0;
  if (kind == Ensemble::HaarU) {
    // sigma, tau in S_2 acting between unconjugated (0,1) and conjugated (2,3) slots
    for (int s = 0; s < 2; ++s) {
      for (int t = 0; t < 2; ++t) {
        const int s0 = 2 + s, s1 = 3 - s;
        const int t0 = 2 + t, t1 = 3 - t;
        if (rows[0] != rows[s0] || rows[1] != rows[s1]) continue;
        if (cols[0] != cols[t0] || cols[1] != cols[t1]) continue;
        sum += s == t ? weingarten_unitary_identity(D) : weingarten_unitary_swap(D);
      }
    }
    return sum;
  }
  if (kind != Ensemble::HaarO) throw InvalidSpec("four-point moments need HaarO or HaarU");
  for (const auto& p : kPairings) {
    if (!paired(p, rows)) continue;
    for (const auto& q : kPairings) {
      if (!paired(q, cols)) continue;
      const auto type = coset_type(p, q);
      sum += type.size() == 2 ? weingarten_orthogonal_11(D) : weingarten_orthogonal_2(D);
    }
  }
  return sum;
}

std::vector<FourIndex> four_point_patterns(int D) {
  // restricted growth strings of length 4 = set partitions
  std::vector<std::array<int, 4>> rgs;
  for (int a = 0; a < 1; ++a)
    for (int b = 0; b <= a + 1; ++b)
      for (int c = 0; c <= std::max(a, b) + 1; ++c)
        for (int d = 0; d <= std::max({a, b, c}) + 1; ++d) rgs.push_back({a, b, c, d});
  std::vector<FourIndex> out;
  for (const auto& r : rgs) {
    if (*std::max_element(r.begin(), r.end()) >= D) continue;
    for (const auto& c : rgs) {
      if (*std::max_element(c.begin(), c.end()) >= D) continue;
      out.push_back({r[0], r[1], r[2], r[3], c[0], c[1], c[2], c[3]});
    }
  }
  return out;
}

std::vector<WeingartenCheck> weingarten_4point_check(Ensemble kind, int D, std::size_t n_samples,
                                                     const std::vector<FourIndex>& indices, std::uint64_t seed) {
  if (kind != Ensemble::HaarO && kind != Ensemble::HaarU) throw InvalidSpec("weingarten check needs a Haar ensemble");
  if (D < 3) throw InvalidSpec("weingarten check needs D >= 3");
  for (const auto& idx : indices)
    for (int v : idx)
      if (v < 0 || v >= D) throw InvalidSpec("weingarten check: index outside [0, D)");
  const EnsembleSpec spec{kind, D, seed, 1.0};
  const std::size_t P = indices.size();
  const int threads = omp_get_max_threads();
  std::vector<std::vector<double>> sum(threads, std::vector<double>(P, 0.0));
  std::vector<std::vector<double>> sum2(threads, std::vector<double>(P, 0.0));
  const auto n = static_cast<std::int64_t>(n_samples);
#pragma omp parallel num_threads(threads)
  {
    const int t = omp_get_thread_num();
    auto& s1 = sum[t];
    auto& s2 = sum2[t];
#pragma omp for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
      if (kind == Ensemble::HaarO) {
        const Eigen::MatrixXd u = sample_haar_orthogonal(spec, static_cast<std::uint64_t>(k));
        for (std::size_t p = 0; p < P; ++p) {
          const auto& x = indices[p];
          const double v = u(x[0], x[4]) * u(x[1], x[5]) * u(x[2], x[6]) * u(x[3], x[7]);
          s1[p] += v;
          s2[p] += v * v;
        }
      } else {
        const Eigen::MatrixXcd u = sample_haar(spec, static_cast<std::uint64_t>(k));
        for (std::size_t p = 0; p < P; ++p) {
          const auto& x = indices[p];
          const double v =
              (u(x[0], x[4]) * u(x[1], x[5]) * std::conj(u(x[2], x[6])) * std::conj(u(x[3], x[7]))).real();
          s1[p] += v;
          s2[p] += v * v;
        }
      }
    }
  }
  std::vector<WeingartenCheck> out(P);
  const double nn = static_cast<double>(n_samples);
  for (std::size_t p = 0; p < P; ++p) {
    double a = 0.0, b = 0.0;
    for (int t = 0; t < threads; ++t) {
      a += sum[t][p];
      b += sum2[t][p];
    }
    auto& r = out[p];
    r.index = indices[p];
    r.closed_form = four_point_closed_form(kind, D, indices[p]);
    r.pairings = four_point_pairings(kind, D, indices[p]);
    r.empirical = a / nn;
    const double var = std::max(0.0, (b / nn - r.empirical * r.empirical) * nn / (nn - 1.0));
    r.stderr_ = std::sqrt(var / nn);
    const double diff = r.empirical - r.closed_form;
    r.z = r.stderr_ > 0 ? diff / r.stderr_ : (std::abs(diff) < 1e-14 ? 0.0 : std::numeric_limits<double>::infinity());
  }
  return out;
}

MomentReport rmt_matrix_element_moments(Ensemble kind, const std::vector<double>& o, std::size_t n_samples,
                                        std::uint64_t seed) {
  if (kind != Ensemble::HaarO && kind != Ensemble::HaarU) throw InvalidSpec("moments need a Haar ensemble");
  const int D = static_cast<int>(o.size());
  if (D < 2) throw InvalidInput("need at least two eigenvalues");
  if (n_samples < 2) throw InvalidInput("need at least two samples");
  const EnsembleSpec spec{kind, D, seed, 1.0};
  const Eigen::Map<const Eigen::VectorXd> ov(o.data(), D);
  const double o1 = ov.mean();
  const double o2 = ov.squaredNorm() / D;
  const double spread = o2 - o1 * o1;

  std::vector<double> md(n_samples), vd(n_samples), vo(n_samples);
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(n_samples); ++k) {
    const Eigen::MatrixXcd u = sample_haar(spec, static_cast<std::uint64_t>(k));
    const Eigen::MatrixXcd r = u.adjoint() * ov.cast<std::complex<double>>().asDiagonal() * u;
    double a = 0.0, b = 0.0, c = 0.0;
    for (int m = 0; m < D; ++m) {
      const double x = r(m, m).real();
      a += x;
      b += (x - o1) * (x - o1);
      for (int n = 0; n < D; ++n)
        if (n != m) c += std::norm(r(m, n));
    }
    md[k] = a / D;
    vd[k] = b / D;
    vo[k] = c / (double(D) * (D - 1));
  }
  auto mean_err = [&](const std::vector<double>& v, double& mean, double& err) {
    mean = stats::mean(v);
    err = stats::stddev(v) / std::sqrt(static_cast<double>(v.size()));
  };
  MomentReport r;
  mean_err(md, r.mean_diag, r.mean_diag_err);
  mean_err(vd, r.var_diag, r.var_diag_err);
  mean_err(vo, r.var_offdiag, r.var_offdiag_err);
  const double Dd = D;
  r.pred_mean_diag = o1;
  if (kind == Ensemble::HaarO) {
    r.pred_var_diag = 2.0 / (Dd + 2.0) * spread;
    r.pred_var_offdiag = Dd / ((Dd - 1.0) * (Dd + 2.0)) * spread;
    r.asym_var_diag = 2.0 * spread / Dd;
  } else {
    r.pred_var_diag = spread / (Dd + 1.0);
    r.pred_var_offdiag = Dd / (Dd * Dd - 1.0) * spread;
    r.asym_var_diag = spread / Dd;
  }
  r.asym_var_offdiag = spread / Dd;
  r.ratio = r.var_diag / r.var_offdiag;
  r.ratio_err = r.ratio * std::hypot(r.var_diag_err / r.var_diag, r.var_offdiag_err / r.var_offdiag);
  return r;
}

}  // namespace ethlab::rmt
