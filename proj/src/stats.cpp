#include "ethlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/extreme_value.hpp>
#include <boost/math/tools/roots.hpp>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "ethlab/error.hpp"

namespace ethlab::stats {

double FitResult::param(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return params[i];
  throw InvalidInput("fit has no parameter '" + name + "'");
}

double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw InvalidInput("variance needs at least two samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

namespace {

double central_moment(std::span<const double> x, int k, double m) {
  double s = 0.0;
  for (double v : x) s += std::pow(v - m, k);
  return s / static_cast<double>(x.size());
}

}  // namespace

double skewness(std::span<const double> x) {
  if (x.size() < 3) throw InvalidInput("skewness needs at least three samples");
  const double m = mean(x);
  const double m2 = central_moment(x, 2, m);
  return central_moment(x, 3, m) / std::pow(m2, 1.5);
}

double excess_kurtosis(std::span<const double> x) {
  if (x.size() < 4) throw InvalidInput("kurtosis needs at least four samples");
  const double m = mean(x);
  const double m2 = central_moment(x, 2, m);
  return central_moment(x, 4, m) / (m2 * m2) - 3.0;
}

double median(std::vector<double> x) {
  if (x.empty()) throw InvalidInput("median of an empty sample");
  const std::size_t h = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + h, x.end());
  if (x.size() % 2) return x[h];
  const double hi = x[h];
  return 0.5 * (hi + *std::max_element(x.begin(), x.begin() + h));
}

std::size_t fd_bins(std::span<const double> x, std::size_t min_bins) {
  if (x.size() < 2) return min_bins;
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < s.size() ? s[i] * (1 - f) + s[i + 1] * f : s.back();
  };
  const double iqr = q(0.75) - q(0.25);
  const double range = s.back() - s.front();
  if (iqr <= 0 || range <= 0) return min_bins;
  const double h = 2.0 * iqr / std::cbrt(static_cast<double>(s.size()));
  const auto n = static_cast<std::size_t>(std::ceil(range / h));
  return std::clamp<std::size_t>(n, min_bins, 10000);
}

Histogram histogram(std::span<const double> x, std::vector<double> edges) {
  if (edges.size() < 2) throw InvalidInput("histogram needs at least one bin");
  if (!std::is_sorted(edges.begin(), edges.end())) throw InvalidInput("histogram edges must ascend");
  Histogram h;
  h.edges = std::move(edges);
  std::vector<double> counts(h.edges.size() - 1, 0.0);
  std::size_t inside = 0;
  for (double v : x) {
    if (v < h.edges.front() || v > h.edges.back()) continue;
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    std::size_t bin = static_cast<std::size_t>(it - h.edges.begin());
    bin = bin == 0 ? 0 : std::min(bin - 1, counts.size() - 1);
    counts[bin] += 1.0;
    ++inside;
  }
  if (inside == 0) throw InvalidInput("histogram: no samples inside the bin range");
  h.count = inside;
  h.densities.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    h.densities[i] = counts[i] / (static_cast<double>(inside) * h.width(i));
  }
  return h;
}

Histogram histogram(std::span<const double> x, std::size_t bins) {
  if (x.empty()) throw InvalidInput("histogram of an empty sample");
  if (bins == 0) throw InvalidInput("histogram needs at least one bin");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi > *lo)) throw InvalidInput("histogram: sample has zero range");
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = *lo + (*hi - *lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = *hi;
  return histogram(x, std::move(edges));
}

Histogram histogram_auto(std::span<const double> x, std::size_t min_bins) {
  return histogram(x, fd_bins(x, min_bins));
}

double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw InvalidInput("ks_distance of an empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidInput("ks_two_sample of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

double histogram_rms(const Histogram& h, const std::function<double(double)>& pdf) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double r = h.densities[i] - pdf(h.center(i));
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(h.bins()));
}

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

namespace {

struct GaussFunctor : Eigen::DenseFunctor<double> {
  const Histogram& h;
  GaussFunctor(const Histogram& hist) : Eigen::DenseFunctor<double>(3, static_cast<int>(hist.bins())), h(hist) {}
  int operator()(const InputType& p, ValueType& f) const {
    for (std::size_t i = 0; i < h.bins(); ++i) {
      f(static_cast<Eigen::Index>(i)) = p(0) * normal_pdf(h.center(i), p(1), std::abs(p(2))) - h.densities[i];
    }
    return 0;
  }
  int df(const InputType& p, JacobianType& j) const {
    const double s = std::abs(p(2));
    for (std::size_t i = 0; i < h.bins(); ++i) {
      const double x = h.center(i);
      const double g = normal_pdf(x, p(1), s);
      const double z = (x - p(1)) / s;
      const auto r = static_cast<Eigen::Index>(i);
      j(r, 0) = g;
      j(r, 1) = p(0) * g * z / s;
      j(r, 2) = p(0) * g * (z * z - 1.0) / s * (p(2) < 0 ? -1.0 : 1.0);
    }
    return 0;
  }
};

}  // namespace

FitResult fit_gaussian_histogram(const Histogram& h) {
  if (h.bins() < 3) throw InvalidInput("gaussian fit needs at least three bins");
  std::size_t populated = 0;
  double m = 0.0, m2 = 0.0, total = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double w = h.densities[i] * h.width(i);
    if (w > 0) ++populated;
    m += w * h.center(i);
    m2 += w * h.center(i) * h.center(i);
    total += w;
  }
  if (populated < 2) throw InvalidInput("gaussian fit needs at least two populated bins");
  m /= total;
  const double s0 = std::sqrt(std::max(m2 / total - m * m, 1e-300));
  GaussFunctor f(h);
  Eigen::LevenbergMarquardt<GaussFunctor> lm(f);
  Eigen::VectorXd p(3);
  p << 1.0, m, s0;
  lm.minimize(p);
  FitResult r;
  r.model = "gaussian";
  r.names = {"amplitude", "mu", "sigma"};
  r.params = {p(0), p(1), std::abs(p(2))};
  Eigen::VectorXd res(static_cast<Eigen::Index>(h.bins()));
  f(p, res);
  r.ssr = res.squaredNorm();
  r.rms = std::sqrt(r.ssr / static_cast<double>(h.bins()));
  r.n = h.count;
  for (double v : r.params)
    if (!std::isfinite(v)) throw NumericError("gaussian fit diverged");
  return r;
}

FitResult fit_gaussian_moments(std::span<const double> x, const Histogram* hist) {
  FitResult r;
  r.model = "gaussian";
  r.names = {"mu", "sigma"};
  const double mu = mean(x);
  const double sigma = stddev(x);
  const double n = static_cast<double>(x.size());
  r.params = {mu, sigma};
  r.errors = {sigma / std::sqrt(n), sigma / std::sqrt(2.0 * (n - 1.0))};
  r.n = x.size();
  if (hist) {
    r.rms = histogram_rms(*hist, [&](double v) { return normal_pdf(v, mu, sigma); });
    r.ssr = r.rms * r.rms * static_cast<double>(hist->bins());
  }
  return r;
}

FitResult fit_gumbel_mle(std::span<const double> x, const Histogram* hist) {
  if (x.size() < 3) throw InvalidInput("gumbel fit needs at least three samples");
  const double xm = mean(x);
  const double sd = stddev(x);
  if (!(sd > 0)) throw InvalidInput("gumbel fit: sample has zero spread");
  // Profile likelihood equation for the scale b:
  //   b = mean(x) - sum x e^{-x/b} / sum e^{-x/b}
  // evaluated with shifted exponents for stability.
  const double xmin = *std::min_element(x.begin(), x.end());
  auto g = [&](double b) {
    double num = 0.0, den = 0.0;
    for (double v : x) {
      const double w = std::exp(-(v - xmin) / b);
      num += v * w;
      den += w;
    }
    return xm - num / den - b;
  };
  double lo = 1e-3 * sd, hi = 10.0 * sd;
  while (g(lo) < 0 && lo > 1e-12 * sd) lo *= 0.1;
  while (g(hi) > 0 && hi < 1e6 * sd) hi *= 10.0;
  boost::uintmax_t iters = 200;
  const auto root = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50),
                                                      iters);
  const double b = 0.5 * (root.first + root.second);
  double den = 0.0;
  for (double v : x) den += std::exp(-(v - xmin) / b);
  const double mu = xmin - b * std::log(den / static_cast<double>(x.size()));
  FitResult r;
  r.model = "gumbel";
  r.names = {"mu", "sigma"};
  r.params = {mu, b};
  r.n = x.size();
  if (hist) {
    boost::math::extreme_value_distribution<double> dist(mu, b);
    r.rms = histogram_rms(*hist, [&](double v) { return boost::math::pdf(dist, v); });
    r.ssr = r.rms * r.rms * static_cast<double>(hist->bins());
  }
  return r;
}

FitResult fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("power-law fit needs matching samples (>= 2)");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw InvalidInput("power-law fit needs positive data");
    A(i, 0) = 1.0;
    A(i, 1) = std::log(x[i]);
    b(i) = std::log(y[i]);
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd res = A * c - b;
  FitResult r;
  r.model = "powerlaw";
  r.names = {"prefactor", "exponent"};
  r.params = {std::exp(c(0)), c(1)};
  r.ssr = res.squaredNorm();
  r.n = x.size();
  if (n > 2) {
    const double s2 = r.ssr / static_cast<double>(n - 2);
    const Eigen::Matrix2d cov = s2 * (A.transpose() * A).inverse();
    r.errors = {std::sqrt(cov(0, 0)) * r.params[0], std::sqrt(cov(1, 1))};
  }
  return r;
}

std::vector<double> running_average(std::span<const double> x, std::size_t window) {
  if (window == 0) throw InvalidInput("running_average: window must be positive");
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, lo + window);
    const std::size_t lo2 = hi >= window ? hi - window : 0;
    out[i] = (prefix[hi] - prefix[lo2]) / static_cast<double>(hi - lo2);
  }
  return out;
}

}  // namespace ethlab::stats
