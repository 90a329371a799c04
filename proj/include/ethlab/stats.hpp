#pragma once

// Descriptive statistics, histograms and the small set of fits used by the
// analysis modules.

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ethlab::stats {

struct Histogram {
  std::vector<double> edges;
  std::vector<double> densities;  // sum(density * width) == 1
  std::size_t count = 0;

  std::size_t bins() const { return densities.size(); }
  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
};

struct FitResult {
  std::string model;  // gaussian | powerlaw | gumbel
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> errors;  // standard errors where available, else empty
  double ssr = 0.0;            // sum of squared residuals on the fitted data
  double rms = 0.0;            // per-bin RMS residual against a histogram
  std::size_t n = 0;

  double param(const std::string& name) const;
};

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // unbiased
double stddev(std::span<const double> x);
double skewness(std::span<const double> x);
double excess_kurtosis(std::span<const double> x);
double median(std::vector<double> x);

// Freedman-Diaconis bin count, never below min_bins.
std::size_t fd_bins(std::span<const double> x, std::size_t min_bins = 20);

Histogram histogram(std::span<const double> x, std::size_t bins);
Histogram histogram(std::span<const double> x, std::vector<double> edges);
// Freedman-Diaconis binning over the sample range.
Histogram histogram_auto(std::span<const double> x, std::size_t min_bins = 20);

// One-sample Kolmogorov-Smirnov distance to a continuous CDF.
double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Per-bin RMS of (density - pdf(center)).
double histogram_rms(const Histogram& h, const std::function<double(double)>& pdf);

// Levenberg-Marquardt fit of A * N(x; mu, sigma) to the histogram densities.
FitResult fit_gaussian_histogram(const Histogram& h);
// mu and sigma from the sample moments; rms filled against hist if given.
FitResult fit_gaussian_moments(std::span<const double> x, const Histogram* hist = nullptr);
// Maximum-likelihood Gumbel (maximum) fit; rms filled against hist if given.
FitResult fit_gumbel_mle(std::span<const double> x, const Histogram* hist = nullptr);

// y = prefactor * x^exponent by least squares in log-log space.
FitResult fit_power_law(std::span<const double> x, std::span<const double> y);

// Centred running mean over `window` neighbours (truncated at the ends).
std::vector<double> running_average(std::span<const double> x, std::size_t window);

double normal_pdf(double x, double mu, double sigma);

}  // namespace ethlab::stats
