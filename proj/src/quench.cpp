#include "ethlab/quench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ethlab/error.hpp"

namespace ethlab::quench {

std::string InitialState::label() const {
  switch (kind) {
    case Kind::Neel: return "neel";
    case Kind::Zeros: return "zeros";
    case Kind::Eigenstate: {
      std::ostringstream os;
      os.precision(17);
      os << "eig:" << lambda << "," << delta;
      return os.str();
    }
  }
  return "?";
}

InitialState parse_initial(const std::string& text) {
  if (text == "neel") return {InitialState::Kind::Neel};
  if (text == "zeros") return {InitialState::Kind::Zeros};
  if (text.rfind("eig:", 0) == 0) {
    const auto body = text.substr(4);
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw InvalidSpec("initial state eig:<lambda>,<delta> needs two numbers");
    try {
      std::size_t used = 0;
      InitialState s{InitialState::Kind::Eigenstate};
      s.lambda = std::stod(body.substr(0, comma), &used);
      if (used != comma) throw InvalidSpec("bad lambda");
      const auto rest = body.substr(comma + 1);
      s.delta = std::stod(rest, &used);
      if (used != rest.size()) throw InvalidSpec("bad delta");
      return s;
    } catch (const std::logic_error&) {
      throw InvalidSpec("cannot parse initial state '" + text + "'");
    }
  }
  throw InvalidSpec("unknown initial state '" + text + "' (neel, zeros, eig:<lambda>,<delta>)");
}

basis::Code neel_code(int L) {
  basis::Code c = 0;
  for (int j = 0; j < L; ++j) c = basis::with_trit(c, j, j % 2 == 0 ? 2 : 0);
  return c;
}

basis::Code zeros_code(int L) {
  basis::Code c = 0;
  for (int j = 0; j < L; ++j) c = basis::with_trit(c, j, 1);
  return c;
}

Eigen::VectorXcd prepare_initial(const InitialState& init, const basis::SymBasis& b, const ModelParams& target) {
  const int L = b.sites();
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b.dim()));
  if (init.kind == InitialState::Kind::Eigenstate) {
    ModelParams src = target;
    src.lambda = init.lambda;
    src.delta = init.delta;
    const auto s = diagonalize(build_hamiltonian(src, b));
    if (s.dim() == 0) throw InvalidSpec("empty sector " + b.spec().to_string());
    psi = s.vectors.col(static_cast<Eigen::Index>(s.dim() / 2));
    return psi;
  }
  const basis::Code code = init.kind == InitialState::Kind::Neel ? neel_code(L) : zeros_code(L);
  if (init.kind == InitialState::Kind::Neel && L % 2) throw InvalidSpec("the Neel state needs even L");
  if (basis::magnetization(code, L) != b.spec().M) {
    throw InvalidSpec(init.label() + " state has M = 0, sector " + b.spec().to_string());
  }
  const auto slot = b.lookup(code);
  if (slot.index < 0) throw InvalidSpec(init.label() + " state has no weight in sector " + b.spec().to_string());
  // <psi_i|code> = conj(amplitude of code in psi_i); normalization leaves a unit vector
  psi(slot.index) = 1.0;
  return psi;
}

QuenchSetup make_setup(const Spectrum& target, const Eigen::VectorXcd& psi0) {
  if (!target.has_vectors()) throw InvalidInput("quench: spectrum without eigenvectors");
  if (psi0.size() != target.vectors.rows()) throw InvalidInput("quench: initial state dimension mismatch");
  const double n0 = psi0.norm();
  if (!(n0 > 0)) throw InvalidInput("quench: zero initial state");
  QuenchSetup s;
  s.coeffs = target.vectors.adjoint() * (psi0 / n0);
  s.energies = target.energies;
  const Eigen::VectorXd p = s.coeffs.cwiseAbs2();
  s.norm_defect = std::abs(p.sum() - 1.0);
  if (s.norm_defect > 1e-10) throw NumericError("quench: overlaps lose norm (" + std::to_string(s.norm_defect) + ")");
  s.e_bar = p.dot(s.energies);
  const double e2 = p.dot(s.energies.cwiseAbs2());
  s.delta_e0 = std::sqrt(std::max(0.0, e2 - s.e_bar * s.e_bar));
  return s;
}

namespace {

Eigen::VectorXcd amplitudes(const QuenchSetup& s, double t) {
  Eigen::VectorXcd a(s.coeffs.size());
  for (Eigen::Index m = 0; m < a.size(); ++m) a(m) = s.coeffs(m) * std::polar(1.0, -s.energies(m) * t);
  return a;
}

void check_elements(const QuenchSetup& s, const Eigen::MatrixXcd& o) {
  if (o.rows() != s.coeffs.size() || o.cols() != s.coeffs.size()) {
    throw InvalidInput("quench: observable elements do not match the spectrum");
  }
}

}  // namespace

Evolution evolve_expectation(const QuenchSetup& s, const Eigen::MatrixXcd& elements,
                             const std::vector<double>& times) {
  check_elements(s, elements);
  Evolution ev;
  ev.times = times;
  ev.values.assign(times.size(), 0.0);
  std::vector<double> imag(times.size(), 0.0);
  const auto nt = static_cast<std::int64_t>(times.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nt; ++i) {
    const Eigen::VectorXcd a = amplitudes(s, times[i]);
    const cplx v = a.dot(elements * a);
    ev.values[i] = v.real();
    imag[i] = std::abs(v.imag());
  }
  for (double x : imag) ev.max_imag = std::max(ev.max_imag, x);
  return ev;
}

Conservation conservation_check(const QuenchSetup& s, const Spectrum& target, const Eigen::MatrixXcd& h_block,
                                const std::vector<double>& times) {
  if (h_block.rows() != target.vectors.rows()) throw InvalidInput("quench: Hamiltonian block dimension mismatch");
  Conservation c;
  for (double t : times) {
    const Eigen::VectorXcd psi = target.vectors * amplitudes(s, t);
    const double e = psi.dot(h_block * psi).real();
    c.max_energy_defect = std::max(c.max_energy_defect, std::abs(e - s.e_bar));
    c.max_norm_defect = std::max(c.max_norm_defect, std::abs(psi.squaredNorm() - 1.0));
  }
  return c;
}

double diagonal_ensemble(const QuenchSetup& s, const Eigen::VectorXd& diag) {
  if (diag.size() != s.coeffs.size()) throw InvalidInput("diagonal_ensemble: dimension mismatch");
  return s.coeffs.cwiseAbs2().dot(diag);
}

MicrocanonicalResult microcanonical_average(const Eigen::VectorXd& energies, const Eigen::VectorXd& diag,
                                            double e_bar, double window, std::size_t min_states) {
  if (energies.size() != diag.size() || energies.size() == 0) {
    throw InvalidInput("microcanonical_average: dimension mismatch");
  }
  if (static_cast<std::size_t>(energies.size()) < min_states) {
    throw InvalidInput("microcanonical_average: spectrum has fewer than " + std::to_string(min_states) + " states");
  }
  MicrocanonicalResult r;
  if (window <= 0) {
    const double mu = energies.mean();
    window = 0.4 * std::sqrt((energies.array() - mu).square().mean());
  }
  while (true) {
    double sum = 0.0;
    std::size_t n = 0;
    for (Eigen::Index m = 0; m < energies.size(); ++m) {
      if (std::abs(energies(m) - e_bar) < 0.5 * window) {
        sum += diag(m);
        ++n;
      }
    }
    if (n >= min_states) {
      r.value = sum / static_cast<double>(n);
      r.states = n;
      r.window = window;
      return r;
    }
    window *= 1.5;
    r.widened = true;
    r.warnings.push_back("microcanonical window widened to " + std::to_string(window));
  }
}

TemporalFluctuations temporal_fluctuations(const QuenchSetup& s, const Eigen::MatrixXcd& elements, double T,
                                           std::size_t samples) {
  check_elements(s, elements);
  if (!(T > 0) || samples < 2) throw InvalidSpec("temporal_fluctuations: need T > 0 and at least two samples");
  TemporalFluctuations f;
  f.samples = samples;
  const Eigen::VectorXd p = s.coeffs.cwiseAbs2();
  const auto n = s.coeffs.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      const double a2 = std::norm(elements(i, j));
      f.analytic += p(i) * p(j) * a2;
      f.bound = std::max(f.bound, a2);
      if (std::abs(s.energies(i) - s.energies(j)) < 1e-9) ++f.degenerate_pairs;
    }
  }
  std::vector<double> t(samples);
  for (std::size_t i = 0; i < samples; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(samples - 1);
  const auto ev = evolve_expectation(s, elements, t);
  double mean = 0.0;
  for (double v : ev.values) mean += v;
  mean /= static_cast<double>(samples);
  for (double v : ev.values) f.empirical += (v - mean) * (v - mean);
  f.empirical /= static_cast<double>(samples);
  return f;
}

LongTimeAverage long_time_average(const QuenchSetup& s, const Eigen::MatrixXcd& elements, double T,
                                  std::size_t samples) {
  check_elements(s, elements);
  if (!(T > 0) || samples < 1) throw InvalidSpec("long_time_average: need T > 0 and samples >= 1");
  LongTimeAverage r;
  r.samples = samples;
  r.step = T / static_cast<double>(samples);
  const double width = s.energies.maxCoeff() - s.energies.minCoeff();
  if (r.step * width >= std::numbers::pi) {
    throw InvalidSpec("long_time_average: time step too coarse for the spectral width");
  }
  std::vector<double> t(samples);
  for (std::size_t i = 0; i < samples; ++i) t[i] = (static_cast<double>(i) + 0.5) * r.step;
  const auto ev = evolve_expectation(s, elements, t);
  for (double v : ev.values) r.average += v;
  r.average /= static_cast<double>(samples);
  r.diagonal = diagonal_ensemble(s, elements.diagonal().real());
  const auto n = s.coeffs.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      const double w = std::abs(s.energies(i) - s.energies(j));
      const double amp = std::abs(s.coeffs(i) * s.coeffs(j) * elements(i, j));
      r.bound += amp * std::min(1.0, w > 0 ? std::numbers::pi / (w * T) : 1.0);
    }
  }
  return r;
}

}  // namespace ethlab::quench
