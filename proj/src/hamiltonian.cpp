#include "ethlab/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ethlab/error.hpp"
#include "ethlab/kernels.hpp"

namespace ethlab {

namespace {

constexpr double kHermTol = 1e-12;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

bool has_symmetry(const basis::SectorSpec& s) { return s.eta || s.parity || s.spin_flip; }

}  // namespace

double ModelParams::nu() const { return 2.0 - std::sqrt(2.0 * (1.0 + delta)); }

void ModelParams::validate() const {
  if (!std::isfinite(delta) || !std::isfinite(lambda) || !std::isfinite(hz1)) {
    throw InvalidSpec("model parameters must be finite");
  }
  if (1.0 + delta < 0.0) throw InvalidSpec("need 1 + delta >= 0 for a real nu");
}

std::uint64_t ModelParams::digest() const {
  std::uint64_t h = 14695981039346656037ULL;
  const double vals[3] = {delta, lambda, bc == basis::Boundary::Open ? hz1 : 0.0};
  h = fnv1a(h, vals, sizeof vals);
  const std::int32_t b = bc == basis::Boundary::Open ? 1 : 0;
  return fnv1a(h, &b, sizeof b);
}

std::string ModelParams::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "delta=" << delta << " lambda=" << lambda << (bc == basis::Boundary::Open ? " OBC" : " PBC");
  if (bc == basis::Boundary::Open) os << " hz1=" << hz1;
  return os.str();
}

namespace spin1 {

Matrix3c sz() {
  Matrix3c m = Matrix3c::Zero();
  m(0, 0) = -1.0;
  m(2, 2) = 1.0;
  return m;
}

Matrix3c splus() {
  Matrix3c m = Matrix3c::Zero();
  m(1, 0) = std::sqrt(2.0);
  m(2, 1) = std::sqrt(2.0);
  return m;
}

Matrix3c sminus() { return splus().adjoint(); }

Matrix3c sx() { return 0.5 * (splus() + sminus()); }

Matrix3c sy() { return cplx(0.0, -0.5) * (splus() - sminus()); }

Matrix3c identity() { return Matrix3c::Identity(); }

Matrix9c kron(const Matrix3c& a, const Matrix3c& b) {
  Matrix9c k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  return k;
}

Matrix9c bond_matrix(const ModelParams& p) {
  const Matrix9c xx_yy = kron(sx(), sx()) + kron(sy(), sy());
  const Matrix9c zz = kron(sz(), sz());
  const Matrix9c dot = xx_yy + zz;
  const Matrix3c sz2 = sz() * sz();
  const Matrix9c biquad = dot * dot;
  const Matrix9c mu_term = 2.0 * kron(sz2, identity()) - zz * zz;
  const Matrix9c nu_mix = xx_yy * zz;
  const Matrix9c nu_term = nu_mix + nu_mix.adjoint();
  return -(xx_yy + p.delta * zz) + p.lambda * (biquad - p.mu() * mu_term - p.nu() * nu_term);
}

}  // namespace spin1

void SiteOperator::add_site(int site, const Matrix3c& m, double coeff) {
  Term t{site, -1, basis::pow3(site), 0, std::vector<std::vector<Element>>(3)};
  for (int in = 0; in < 3; ++in)
    for (int out = 0; out < 3; ++out)
      if (std::abs(m(out, in)) > 0) t.cols[in].push_back({out, coeff * m(out, in)});
  terms_.push_back(std::move(t));
}

void SiteOperator::add_bond(int a, int b, const Matrix9c& m, double coeff) {
  if (a == b) throw InvalidSpec("add_bond: sites must differ");
  Term t{a, b, basis::pow3(a), basis::pow3(b), std::vector<std::vector<Element>>(9)};
  for (int in = 0; in < 9; ++in)
    for (int out = 0; out < 9; ++out)
      if (std::abs(m(out, in)) > 1e-15) t.cols[in].push_back({out, coeff * m(out, in)});
  terms_.push_back(std::move(t));
}

std::string ObservableSpec::label() const {
  switch (kind) {
    case ObservableKind::ZN: return "Z_N";
    case ObservableKind::ZNN: return "Z_NN";
    case ObservableKind::JN: return "J_N";
    case ObservableKind::ZNNLocal: return "Z_NN_local(" + std::to_string(site) + ")";
    case ObservableKind::ZNNAvgObc: return "Z_NN_avg_obc";
  }
  return "?";
}

ObservableSpec parse_observable(const std::string& name) {
  if (name == "zn" || name == "Z_N") return {ObservableKind::ZN, 0};
  if (name == "znn" || name == "Z_NN") return {ObservableKind::ZNN, 0};
  if (name == "jn" || name == "J_N") return {ObservableKind::JN, 0};
  if (name == "znn-avg" || name == "Z_NN_avg_obc") return {ObservableKind::ZNNAvgObc, 0};
  const std::string prefix = "znn-local:";
  if (name.rfind(prefix, 0) == 0) return {ObservableKind::ZNNLocal, std::stoi(name.substr(prefix.size()))};
  throw InvalidSpec("unknown observable '" + name + "'");
}

SiteOperator hamiltonian_operator(const ModelParams& p, int L) {
  p.validate();
  SiteOperator op(L);
  const Matrix9c h = spin1::bond_matrix(p);
  const bool open = p.bc == basis::Boundary::Open;
  const int bonds = open ? L - 1 : L;
  if (L < 2) throw InvalidSpec("chains need L >= 2");
  for (int j = 0; j < bonds; ++j) op.add_bond(j, (j + 1) % L, h);
  if (open && p.hz1 != 0.0) op.add_site(0, spin1::sz(), p.hz1);
  return op;
}

SiteOperator observable_operator(const ObservableSpec& o, int L, basis::Boundary bc) {
  const bool open = bc == basis::Boundary::Open;
  SiteOperator op(L);
  const Matrix9c zz = spin1::kron(spin1::sz(), spin1::sz());
  switch (o.kind) {
    case ObservableKind::ZN:
    case ObservableKind::ZNN:
    case ObservableKind::JN: {
      if (open) throw InvalidSpec(o.label() + " is defined for periodic chains");
      if (L < 3) throw InvalidSpec(o.label() + " needs L >= 3");
      const int range = o.kind == ObservableKind::ZNN ? 2 : 1;
      Matrix9c m = zz;
      if (o.kind == ObservableKind::JN) {
        m = cplx(0.0, 1.0) * (spin1::kron(spin1::splus(), spin1::sminus()) -
                              spin1::kron(spin1::sminus(), spin1::splus()));
      }
      for (int j = 0; j < L; ++j) op.add_bond(j, (j + range) % L, m, 1.0 / L);
      break;
    }
    case ObservableKind::ZNNLocal: {
      const int hi = open ? L - 3 : L - 1;
      if (L < 3 || o.site < 0 || o.site > hi) {
        throw InvalidSpec(o.label() + ": site out of range for L=" + std::to_string(L));
      }
      op.add_bond(o.site, (o.site + 2) % L, zz);
      break;
    }
    case ObservableKind::ZNNAvgObc: {
      if (!open) throw InvalidSpec("Z_NN_avg_obc is defined for open chains");
      if (L < 3) throw InvalidSpec("Z_NN_avg_obc needs L >= 3");
      for (int j = 0; j + 2 < L; ++j) op.add_bond(j, j + 2, zz, 1.0 / (L - 2));
      break;
    }
  }
  return op;
}

bool observable_commutes(const ObservableSpec& o, const basis::SectorSpec& spec) {
  switch (o.kind) {
    case ObservableKind::ZN:
    case ObservableKind::ZNN:
      return true;
    case ObservableKind::JN:
      // odd under both reflection and spin inversion
      return !spec.parity && !spec.spin_flip;
    case ObservableKind::ZNNLocal:
    case ObservableKind::ZNNAvgObc:
      return !has_symmetry(spec);
  }
  return false;
}

double hermiticity_defect(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

OperatorBlock build_hamiltonian(const ModelParams& p, const basis::SymBasis& b) {
  if ((p.bc == basis::Boundary::Open) != (b.spec().bc == basis::Boundary::Open)) {
    throw InvalidSpec("boundary conditions of model and sector differ");
  }
  OperatorBlock blk;
  blk.spec = blk.ket_spec = b.spec();
  blk.label = "H";
  blk.matrix = kernels::assemble_block(hamiltonian_operator(p, b.sites()), b, b, true,
                                       kernels::Exec::Parallel);
  const double defect = hermiticity_defect(blk.matrix);
  if (defect > kHermTol) {
    throw ConsistencyError("Hamiltonian block not Hermitian (defect " + std::to_string(defect) + ") in " +
                           b.spec().to_string());
  }
  return blk;
}

OperatorBlock build_observable(const ObservableSpec& o, const basis::SymBasis& b) {
  OperatorBlock blk;
  blk.spec = blk.ket_spec = b.spec();
  blk.label = o.label();
  blk.intensive_prefactor = o.kind != ObservableKind::ZNNLocal;
  const bool commutes = observable_commutes(o, b.spec());
  blk.truncated = !commutes;
  blk.matrix = kernels::assemble_block(observable_operator(o, b.sites(), b.spec().bc), b, b, commutes,
                                       kernels::Exec::Parallel);
  const double defect = hermiticity_defect(blk.matrix);
  if (defect > kHermTol) {
    throw ConsistencyError(o.label() + " block not Hermitian (defect " + std::to_string(defect) + ")");
  }
  return blk;
}

OperatorBlock cross_sector_block(const ObservableSpec& o, const basis::SymBasis& bra,
                                 const basis::SymBasis& ket) {
  const auto& a = bra.spec();
  const auto& k = ket.spec();
  if (a.L != k.L || a.M != k.M || a.bc != k.bc) {
    throw InvalidSpec("cross_sector_block: sectors differ in L, M or boundary (" + a.to_string() + " vs " +
                      k.to_string() + ")");
  }
  OperatorBlock blk;
  blk.spec = a;
  blk.ket_spec = k;
  blk.label = o.label();
  blk.intensive_prefactor = o.kind != ObservableKind::ZNNLocal;
  blk.matrix = kernels::assemble_block(observable_operator(o, a.L, a.bc), bra, ket, false,
                                       kernels::Exec::Parallel);
  return blk;
}

}  // namespace ethlab
