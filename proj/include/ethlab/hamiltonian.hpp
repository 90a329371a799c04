#pragma once

// Spin-1 XXZ Hamiltonian family and the observables Z_N, Z_NN, J_N as dense
// blocks in a symmetry-adapted basis.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ethlab/basis.hpp"

namespace ethlab {

using cplx = std::complex<double>;
using Matrix3c = Eigen::Matrix<cplx, 3, 3>;
using Matrix9c = Eigen::Matrix<cplx, 9, 9>;

struct ModelParams {
  double delta = 0.55;
  double lambda = 0.0;
  basis::Boundary bc = basis::Boundary::Periodic;
  double hz1 = 0.1;  // field on the first site, open chains only

  double mu() const { return delta - 1.0; }
  double nu() const;
  void validate() const;
  // FNV-1a digest of the parameters that determine the Hamiltonian.
  std::uint64_t digest() const;
  std::string to_string() const;
};

namespace spin1 {
// Single-site matrices in the trit basis t = 0, 1, 2 (S^z = -1, 0, +1).
Matrix3c sx();
Matrix3c sy();
Matrix3c sz();
Matrix3c splus();
Matrix3c sminus();
Matrix3c identity();
// Two-site product; row/column index ta * 3 + tb.
Matrix9c kron(const Matrix3c& a, const Matrix3c& b);
// One bond term of the Hamiltonian density (including the on-site 2(S^z_j)^2
// piece attached to the left site).
Matrix9c bond_matrix(const ModelParams& p);
}  // namespace spin1

// Sum of one- and two-site terms acting on product states.
class SiteOperator {
 public:
  explicit SiteOperator(int L) : L_(L) {}

  void add_site(int site, const Matrix3c& m, double coeff = 1.0);
  void add_bond(int a, int b, const Matrix9c& m, double coeff = 1.0);

  int sites() const { return L_; }

  // Calls f(out_code, amplitude) for every nonzero <out|O|in>.
  template <class F>
  void apply(basis::Code in, F&& f) const {
    for (const auto& t : terms_) {
      const int ta = static_cast<int>((in / t.pa) % 3);
      if (t.b < 0) {
        for (const auto& e : t.cols[ta]) {
          f(in + (static_cast<basis::Code>(e.out) - ta) * t.pa, e.value);
        }
        continue;
      }
      const int tb = static_cast<int>((in / t.pb) % 3);
      const basis::Code base = in - ta * t.pa - tb * t.pb;
      for (const auto& e : t.cols[ta * 3 + tb]) {
        f(base + static_cast<basis::Code>(e.out / 3) * t.pa + static_cast<basis::Code>(e.out % 3) * t.pb,
          e.value);
      }
    }
  }

 private:
  struct Element {
    int out;
    cplx value;
  };
  struct Term {
    int a;
    int b;  // -1 for a single-site term
    basis::Code pa;
    basis::Code pb;
    std::vector<std::vector<Element>> cols;
  };
  int L_;
  std::vector<Term> terms_;
};

enum class ObservableKind { ZN, ZNN, JN, ZNNLocal, ZNNAvgObc };

struct ObservableSpec {
  ObservableKind kind = ObservableKind::ZN;
  int site = 0;  // 0-based first site, ZNNLocal only
  std::string label() const;
};

ObservableSpec parse_observable(const std::string& name);

struct OperatorBlock {
  basis::SectorSpec spec;      // bra sector
  basis::SectorSpec ket_spec;  // equal to spec for diagonal blocks
  Eigen::MatrixXcd matrix;
  std::string label;
  bool intensive_prefactor = false;  // the 1/L or 1/(L-2) factor is included
  // Operator does not commute with the sector symmetries and only its
  // projection onto the sector is stored.
  bool truncated = false;
};

SiteOperator hamiltonian_operator(const ModelParams& p, int L);
SiteOperator observable_operator(const ObservableSpec& o, int L, basis::Boundary bc);
// Whether the observable commutes with every symmetry resolved in spec.
bool observable_commutes(const ObservableSpec& o, const basis::SectorSpec& spec);

OperatorBlock build_hamiltonian(const ModelParams& p, const basis::SymBasis& b);
OperatorBlock build_observable(const ObservableSpec& o, const basis::SymBasis& b);
// Block <bra sector| O |ket sector> of an observable between two sectors with
// the same L, M and periodic boundaries.
OperatorBlock cross_sector_block(const ObservableSpec& o, const basis::SymBasis& bra,
                                 const basis::SymBasis& ket);

// Largest |A - A^dagger| entry.
double hermiticity_defect(const Eigen::MatrixXcd& a);

}  // namespace ethlab
