#pragma once

// Spin-1 product states, magnetization sectors and symmetry-adapted bases.
//
// A product state of L sites is stored as a base-3 integer: digit j holds the
// trit t_j in {0,1,2}, and the S^z eigenvalue at site j is t_j - 1.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ethlab::basis {

using Code = std::uint64_t;
using Dim = unsigned __int128;

inline constexpr int kMaxSites = 16;
// Largest L for which the state lookup is a direct 3^L table.
inline constexpr int kDirectLookupMaxSites = 12;

enum class Boundary { Periodic, Open };

Code pow3(int n);
int trit(Code code, int site);
Code with_trit(Code code, int site, int value);
int magnetization(Code code, int L);

// Lattice translation: the content of site j moves to site j + shift (mod L).
Code translate(Code code, int L, int shift);
// Space reflection j -> L-1-j.
Code reflect(Code code, int L);
// Spin inversion t -> 2 - t.
Code flip(Code code, int L);
// Smallest r > 0 with translate(code, L, r) == code.
int translation_period(Code code, int L);

// Dimension of the sector with N = M + L "particles" on L sites, from the
// alternating binomial sum. Throws OverflowError if a 128-bit intermediate
// overflows, InvalidSpec if N is outside [0, 2L].
Dim sector_dimension(int N, int L);

// D^L_M from the three-term recursion; row l holds M = -l..l at index M + l.
// Values never exceed 3^L, so this is exact for L <= 80.
std::vector<std::vector<Dim>> dimension_table(int max_sites);

// D^L_M with D = 0 outside |M| <= L. Uses sector_dimension.
Dim dim_lm(int L, int M);

struct DimensionIdentityReport {
  int L = 0;
  int M = 0;
  Dim dimension = 0;
  Dim recursion_sum = 0;        // D^{L-1}_{M+1} + D^{L-1}_M + D^{L-1}_{M-1}
  __int128 weighted_lhs = 0;    // M * D^L_M
  __int128 weighted_rhs = 0;    // L * (D^{L-1}_{M-1} - D^{L-1}_{M+1})
};

// Verifies the sum and difference recursions exactly; throws
// ConsistencyError with the offending values on violation.
DimensionIdentityReport check_dimension_identities(int L, int M);

// All codes with total magnetization M, ascending.
std::vector<Code> enumerate_m_sector(int L, int M);

struct SectorSpec {
  int L = 0;
  int M = 0;
  std::optional<int> eta;        // k = 2 pi eta / L; unset = no momentum resolution
  std::optional<int> parity;     // +-1, only at k in {0, pi}
  std::optional<int> spin_flip;  // +-1, only at M = 0
  Boundary bc = Boundary::Periodic;

  double momentum() const;
  // Throws InvalidSpec when the quantum numbers are inconsistent.
  void validate() const;
  std::string to_string() const;

  bool operator==(const SectorSpec&) const = default;
};

// Allowed momentum indices {eta_min, ..., eta_max} for L sites.
std::pair<int, int> eta_range(int L);

// Symmetry-adapted basis of one sector. Basis vector i is the normalized
// projection of its representative product state; each product state of the
// magnetization sector appears in at most one basis vector.
class SymBasis {
 public:
  struct Entry {
    Code code;
    std::complex<double> amplitude;
  };
  struct Slot {
    std::int32_t index = -1;  // -1: state projected out in this sector
    std::complex<double> amplitude{};
  };

  const SectorSpec& spec() const { return spec_; }
  int sites() const { return spec_.L; }
  std::size_t dim() const { return reps_.size(); }

  Code rep(std::size_t i) const { return reps_[i]; }
  int period(std::size_t i) const { return periods_[i]; }
  // Amplitude of the representative inside its own basis vector, i.e. the
  // norm of the unnormalized projection.
  double norm(std::size_t i) const { return norms_[i]; }
  std::span<const Entry> expansion(std::size_t i) const {
    return {entries_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  Slot lookup(Code code) const;

  // The full magnetization sector (ascending codes) this basis lives in.
  const std::vector<Code>& sector_states() const { return sector_states_; }
  // Position of a code inside sector_states(), or -1.
  std::int64_t sector_position(Code code) const;

 private:
  friend SymBasis build_sym_basis(const SectorSpec& spec);

  SectorSpec spec_;
  std::vector<Code> reps_;
  std::vector<int> periods_;
  std::vector<double> norms_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Entry> entries_;
  std::vector<Code> sector_states_;
  std::vector<Slot> direct_;        // size 3^L when L <= kDirectLookupMaxSites
  std::vector<Slot> sector_slots_;  // parallel to sector_states_ otherwise
};

SymBasis build_sym_basis(const SectorSpec& spec);

// Every (eta, parity, spin_flip) subsector of magnetization M for PBC. With
// resolve_discrete the k in {0, pi} sectors are split by parity and the M = 0
// sectors by spin inversion.
std::vector<SectorSpec> momentum_sectors(int L, int M, bool resolve_discrete);

std::string to_string(Dim value);

}  // namespace ethlab::basis
