#include "ethlab/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ethlab/error.hpp"

namespace ethlab::basis {

namespace {

using i128 = __int128;

i128 checked_mul(i128 a, i128 b) {
  i128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("sector_dimension: 128-bit overflow");
  return r;
}

i128 checked_add(i128 a, i128 b) {
  i128 r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("sector_dimension: 128-bit overflow");
  return r;
}

// C(n, k) with C = 0 for n < 0 or k outside [0, n].
i128 binomial(i128 n, i128 k) {
  if (n < 0 || k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  i128 r = 1;
  for (i128 i = 1; i <= k; ++i) {
    // r * (n - k + i) is divisible by i after the multiplication
    r = checked_mul(r, n - k + i) / i;
  }
  return r;
}

}  // namespace

Code pow3(int n) {
  Code r = 1;
  for (int i = 0; i < n; ++i) r *= 3;
  return r;
}

int trit(Code code, int site) { return static_cast<int>((code / pow3(site)) % 3); }

Code with_trit(Code code, int site, int value) {
  const Code p = pow3(site);
  const int old = static_cast<int>((code / p) % 3);
  return code + static_cast<Code>(value - old) * p;
}

int magnetization(Code code, int L) {
  int m = 0;
  for (int j = 0; j < L; ++j) {
    m += static_cast<int>(code % 3) - 1;
    code /= 3;
  }
  return m;
}

Code translate(Code code, int L, int shift) {
  shift %= L;
  if (shift < 0) shift += L;
  if (shift == 0) return code;
  // Digits j < L - shift move up by shift; the top shift digits wrap around.
  const Code split = pow3(L - shift);
  const Code low = code % split;
  const Code high = code / split;
  return low * pow3(shift) + high;
}

Code reflect(Code code, int L) {
  Code r = 0;
  for (int j = 0; j < L; ++j) {
    r = r * 3 + code % 3;
    code /= 3;
  }
  return r;
}

Code flip(Code code, int L) { return pow3(L) - 1 - code; }

int translation_period(Code code, int L) {
  Code t = code;
  for (int r = 1; r <= L; ++r) {
    t = translate(t, L, 1);
    if (t == code) return r;
  }
  return L;
}

Dim sector_dimension(int N, int L) {
  if (L < 0 || N < 0 || N > 2 * L) {
    throw InvalidSpec("sector_dimension: need 0 <= N <= 2L, got N=" + std::to_string(N) +
                      " L=" + std::to_string(L));
  }
  if (L == 0) return 1;
  i128 sum = 0;
  for (int k = 0; k <= L; ++k) {
    const i128 top = static_cast<i128>(N) - 3 * k + L - 1;
    if (top < L - 1) break;
    i128 term = checked_mul(binomial(L, k), binomial(top, L - 1));
    if (k % 2) term = -term;
    sum = checked_add(sum, term);
  }
  if (sum < 0) throw ConsistencyError("sector_dimension: negative result");
  return static_cast<Dim>(sum);
}

std::vector<std::vector<Dim>> dimension_table(int max_sites) {
  if (max_sites < 0 || max_sites > 80) throw InvalidSpec("dimension_table: need 0 <= L <= 80");
  std::vector<std::vector<Dim>> t(max_sites + 1);
  t[0] = {1};
  for (int l = 1; l <= max_sites; ++l) {
    t[l].assign(2 * l + 1, 0);
    const auto& prev = t[l - 1];
    auto at = [&](int M) -> Dim {
      const int i = M + (l - 1);
      return (i < 0 || i >= static_cast<int>(prev.size())) ? 0 : prev[i];
    };
    for (int M = -l; M <= l; ++M) t[l][M + l] = at(M - 1) + at(M) + at(M + 1);
  }
  return t;
}

Dim dim_lm(int L, int M) {
  if (L < 0 || M < -L || M > L) return 0;
  return sector_dimension(M + L, L);
}

DimensionIdentityReport check_dimension_identities(int L, int M) {
  if (L < 2 || M < -L || M > L) throw InvalidSpec("check_dimension_identities: need L >= 2, |M| <= L");
  DimensionIdentityReport r;
  r.L = L;
  r.M = M;
  r.dimension = dim_lm(L, M);
  r.recursion_sum = dim_lm(L - 1, M + 1) + dim_lm(L - 1, M) + dim_lm(L - 1, M - 1);
  r.weighted_lhs = static_cast<i128>(M) * static_cast<i128>(r.dimension);
  r.weighted_rhs = static_cast<i128>(L) * (static_cast<i128>(dim_lm(L - 1, M - 1)) -
                                           static_cast<i128>(dim_lm(L - 1, M + 1)));
  if (r.dimension != r.recursion_sum) {
    throw ConsistencyError("sum recursion violated at L=" + std::to_string(L) + " M=" + std::to_string(M) +
                           ": " + to_string(r.dimension) + " != " + to_string(r.recursion_sum));
  }
  if (r.weighted_lhs != r.weighted_rhs) {
    throw ConsistencyError("difference recursion violated at L=" + std::to_string(L) +
                           " M=" + std::to_string(M));
  }
  return r;
}

std::vector<Code> enumerate_m_sector(int L, int M) {
  if (L < 1 || L > kMaxSites) throw InvalidSpec("enumerate_m_sector: L out of range");
  std::vector<Code> out;
  if (M < -L || M > L) return out;
  // Depth-first over sites from the most significant digit keeps the output sorted.
  out.reserve(static_cast<std::size_t>(dim_lm(L, M)));
  std::vector<Code> place(L);
  for (int j = 0; j < L; ++j) place[j] = pow3(j);
  auto rec = [&](auto&& self, int site, Code acc, int remaining) -> void {
    if (site < 0) {
      if (remaining == 0) out.push_back(acc);
      return;
    }
    // remaining magnetization must be reachable by the sites below
    for (int t = 0; t < 3; ++t) {
      const int rest = remaining - (t - 1);
      if (rest < -site || rest > site) continue;
      self(self, site - 1, acc + static_cast<Code>(t) * place[site], rest);
    }
  };
  rec(rec, L - 1, 0, M);
  return out;
}

std::pair<int, int> eta_range(int L) {
  if (L % 2 == 0) return {-L / 2 + 1, L / 2};
  return {-(L / 2), L / 2};
}

double SectorSpec::momentum() const {
  return eta ? 2.0 * std::numbers::pi * (*eta) / L : 0.0;
}

void SectorSpec::validate() const {
  auto fail = [&](const std::string& why) { throw InvalidSpec(to_string() + ": " + why); };
  if (L < 1 || L > kMaxSites) fail("L must lie in [1, " + std::to_string(kMaxSites) + "]");
  if (M < -L || M > L) fail("|M| must not exceed L");
  if (bc == Boundary::Open) {
    if (eta || parity || spin_flip) fail("open chains carry no symmetry quantum numbers");
    return;
  }
  if (eta) {
    const auto [lo, hi] = eta_range(L);
    if (*eta < lo || *eta > hi) fail("eta out of range");
  }
  if (parity) {
    if (*parity != 1 && *parity != -1) fail("parity must be +-1");
    if (!eta) fail("parity resolution requires a momentum sector");
    if (!(*eta == 0 || (L % 2 == 0 && *eta == L / 2))) fail("parity only at k = 0 or pi");
  }
  if (spin_flip) {
    if (*spin_flip != 1 && *spin_flip != -1) fail("spin_flip must be +-1");
    if (M != 0) fail("spin inversion only at M = 0");
  }
}

std::string SectorSpec::to_string() const {
  std::ostringstream os;
  os << "L=" << L << " M=" << M;
  if (bc == Boundary::Open) {
    os << " OBC";
  } else {
    if (eta) os << " eta=" << *eta;
    if (parity) os << " P=" << (*parity > 0 ? "+" : "-");
    if (spin_flip) os << " Z2=" << (*spin_flip > 0 ? "+" : "-");
  }
  return os.str();
}

SymBasis::Slot SymBasis::lookup(Code code) const {
  if (!direct_.empty()) return code < direct_.size() ? direct_[code] : Slot{};
  const auto pos = sector_position(code);
  return pos < 0 ? Slot{} : sector_slots_[pos];
}

std::int64_t SymBasis::sector_position(Code code) const {
  const auto it = std::lower_bound(sector_states_.begin(), sector_states_.end(), code);
  if (it == sector_states_.end() || *it != code) return -1;
  return it - sector_states_.begin();
}

SymBasis build_sym_basis(const SectorSpec& spec) {
  spec.validate();
  const int L = spec.L;
  SymBasis b;
  b.spec_ = spec;
  b.sector_states_ = enumerate_m_sector(L, spec.M);
  const std::size_t n = b.sector_states_.size();
  b.sector_slots_.assign(n, SymBasis::Slot{});

  // Group elements g = T^a P^p Z^z with their projector weights.
  struct Element {
    int shift;
    bool reflect;
    bool flip;
    std::complex<double> weight;
  };
  std::vector<Element> group;
  const bool open = spec.bc == Boundary::Open;
  const int n_shift = (!open && spec.eta) ? L : 1;
  const double k = spec.momentum();
  for (int a = 0; a < n_shift; ++a) {
    for (int p = 0; p < (spec.parity ? 2 : 1); ++p) {
      for (int z = 0; z < (spec.spin_flip ? 2 : 1); ++z) {
        std::complex<double> w = std::polar(1.0, k * a);
        if (p) w *= static_cast<double>(*spec.parity);
        if (z) w *= static_cast<double>(*spec.spin_flip);
        group.push_back({a, p == 1, z == 1, w});
      }
    }
  }
  const double inv_order = 1.0 / static_cast<double>(group.size());

  std::vector<char> visited(n, 0);
  std::vector<std::pair<Code, std::complex<double>>> acc;
  for (std::size_t i = 0; i < n; ++i) {
    if (visited[i]) continue;
    const Code s = b.sector_states_[i];
    acc.clear();
    for (const auto& g : group) {
      Code t = s;
      if (g.flip) t = flip(t, L);
      if (g.reflect) t = reflect(t, L);
      t = translate(t, L, g.shift);
      acc.emplace_back(t, g.weight * inv_order);
    }
    std::sort(acc.begin(), acc.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    // merge duplicates, mark the orbit visited
    std::vector<SymBasis::Entry> merged;
    for (std::size_t q = 0; q < acc.size();) {
      std::complex<double> sum = 0.0;
      const Code c = acc[q].first;
      for (; q < acc.size() && acc[q].first == c; ++q) sum += acc[q].second;
      visited[b.sector_position(c)] = 1;
      if (std::abs(sum) > 1e-12) merged.push_back({c, sum});
    }
    double norm2 = 0.0;
    for (const auto& e : merged) norm2 += std::norm(e.amplitude);
    if (norm2 < 1e-10) continue;  // orbit incompatible with the quantum numbers
    const double inv_norm = 1.0 / std::sqrt(norm2);
    const auto index = static_cast<std::int32_t>(b.reps_.size());
    double rep_amp = 0.0;
    for (auto& e : merged) {
      e.amplitude *= inv_norm;
      if (e.code == s) rep_amp = e.amplitude.real();
      b.sector_slots_[b.sector_position(e.code)] = {index, e.amplitude};
      b.entries_.push_back(e);
    }
    b.reps_.push_back(s);
    b.periods_.push_back(open ? 1 : translation_period(s, L));
    b.norms_.push_back(rep_amp);
    b.offsets_.push_back(b.entries_.size());
  }

  if (L <= kDirectLookupMaxSites) {
    b.direct_.assign(pow3(L), SymBasis::Slot{});
    for (std::size_t i = 0; i < n; ++i) b.direct_[b.sector_states_[i]] = b.sector_slots_[i];
    b.sector_slots_.clear();
    b.sector_slots_.shrink_to_fit();
  }
  return b;
}

std::vector<SectorSpec> momentum_sectors(int L, int M, bool resolve_discrete) {
  std::vector<SectorSpec> out;
  const auto [lo, hi] = eta_range(L);
  for (int eta = lo; eta <= hi; ++eta) {
    const bool special = eta == 0 || (L % 2 == 0 && eta == L / 2);
    std::vector<std::optional<int>> parities{std::nullopt};
    std::vector<std::optional<int>> flips{std::nullopt};
    if (resolve_discrete && special) parities = {1, -1};
    if (resolve_discrete && M == 0) flips = {1, -1};
    for (const auto& p : parities) {
      for (const auto& z : flips) {
        SectorSpec s;
        s.L = L;
        s.M = M;
        s.eta = eta;
        s.parity = p;
        s.spin_flip = z;
        out.push_back(s);
      }
    }
  }
  return out;
}

std::string to_string(Dim value) {
  if (value == 0) return "0";
  std::string s;
  while (value > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

}  // namespace ethlab::basis
