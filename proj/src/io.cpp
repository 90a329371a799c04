#include "ethlab/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace ethlab::io {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'E', 'T', 'H', 'S'};
constexpr std::uint32_t kHasVectors = 1;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::array<std::int32_t, 9> sector_fields(const basis::SectorSpec& s) {
  return {s.L,
          s.M,
          s.eta ? 1 : 0,
          s.eta.value_or(0),
          s.parity ? 1 : 0,
          s.parity.value_or(0),
          s.spin_flip ? 1 : 0,
          s.spin_flip.value_or(0),
          s.bc == basis::Boundary::Open ? 1 : 0};
}

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof v));
}

}  // namespace

std::uint64_t spectrum_digest(const ModelParams& p, const basis::SectorSpec& s) {
  std::uint64_t h = 14695981039346656037ULL;
  const std::uint64_t m = p.digest();
  h = fnv1a(h, &m, sizeof m);
  const auto f = sector_fields(s);
  h = fnv1a(h, f.data(), sizeof(std::int32_t) * f.size());
  return fnv1a(h, &kCacheVersion, sizeof kCacheVersion);
}

std::string cache_file_name(const ModelParams& p, const basis::SectorSpec& s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(spectrum_digest(p, s)));
  return "L" + std::to_string(s.L) + "_" + buf + ".eths";
}

void write_cache(const std::filesystem::path& file, const Spectrum& s, std::uint64_t digest) {
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InvalidInput("cannot write cache file " + tmp);
    os.write(kMagic, 4);
    put(os, kCacheVersion);
    put(os, digest);
    for (auto v : sector_fields(s.spec)) put(os, v);
    const std::uint32_t flags = s.has_vectors() ? kHasVectors : 0;
    put(os, flags);
    const std::uint64_t n = s.dim();
    put(os, n);
    os.write(reinterpret_cast<const char*>(s.energies.data()), static_cast<std::streamsize>(8 * n));
    if (s.has_vectors()) {
      const Eigen::MatrixXd re = s.vectors.real(), im = s.vectors.imag();
      os.write(reinterpret_cast<const char*>(re.data()), static_cast<std::streamsize>(8 * n * n));
      os.write(reinterpret_cast<const char*>(im.data()), static_cast<std::streamsize>(8 * n * n));
    }
    if (!os) throw InvalidInput("short write to cache file " + tmp);
  }
  std::filesystem::rename(tmp, file);
}

CacheRead read_cache(const std::filesystem::path& file, const basis::SectorSpec& spec, std::uint64_t digest,
                     bool want_vectors) {
  CacheRead r;
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) return r;
  const auto size = std::filesystem::file_size(file, ec);
  std::ifstream is(file, std::ios::binary);
  auto reject = [&](const std::string& why) {
    r.warning = "cache entry " + file.string() + " ignored: " + why;
    return r;
  };
  if (!is || ec) return reject("unreadable");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) return reject("bad magic");
  std::uint32_t version = 0, flags = 0;
  std::uint64_t stored = 0, n = 0;
  std::array<std::int32_t, 9> fields{};
  if (!get(is, version) || version != kCacheVersion) return reject("format version mismatch");
  if (!get(is, stored) || stored != digest) return reject("parameter digest mismatch");
  for (auto& f : fields)
    if (!get(is, f)) return reject("truncated header");
  if (fields != sector_fields(spec)) return reject("sector mismatch");
  if (!get(is, flags) || !get(is, n)) return reject("truncated header");
  const bool vectors = flags & kHasVectors;
  if (want_vectors && !vectors) return reject("eigenvectors requested, entry holds eigenvalues only");
  const std::uint64_t header = 4 + 4 + 8 + 9 * 4 + 4 + 8;
  const std::uint64_t payload = vectors ? n * (1 + 2 * n) * 8 : n * 8;
  if (size != header + payload) return reject("payload length mismatch");
  Spectrum s;
  s.spec = spec;
  s.energies.resize(static_cast<Eigen::Index>(n));
  is.read(reinterpret_cast<char*>(s.energies.data()), static_cast<std::streamsize>(8 * n));
  if (want_vectors) {
    Eigen::MatrixXd re(n, n), im(n, n);
    is.read(reinterpret_cast<char*>(re.data()), static_cast<std::streamsize>(8 * n * n));
    is.read(reinterpret_cast<char*>(im.data()), static_cast<std::streamsize>(8 * n * n));
    s.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    s.vectors.real() = re;
    s.vectors.imag() = im;
  }
  if (!is) return reject("truncated payload");
  if (!s.energies.allFinite() || (want_vectors && !s.vectors.allFinite())) return reject("non-finite payload");
  for (Eigen::Index i = 1; i < s.energies.size(); ++i) {
    if (s.energies(i) < s.energies(i - 1)) return reject("eigenvalues not ascending");
  }
  s.from_cache = true;
  r.spectrum = std::move(s);
  return r;
}

CachePolicy parse_cache_policy(const std::string& s) {
  if (s == "off") return CachePolicy::Off;
  if (s == "read") return CachePolicy::Read;
  if (s == "readwrite") return CachePolicy::ReadWrite;
  throw ConfigError("cache policy must be off, read or readwrite (got '" + s + "')");
}

std::string to_string(CachePolicy p) {
  switch (p) {
    case CachePolicy::Off: return "off";
    case CachePolicy::Read: return "read";
    case CachePolicy::ReadWrite: return "readwrite";
  }
  return "?";
}

SpectrumCache::SpectrumCache(std::optional<std::filesystem::path> dir, CachePolicy policy)
    : dir_(std::move(dir)), policy_(policy) {
  if (dir_ && policy_ == CachePolicy::ReadWrite) std::filesystem::create_directories(*dir_);
}

SpectrumCache SpectrumCache::from_env(CachePolicy policy) {
  const char* d = std::getenv("ETH_LAB_CACHE_DIR");
  if (!d || !*d) return SpectrumCache(std::nullopt, CachePolicy::Off);
  return SpectrumCache(std::filesystem::path(d), policy);
}

Spectrum SpectrumCache::get(const ModelParams& p, const basis::SymBasis& b, bool want_vectors) {
  const auto& spec = b.spec();
  const auto digest = spectrum_digest(p, spec);
  std::filesystem::path file;
  if (dir_ && policy_ != CachePolicy::Off) {
    file = *dir_ / cache_file_name(p, spec);
    auto r = read_cache(file, spec, digest, want_vectors);
    if (r.spectrum) {
      ++hits_;
      r.spectrum->params_hash = p.digest();
      return std::move(*r.spectrum);
    }
    // an eigenvalue-only entry is an expected miss when vectors are wanted
    if (!r.warning.empty() && r.warning.find("eigenvalues only") == std::string::npos) {
      warnings_.push_back(r.warning + "; recomputing");
    }
  }
  ++misses_;
  Spectrum s = diagonalize(build_hamiltonian(p, b), p.digest(), want_vectors);
  seconds_ += s.seconds;
  if (!file.empty() && policy_ == CachePolicy::ReadWrite) write_cache(file, s, digest);
  return s;
}

json SpectrumCache::summary() const {
  json j;
  j["dir"] = dir_ ? dir_->string() : "";
  j["policy"] = to_string(policy_);
  j["hits"] = hits_;
  j["misses"] = misses_;
  j["solver_seconds"] = seconds_;
  return j;
}

// ---- configuration ----

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  reject_unknown(j, {"schema", "command", "model", "sectors", "analysis", "quench", "rmt", "output"}, "config");
  read(j, "schema", c.schema, "config");
  if (c.schema != kConfigSchema) throw ConfigError("unsupported config schema " + std::to_string(c.schema));
  read(j, "command", c.command, "config");
  if (j.contains("model")) {
    const auto& m = j["model"];
    reject_unknown(m, {"lambda", "delta", "bc", "hz1"}, "model");
    read(m, "lambda", c.model.lambda, "model");
    read(m, "delta", c.model.delta, "model");
    read(m, "hz1", c.model.hz1, "model");
    std::string bc = "pbc";
    read(m, "bc", bc, "model");
    if (bc != "pbc" && bc != "obc") throw ConfigError("model.bc must be pbc or obc");
    c.model.bc = bc == "obc" ? basis::Boundary::Open : basis::Boundary::Periodic;
  }
  if (j.contains("sectors")) {
    const auto& s = j["sectors"];
    reject_unknown(s, {"sizes", "M", "pair_time_reversal", "observables"}, "sectors");
    read(s, "sizes", c.sizes, "sectors");
    read(s, "M", c.M, "sectors");
    read(s, "pair_time_reversal", c.pair_time_reversal, "sectors");
    read(s, "observables", c.observables, "sectors");
  }
  if (j.contains("analysis")) {
    const auto& a = j["analysis"];
    reject_unknown(a,
                   {"bins", "central_fraction", "window", "offdiag_fraction", "omega_window", "min_pairs",
                    "broadening", "omega_max", "page_states", "site", "seed"},
                   "analysis");
    read(a, "bins", c.bins, "analysis");
    read(a, "central_fraction", c.central_fraction, "analysis");
    read(a, "window", c.window, "analysis");
    read(a, "offdiag_fraction", c.offdiag_fraction, "analysis");
    if (a.contains("omega_window") && !a["omega_window"].is_null()) {
      double w = 0;
      read(a, "omega_window", w, "analysis");
      c.omega_window = w;
    }
    read(a, "min_pairs", c.min_pairs, "analysis");
    read(a, "broadening", c.broadening, "analysis");
    read(a, "omega_max", c.omega_max, "analysis");
    read(a, "page_states", c.page_states, "analysis");
    read(a, "site", c.site, "analysis");
    read(a, "seed", c.seed, "analysis");
  }
  if (j.contains("quench")) {
    const auto& q = j["quench"];
    reject_unknown(q, {"init", "tmax", "nt"}, "quench");
    read(q, "init", c.init, "quench");
    read(q, "tmax", c.tmax, "quench");
    read(q, "nt", c.nt, "quench");
  }
  if (j.contains("rmt")) {
    const auto& r = j["rmt"];
    reject_unknown(r, {"ensemble", "dim", "samples"}, "rmt");
    read(r, "ensemble", c.ensemble, "rmt");
    read(r, "dim", c.dim, "rmt");
    read(r, "samples", c.samples, "rmt");
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    reject_unknown(o, {"dir", "cache"}, "output");
    read(o, "dir", c.output_dir, "output");
    std::string cache = to_string(c.cache);
    read(o, "cache", cache, "output");
    c.cache = parse_cache_policy(cache);
  }
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["schema"] = schema;
  j["command"] = command;
  j["model"] = {{"lambda", model.lambda},
                {"delta", model.delta},
                {"bc", model.bc == basis::Boundary::Open ? "obc" : "pbc"},
                {"hz1", model.hz1}};
  j["sectors"] = {{"sizes", sizes}, {"M", M}, {"pair_time_reversal", pair_time_reversal}, {"observables", observables}};
  j["analysis"] = {{"bins", bins},
                   {"central_fraction", central_fraction},
                   {"window", window},
                   {"offdiag_fraction", offdiag_fraction},
                   {"omega_window", omega_window ? json(*omega_window) : json(nullptr)},
                   {"min_pairs", min_pairs},
                   {"broadening", broadening},
                   {"omega_max", omega_max},
                   {"page_states", page_states},
                   {"site", site},
                   {"seed", seed}};
  j["quench"] = {{"init", init}, {"tmax", tmax}, {"nt", nt}};
  j["rmt"] = {{"ensemble", ensemble}, {"dim", dim}, {"samples", samples}};
  j["output"] = {{"dir", output_dir}, {"cache", to_string(cache)}};
  return j;
}

void RunConfig::validate() const {
  try {
    model.validate();
  } catch (const InvalidSpec& e) {
    throw ConfigError(e.what());
  }
  if (sizes.empty()) throw ConfigError("sectors.sizes must not be empty");
  for (int L : sizes) {
    if (L < 3 || L > basis::kMaxSites) {
      throw ConfigError("system size " + std::to_string(L) + " outside [3, " + std::to_string(basis::kMaxSites) + "]");
    }
    if (M < -L || M > L) throw ConfigError("|M| exceeds L = " + std::to_string(L));
  }
  if (!(central_fraction > 0 && central_fraction <= 1)) throw ConfigError("central_fraction must lie in (0, 1]");
  if (!(offdiag_fraction > 0 && offdiag_fraction <= 1)) throw ConfigError("offdiag_fraction must lie in (0, 1]");
  if (window < 1) throw ConfigError("window must be positive");
  if (!(broadening > 0)) throw ConfigError("broadening must be positive");
  if (!(omega_max > 1)) throw ConfigError("omega_max must exceed 1");
  if (omega_window && !(*omega_window > 0)) throw ConfigError("omega_window must be positive");
  if (!(tmax > 0) || nt < 2) throw ConfigError("quench needs tmax > 0 and nt >= 2");
  if (dim < 2) throw ConfigError("rmt.dim must be at least 2");
  if (observables.empty()) throw ConfigError("sectors.observables must not be empty");
  for (const auto& o : observables) {
    try {
      parse_observable(o);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot open config " + file.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config " + file.string() + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

// ---- output ----

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(const std::filesystem::path& file, const std::vector<Column>& columns) {
  if (columns.empty()) throw InvalidInput("write_csv: no columns");
  const auto n = columns.front().values.size();
  for (const auto& c : columns) {
    if (c.values.size() != n) throw InvalidInput("write_csv: column '" + c.name + "' has a different length");
  }
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file, std::ios::trunc);
  if (!os) throw InvalidInput("cannot write " + file.string());
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c].name;
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << format_number(columns[c].values[i]);
    os << '\n';
  }
}

void write_json(const std::filesystem::path& file, const json& j) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file, std::ios::trunc);
  if (!os) throw InvalidInput("cannot write " + file.string());
  os << j.dump(2) << '\n';
}

json provenance_json(const Provenance& prov) {
  json j;
  j["version"] = kVersion;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  j["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - prov.started).count();
  if (prov.config) j["config"] = prov.config->to_json();
  if (prov.cache) j["cache"] = prov.cache->summary();
  std::vector<std::string> warnings = prov.warnings;
  if (prov.cache) warnings.insert(warnings.end(), prov.cache->warnings().begin(), prov.cache->warnings().end());
  j["warnings"] = warnings;
  j["errors"] = prov.errors;
  for (const auto& [k, v] : prov.extra.items()) j[k] = v;
  return j;
}

void write_csv_with_sidecar(const std::filesystem::path& file, const std::vector<Column>& columns,
                            const Provenance& prov) {
  write_csv(file, columns);
  json j = provenance_json(prov);
  j["file"] = file.filename().string();
  std::vector<std::string> names;
  for (const auto& c : columns) names.push_back(c.name);
  j["columns"] = names;
  write_json(file.string() + ".json", j);
}

}  // namespace ethlab::io
