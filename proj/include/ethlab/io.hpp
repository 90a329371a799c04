#pragma once

// Run configuration, the on-disk spectrum cache and the CSV / JSON writers.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ethlab/basis.hpp"
#include "ethlab/error.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/spectra.hpp"

namespace ethlab::io {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kConfigSchema = 1;

// Invalid or unknown configuration entries.
class ConfigError : public InvalidSpec {
 public:
  using InvalidSpec::InvalidSpec;
};

// ---- spectrum cache ----

inline constexpr std::uint32_t kCacheVersion = 1;

// FNV-1a over the model parameters, the sector quantum numbers and the format version.
std::uint64_t spectrum_digest(const ModelParams& p, const basis::SectorSpec& s);
std::string cache_file_name(const ModelParams& p, const basis::SectorSpec& s);

// Header: "ETHS", u32 version, u64 digest, nine i32 sector fields, u32 flags
// (bit 0: eigenvectors present), u64 dim. Payload: little-endian doubles,
// eigenvalues, then column-major real parts, then imaginary parts.
void write_cache(const std::filesystem::path& file, const Spectrum& s, std::uint64_t digest);

struct CacheRead {
  std::optional<Spectrum> spectrum;
  std::string warning;  // set when a file exists but cannot be used
};
CacheRead read_cache(const std::filesystem::path& file, const basis::SectorSpec& spec, std::uint64_t digest,
                     bool want_vectors);

enum class CachePolicy { Off, Read, ReadWrite };
CachePolicy parse_cache_policy(const std::string& s);
std::string to_string(CachePolicy p);

class SpectrumCache {
 public:
  SpectrumCache() = default;
  SpectrumCache(std::optional<std::filesystem::path> dir, CachePolicy policy);
  // Directory from ETH_LAB_CACHE_DIR; no caching when unset.
  static SpectrumCache from_env(CachePolicy policy = CachePolicy::ReadWrite);

  Spectrum get(const ModelParams& p, const basis::SymBasis& b, bool want_vectors = true);

  const std::optional<std::filesystem::path>& dir() const { return dir_; }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  double solver_seconds() const { return seconds_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  json summary() const;

 private:
  std::optional<std::filesystem::path> dir_;
  CachePolicy policy_ = CachePolicy::Off;
  std::size_t hits_ = 0, misses_ = 0;
  double seconds_ = 0.0;
  std::vector<std::string> warnings_;
};

// ---- configuration ----

struct RunConfig {
  int schema = kConfigSchema;
  std::string command;

  ModelParams model;

  std::vector<int> sizes{10};
  int M = 0;
  bool pair_time_reversal = true;
  std::vector<std::string> observables{"zn"};

  std::size_t bins = 0;
  double central_fraction = 0.5;     // level statistics, diagonal fluctuations
  std::size_t window = 50;           // running mean
  double offdiag_fraction = 0.05;    // energy window of off-diagonal pairs
  std::optional<double> omega_window;
  std::size_t min_pairs = 200;
  double broadening = 0.1;           // sigma in units of the mean level spacing
  double omega_max = 40.0;           // last frequency bin edge
  std::size_t page_states = 100;
  int site = 0;                      // local operator site (momentum-sf)

  std::string init = "neel";
  double tmax = 50.0;
  std::size_t nt = 501;

  std::string ensemble = "goe";
  int dim = 1000;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;

  std::string output_dir = "eth-lab-out";
  CachePolicy cache = CachePolicy::ReadWrite;

  // Throws ConfigError on unknown keys, wrong types or invalid values.
  static RunConfig from_json(const json& j);
  json to_json() const;
  void validate() const;
};

RunConfig load_config(const std::filesystem::path& file);

// ---- output ----

// 17 significant digits.
std::string format_number(double x);

struct Column {
  std::string name;
  std::vector<double> values;
};
// Columns must have equal length.
void write_csv(const std::filesystem::path& file, const std::vector<Column>& columns);
void write_json(const std::filesystem::path& file, const json& j);

// Writes file and file + ".json" with provenance (config echo, library
// version, wall time, cache summary, warnings and errors).
struct Provenance {
  const RunConfig* config = nullptr;
  const SpectrumCache* cache = nullptr;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  std::vector<std::string> warnings;
  std::vector<std::string> errors;
  json extra = json::object();
};
void write_csv_with_sidecar(const std::filesystem::path& file, const std::vector<Column>& columns,
                            const Provenance& prov);
json provenance_json(const Provenance& prov);

}  // namespace ethlab::io
