#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ethlab/basis.hpp"
#include "ethlab/error.hpp"
#include "ethlab/hamiltonian.hpp"
#include "ethlab/io.hpp"
#include "ethlab/spectra.hpp"

using namespace ethlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ethlab_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

basis::SymBasis sector() {
  basis::SectorSpec s;
  s.L = 7;
  s.M = 0;
  s.eta = 2;
  s.spin_flip = -1;
  return basis::build_sym_basis(s);
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("spectrum cache round trip, hits and corruption") {
  const auto dir = scratch("cache");
  const auto b = sector();
  ModelParams p;
  io::SpectrumCache cache(dir, io::CachePolicy::ReadWrite);
  const auto first = cache.get(p, b);
  CHECK(!first.from_cache);
  CHECK(cache.misses() == 1);
  const auto second = cache.get(p, b);
  CHECK(second.from_cache);
  CHECK(second.seconds == 0.0);
  CHECK(cache.hits() == 1);
  CHECK((second.energies - first.energies).cwiseAbs().maxCoeff() == 0.0);
  CHECK((second.vectors - first.vectors).cwiseAbs().maxCoeff() == 0.0);

  const auto file = dir / io::cache_file_name(p, b.spec());
  const auto n = first.dim();
  CHECK(fs::file_size(file) > n * (1 + 2 * n) * 8);
  CHECK(fs::file_size(file) < n * (1 + 2 * n) * 8 + 128);

  // other parameters do not collide
  ModelParams q = p;
  q.lambda = 1.0;
  CHECK(io::spectrum_digest(q, b.spec()) != io::spectrum_digest(p, b.spec()));
  CHECK(!cache.get(q, b).from_cache);

  // truncate: recompute with a warning
  fs::resize_file(file, fs::file_size(file) / 2);
  io::SpectrumCache again(dir, io::CachePolicy::ReadWrite);
  const auto third = again.get(p, b);
  CHECK(!third.from_cache);
  CHECK(!again.warnings().empty());
  CHECK((third.energies - first.energies).cwiseAbs().maxCoeff() < 1e-12);
  // rewritten file is valid again
  io::SpectrumCache reread(dir, io::CachePolicy::Read);
  CHECK(reread.get(p, b).from_cache);

  // garbage header
  {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << "not a cache file";
  }
  const auto r = io::read_cache(file, b.spec(), io::spectrum_digest(p, b.spec()), true);
  CHECK(!r.spectrum);
  CHECK(!r.warning.empty());
  fs::remove_all(dir);
}

TEST_CASE("eigenvalue-only cache entries") {
  const auto dir = scratch("evonly");
  const auto b = sector();
  ModelParams p;
  io::SpectrumCache cache(dir, io::CachePolicy::ReadWrite);
  const auto ev = cache.get(p, b, false);
  CHECK(!ev.has_vectors());
  CHECK(cache.get(p, b, false).from_cache);
  // vectors requested: the eigenvalue-only entry is not enough
  const auto full = cache.get(p, b, true);
  CHECK(!full.from_cache);
  CHECK(full.has_vectors());
  CHECK(cache.get(p, b, false).from_cache);
  CHECK(cache.get(p, b, true).from_cache);
  io::SpectrumCache off(dir, io::CachePolicy::Off);
  CHECK(!off.get(p, b, false).from_cache);
  fs::remove_all(dir);
}

TEST_CASE("run configuration") {
  io::RunConfig c;
  c.command = "quench";
  c.sizes = {8, 10};
  c.model.lambda = 0.5;
  c.omega_window = 0.25;
  const auto back = io::RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.sizes == c.sizes);
  CHECK(*back.omega_window == 0.25);

  auto j = c.to_json();
  j["model"]["lamda"] = 1.0;
  CHECK_THROWS_AS(io::RunConfig::from_json(j), io::ConfigError);
  auto k = c.to_json();
  k["extra"] = 1;
  CHECK_THROWS_AS(io::RunConfig::from_json(k), io::ConfigError);
  auto t = c.to_json();
  t["sectors"]["sizes"] = "ten";
  CHECK_THROWS_AS(io::RunConfig::from_json(t), io::ConfigError);
  auto s = c.to_json();
  s["schema"] = 99;
  CHECK_THROWS_AS(io::RunConfig::from_json(s), io::ConfigError);
  io::RunConfig bad = c;
  bad.sizes = {20};
  CHECK_THROWS_AS(bad.validate(), InvalidSpec);
  CHECK_THROWS_AS(io::parse_cache_policy("sometimes"), InvalidSpec);
  CHECK(io::parse_cache_policy(io::to_string(io::CachePolicy::Read)) == io::CachePolicy::Read);
}

TEST_CASE("number formatting and CSV output") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    CHECK(std::stod(io::format_number(x)) == x);
  }
  const auto dir = scratch("csv");
  io::write_csv(dir / "a.csv", {{"x", {1.0, 0.5}}, {"y", {0.1, 2.0}}});
  CHECK(slurp(dir / "a.csv") == "x,y\n1,0.10000000000000001\n0.5,2\n");
  CHECK_THROWS_AS(io::write_csv(dir / "b.csv", {{"x", {1.0}}, {"y", {}}}), InvalidInput);

  io::RunConfig cfg;
  io::Provenance prov;
  prov.config = &cfg;
  prov.warnings.push_back("w");
  io::write_csv_with_sidecar(dir / "c.csv", {{"x", {1.0}}}, prov);
  const auto side = io::json::parse(slurp(dir / "c.csv.json"));
  CHECK(side["version"] == io::kVersion);
  CHECK(side["warnings"][0] == "w");
  CHECK(side["config"] == cfg.to_json());
  fs::remove_all(dir);
}
