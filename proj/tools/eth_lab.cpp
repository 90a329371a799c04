// eth-lab: exact-diagonalization experiments on the spin-1 chain.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>

#include "ethlab/analysis.hpp"
#include "ethlab/io.hpp"
#include "ethlab/quench.hpp"
#include "ethlab/rmt.hpp"
#include "ethlab/symmetry_eth.hpp"

using namespace ethlab;
namespace fs = std::filesystem;
using io::Column;
using io::json;

namespace {

struct Context {
  io::RunConfig cfg;
  io::SpectrumCache cache;
  io::Provenance prov;
  fs::path out;

  fs::path file(const std::string& name) const { return out / name; }
  void csv(const std::string& name, const std::vector<Column>& cols, json extra = json::object()) {
    io::Provenance p = prov;
    p.extra = std::move(extra);
    io::write_csv_with_sidecar(file(name), cols, p);
  }
  void summary(const std::string& name, json j) {
    json full = io::provenance_json(prov);
    full["results"] = std::move(j);
    io::write_json(file(name), full);
  }
};

std::string tag(int L) { return "L" + std::to_string(L); }

std::vector<Column> histogram_columns(const stats::Histogram& h, const std::string& x) {
  Column c{x, {}}, d{"density", {}};
  for (std::size_t i = 0; i < h.bins(); ++i) {
    c.values.push_back(h.center(i));
    d.values.push_back(h.densities[i]);
  }
  return {c, d};
}

json fit_json(const stats::FitResult& f) {
  json j;
  j["model"] = f.model;
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    j["params"][f.names[i]] = f.params[i];
    if (i < f.errors.size()) j["errors"][f.names[i]] = f.errors[i];
  }
  j["rms"] = f.rms;
  j["ssr"] = f.ssr;
  j["n"] = f.n;
  return j;
}

void merge_sweep(Context& ctx, const analysis::Sweep& s) {
  for (const auto& w : s.warnings) ctx.prov.warnings.push_back(tag(s.L) + ": " + w);
  for (const auto& e : s.errors) ctx.prov.errors.push_back(tag(s.L) + ": " + e);
}

// ---- commands ----

void cmd_levels(Context& ctx) {
  json res = json::array();
  for (int L : ctx.cfg.sizes) {
    const auto spectra = analysis::production_spectra(ctx.cfg.model, L, ctx.cfg.pair_time_reversal, ctx.cache);
    std::vector<const Spectrum*> ptr;
    for (const auto& s : spectra) ptr.push_back(&s);
    const auto r = ratio_stats(ptr, ctx.cfg.bins);
    json entry{{"L", L},
               {"mean_r", r.mean_r},
               {"mean_r_stderr", r.mean_r_stderr},
               {"ratios", r.count},
               {"ks_ratio_goe", r.ks_goe},
               {"ks_ratio_poisson", r.ks_poisson},
               {"sectors", spectra.size()}};
    try {
      const auto sp = level_spacing_stats(ptr, ctx.cfg.central_fraction, ctx.cfg.bins);
      auto scols = histogram_columns(sp.histogram, "s");
      Column wg{"wigner_goe", {}}, ps{"poisson", {}};
      for (double x : scols[0].values) {
        wg.values.push_back(rmt::pdf(rmt::Distribution::WignerGOE, x));
        ps.values.push_back(rmt::pdf(rmt::Distribution::PoissonS, x));
      }
      scols.push_back(wg);
      scols.push_back(ps);
      ctx.csv("spacings_" + tag(L) + ".csv", scols);
      entry["ks_spacing_goe"] = sp.ks_goe;
      entry["ks_spacing_poisson"] = sp.ks_poisson;
    } catch (const InvalidInput& e) {
      ctx.prov.warnings.push_back(tag(L) + ": " + e.what());
    }
    res.push_back(entry);
  }
  ctx.summary("levels.json", res);
}

void cmd_dos(Context& ctx) {
  json res;
  std::vector<DosResult> all;
  for (int L : ctx.cfg.sizes) {
    const auto spectra = analysis::production_spectra(ctx.cfg.model, L, ctx.cfg.pair_time_reversal, ctx.cache);
    std::vector<const Spectrum*> ptr;
    for (const auto& s : spectra) ptr.push_back(&s);
    const auto d = dos(ptr, ctx.cfg.bins);
    auto cols = histogram_columns(d.histogram, "e_over_l");
    Column fit{"gaussian_fit", {}};
    const double a = d.gaussian.param("amplitude"), mu = d.gaussian.param("mu"), sg = d.gaussian.param("sigma");
    for (double x : cols[0].values) fit.values.push_back(a * stats::normal_pdf(x, mu, sg));
    cols.push_back(fit);
    ctx.csv("dos_" + tag(L) + ".csv", cols);
    res["sizes"].push_back({{"L", L}, {"fit", fit_json(d.gaussian)}, {"mean", d.mean}, {"sigma", d.sigma}});
    all.push_back(d);
  }
  if (ctx.cfg.sizes.size() >= 2) {
    const auto s = sigma_scaling(ctx.cfg.sizes, all);
    res["sigma_scaling"] = {{"gamma", s.gamma}, {"fit", fit_json(s.fit)}, {"sigma_fit", s.sigma_fit}};
  }
  ctx.summary("dos.json", res);
}

void cmd_page(Context& ctx) {
  json res = json::array();
  analysis::SweepOptions opt;
  opt.pair_time_reversal = ctx.cfg.pair_time_reversal;
  opt.page_candidates = std::max<std::size_t>(3 * ctx.cfg.page_states, 50);
  for (int L : ctx.cfg.sizes) {
    const auto s = analysis::sweep(ctx.cfg.model, L, opt, ctx.cache);
    merge_sweep(ctx, s);
    std::vector<int> la;
    for (int a = 1; a < L; ++a) la.push_back(a);
    const auto pc = analysis::page_curve(s, ctx.cfg.page_states, la);
    std::vector<double> lad(pc.subsystem.begin(), pc.subsystem.end());
    ctx.csv("page_" + tag(L) + ".csv", {{"L_A", lad},
                                        {"f", pc.f},
                                        {"mean", pc.mean},
                                        {"stddev", pc.stddev},
                                        {"exact_sum", pc.exact_sum},
                                        {"asymptotic", pc.asymptotic},
                                        {"volume_term", pc.volume_term}});
    res.push_back({{"L", L}, {"states", pc.states}, {"truncated", pc.truncated}});
  }
  ctx.summary("page.json", res);
}

analysis::SweepOptions eth_options(const io::RunConfig& cfg) {
  analysis::SweepOptions opt;
  opt.pair_time_reversal = cfg.pair_time_reversal;
  opt.eth_observable = parse_observable(cfg.observables.front());
  opt.offdiag_fraction = cfg.offdiag_fraction;
  return opt;
}

void cmd_eth_diag(Context& ctx) {
  json res;
  std::vector<eth::DiagonalSet> sets;
  for (int L : ctx.cfg.sizes) {
    const auto s = analysis::sweep(ctx.cfg.model, L, eth_options(ctx.cfg), ctx.cache);
    merge_sweep(ctx, s);
    auto d = s.diagonal_set();
    const auto avg = stats::running_average(d.values, std::min(ctx.cfg.window, d.values.size()));
    std::vector<double> el;
    for (double e : d.energies) el.push_back(e / L);
    ctx.csv("diag_" + tag(L) + ".csv", {{"e_over_l", el}, {"o_mm", d.values}, {"running_mean", avg}});
    json entry{{"L", L}, {"omega", d.omega}, {"states", d.values.size()}};
    try {
      const auto dist = eth::diag_distribution(d);
      auto cols = histogram_columns(dist.histogram, "o_mm");
      ctx.csv("diag_dist_" + tag(L) + ".csv", cols);
      entry["skewness"] = dist.skewness;
      entry["excess_kurtosis"] = dist.excess_kurtosis;
      entry["gaussian"] = fit_json(dist.gaussian);
    } catch (const InvalidInput& e) {
      ctx.prov.warnings.push_back(tag(L) + ": " + e.what());
    }
    res["sizes"].push_back(entry);
    sets.push_back(std::move(d));
  }
  if (sets.size() >= 3) {
    const auto sc = eth::diag_fluctuations(sets, ctx.cfg.window, ctx.cfg.central_fraction);
    json pts = json::array();
    for (const auto& p : sc.points) {
      pts.push_back({{"L", p.L}, {"delta_o", p.delta_o}, {"omega", p.omega}, {"window", p.window}});
    }
    res["fluctuations"] = pts;
    res["gamma"] = sc.gamma;
    res["delta"] = sc.delta;
    for (const auto& w : sc.warnings) ctx.prov.warnings.push_back(w);
  }
  ctx.summary("eth-diag.json", res);
}

void cmd_eth_offdiag(Context& ctx) {
  std::vector<analysis::Sweep> sweeps;
  for (int L : ctx.cfg.sizes) {
    sweeps.push_back(analysis::sweep(ctx.cfg.model, L, eth_options(ctx.cfg), ctx.cache));
    merge_sweep(ctx, sweeps.back());
  }
  std::vector<const eth::OffdiagPool*> pools;
  for (const auto& s : sweeps) pools.push_back(&*s.pool);
  eth::OffdiagWindow w;
  w.central_fraction = ctx.cfg.offdiag_fraction;
  w.max_abs_omega = ctx.cfg.omega_window;
  w.min_pairs = ctx.cfg.min_pairs;
  const auto samples = eth::offdiag_samples_common(pools, w);
  json res;
  for (const auto& s : samples) {
    const auto d = eth::offdiag_distribution(s);
    auto raw = histogram_columns(d.raw_hist, "re_o");
    Column g{"gaussian", {}}, gb{"gumbel", {}};
    for (double x : raw[0].values) {
      g.values.push_back(stats::normal_pdf(x, d.raw_gaussian.param("mu"), d.raw_gaussian.param("sigma")));
      gb.values.push_back(rmt::pdf(rmt::Distribution::Gumbel, x, d.raw_gumbel.param("mu"), d.raw_gumbel.param("sigma")));
    }
    raw.push_back(g);
    raw.push_back(gb);
    ctx.csv("offdiag_raw_" + tag(s.L) + ".csv", raw);
    json entry{{"L", s.L},
               {"pairs", d.pairs},
               {"zero_pairs", d.zero_pairs},
               {"mean_abs2", d.mean_abs2},
               {"max_imag_ratio", s.max_imag_ratio},
               {"raw_gaussian", fit_json(d.raw_gaussian)},
               {"raw_gumbel", fit_json(d.raw_gumbel)}};
    if (d.log_hist.bins()) {
      auto lg = histogram_columns(d.log_hist, "x");
      Column g2{"gaussian", {}}, gb2{"gumbel", {}};
      for (double x : lg[0].values) {
        g2.values.push_back(stats::normal_pdf(x, d.log_gaussian.param("mu"), d.log_gaussian.param("sigma")));
        gb2.values.push_back(
            rmt::pdf(rmt::Distribution::Gumbel, x, d.log_gumbel.param("mu"), d.log_gumbel.param("sigma")));
      }
      lg.push_back(g2);
      lg.push_back(gb2);
      ctx.csv("offdiag_log_" + tag(s.L) + ".csv", lg);
      entry["log_gaussian"] = fit_json(d.log_gaussian);
      entry["log_gumbel"] = fit_json(d.log_gumbel);
    }
    res["sizes"].push_back(entry);
    for (const auto& wmsg : s.warnings) ctx.prov.warnings.push_back(wmsg);
  }
  if (samples.size() >= 2) {
    const auto sc = eth::offdiag_variance_scaling(samples);
    std::vector<double> sizes(sc.sizes.begin(), sc.sizes.end());
    ctx.csv("offdiag_variance.csv", {{"L", sizes}, {"l_omega", sc.l_omega}, {"variance", sc.variance}});
    res["variance_scaling"] = {{"gamma", sc.gamma}, {"fit", fit_json(sc.fit)}};
    if (sc.omega_window) res["variance_scaling"]["omega_window"] = *sc.omega_window;
  }
  ctx.summary("eth-offdiag.json", res);
}

json low_ratio(const eth::SpectralFunction& corr, const eth::SpectralFunction& var, double broadening) {
  const auto [lo, hi] = analysis::low_frequency_window(corr, broadening);
  try {
    return {{"value", analysis::low_frequency_ratio(corr, var, lo, hi)}, {"omega_lo", lo}, {"omega_hi", hi}};
  } catch (const InvalidInput&) {
    return nullptr;
  }
}

void cmd_spectral(Context& ctx) {
  analysis::SweepOptions opt;
  opt.pair_time_reversal = ctx.cfg.pair_time_reversal;
  for (const auto& o : ctx.cfg.observables) opt.spectral.push_back(parse_observable(o));
  opt.edges = eth::frequency_edges(1e-3, 1.0, 24, 0.25, ctx.cfg.omega_max);
  opt.broadening = ctx.cfg.broadening;
  json res;
  for (int L : ctx.cfg.sizes) {
    const auto s = analysis::sweep(ctx.cfg.model, L, opt, ctx.cache);
    merge_sweep(ctx, s);
    const auto rho = eth::rho_omega_check(s.energies());
    for (const auto& [label, acc] : s.spectral) {
      const auto var = acc.var(label);
      const auto corr = acc.corr_binned(label);
      const auto resc = acc.resc_binned(label);
      std::vector<double> present;
      for (bool p : var.present) present.push_back(p ? 1.0 : 0.0);
      ctx.csv("spectral_" + label + "_" + tag(L) + ".csv",
              {{"omega", var.omega}, {"var", var.values}, {"present", present}, {"corr", corr.values},
               {"resc", resc.values}});
      res[label].push_back({{"L", L},
                            {"omega_dos", var.omega_dos},
                            {"sigma_e2", var.sigma_e2},
                            {"broadening", corr.broadening},
                            {"total_weight", acc.total_weight()},
                            {"corr_over_var_low", low_ratio(corr, var, ctx.cfg.broadening)}});
    }
    res["rho_omega"].push_back({{"L", L}, {"ks", rho.ks}, {"asymmetry", rho.asymmetry}, {"pairs", rho.pairs}});
  }
  ctx.summary("spectral.json", res);
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  std::vector<double> g;
  for (std::size_t i = 0; lo + step * static_cast<double>(i) <= hi + 1e-12; ++i) g.push_back(lo + step * i);
  return g;
}

void cmd_momentum_sf(Context& ctx) {
  json res;
  ModelParams p = ctx.cfg.model;
  p.bc = basis::Boundary::Periodic;
  for (int L : ctx.cfg.sizes) {
    const std::optional<int> flip = ctx.cfg.M == 0 ? std::optional<int>(1) : std::nullopt;
    const auto fam = symmetry_eth::momentum_family(p, L, ctx.cfg.M, flip,
                                                   [&](const OperatorBlock& h) {
                                                     const auto b = basis::build_sym_basis(h.spec);
                                                     return ctx.cache.get(p, b, true);
                                                   });
    const auto grid = uniform_grid(0.0, ctx.cfg.omega_max, 0.01);
    const auto edges = eth::frequency_edges(1e-3, 1.0, 24, 0.25, ctx.cfg.omega_max);
    const auto r = symmetry_eth::momentum_resolved_sf(fam, ctx.cfg.site, grid, edges, ctx.cfg.broadening);
    std::vector<Column> cols{{"omega", r.grid}, {"local", r.local_corr}, {"invariant", r.invariant_corr}};
    for (std::size_t c = 0; c < r.classes.size(); ++c) {
      cols.push_back({"class_" + std::to_string(r.classes[c]), r.class_corr[c]});
    }
    json manifest{{"L", L},
                  {"site", r.site},
                  {"dimension", r.dimension},
                  {"classes", r.classes},
                  {"multiplicity", r.multiplicity},
                  {"delta0_violation", r.delta0_violation},
                  {"reconstruction_violation", r.reconstruction_violation},
                  {"collapse_rms_z", r.collapse_rms_z},
                  {"collapse_points", r.collapse_points},
                  {"selection_rule_violation", symmetry_eth::selection_rule_violation(fam)}};
    ctx.csv("momentum_sf_" + tag(L) + ".csv", cols, manifest);
    res["sizes"].push_back(manifest);
  }
  ctx.summary("momentum-sf.json", res);
}

void cmd_obc_sf(Context& ctx) {
  json res;
  ModelParams p = ctx.cfg.model;
  p.bc = basis::Boundary::Open;
  for (int L : ctx.cfg.sizes) {
    basis::SectorSpec spec;
    spec.L = L;
    spec.M = ctx.cfg.M;
    spec.bc = basis::Boundary::Open;
    const auto b = basis::build_sym_basis(spec);
    const auto s = ctx.cache.get(p, b, true);
    const auto edges = eth::frequency_edges(1e-3, 1.0, 24, 0.25, ctx.cfg.omega_max);
    const auto r = symmetry_eth::obc_distance_decomposition(b, s, edges, ctx.cfg.broadening);
    std::vector<Column> cols{{"omega", r.omega},
                             {"total", r.total_corr},
                             {"local", r.local_corr},
                             {"total_resc", r.total_resc},
                             {"local_resc", r.local_resc}};
    for (std::size_t d = 0; d < r.contribution.size(); ++d) cols.push_back({"d" + std::to_string(d), r.contribution[d]});
    json entry{{"L", L},
               {"M", ctx.cfg.M},
               {"bulk_site", r.bulk_site},
               {"z_score", r.z_score},
               {"pairs_per_distance", r.pairs_per_distance},
               {"reconstruction_violation", r.reconstruction_violation},
               {"running_mean_deviation", r.running_mean_deviation},
               {"delta_o_average", r.delta_o_average},
               {"delta_o_local", r.delta_o_local}};
    ctx.csv("obc_sf_" + tag(L) + ".csv", cols, entry);
    res["sizes"].push_back(entry);
  }
  ctx.summary("obc-sf.json", res);
}

void cmd_quench(Context& ctx) {
  json res;
  const auto init = quench::parse_initial(ctx.cfg.init);
  const auto obs = parse_observable(ctx.cfg.observables.front());
  ModelParams p = ctx.cfg.model;
  p.bc = basis::Boundary::Periodic;
  for (int L : ctx.cfg.sizes) {
    basis::SectorSpec spec;
    spec.L = L;
    spec.M = 0;
    spec.eta = 0;
    spec.parity = 1;
    spec.spin_flip = 1;
    const auto b = basis::build_sym_basis(spec);
    const auto s = ctx.cache.get(p, b, true);
    const auto setup = quench::make_setup(s, quench::prepare_initial(init, b, p));
    const auto me = eth::matrix_elements(build_observable(obs, b), s);
    std::vector<double> t;
    for (std::size_t i = 0; i < ctx.cfg.nt; ++i) {
      t.push_back(ctx.cfg.tmax * static_cast<double>(i) / static_cast<double>(ctx.cfg.nt - 1));
    }
    const auto ev = quench::evolve_expectation(setup, me.elements, t);
    const auto diag = me.diagonal();
    const auto de = quench::diagonal_ensemble(setup, diag);
    const auto mc = quench::microcanonical_average(s.energies, diag, setup.e_bar);
    const auto fl = quench::temporal_fluctuations(setup, me.elements, ctx.cfg.tmax, ctx.cfg.nt);
    for (const auto& w : mc.warnings) ctx.prov.warnings.push_back(tag(L) + ": " + w);
    json entry{{"L", L},
               {"sector", spec.to_string()},
               {"init", init.label()},
               {"observable", obs.label()},
               {"e_bar", setup.e_bar},
               {"delta_e0", setup.delta_e0},
               {"DE", de},
               {"ME", mc.value},
               {"ME_window", mc.window},
               {"ME_states", mc.states},
               {"variance", fl.empirical},
               {"variance_analytic", fl.analytic},
               {"bound", fl.bound},
               {"degenerate_pairs", fl.degenerate_pairs},
               {"max_imag", ev.max_imag}};
    ctx.csv("quench_" + tag(L) + ".csv", {{"t", ev.times}, {"o", ev.values}}, entry);
    res["sizes"].push_back(entry);
  }
  ctx.summary("quench.json", res);
}

void cmd_rmt(Context& ctx) {
  rmt::EnsembleSpec spec;
  spec.kind = rmt::parse_ensemble(ctx.cfg.ensemble);
  spec.dim = ctx.cfg.dim;
  spec.seed = ctx.cfg.seed;
  json res{{"ensemble", rmt::to_string(spec.kind)}, {"dim", spec.dim}, {"seed", spec.seed}};
  if (spec.kind == rmt::Ensemble::GOE || spec.kind == rmt::Ensemble::GUE) {
    res["semicircle_ks"] = rmt::semicircle_ks(spec);
    const auto ratio = rmt::diag_offdiag_variance_ratio(spec, 20);
    res["variance_ratio"] = {{"analytic", ratio.analytic}, {"empirical", ratio.empirical}, {"stderr", ratio.stderr_}};
  }
  const auto pt = rmt::porter_thomas_test(spec, ctx.cfg.samples);
  res["porter_thomas"] = {{"ks", pt.ks}, {"mean_x", pt.mean_x}, {"var_x", pt.var_x}, {"samples", pt.samples}};
  ctx.summary("rmt.json", res);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eth-lab: eigenstate thermalization experiments on the spin-1 chain"};
  app.require_subcommand(1);
  std::string config_file;
  double lambda = 0, delta = 0, hz1 = 0, tmax = 0, omega_window = 0, omega_max = 0, broadening = 0;
  std::string bc, out, cache, init, ensemble;
  std::vector<int> sizes;
  std::vector<std::string> observables;
  int M = 0, site = 0, dim = 0;
  std::size_t nt = 0, bins = 0, samples = 0, states = 0;
  std::uint64_t seed = 0;
  app.add_option("--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
  auto* o_lambda = app.add_option("--lambda", lambda, "model parameter lambda");
  auto* o_delta = app.add_option("--delta", delta, "anisotropy Delta");
  auto* o_bc = app.add_option("--bc", bc, "pbc or obc")->check(CLI::IsMember({"pbc", "obc"}));
  auto* o_hz1 = app.add_option("--hz1", hz1, "boundary field on the first site (obc)");
  auto* o_L = app.add_option("-L,--sizes", sizes, "system sizes");
  auto* o_M = app.add_option("-M,--magnetization", M, "total magnetization");
  auto* o_obs = app.add_option("--obs", observables, "observables (zn, znn, jn, znn-local:<j>, znn-avg)");
  auto* o_out = app.add_option("-o,--out", out, "output directory");
  auto* o_cache = app.add_option("--cache", cache, "off, read or readwrite");
  auto* o_bins = app.add_option("--bins", bins, "histogram bins (0 = automatic)");
  auto* o_seed = app.add_option("--seed", seed, "random seed");
  app.fallthrough();

  const std::vector<std::pair<std::string, std::string>> commands{
      {"levels", "level-spacing ratio statistics"},
      {"dos", "density of states and its width"},
      {"page", "eigenstate entanglement entropy versus subsystem size"},
      {"eth-diag", "diagonal matrix elements and their fluctuations"},
      {"eth-offdiag", "off-diagonal matrix elements near the spectrum centre"},
      {"spectral", "variance and correlation spectral functions"},
      {"momentum-sf", "momentum-resolved spectral functions of a local operator"},
      {"obc-sf", "open-chain spectral functions split by distance from the centre"},
      {"quench", "unitary dynamics after a quench"},
      {"rmt", "random-matrix reference ensembles"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [n, help] : commands) subs[n] = app.add_subcommand(n, help);
  auto* o_ow = subs["eth-offdiag"]->add_option("--omega-window", omega_window, "max |omega| of sampled pairs");
  auto* o_omax = subs["spectral"]->add_option("--omega-max", omega_max, "last frequency bin edge");
  auto* o_br = subs["spectral"]->add_option("--broadening", broadening, "sigma in mean level spacings");
  auto* o_site = subs["momentum-sf"]->add_option("--site", site, "site of the local operator");
  auto* o_states = subs["page"]->add_option("--states", states, "mid-spectrum eigenstates");
  auto* o_init = subs["quench"]->add_option("--init", init, "neel, zeros or eig:<lambda>,<delta>");
  auto* o_tmax = subs["quench"]->add_option("--tmax", tmax, "final time");
  auto* o_nt = subs["quench"]->add_option("--nt", nt, "time points");
  auto* o_ens = subs["rmt"]->add_option("--ensemble", ensemble, "goe, gue, haar-o, haar-u");
  auto* o_dim = subs["rmt"]->add_option("--dim", dim, "matrix dimension");
  auto* o_samples = subs["rmt"]->add_option("--samples", samples, "Porter-Thomas samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    io::RunConfig cfg = config_file.empty() ? io::RunConfig{} : io::load_config(config_file);
    for (const auto& [n, sub] : subs) {
      if (sub->parsed()) cfg.command = n;
    }
    if (o_lambda->count()) cfg.model.lambda = lambda;
    if (o_delta->count()) cfg.model.delta = delta;
    if (o_bc->count()) cfg.model.bc = bc == "obc" ? basis::Boundary::Open : basis::Boundary::Periodic;
    if (o_hz1->count()) cfg.model.hz1 = hz1;
    if (o_L->count()) cfg.sizes = sizes;
    if (o_M->count()) cfg.M = M;
    if (o_obs->count()) cfg.observables = observables;
    if (o_out->count()) cfg.output_dir = out;
    if (o_cache->count()) cfg.cache = io::parse_cache_policy(cache);
    if (o_bins->count()) cfg.bins = bins;
    if (o_seed->count()) cfg.seed = seed;
    if (o_ow->count()) cfg.omega_window = omega_window;
    if (o_omax->count()) cfg.omega_max = omega_max;
    if (o_br->count()) cfg.broadening = broadening;
    if (o_site->count()) cfg.site = site;
    if (o_states->count()) cfg.page_states = states;
    if (o_init->count()) cfg.init = init;
    if (o_tmax->count()) cfg.tmax = tmax;
    if (o_nt->count()) cfg.nt = nt;
    if (o_ens->count()) cfg.ensemble = ensemble;
    if (o_dim->count()) cfg.dim = dim;
    if (o_samples->count()) cfg.samples = samples;
    cfg.validate();

    Context ctx{cfg, io::SpectrumCache::from_env(cfg.cache), {}, fs::path(cfg.output_dir)};
    ctx.prov.config = &ctx.cfg;
    ctx.prov.cache = &ctx.cache;
    fs::create_directories(ctx.out);
    const auto& c = cfg.command;
    if (c == "levels") cmd_levels(ctx);
    else if (c == "dos") cmd_dos(ctx);
    else if (c == "page") cmd_page(ctx);
    else if (c == "eth-diag") cmd_eth_diag(ctx);
    else if (c == "eth-offdiag") cmd_eth_offdiag(ctx);
    else if (c == "spectral") cmd_spectral(ctx);
    else if (c == "momentum-sf") cmd_momentum_sf(ctx);
    else if (c == "obc-sf") cmd_obc_sf(ctx);
    else if (c == "quench") cmd_quench(ctx);
    else if (c == "rmt") cmd_rmt(ctx);
    for (const auto& e : ctx.prov.errors) std::cerr << "error: " << e << '\n';
    return ctx.prov.errors.empty() ? 0 : 3;
  } catch (const InvalidSpec& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  }
}
