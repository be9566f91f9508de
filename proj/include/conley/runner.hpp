#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conley/scenario.hpp"
#include "conley/verify.hpp"
#include "conley/version.hpp"

namespace conley {

struct RunOptions {
  std::string subcommand = "all";
  int threads = 0;  // 0 = hardware default
  std::uint64_t seed = 0;
  std::optional<std::string> cells_out;
};

struct RunOutcome {
  json report;
  int exit_code = 0;  // 0 pass, 1 any failure
};

namespace detail {

inline json witness_json(const Witness& w) {
  json j;
  json pt = json::array();
  for (std::size_t i = 0; i < w.point.size(); ++i) pt.push_back(w.point[i]);
  j["point"] = pt;
  j["time"] = w.time;
  j["violation"] = w.violation;
  j["detail"] = w.detail;
  return j;
}

inline json check_json(const CheckResult& r) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["samples"] = r.samples;
  if (r.soft_violations) j["soft_violations"] = r.soft_violations;
  if (!r.note.empty()) j["note"] = r.note;
  json ws = json::array();
  for (const auto& w : r.witnesses) ws.push_back(witness_json(w));
  if (!ws.empty()) j["witnesses"] = ws;
  return j;
}

inline json deformation_json(const DeformationReport& r) {
  json j;
  j["a"] = r.a;
  j["b"] = r.b;
  j["delta"] = r.delta;
  j["T"] = r.T;
  if (r.eps > 0) j["eps"] = r.eps;
  j["samples"] = r.samples;
  j["failures"] = r.failures;
  j["verdict"] = to_string(r.verdict);
  json ws = json::array();
  for (const auto& w : r.witnesses) ws.push_back(witness_json(w));
  if (!ws.empty()) j["witnesses"] = ws;
  return j;
}

inline json cover_json(const CoverReport& r) {
  json j;
  json levels = json::array();
  for (const auto& L : r.levels)
    levels.push_back({{"value", L.value}, {"eps", L.eps}, {"t_band", L.t_band}});
  j["levels"] = levels;
  j["t_base"] = r.t_base;
  j["t0"] = r.t0;
  j["times"] = r.times;
  j["samples"] = r.samples;
  j["absorbed"] = r.absorbed;
  j["captured"] = r.captured;
  j["failures"] = r.failures;
  j["verdict"] = to_string(r.verdict);
  if (r.n_version != Verdict::unchecked) j["n_version"] = to_string(r.n_version);
  json ws = json::array();
  for (const auto& w : r.witnesses) ws.push_back(witness_json(w));
  if (!ws.empty()) j["witnesses"] = ws;
  return j;
}

inline json critical_json(const std::vector<CriticalPoint>& crits) {
  json arr = json::array();
  for (const auto& cp : crits) {
    json pt = json::array();
    for (std::size_t i = 0; i < cp.location.size(); ++i) pt.push_back(cp.location[i]);
    arr.push_back({{"location", pt}, {"f", cp.f_value}, {"grad_norm", cp.grad_norm}});
  }
  return arr;
}

class StageTimer {
 public:
  explicit StageTimer(json& timing, std::string key)
      : timing_(timing), key_(std::move(key)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start_)
                        .count();
    timing_[key_] = ms;
  }

 private:
  json& timing_;
  std::string key_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Runs the configured pipeline. Reports are byte-identical across runs and
/// worker-cap settings apart from the "timing" object.
inline RunOutcome run_scenario(const ScenarioConfig& sc, const RunOptions& opt) {
  if (opt.threads > 0) set_worker_cap(opt.threads);
  RunOutcome out;
  json& rep = out.report;
  rep["name"] = sc.name;
  rep["config"] = scenario_echo(sc);
  rep["seed"] = opt.seed;
  rep["versions"] = {{"conley", kVersion}};
  json& timing = rep["timing"];
  timing["threads"] = opt.threads > 0 ? opt.threads : worker_cap();
  json& results = rep["results"];

  bool any_fail = false;
  auto track = [&](Verdict v) {
    if (v == Verdict::fail) any_fail = true;
  };

  auto field = std::make_shared<ScalarField>(sc.objective, sc.domain);
  {
    const auto warns = field->periodicity_warnings();
    if (!warns.empty()) rep["warnings"] = warns;
  }
  PseudoGradientField y(field, sc.mode);
  auto grid = std::make_shared<CubicalGrid>(sc.domain, sc.resolution);
  const IntegratorConfig& cfg = sc.integrator;

  // Assemble the pair.
  IndexPairData pair;
  {
    detail::StageTimer t(timing, "pair_ms");
    switch (sc.pair.source) {
      case PairSource::benci: {
        CellSet a(grid);
        if (sc.pair.box) {
          for (std::size_t c = 0; c < grid->cell_count(); ++c) {
            const Vec ctr = grid->center(c);
            bool in = true;
            for (std::size_t i = 0; i < grid->dim(); ++i)
              if (ctr[i] < (*sc.pair.box)[i][0] || ctr[i] > (*sc.pair.box)[i][1]) in = false;
            if (in) a.insert(c);
          }
        } else {
          a = CellSet::full(grid);
        }
        CellSet trapped = compute_trapped_set(y, a, sc.pair.T, cfg);
        CellSet slice = compute_exit_slice(y, a, trapped, sc.pair.T, cfg);
        pair = make_index_pair(std::move(trapped), std::move(slice), sc.pair.T);
        pair.isolating = check_isolation(a, pair.N);
        break;
      }
      case PairSource::radial_band: {
        CellSet n(grid);
        for (std::size_t c = 0; c < grid->cell_count(); ++c) {
          const Vec ctr = grid->center(c);
          double r2 = 0;
          for (std::size_t i = 0; i < grid->dim(); ++i) r2 += ctr[i] * ctr[i];
          const double r = std::sqrt(r2);
          if (r >= sc.pair.r_min && r <= sc.pair.r_max) n.insert(c);
        }
        pair = make_index_pair(n, combinatorial_boundary(n));
        break;
      }
      case PairSource::explicit_files: {
        std::ifstream nf(sc.pair.n_cells), lf(sc.pair.l_cells);
        CellSet n = load_cells_csv(nf, grid);
        CellSet l = load_cells_csv(lf, grid);
        pair = make_index_pair(std::move(n), std::move(l));
        break;
      }
    }
  }
  if (pair.degenerate) rep["warnings"].push_back("degenerate pair: L = N");

  const double axiom_horizon =
      sc.pair.source == PairSource::benci ? 3.0 * sc.pair.T : sc.pair.horizon;

  std::vector<std::string> todo;
  if (opt.subcommand == "all")
    todo = sc.checks;
  else
    todo = {opt.subcommand};
  auto wants = [&](const std::string& s) {
    for (const auto& t : todo)
      if (t == s) return true;
    return false;
  };

  // Shared intermediates.
  std::optional<std::vector<CriticalPoint>> crits;
  auto get_crits = [&]() -> const std::vector<CriticalPoint>& {
    if (!crits) crits = find_critical_points(*field, pair.V, sc.tolerances.grad_tol);
    return *crits;
  };
  std::optional<ForwardCore> core;
  std::optional<LyapunovData> lyap;
  std::optional<RegularizedPair> regularized;

  try {
    if (wants("index-pair")) {
      detail::StageTimer t(timing, "index_pair_ms");
      check_pair_axioms(pair, y, axiom_horizon, cfg);
      check_weak_regularity(pair, y, axiom_horizon, cfg);
      check_immediate_exit(pair, y, axiom_horizon, cfg);
      json jp;
      jp["N_cells"] = pair.N.count();
      jp["L_cells"] = pair.L.count();
      jp["V_cells"] = pair.V.count();
      if (sc.pair.source == PairSource::benci) {
        jp["T"] = pair.T;
        jp["isolating"] = detail::check_json(pair.isolating);
        track(pair.isolating.verdict);
        const auto escape = check_exit_slice_escape(y, pair.N, pair.L, 3.0 * sc.pair.T, cfg);
        jp["exit_slice_escape"] = detail::check_json(escape);
        track(escape.verdict);
      }
      jp["axiom_i"] = detail::check_json(pair.axiom_i);
      jp["axiom_ii"] = detail::check_json(pair.axiom_ii);
      jp["weakly_regular"] = detail::check_json(pair.weakly_regular);
      jp["regular_criterion"] = detail::check_json(pair.regular_criterion);
      track(pair.axiom_i.verdict);
      track(pair.axiom_ii.verdict);
      track(pair.weakly_regular.verdict);
      track(pair.regular_criterion.verdict);
      results["index_pair"] = jp;
    }

    if (wants("lyapunov")) {
      detail::StageTimer t(timing, "lyapunov_ms");
      if (pair.weakly_regular.verdict == Verdict::unchecked)
        check_weak_regularity(pair, y, axiom_horizon, cfg);
      json jl;
      if (pair.weakly_regular.verdict == Verdict::fail) {
        jl["verdict"] = "skipped";
        jl["note"] = "pair is not weakly regular";
      } else {
        std::vector<SeedPoint> seeds;
        for (const auto& cp : get_crits()) seeds.push_back({cp.cell, cp.location});
        core = forward_core(pair.V, y, sc.tolerances.horizon, cfg, seeds);
        lyap = compute_lyapunov(pair, y, *core, cfg, sc.tolerances.t_cut);
        jl["core_cells"] = core->cells.count();
        double min_core_g = 1.0, max_l_g = 0.0, min_g = 2.0, max_g = -1.0;
        core->cells.for_each([&](std::size_t c) { min_core_g = std::min(min_core_g, lyap->g[c]); });
        pair.N.for_each([&](std::size_t c) {
          min_g = std::min(min_g, lyap->g[c]);
          max_g = std::max(max_g, lyap->g[c]);
        });
        pair.L.for_each([&](std::size_t c) { max_l_g = std::max(max_l_g, lyap->g[c]); });
        jl["t_cut"] = lyap->t_cut;
        jl["tail_bound"] = lyap->tail_bound;
        jl["min_core_g"] = min_core_g;
        jl["max_L_g"] = max_l_g;
        jl["g_range"] = {min_g, max_g};
        regularized = regularize(pair, *lyap, *core, sc.tolerances.epsilon);
        check_immediate_exit(regularized->pair, y, axiom_horizon, cfg);
        jl["epsilon"] = regularized->epsilon;
        jl["L_prime_cells"] = regularized->pair.L.count();
        jl["added_cells"] = regularized->added_cells;
        jl["regularized_criterion"] = detail::check_json(regularized->pair.regular_criterion);
        track(regularized->pair.regular_criterion.verdict);
        jl["verdict"] = to_string(regularized->pair.regular_criterion.verdict);
      }
      results["lyapunov"] = jl;
    }

    if (wants("cohomology")) {
      detail::StageTimer t(timing, "cohomology_ms");
      PairComplex cx(pair.N, pair.L);
      Cohomology coh(cx);
      json jc;
      json cells = json::array(), acells = json::array(), brel = json::array(),
           babs = json::array();
      for (std::size_t k = 0; k <= grid->dim(); ++k) {
        cells.push_back(cx.cells(k));
        acells.push_back(cx.subcomplex_cells(k));
        brel.push_back(coh.betti_rel(k));
        babs.push_back(coh.betti_abs(k));
      }
      jc["cells"] = cells;
      jc["subcomplex_cells"] = acells;
      jc["betti_rel"] = brel;
      jc["betti_abs"] = babs;
      jc["euler_betti"] = coh.euler_from_betti_rel();
      jc["euler_cells"] = coh.euler_from_cells_rel();
      const auto val = coh.validate();
      jc["ring_laws"] = val.ok ? "pass" : "fail";
      if (!val.ok) jc["ring_messages"] = val.messages;
      jc["cuplength"] = coh.cuplength();
      const auto rc = coh.relative_cuplength();
      jc["relative_cuplength"] = rc.value;
      if (rc.relative_trivial) jc["note"] = "relative cohomology vanishes: no information";
      jc["nonzero_products"] = coh.nonzero_basis_products();
      const bool euler_ok = coh.euler_from_betti_rel() == coh.euler_from_cells_rel();
      jc["euler_consistent"] = euler_ok;
      if (!val.ok || !euler_ok) any_fail = true;
      results["cohomology"] = jc;
    }

    if (wants("deform")) {
      detail::StageTimer t(timing, "deform_ms");
      if (!sc.deform) throw ConfigError("deform requested but the config has no deform block");
      sc.deform->require_levels();
      json jd;
      const auto first = first_deformation(pair, y, *field, get_crits(), *sc.deform->a,
                                           *sc.deform->b, cfg, sc.samples, opt.seed);
      jd["first"] = detail::deformation_json(first);
      track(first.verdict);
      const auto second =
          second_deformation(pair, y, *field, get_crits(), *sc.deform->c, *sc.deform->eps0,
                             sc.deform->T, sc.u_halfwidth(*grid), cfg, sc.samples, opt.seed);
      jd["second"] = detail::deformation_json(second);
      track(second.verdict);
      results["deform"] = jd;
    }

    std::optional<BoundReport> bound;
    if (wants("bound")) {
      detail::StageTimer t(timing, "bound_ms");
      bound = verify_bound(pair, y, *field, cfg, sc.tolerances.grad_tol, sc.u_halfwidth(*grid),
                           sc.samples, opt.seed);
      json jb;
      jb["critical_points"] = detail::critical_json(bound->crits);
      jb["critical_count"] = bound->crits.size();
      jb["relative_cuplength"] = bound->cl;
      if (bound->cl_trivial) jb["note"] = "relative cohomology vanishes: no information";
      jb["cuplength"] = bound->cuplength_abs;
      jb["betti_rel"] = bound->betti_rel;
      jb["ring_laws"] = bound->ring_ok ? "pass" : "fail";
      jb["uniform_exit_T"] = bound->exit_horizon.T;
      jb["uniform_exit_exists"] = bound->exit_horizon.exists;
      jb["exit_neighborhood"] = detail::check_json(bound->exit_horizon.neighborhood);
      json ps;
      ps["min_grad_norm"] = bound->palais_smale.min_grad_norm;
      ps["verdict"] = to_string(bound->palais_smale.verdict);
      if (!bound->palais_smale.note.empty()) ps["note"] = bound->palais_smale.note;
      jb["palais_smale"] = ps;
      jb["chain"] = bound->chain_note;
      jb["verdict"] = to_string(bound->verdict);
      track(bound->verdict);
      track(bound->palais_smale.verdict);
      results["bound"] = jb;
      results["cover"] = detail::cover_json(bound->cover);
      track(bound->cover.verdict);
    }

    if (wants("cover") && !bound) {
      detail::StageTimer t(timing, "cover_ms");
      const auto cover = covering_times(pair, y, *field, get_crits(), sc.u_halfwidth(*grid), cfg,
                                        sc.samples, opt.seed,
                                        pair.regular_criterion.verdict == Verdict::pass);
      results["cover"] = detail::cover_json(cover);
      track(cover.verdict);
    }
  } catch (const ConfigError&) {
    throw;  // usage errors keep their own exit status
  } catch (const std::exception& e) {
    // Partial reports are still written: everything computed so far stays in
    // `results`, the error is recorded, and the run counts as failed.
    results["error"] = e.what();
    any_fail = true;
  }

  if (opt.cells_out) {
    namespace fs = std::filesystem;
    fs::create_directories(*opt.cells_out);
    auto dump = [&](const std::string& fname, const CellSet& s) {
      std::ofstream f(fs::path(*opt.cells_out) / fname);
      dump_cells_csv(f, s);
    };
    dump("N.csv", pair.N);
    dump("L.csv", pair.L);
    dump("V.csv", pair.V);
    if (core) dump("core.csv", core->cells);
    if (regularized) dump("L_prime.csv", regularized->pair.L);
    if (lyap) {
      std::ofstream f(fs::path(*opt.cells_out) / "lyapunov.csv");
      dump_lyapunov_csv(f, pair.N, *lyap);
    }
  }

  rep["status"] = any_fail ? "fail" : "pass";
  out.exit_code = any_fail ? 1 : 0;
  return out;
}

}  // namespace conley
