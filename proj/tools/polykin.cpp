// Command-line front end: simulate, steady, characteristics, sweep, verify.
// Exit codes: 0 success, 1 malformed config or usage, 2 validation failure,
// 3 runtime failure (including failed verification checks).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "polykin/polykin.hpp"

namespace fs = std::filesystem;
using namespace polykin;

namespace {

enum Exit { Ok = 0, ParseFailure = 1, ValidationFailure = 2, RuntimeFailure = 3 };

struct CommonArgs {
    std::string config;
    std::string out;
    std::optional<long> resolution;
};

fs::path output_dir(const CommonArgs& a, const std::string& fallback_name) {
    if (!a.out.empty()) return a.out;
    if (const char* env = std::getenv("POLYKIN_OUT"); env && *env) return fs::path(env) / fallback_name;
    return fs::path("out") / fallback_name;
}

std::string config_stem(const CommonArgs& a) { return fs::path(a.config).stem().string(); }

json read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str(), path);
}

/// Parses the config, applying --resolution to `block.key` (grid.cells, steady.cells,
/// characteristics.particles).
Scenario load(const CommonArgs& a, const char* block, const char* key = "cells") {
    auto doc = read_config(a.config);
    if (a.resolution) {
        if (*a.resolution < 2) throw ValidationError("--resolution must be >= 2");
        if (!doc.is_object() || !doc.contains(block) || !doc[block].is_object())
            throw ValidationError(std::string("--resolution needs a '") + block + "' block in the config");
        doc[block][key] = *a.resolution;
    }
    return parse_scenario(doc, fs::path(a.config).parent_path());
}

json error_block(const std::exception& e, Exit code) {
    const char* kind = code == ParseFailure ? "parse" : code == ValidationFailure ? "validation" : "runtime";
    std::string type = "Error";
    if (dynamic_cast<const ConfigError*>(&e)) type = "ConfigError";
    else if (dynamic_cast<const ValidationError*>(&e)) type = "ValidationError";
    else if (dynamic_cast<const LeakOverflowError*>(&e)) type = "LeakOverflowError";
    else if (dynamic_cast<const BlowUpError*>(&e)) type = "BlowUpError";
    else if (dynamic_cast<const StepSizeError*>(&e)) type = "StepSizeError";
    else if (dynamic_cast<const ConservationError*>(&e)) type = "ConservationError";
    else if (dynamic_cast<const NoSignChangeError*>(&e)) type = "NoSignChangeError";
    else if (dynamic_cast<const ConvergenceError*>(&e)) type = "ConvergenceError";
    json j = {{"kind", kind}, {"type", type}, {"message", e.what()}};
    if (const auto* leak = dynamic_cast<const LeakOverflowError*>(&e))
        j["grid_hint"] = {{"x_max_suggested", leak->x_max_suggested()}};
    if (const auto* ns = dynamic_cast<const NoSignChangeError*>(&e)) {
        json scan = json::array();
        for (const auto& [V, lam] : ns->scan()) scan.push_back({V, lam});
        j["scan"] = scan;
    }
    return j;
}

Exit classify(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return ParseFailure;
    if (dynamic_cast<const ValidationError*>(&e)) return ValidationFailure;
    return RuntimeFailure;
}

void write_report(const fs::path& dir, const std::string& file, json report) {
    write_atomic(dir / file, report.dump(2) + "\n");
}

/// Runs `body`, turning exceptions into an error report and exit code.
template <class Body>
int guarded(const fs::path& dir, const std::string& file, json base, Body&& body) {
    try {
        return body(base);
    } catch (const std::exception& e) {
        const Exit code = classify(e);
        base["status"] = "error";
        base["exit_code"] = static_cast<int>(code);
        base["error"] = error_block(e, code);
        std::cerr << "polykin: " << e.what() << "\n";
        try {
            write_report(dir, file, base);
        } catch (const std::exception& w) {
            std::cerr << "polykin: could not write report: " << w.what() << "\n";
        }
        return code;
    }
}

json assumptions_json(const ValidityReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back({{"label", c.label}, {"status", to_string(c.status)}, {"detail", c.detail}});
    return {{"regime", to_string(r.regime)}, {"all_pass", r.all_pass()}, {"checks", checks},
            {"witness", {{"alpha", r.alpha}, {"beta", r.beta}, {"B_m", r.B_m}, {"B_M", r.B_M}, {"A", r.A}, {"c", r.c},
                         {"gamma", r.gamma}, {"C", r.C}}}};
}

json fits_json(const std::vector<RateFitReport>& fits) {
    json out = json::array();
    for (const auto& f : fits)
        out.push_back({{"estimator", f.estimator}, {"fitted", f.fitted}, {"theory", f.theory},
                       {"relative_error", f.relative_error}, {"t_lo", f.t_lo}, {"t_hi", f.t_hi},
                       {"quality", f.quality},
                       {"kind", f.kind == RateFitReport::Kind::Limit ? "limit" : "upper_envelope"}});
    return out;
}

/// Result of one simulate-style run, shared by simulate and sweep.
struct SimOutcome {
    TimeSeries series;
    std::optional<RunResult> eulerian;
    std::optional<CriticalSize> critical;
    json fits = json::array();
    json m2 = nullptr;
};

SimOutcome simulate_scenario(const Scenario& sc, bool keep_snapshots) {
    SimOutcome out;
    const auto s0 = initial_state(sc);
    RunProbes probes;
    if (sc.diagnostics.track_xbar) {
        out.critical = predict_xbar(total_mass(s0), number(s0), sc.model.d);
        probes.xbar = out.critical->xbar;
    }
    if (sc.lagrangian) {
        out.series = run_lagrangian(ensemble_from_state(s0), sc.model.d, sc.solver.t_end, sc.solver.output_stride,
                                    sc.lagrangian_dt, probes.xbar);
    } else {
        auto opt = sc.solver;
        if (!keep_snapshots) opt.snapshot_every = 0;
        out.eulerian = run(s0, sc.model, opt, probes);
        out.series = out.eulerian->series;
    }
    for (auto th : sc.diagnostics.fits) {
        try {
            auto f = fits_json(fit_rates(out.series, sc.model, th, sc.diagnostics.window));
            for (auto& x : f) {
                x["set"] = to_string(th);
                out.fits.push_back(x);
            }
        } catch (const Error& e) {
            out.fits.push_back({{"set", to_string(th)}, {"error", e.what()}});
        }
    }
    if (sc.diagnostics.m2_check) {
        try {
            const auto m2 = m2_decay_check(out.series, sc.regime);
            out.m2 = {{"pass", m2.pass}, {"ratio", m2.ratio}, {"decay_constant", m2.decay_constant}};
        } catch (const Error& e) {
            out.m2 = {{"error", e.what()}};
        }
    }
    return out;
}

json base_report(const std::string& command, const std::string& hash) {
    return {{"tool", tool_version}, {"command", command}, {"config_hash", hash}};
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonArgs& a) {
    const auto dir = output_dir(a, config_stem(a));
    return guarded(dir, "report.json", base_report("simulate", ""), [&](json& rep) {
        const auto sc = load(a, "grid");
        rep["config_hash"] = sc.hash;
        rep["scenario"] = sc.name;
        rep["assumptions"] = assumptions_json(validate_assumptions(sc.model, sc.regime));
        const auto res = simulate_scenario(sc, true);
        const ArtifactMeta meta{tool_version, sc.hash};

        std::vector<std::string> artifacts = {"series.csv"};
        write_atomic(dir / "series.csv", series_csv(res.series, meta));
        if (res.eulerian) {
            const auto& L = res.eulerian->ledger;
            write_atomic(dir / "final.csv", snapshot_csv(res.eulerian->final_state, meta));
            artifacts.push_back("final.csv");
            std::size_t k = 0;
            for (const auto& snap : res.series.snapshots) {
                char name[64];
                std::snprintf(name, sizeof name, "snapshots/snap_%05zu.csv", k++);
                write_atomic(dir / name, snapshot_csv(snap, meta));
                artifacts.push_back(name);
            }
            rep["audit"] = {{"M", L.M},
                            {"leaked", L.leaked},
                            {"clipped", L.clipped},
                            {"absorbed_number", L.absorbed_number},
                            {"nucleated", L.nucleated},
                            {"max_conservation_error", L.max_conservation_error},
                            {"conservation_tolerance", sc.solver.conservation_tolerance},
                            {"steps", L.steps},
                            {"entropy_clamps", L.entropy_clamps}};
        }
        rep["solver"] = sc.lagrangian ? "lagrangian" : "eulerian";
        const auto& last = res.series.back();
        rep["final"] = {{"t", last.t}, {"V", last.V}, {"rho", last.rho}, {"M1", last.M1}, {"M2", last.M2}, {"H", last.H}};
        if (res.critical) rep["critical_size"] = {{"xbar", res.critical->xbar}, {"Vbar", res.critical->Vbar}};
        rep["fits"] = res.fits;
        if (!res.m2.is_null()) rep["m2_check"] = res.m2;
        rep["artifacts"] = artifacts;
        rep["status"] = "ok";
        rep["exit_code"] = 0;
        write_report(dir, "report.json", rep);
        std::cout << "simulate " << sc.name << ": t = " << last.t << ", V = " << last.V << ", rho = " << last.rho
                  << " -> " << dir.string() << "\n";
        return static_cast<int>(Ok);
    });
}

json steady_json(const SteadyStateReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}, {"detail", c.detail}});
    json scan = json::array();
    for (const auto& [V, lam] : r.search.scan) scan.push_back({V, lam});
    return {{"path", to_string(r.path)},
            {"Vbar", r.Vbar},
            {"lambda", r.lambda},
            {"eigen_residual", r.eigen_residual},
            {"M", r.M},
            {"mass_scale", r.mass_scale},
            {"x0", r.x0},
            {"x_min", r.x_min},
            {"R", r.R},
            {"cells", r.n},
            {"eps", r.eps},
            {"stationarity_residual", r.stationarity_residual},
            {"stationarity_residual_cell", r.stationarity_residual_cell},
            {"roots", r.search.roots},
            {"bisections", r.search.bisections},
            {"scan", scan},
            {"checks", checks},
            {"all_checks_pass", r.all_checks_pass()}};
}

int cmd_steady(const CommonArgs& a, const std::string& path_flag) {
    const auto dir = output_dir(a, config_stem(a));
    return guarded(dir, "steady_report.json", base_report("steady", ""), [&](json& rep) {
        const auto sc = load(a, "steady");
        rep["config_hash"] = sc.hash;
        rep["scenario"] = sc.name;
        if (!sc.steady.present) throw ValidationError("steady: the config has no 'steady' block");
        const auto validity = validate_assumptions(sc.model, Regime::DecreasingWithFragmentation);
        rep["assumptions"] = assumptions_json(validity);
        if (sc.model.d.increasing() || !validity.all_pass()) {
            const auto* f = validity.first_failure();
            throw ValidationError("steady: the decreasing-d regime is required; failing assumption: " +
                                  (f ? f->label : std::string("d_decreasing")));
        }
        auto opt = sc.steady.opt;
        if (path_flag == "direct") opt.path = SteadyPath::Direct;
        if (path_flag == "faithful") opt.path = SteadyPath::Faithful;

        auto fut = std::async(std::launch::async, [&] { return solve_steady(sc.model, opt, sc.steady.M); });
        std::optional<SteadyStateReport> fine;
        if (sc.steady.refine) {
            auto o2 = opt;
            o2.n = 2 * opt.n;
            fine = solve_steady(sc.model, o2, sc.steady.M);
        }
        auto report = fut.get();
        if (fine) report.checks = verify_estimates(report, *fine, sc.model, sc.steady.k_max, sc.steady.gamma);

        const ArtifactMeta meta{tool_version, sc.hash};
        write_atomic(dir / "steady_U.csv", profile_csv(report.U, meta));
        rep["steady"] = steady_json(report);
        if (fine) rep["refined"] = {{"cells", fine->n}, {"Vbar", fine->Vbar}, {"lambda", fine->lambda}};
        rep["artifacts"] = {"steady_U.csv"};
        rep["status"] = "ok";
        rep["exit_code"] = 0;
        write_report(dir, "steady_report.json", rep);
        std::cout << "steady " << sc.name << " (" << to_string(opt.path) << "): Vbar = " << fmt(report.Vbar)
                  << ", lambda = " << fmt(report.lambda) << ", checks " << (report.all_checks_pass() ? "pass" : "FAIL")
                  << " -> " << dir.string() << "\n";
        return static_cast<int>(Ok);
    });
}

int cmd_characteristics(const CommonArgs& a) {
    const auto dir = output_dir(a, config_stem(a));
    return guarded(dir, "characteristics_report.json", base_report("characteristics", ""), [&](json& rep) {
        auto sc = load(a, "characteristics", "particles");
        rep["config_hash"] = sc.hash;
        rep["scenario"] = sc.name;
        if (sc.u0.kind != InitialProfile::Kind::Snapshot) sc.cells = sc.characteristics.particles;
        auto e = ensemble_from_state(initial_state(sc));
        if (e.size() == 0) throw ValidationError("characteristics: initial density is empty");
        std::size_t ref = 0;
        for (std::size_t j = 1; j < e.size(); ++j)
            if (e.w[j] > e.w[ref]) ref = j;
        const double z_ref = e.z[ref];
        const double g0 = entropy_g(e, z_ref);
        const bool linear = sc.model.d.increasing();
        const double alpha = linear ? eval_d_prime(sc.model.d, 0.0) : 0.0;

        std::vector<TrajectoryRow> rows;
        bool bound_holds = true;
        double envelope = 0.0;
        auto record = [&] {
            rows.push_back({e.t, e.X, e.V, entropy_g(e, z_ref)});
            if (linear) {
                bound_holds = bound_holds && characteristic_bound_holds(e, sc.model.d);
                if (g0 > 0.0) envelope = std::max(envelope, rows.back().g / g0 / std::exp(-2.0 * alpha * e.t));
            }
        };
        record();
        const auto n_out = static_cast<std::size_t>(std::ceil(sc.solver.t_end / sc.solver.output_stride - 1e-9));
        for (std::size_t k = 1; k <= n_out; ++k) {
            e = evolve_to(std::move(e), sc.model.d, std::min(sc.solver.t_end, k * sc.solver.output_stride),
                          sc.characteristics.dt);
            record();
        }
        const ArtifactMeta meta{tool_version, sc.hash};
        write_atomic(dir / "trajectory.csv", trajectory_csv(rows, meta));
        rep["particles"] = e.size();
        rep["z_ref"] = z_ref;
        rep["M"] = e.M;
        rep["final"] = {{"t", e.t}, {"V", e.V}, {"number", e.number()}, {"polymer_mass", e.polymer_mass()}};
        if (linear) {
            rep["characteristic_bound_holds"] = bound_holds;
            rep["g_envelope_ratio"] = envelope;
        }
        rep["artifacts"] = {"trajectory.csv"};
        rep["status"] = "ok";
        rep["exit_code"] = 0;
        write_report(dir, "characteristics_report.json", rep);
        std::cout << "characteristics " << sc.name << ": " << e.size() << " particles to t = " << e.t << " -> "
                  << dir.string() << "\n";
        return static_cast<int>(Ok);
    });
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        const auto tok = item.substr(b, e - b + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size()) throw ValidationError("sweep: '" + tok + "' is not a number");
        out.push_back(v);
    }
    return out;
}

int cmd_sweep(const CommonArgs& a, const std::string& axis, const std::string& values_text) {
    const auto dir = output_dir(a, config_stem(a) + "_sweep");
    return guarded(dir, "sweep_report.json", base_report("sweep", ""), [&](json& rep) {
        const auto doc = read_config(a.config);
        const auto values = parse_values(values_text);
        if (values.empty()) throw ValidationError("sweep: the value list is empty");
        const auto base = parse_scenario(doc, fs::path(a.config).parent_path());
        rep["config_hash"] = base.hash;
        rep["scenario"] = base.name;
        rep["axis"] = axis;
        std::vector<json> docs;
        for (double v : values) docs.push_back(with_value(doc, axis, v));

        struct Row {
            double value = 0.0;
            std::string status = "ok";
            std::string error;
            double V = std::nan(""), rho = std::nan(""), M2 = std::nan("");
            json fits = json::array();
        };
        std::vector<std::future<Row>> jobs;
        for (std::size_t k = 0; k < values.size(); ++k)
            jobs.push_back(std::async(std::launch::async, [&, k] {
                Row row;
                row.value = values[k];
                try {
                    const auto sc = parse_scenario(docs[k], fs::path(a.config).parent_path());
                    const auto res = simulate_scenario(sc, false);
                    row.V = res.series.back().V;
                    row.rho = res.series.back().rho;
                    row.M2 = res.series.back().M2;
                    row.fits = res.fits;
                } catch (const std::exception& e) {
                    const Exit code = classify(e);
                    row.status = code == ParseFailure ? "parse_error"
                                 : code == ValidationFailure ? "validation_error" : "runtime_error";
                    row.error = e.what();
                }
                return row;
            }));

        std::ostringstream csv;
        csv << meta_line({tool_version, base.hash}) << "value,status,V_end,rho_end,M2_end,fits,error\n";
        json rows = json::array();
        bool all_ok = true;
        for (auto& j : jobs) {
            const auto row = j.get();
            all_ok = all_ok && row.status == "ok";
            std::string fits;
            for (const auto& f : row.fits) {
                if (!f.contains("fitted")) continue;
                if (!fits.empty()) fits += ';';
                fits += f["estimator"].get<std::string>() + "=" + fmt(f["fitted"].get<double>());
            }
            std::string err = row.error;
            for (char& c : err)
                if (c == ',' || c == '\n') c = ' ';
            csv << fmt(row.value) << ',' << row.status << ',' << fmt(row.V) << ',' << fmt(row.rho) << ','
                << fmt(row.M2) << ',' << fits << ',' << err << '\n';
            rows.push_back({{"value", row.value}, {"status", row.status}, {"V_end", row.V}, {"rho_end", row.rho},
                            {"M2_end", row.M2}, {"fits", row.fits}, {"error", row.error}});
        }
        write_atomic(dir / "sweep.csv", csv.str());
        rep["rows"] = rows;
        rep["artifacts"] = {"sweep.csv"};
        const int code = all_ok ? Ok : RuntimeFailure;
        rep["status"] = all_ok ? "ok" : "partial";
        rep["exit_code"] = code;
        write_report(dir, "sweep_report.json", rep);
        std::cout << "sweep " << axis << " over " << values.size() << " values -> " << dir.string() << "\n";
        return code;
    });
}

int cmd_verify(const std::string& suite, const std::string& out) {
    CommonArgs a;
    a.out = out;
    const auto dir = output_dir(a, "verify");
    return guarded(dir, "verify_" + suite + ".json", base_report("verify", ""), [&](json& rep) {
        std::vector<std::string> names;
        if (suite == "all") {
            names = suite_names();
        } else {
            const auto& known = suite_names();
            if (std::find(known.begin(), known.end(), suite) == known.end())
                throw ValidationError("verify: unknown suite '" + suite + "'");
            names = {suite};
        }
        std::vector<std::future<SuiteReport>> jobs;
        for (const auto& n : names) jobs.push_back(std::async(std::launch::async, [n] { return run_suite(n); }));
        json suites = json::array();
        bool ok = true;
        for (auto& j : jobs) {
            const auto r = j.get();
            ok = ok && r.pass();
            std::cout << "suite " << r.suite << ": " << (r.pass() ? "PASS" : "FAIL") << " (" << fmt(r.seconds)
                      << " s)\n";
            if (!r.error.empty()) std::cout << "  aborted: " << r.error << "\n";
            for (const auto& c : r.checks)
                std::cout << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name << ": " << fmt(c.measured) << ' '
                          << c.relation << ' ' << fmt(c.limit) << "\n";
            suites.push_back(to_json(r));
        }
        rep["suites"] = suites;
        rep["pass"] = ok;
        rep["status"] = ok ? "ok" : "failed";
        rep["exit_code"] = ok ? 0 : 3;
        write_report(dir, "verify_" + suite + ".json", rep);
        return ok ? static_cast<int>(Ok) : static_cast<int>(RuntimeFailure);
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"polykin: polymerization kinetics simulator and steady-state solver"};
    app.require_subcommand(1);

    CommonArgs common;
    long resolution = 0;
    auto add_common = [&](CLI::App* sub, bool with_resolution) {
        sub->add_option("--config", common.config, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "output directory");
        if (with_resolution) sub->add_option("--resolution", resolution, "number of cells");
    };

    auto* simulate = app.add_subcommand("simulate", "integrate a scenario in time");
    add_common(simulate, true);
    auto* steady = app.add_subcommand("steady", "solve for the steady state");
    add_common(steady, true);
    std::string path_flag;
    steady->add_option("--path", path_flag, "eigenproblem formulation")->check(CLI::IsMember({"direct", "faithful"}));
    auto* chars = app.add_subcommand("characteristics", "track particles along characteristics");
    add_common(chars, true);
    auto* sweep = app.add_subcommand("sweep", "run a scenario over a list of values of one field");
    add_common(sweep, false);
    std::string axis, values;
    sweep->add_option("--axis", axis, "dotted path of a numeric field, e.g. model.nucleation.i0")->required();
    sweep->add_option("--values", values, "comma-separated values")->required();
    auto* verify = app.add_subcommand("verify", "run an acceptance suite");
    std::string suite = "all";
    std::string verify_out;
    verify->add_option("--suite", suite, "T21, T23, T24, T26, T28, props or all");
    verify->add_option("--out", verify_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ParseFailure;
    }
    for (auto* sub : {simulate, steady, chars})
        if (sub->parsed() && sub->count("--resolution")) common.resolution = resolution;

    if (simulate->parsed()) return cmd_simulate(common);
    if (steady->parsed()) return cmd_steady(common, path_flag);
    if (chars->parsed()) return cmd_characteristics(common);
    if (sweep->parsed()) return cmd_sweep(common, axis, values);
    return cmd_verify(suite, verify_out);
}
