#pragma once

// Scenario files: one JSON document (comments allowed) per run. Unknown keys
// and type mismatches are ConfigError; out-of-range values are ValidationError.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "polykin/diagnostics.hpp"
#include "polykin/error.hpp"
#include "polykin/io.hpp"
#include "polykin/kinetics.hpp"
#include "polykin/rates.hpp"
#include "polykin/state.hpp"
#include "polykin/steady.hpp"

namespace polykin {

using json = nlohmann::json;

struct InitialProfile {
    enum class Kind { Zero, Gaussian, Exponential, Snapshot };
    Kind kind = Kind::Zero;
    double center = 0.0;
    double width = 0.0;
    double scale = 0.0;
    double number = 0.0;
    std::filesystem::path path;
};

struct DiagnosticsSpec {
    bool track_xbar = false;  // W2 to rho0 delta_xbar in the series
    std::vector<Theorem> fits;
    FitWindow window;
    bool m2_check = false;
};

struct SteadySpec {
    bool present = false;
    double M = 0.0;
    SteadyOptions opt;
    int k_max = 3;
    double gamma = 1.0;
    bool refine = true;  // solve again at 2n for the refinement checks
};

struct CharacteristicsSpec {
    std::size_t particles = 64;
    double dt = 1e-3;
};

struct Scenario {
    std::string name;
    RateModel model;
    Regime regime = Regime::Increasing;
    double x_max = 1.0;
    std::size_t cells = 1024;
    InitialProfile u0;
    std::optional<double> M;
    std::optional<double> V0;
    bool lagrangian = false;
    double lagrangian_dt = 1e-3;
    SolverOptions solver;
    DiagnosticsSpec diagnostics;
    SteadySpec steady;
    CharacteristicsSpec characteristics;
    json source;       // the document as parsed
    std::string hash;  // FNV-1a of the canonical dump
};

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

/// Typed access to one JSON object that rejects keys it was not asked about.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    double num(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
        return v.get<double>();
    }
    double num(const std::string& key, double fallback) { return has(key) ? num(key) : fallback; }

    long integer(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
        return v.get<long>();
    }
    long integer(const std::string& key, long fallback) { return has(key) ? integer(key) : fallback; }

    std::string str(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
        return v.get<std::string>();
    }
    std::string str(const std::string& key, const std::string& fallback) { return has(key) ? str(key) : fallback; }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(path(key) + ": expected true or false");
        return v.get<bool>();
    }

    Reader object(const std::string& key) { return Reader(at(key), path(key)); }
    const json& raw(const std::string& key) { return at(key); }
    std::string path(const std::string& key) const { return where_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(where_ + ": missing key '" + key + "'");
        return j_.at(key);
    }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

inline std::size_t count(Reader& r, const std::string& key, long fallback) {
    const long v = r.integer(key, fallback);
    if (v < 0) throw ValidationError(r.path(key) + ": must be >= 0");
    return static_cast<std::size_t>(v);
}

inline DepolyProfile parse_d(Reader r) {
    DepolyProfile d;
    const auto type = r.str("type");
    if (type == "linear") {
        d.form = LinearIncreasing{r.num("d0"), r.num("alpha")};
    } else if (type == "decaying") {
        d.form = DecayingInverse{r.num("d_inf"), r.num("C_d"), static_cast<int>(r.integer("n"))};
    } else {
        throw ConfigError("model.d.type: expected 'linear' or 'decaying', got '" + type + "'");
    }
    r.finish();
    return d;
}

inline FragProfile parse_frag(Reader r) {
    FragProfile f;
    const auto type = r.str("type");
    if (type == "constant") {
        f.rate = ConstantRate{r.num("B_m")};
    } else if (type == "saturated_power") {
        f.rate = SaturatedPower{r.num("b"), r.num("gamma"), r.num("x_sat")};
    } else {
        throw ConfigError("model.B.type: expected 'constant' or 'saturated_power', got '" + type + "'");
    }
    if (r.str("kernel", "uniform") != "uniform") throw ConfigError("model.B.kernel: only 'uniform' is supported");
    r.finish();
    return f;
}

inline InitialProfile parse_u0(Reader r, const std::filesystem::path& base) {
    InitialProfile p;
    const auto type = r.str("type");
    if (type == "zero") {
        p.kind = InitialProfile::Kind::Zero;
    } else if (type == "gaussian") {
        p.kind = InitialProfile::Kind::Gaussian;
        p.center = r.num("center");
        p.width = r.num("width");
        p.number = r.num("number");
    } else if (type == "exponential") {
        p.kind = InitialProfile::Kind::Exponential;
        p.scale = r.num("scale");
        p.number = r.num("number");
    } else if (type == "snapshot") {
        p.kind = InitialProfile::Kind::Snapshot;
        p.path = r.str("path");
        if (p.path.is_relative()) p.path = base / p.path;
    } else {
        throw ConfigError("initial.u0.type: expected zero, gaussian, exponential or snapshot, got '" + type + "'");
    }
    r.finish();
    return p;
}

inline Regime parse_regime(const std::string& s) {
    if (s == "increasing") return Regime::Increasing;
    if (s == "decreasing_with_fragmentation") return Regime::DecreasingWithFragmentation;
    throw ConfigError("regime: expected 'increasing' or 'decreasing_with_fragmentation', got '" + s + "'");
}

inline void validate(const Scenario& sc) {
    check_profile(sc.model.d);
    check_profile(sc.model.frag);
    check_nucleation(sc.model.nucleation);
    sc.solver.check();
    if (!(sc.x_max > 0.0)) throw ValidationError("grid.x_max must be > 0");
    if (sc.cells < 2) throw ValidationError("grid.cells must be >= 2");
    if (sc.M.has_value() == sc.V0.has_value()) throw ValidationError("initial: give exactly one of M and V0");
    if (sc.M && !(*sc.M > 0.0)) throw ValidationError("initial.M must be > 0");
    if (sc.V0 && !(*sc.V0 >= 0.0)) throw ValidationError("initial.V0 must be >= 0");
    const auto& u0 = sc.u0;
    if (u0.kind == InitialProfile::Kind::Gaussian && !(u0.width > 0.0 && u0.number >= 0.0 && u0.center >= 0.0))
        throw ValidationError("initial.u0: gaussian needs center >= 0, width > 0, number >= 0");
    if (u0.kind == InitialProfile::Kind::Exponential && !(u0.scale > 0.0 && u0.number >= 0.0))
        throw ValidationError("initial.u0: exponential needs scale > 0, number >= 0");
    if (!(sc.lagrangian_dt > 0.0)) throw ValidationError("solver.lagrangian_dt must be > 0");
    if (sc.characteristics.particles < 2) throw ValidationError("characteristics.particles must be >= 2");
    if (!(sc.characteristics.dt > 0.0)) throw ValidationError("characteristics.dt must be > 0");
    const bool inc = sc.model.d.increasing();
    if (sc.regime == Regime::Increasing && !inc)
        throw ValidationError("regime 'increasing' requires a linear increasing d");
    if (sc.regime == Regime::DecreasingWithFragmentation && (inc || sc.model.frag.vanishes()))
        throw ValidationError("regime 'decreasing_with_fragmentation' requires a decaying d and B > 0");
    if (sc.steady.present) {
        if (!(sc.steady.opt.R > 0.0)) throw ValidationError("steady.R must be > 0");
        if (sc.steady.opt.n < 8) throw ValidationError("steady.cells must be >= 8");
        if (!(sc.steady.M > 0.0)) throw ValidationError("steady.M must be > 0");
        if (sc.steady.k_max < 0) throw ValidationError("steady.k_max must be >= 0");
    }
}

} // namespace detail

/// Builds a scenario from a parsed document. `base` resolves relative snapshot paths.
inline Scenario parse_scenario(const json& doc, const std::filesystem::path& base = {}) {
    Scenario sc;
    sc.source = doc;
    sc.hash = fnv1a_hex(doc.dump());
    detail::Reader top(doc, "scenario");
    sc.name = top.str("name", "scenario");

    {
        auto m = top.object("model");
        sc.model.d = detail::parse_d(m.object("d"));
        if (m.has("B")) sc.model.frag = detail::parse_frag(m.object("B"));
        if (m.has("nucleation")) {
            auto n = m.object("nucleation");
            sc.model.nucleation.epsilon = static_cast<int>(n.integer("epsilon", 0));
            sc.model.nucleation.i0 = static_cast<int>(n.integer("i0", 1));
            n.finish();
        }
        m.finish();
    }
    sc.regime = top.has("regime") ? detail::parse_regime(top.str("regime"))
                                  : (sc.model.d.increasing() ? Regime::Increasing : Regime::DecreasingWithFragmentation);

    if (top.has("grid")) {
        auto g = top.object("grid");
        sc.x_max = g.num("x_max");
        sc.cells = detail::count(g, "cells", 1024);
        g.finish();
    }
    if (top.has("initial")) {
        auto in = top.object("initial");
        sc.u0 = detail::parse_u0(in.object("u0"), base);
        if (in.has("M")) sc.M = in.num("M");
        if (in.has("V0")) sc.V0 = in.num("V0");
        in.finish();
    } else {
        sc.M = 1.0;  // steady-only scenarios carry their mass in the steady block
    }
    if (top.has("solver")) {
        auto s = top.object("solver");
        const auto method = s.str("method", "eulerian");
        if (method != "eulerian" && method != "lagrangian")
            throw ConfigError("solver.method: expected 'eulerian' or 'lagrangian'");
        sc.lagrangian = method == "lagrangian";
        sc.lagrangian_dt = s.num("lagrangian_dt", sc.lagrangian_dt);
        auto& o = sc.solver;
        o.cfl = s.num("cfl", o.cfl);
        o.frag_stability = s.num("frag_stability", o.frag_stability);
        o.t_end = s.num("t_end", o.t_end);
        o.output_stride = s.num("output_stride", o.output_stride);
        o.leak_tolerance = s.num("leak_tolerance", o.leak_tolerance);
        o.conservation_tolerance = s.num("conservation_tolerance", o.conservation_tolerance);
        o.snapshot_every = static_cast<int>(s.integer("snapshot_every", o.snapshot_every));
        s.finish();
    }
    if (top.has("diagnostics")) {
        auto d = top.object("diagnostics");
        sc.diagnostics.track_xbar = d.boolean("track_xbar", false);
        sc.diagnostics.m2_check = d.boolean("m2_check", false);
        if (d.has("fits")) {
            const auto& arr = d.raw("fits");
            if (!arr.is_array()) throw ConfigError("diagnostics.fits: expected an array of names");
            for (const auto& f : arr) {
                if (!f.is_string()) throw ConfigError("diagnostics.fits: expected strings");
                auto th = theorem_from_string(f.get<std::string>());
                if (!th) throw ConfigError("diagnostics.fits: unknown estimator set '" + f.get<std::string>() + "'");
                sc.diagnostics.fits.push_back(*th);
            }
        }
        if (d.has("fit_window")) {
            const auto& w = d.raw("fit_window");
            if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
                throw ConfigError("diagnostics.fit_window: expected [t_lo, t_hi]");
            sc.diagnostics.window = {w[0].get<double>(), w[1].get<double>()};
        }
        d.finish();
    }
    if (top.has("steady")) {
        auto s = top.object("steady");
        auto& st = sc.steady;
        st.present = true;
        st.M = s.num("M");
        st.opt.R = s.num("R", st.opt.R);
        st.opt.n = detail::count(s, "cells", static_cast<long>(st.opt.n));
        if (s.has("eps")) st.opt.eps = s.num("eps");
        st.opt.scan_points = static_cast<int>(s.integer("scan_points", st.opt.scan_points));
        const auto path = s.str("path", "direct");
        if (path != "direct" && path != "faithful") throw ConfigError("steady.path: expected 'direct' or 'faithful'");
        st.opt.path = path == "direct" ? SteadyPath::Direct : SteadyPath::Faithful;
        st.k_max = static_cast<int>(s.integer("k_max", st.k_max));
        st.gamma = s.num("gamma", st.gamma);
        st.refine = s.boolean("refine", st.refine);
        s.finish();
    }
    if (top.has("characteristics")) {
        auto c = top.object("characteristics");
        sc.characteristics.particles = detail::count(c, "particles", 64);
        sc.characteristics.dt = c.num("dt", sc.characteristics.dt);
        c.finish();
    }
    top.finish();
    detail::validate(sc);
    return sc;
}

inline json parse_json_text(const std::string& text, const std::string& where) {
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(parse_json_text(buf.str(), path.string()), path.parent_path());
}

/// Initial state on the scenario grid with V from M or V0.
inline SystemState initial_state(const Scenario& sc) {
    SystemState s;
    if (sc.u0.kind == InitialProfile::Kind::Snapshot) {
        s = read_snapshot(sc.u0.path);
        s.t = 0.0;
    } else {
        s = SystemState(SizeGrid(sc.x_max, sc.cells), 0.0);
        const auto& p = sc.u0;
        if (p.kind != InitialProfile::Kind::Zero && p.number > 0.0) {
            double tot = 0.0;
            for (std::size_t i = 0; i < s.u.size(); ++i) {
                const double x = s.grid.center(i);
                s.u[i] = p.kind == InitialProfile::Kind::Gaussian
                             ? std::exp(-0.5 * (x - p.center) * (x - p.center) / (p.width * p.width))
                             : std::exp(-x / p.scale);
                if (s.u[i] < density_floor) s.u[i] = 0.0;
                tot += s.u[i];
            }
            if (!(tot > 0.0)) throw ValidationError("initial.u0: profile vanishes on the grid");
            const double c = p.number / (tot * s.grid.dx());
            for (double& v : s.u) v *= c;
        }
    }
    const double poly = polymer_mass(s);
    if (sc.M) {
        s.V = *sc.M - poly;
        if (s.V < 0.0) throw ValidationError("initial: M is smaller than the polymer mass of u0");
    } else {
        s.V = *sc.V0;
    }
    if (!(total_mass(s) > 0.0)) throw ValidationError("initial: total mass must be > 0");
    return s;
}

/// Replaces the number at a dotted path ("model.nucleation.i0") in a document.
inline json with_value(json doc, const std::string& dotted, double value) {
    json* node = &doc;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!node->is_object() || !node->contains(part))
            throw ValidationError("sweep axis '" + dotted + "' does not name a field of the scenario");
        node = &(*node)[part];
    }
    if (!node->is_number()) throw ValidationError("sweep axis '" + dotted + "' is not a scalar number");
    if (node->is_number_integer()) {
        if (value != std::floor(value)) throw ValidationError("sweep axis '" + dotted + "' takes integers");
        *node = static_cast<long>(value);
    } else {
        *node = value;
    }
    return doc;
}

} // namespace polykin
