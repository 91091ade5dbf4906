#pragma once

// Plain-text artifacts: series, snapshot and trajectory CSVs. Every file is
// written to a temporary sibling first and renamed into place.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "polykin/error.hpp"
#include "polykin/series.hpp"
#include "polykin/state.hpp"

namespace polykin {

inline constexpr const char* tool_version = "polykin 0.1.0";

/// Provenance stamped into every artifact.
struct ArtifactMeta {
    std::string version = tool_version;
    std::string config_hash;
};

/// Shortest text that round-trips the double.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out.flush()) throw Error("write to " + tmp.string() + " failed");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string meta_line(const ArtifactMeta& meta) {
    return "# " + meta.version + " config=" + meta.config_hash + "\n";
}

inline std::string series_csv(const TimeSeries& series, const ArtifactMeta& meta) {
    std::ostringstream out;
    out << meta_line(meta) << "# M=" << fmt(series.M) << "\n";
    out << "t,V,rho,M1,M2,H,leak,clipped,W2\n";
    for (const auto& s : series.samples)
        out << fmt(s.t) << ',' << fmt(s.V) << ',' << fmt(s.rho) << ',' << fmt(s.M1) << ',' << fmt(s.M2) << ','
            << fmt(s.H) << ',' << fmt(s.leak) << ',' << fmt(s.clipped) << ',' << fmt(s.W2) << '\n';
    return out.str();
}

inline std::string snapshot_csv(const SystemState& s, const ArtifactMeta& meta) {
    std::ostringstream out;
    out << meta_line(meta);
    out << "# t=" << fmt(s.t) << ",V=" << fmt(s.V) << ",M=" << fmt(total_mass(s)) << ",x_max=" << fmt(s.grid.x_max())
        << "\n";
    out << "x,u\n";
    for (std::size_t i = 0; i < s.u.size(); ++i) out << fmt(s.grid.center(i)) << ',' << fmt(s.u[i]) << '\n';
    return out.str();
}

/// Reads a file written by snapshot_csv.
inline SystemState read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open snapshot " + path.string());
    double t = 0.0, V = std::nan(""), x_max = std::nan("");
    std::vector<double> u;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream fields(line.substr(1));
            std::string kv;
            while (std::getline(fields, kv, ',')) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                auto key = kv.substr(0, eq);
                key.erase(0, key.find_first_not_of(' '));
                if (key != "t" && key != "V" && key != "x_max") continue;
                const double val = std::stod(kv.substr(eq + 1));
                if (key == "t") t = val;
                if (key == "V") V = val;
                if (key == "x_max") x_max = val;
            }
            continue;
        }
        if (!header) {
            if (line != "x,u") throw Error("snapshot " + path.string() + ": expected header x,u");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error("snapshot " + path.string() + ": malformed row");
        u.push_back(std::stod(line.substr(comma + 1)));
    }
    if (std::isnan(V) || std::isnan(x_max) || u.size() < 2)
        throw Error("snapshot " + path.string() + ": missing V, x_max or rows");
    SystemState s(SizeGrid(x_max, u.size()), V, t);
    s.u = std::move(u);
    return s;
}

/// One row per sample: t, X_1..X_n, V, g.
struct TrajectoryRow {
    double t = 0.0;
    std::vector<double> X;
    double V = 0.0;
    double g = 0.0;
};

inline std::string trajectory_csv(const std::vector<TrajectoryRow>& rows, const ArtifactMeta& meta) {
    std::ostringstream out;
    out << meta_line(meta);
    out << 't';
    const std::size_t n = rows.empty() ? 0 : rows.front().X.size();
    for (std::size_t j = 1; j <= n; ++j) out << ",X_" << j;
    out << ",V,g\n";
    for (const auto& r : rows) {
        out << fmt(r.t);
        for (double x : r.X) out << ',' << fmt(x);
        out << ',' << fmt(r.V) << ',' << fmt(r.g) << '\n';
    }
    return out.str();
}

/// x, dx, U columns of a steady profile.
template <class Profile>
std::string profile_csv(const Profile& p, const ArtifactMeta& meta) {
    std::ostringstream out;
    out << meta_line(meta) << "x,dx,U\n";
    for (std::size_t i = 0; i < p.size(); ++i) out << fmt(p.x[i]) << ',' << fmt(p.dx[i]) << ',' << fmt(p.U[i]) << '\n';
    return out.str();
}

} // namespace polykin
