#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "polykin/io.hpp"
#include "polykin/scenario.hpp"
#include "polykin/verify.hpp"

using namespace polykin;
namespace fs = std::filesystem;

namespace {

json minimal() {
    return json::parse(R"({
        "name": "t",
        "regime": "increasing",
        "model": { "d": { "type": "linear", "d0": 0.5, "alpha": 1.0 } },
        "grid": { "x_max": 3.0, "cells": 300 },
        "initial": { "u0": { "type": "gaussian", "center": 1.0, "width": 0.2, "number": 1.0 }, "M": 2.0 },
        "solver": { "t_end": 1.0 }
    })");
}

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("polykin_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST(Scenario, ParsesMinimal) {
    const auto sc = parse_scenario(minimal());
    EXPECT_EQ(sc.name, "t");
    EXPECT_EQ(sc.cells, 300u);
    const auto s = initial_state(sc);
    EXPECT_NEAR(number(s), 1.0, 1e-12);
    EXPECT_NEAR(total_mass(s), 2.0, 1e-12);
}

TEST(Scenario, UnknownKeyIsConfigError) {
    auto doc = minimal();
    doc["grid"]["cell"] = 10;
    EXPECT_THROW(parse_scenario(doc), ConfigError);
}

TEST(Scenario, WrongTypeIsConfigError) {
    auto doc = minimal();
    doc["grid"]["x_max"] = "three";
    EXPECT_THROW(parse_scenario(doc), ConfigError);
}

TEST(Scenario, SyntaxErrorIsConfigError) {
    EXPECT_THROW(parse_json_text("{ \"name\": ", "inline"), ConfigError);
    EXPECT_NO_THROW(parse_json_text("{ // comment\n \"a\": 1 }", "inline"));
}

TEST(Scenario, MassAndV0AreExclusive) {
    auto doc = minimal();
    doc["initial"]["V0"] = 1.0;
    EXPECT_THROW(parse_scenario(doc), ValidationError);
}

TEST(Scenario, RegimeMustMatchProfile) {
    auto doc = minimal();
    doc["regime"] = "decreasing_with_fragmentation";
    EXPECT_THROW(parse_scenario(doc), ValidationError);
}

TEST(Scenario, SweepAxis) {
    const auto doc = minimal();
    const auto changed = with_value(doc, "initial.M", 2.5);
    EXPECT_DOUBLE_EQ(changed["initial"]["M"].get<double>(), 2.5);
    EXPECT_NE(parse_scenario(changed).hash, parse_scenario(doc).hash);
    EXPECT_TRUE(with_value(doc, "grid.cells", 400)["grid"]["cells"].is_number_integer());
    EXPECT_THROW(with_value(doc, "grid.nope", 1.0), ValidationError);
    EXPECT_THROW(with_value(doc, "name", 1.0), ValidationError);
}

TEST(Scenario, HashIsStable) {
    EXPECT_EQ(parse_scenario(minimal()).hash, parse_scenario(minimal()).hash);
    EXPECT_EQ(fnv1a_hex("").size(), 16u);
}

TEST(Scenario, ShippedFilesMatchBuiltins) {
    for (const auto& [name, text] : builtin_scenario_texts()) {
        const auto path = fs::path(POLYKIN_SOURCE_DIR) / "scenarios" / (name + ".json");
        ASSERT_TRUE(fs::exists(path)) << path;
        const auto file = load_scenario(path);
        EXPECT_EQ(file.hash, builtin_scenario(name).hash) << name;
    }
}

TEST(Io, FormatRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5}) EXPECT_EQ(std::stod(fmt(v)), v);
    EXPECT_EQ(fmt(std::nan("")), "nan");
}

TEST(Io, SnapshotRoundTrip) {
    const auto dir = temp_dir("snapshot");
    SystemState s(SizeGrid(2.0, 16), 0.75, 1.5);
    for (std::size_t i = 0; i < s.u.size(); ++i) s.u[i] = 0.1 * static_cast<double>(i) / 3.0;
    write_atomic(dir / "snap.csv", snapshot_csv(s, {tool_version, "abc"}));
    const auto back = read_snapshot(dir / "snap.csv");
    EXPECT_EQ(back.grid, s.grid);
    EXPECT_EQ(back.V, s.V);
    EXPECT_EQ(back.t, s.t);
    EXPECT_EQ(back.u, s.u);
    EXPECT_FALSE(fs::exists(dir / "snap.csv.tmp"));
    fs::remove_all(dir);
}

TEST(Io, SnapshotInitialProfile) {
    const auto dir = temp_dir("snapinit");
    SystemState s(SizeGrid(2.0, 8), 0.5);
    s.u[2] = 1.0;
    write_atomic(dir / "u0.csv", snapshot_csv(s, {}));
    auto doc = minimal();
    doc["grid"] = {{"x_max", 2.0}, {"cells", 8}};
    doc["initial"] = {{"u0", {{"type", "snapshot"}, {"path", "u0.csv"}}}, {"M", 1.0}};
    const auto sc = parse_scenario(doc, dir);
    const auto st = initial_state(sc);
    EXPECT_EQ(st.u, s.u);
    EXPECT_NEAR(total_mass(st), 1.0, 1e-15);
    fs::remove_all(dir);
}

TEST(Io, SeriesHeader) {
    TimeSeries ts;
    ts.M = 1.0;
    ts.samples.push_back({});
    const auto csv = series_csv(ts, {tool_version, "h"});
    std::istringstream in(csv);
    std::string l1, l2, l3;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    EXPECT_EQ(l1, "# polykin 0.1.0 config=h");
    EXPECT_EQ(l3, "t,V,rho,M1,M2,H,leak,clipped,W2");
}
