#pragma once

#include <limits>
#include <vector>

#include "polykin/state.hpp"

namespace polykin {

/// One row of a time series. W2 is NaN unless a Dirac target is tracked.
struct Sample {
    double t = 0.0;
    double V = 0.0;
    double rho = 0.0;
    double M1 = 0.0;
    double M2 = 0.0;
    double H = 0.0;
    double leak = 0.0;
    double clipped = 0.0;
    double W2 = std::numeric_limits<double>::quiet_NaN();
};

struct TimeSeries {
    double M = 0.0;  // total mass of the run
    std::vector<Sample> samples;
    std::vector<SystemState> snapshots;

    bool empty() const { return samples.empty(); }
    const Sample& back() const { return samples.back(); }
};

} // namespace polykin
