#pragma once

#include "specpred/io.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace specpred {

struct SweepRow {
    std::vector<double> params;  // one value per axis
    double delta = 0.0;          // max |D(t) - D0| of the point's delay
    bool certified = true;
    double kappa_hat = 0.0;  // NaN when the point has a zero initial state
    double kappa = 0.0;
    std::vector<double> ratios;  // worst ratio per estimate; NaN without fitted constants
    bool pass = false;

    // pass | fail | uncertified
    std::string status() const;
};

struct SweepResult {
    std::vector<std::string> axes;
    std::vector<std::string> estimates;
    std::vector<SweepRow> rows;

    // Every certified row passes.
    bool pass() const;
};

// Cartesian grid over the axes, evaluated independently per point. A
// delay_amplitude axis gets one extra uncertified row at 1.5 delta_max.
SweepResult run_sweep(const Scenario& base, const std::vector<SweepAxis>& axes, int jobs = 1);

void write_sweep_csv(std::ostream& os, const SweepResult& r);

}  // namespace specpred
