#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "raydiff/raytrace/raytrace.hpp"

namespace raydiff {

struct ProbeComparison {
    EvalPoint probe;
    double lhs = 0.0, lhs_se = 0.0;  // finite-scale Monte Carlo side
    double rhs = 0.0, rhs_se = 0.0;  // limit side
    double diff() const { return lhs - rhs; }
    double combined_se() const;
};

struct Rung {
    double parameter = 0.0;  // delta or gamma
    double discrepancy = 0.0;  // sup over probes of |lhs - rhs|
    double error = 0.0;        // error bar at the maximizing probe
    std::size_t argmax = 0;
    std::vector<ProbeComparison> probes;
};

struct ScalingReport {
    std::string id;
    std::string ladder_name;  // "delta" or "gamma"
    std::vector<Rung> rungs;
    /// Empty when no verdict applies.
    std::string verdict_rule;
    bool trend_ok = true;
    std::optional<double> slope;
    std::map<std::string, double> metrics;
    std::vector<std::string> notes;
    double error_bar_se = 2.0;
    double runtime_seconds = 0.0;
    int jobs = 1;
    std::uint64_t seed = 0;

    /// Fills discrepancy/error/argmax of a rung from its probes.
    void finalize_rung(Rung& r) const;
    /// Each rung below its predecessor by more than the two error bars.
    bool strictly_decreasing() const;

    std::string to_json() const;
    /// One row per (rung, probe); deterministic given the inputs.
    std::string to_csv() const;
};

}  // namespace raydiff
