#pragma once

#include <functional>
#include <vector>

#include "raydiff/common/types.hpp"

namespace raydiff {

/// Continuous extension of one accepted Dormand-Prince step.
struct DenseSegment {
    double t0 = 0.0;
    double h = 0.0;
    Mat coeffs;  // n x 5

    Vec eval(double t) const;
};

struct Dopri5Options {
    double rtol = 1e-8;
    double atol = 1e-8;
    double initial_step = 0.0;  // 0 selects a step automatically
    double min_step = 1e-14;    // relative to max(1, |t|)
    long max_steps = 20'000'000;
    bool store_steps = true;
    bool store_dense = false;
    /// Times (ascending, within [t0, T]) at which the dense output is sampled.
    std::vector<double> output_times;
};

struct Dopri5Result {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<DenseSegment> dense;
    std::vector<Vec> outputs;
    long accepted = 0;
    long rejected = 0;
};

/// Rhs(t, y, dy). An exception of type `Recoverable` thrown by the rhs during
/// a trial stage rejects the step and retries with a smaller one.
using OdeRhs = std::function<void(double, const Vec&, Vec&)>;

/// Embedded 5(4) Runge-Kutta with PI step control and 4th-order dense output.
/// Throws IntegrationFailure (with the last accepted time) on step underflow.
Dopri5Result dopri5(const OdeRhs& f, double t0, const Vec& y0, double T, const Dopri5Options& opt);

}  // namespace raydiff
