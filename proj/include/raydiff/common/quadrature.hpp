#pragma once

#include <functional>
#include <vector>

#include "raydiff/common/types.hpp"

namespace raydiff {

struct QuadratureResult {
    Vec value;
    double error_estimate = 0.0;
    int intervals = 0;
    bool converged = false;
};

/// Globally adaptive Gauss-Kronrod (7/15) for vector-valued integrands on
/// [a, b]. Stops when the summed error estimate is below
/// max(abs_tol, rel_tol * |I|_inf) or after max_intervals bisections.
QuadratureResult integrate_gk15(const std::function<Vec(double)>& f, double a, double b,
                                double rel_tol, double abs_tol, int max_intervals = 400);

double integrate_gk15_scalar(const std::function<double(double)>& f, double a, double b,
                             double rel_tol, double abs_tol, double* error = nullptr);

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// n-point Gauss-Hermite rule for the weight exp(-x^2) on the real line.
QuadratureRule gauss_hermite(int n);

}  // namespace raydiff
