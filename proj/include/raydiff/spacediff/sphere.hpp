#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "raydiff/common/types.hpp"

namespace raydiff {

/// Gamma_{d-1}, the area of the unit sphere in R^d.
double unit_sphere_area(int dim);

/// Nodes on S^2 with weights summing to 4 pi: Gauss-Legendre in cos(theta)
/// times the trapezoid rule in phi. Exact for polynomials of degree
/// <= min(2 n_theta - 1, n_phi - 1).
struct SphereQuadrature {
    std::vector<Vec> nodes;
    std::vector<double> weights;

    static SphereQuadrature product(int n_theta, int n_phi);
    /// (1 / Gamma_2) sum_q w_q f(node_q).
    double average(const std::function<double(const Vec&)>& f) const;
};

struct SphereAverage {
    double mean = 0.0;
    double se = 0.0;  // 0 for deterministic quadrature
};

/// Monte Carlo average over S^{d-1} with n uniform points.
SphereAverage sphere_average_mc(const std::function<double(const Vec&)>& f, int dim, int n, std::uint64_t seed);

/// Real orthonormal spherical harmonics of degrees 1..L on S^2 (the
/// constants are excluded), with their surface gradients as 3-vectors.
class RealSphericalHarmonics {
  public:
    explicit RealSphericalHarmonics(int L);

    int degree() const { return L_; }
    int size() const { return (L_ + 1) * (L_ + 1) - 1; }
    /// Degree of basis function i.
    int degree_of(int i) const;

    /// values(i) = Y_i(khat); grads.col(i) = tangential gradient of Y_i.
    void eval(const Vec& khat, Vec& values, Mat* grads = nullptr) const;

  private:
    int L_;
};

}  // namespace raydiff
