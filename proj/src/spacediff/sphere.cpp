#include "raydiff/spacediff/sphere.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/special_functions/spherical_harmonic.hpp>

#include "raydiff/common/errors.hpp"
#include "raydiff/common/quadrature.hpp"
#include "raydiff/common/rng.hpp"

namespace raydiff {

double unit_sphere_area(int dim) { return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim); }

SphereQuadrature SphereQuadrature::product(int n_theta, int n_phi) {
    if (n_theta < 1 || n_phi < 1) throw ValidationError("sphere quadrature needs positive node counts");
    const auto gl = gauss_legendre(n_theta);
    SphereQuadrature q;
    const double dphi = 2.0 * std::numbers::pi / n_phi;
    for (int i = 0; i < n_theta; ++i) {
        const double z = gl.nodes[i];
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int j = 0; j < n_phi; ++j) {
            const double phi = (j + 0.5) * dphi;
            Vec p(3);
            p << s * std::cos(phi), s * std::sin(phi), z;
            q.nodes.push_back(p);
            q.weights.push_back(gl.weights[i] * dphi);
        }
    }
    return q;
}

double SphereQuadrature::average(const std::function<double(const Vec&)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s / (4.0 * std::numbers::pi);
}

SphereAverage sphere_average_mc(const std::function<double(const Vec&)>& f, int dim, int n, std::uint64_t seed) {
    if (n < 2) throw ValidationError("Monte Carlo sphere average needs n >= 2");
    Rng rng(seed);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = f(uniform_on_sphere(rng, dim));
        sum += v;
        sum2 += v * v;
    }
    SphereAverage a;
    a.mean = sum / n;
    a.se = std::sqrt(std::max(0.0, (sum2 / n - a.mean * a.mean) / (n - 1)));
    return a;
}

RealSphericalHarmonics::RealSphericalHarmonics(int L) : L_(L) {
    if (L < 1) throw ValidationError("spherical-harmonic degree must be >= 1");
}

int RealSphericalHarmonics::degree_of(int i) const { return static_cast<int>(std::floor(std::sqrt(i + 1.0))); }

void RealSphericalHarmonics::eval(const Vec& khat, Vec& values, Mat* grads) const {
    using cplx = std::complex<double>;
    const double z = std::clamp(khat(2), -1.0, 1.0);
    const double theta = std::acos(z);
    const double phi = std::atan2(khat(1), khat(0));
    const double st = std::sin(theta), ct = std::cos(theta);
    Vec e_theta(3), e_phi(3);
    e_theta << ct * std::cos(phi), ct * std::sin(phi), -st;
    e_phi << -std::sin(phi), std::cos(phi), 0.0;
    values.resize(size());
    if (grads) grads->resize(3, size());
    const cplx eiphi_inv = std::polar(1.0, -phi);
    std::vector<cplx> Y(L_ + 2);
    int idx = 0;
    for (int l = 1; l <= L_; ++l) {
        for (int m = 0; m <= l; ++m) Y[m] = boost::math::spherical_harmonic(l, m, theta, phi);
        Y[l + 1] = 0.0;
        for (int m = -l; m <= l; ++m, ++idx) {
            const int am = std::abs(m);
            const cplx y = Y[am];
            const double sgn = (am % 2) ? -1.0 : 1.0;
            const double f = m == 0 ? 1.0 : std::sqrt(2.0) * sgn;
            auto part = [&](cplx c) { return m >= 0 ? c.real() : c.imag(); };
            values(idx) = f * part(y);
            if (grads) {
                // d/dtheta Y_l^m = m cot(theta) Y_l^m + sqrt((l-m)(l+m+1)) e^{-i phi} Y_l^{m+1};
                // d/dphi Y_l^m = i m Y_l^m.
                const cplx dth = (am * ct / st) * y +
                                 std::sqrt(static_cast<double>((l - am) * (l + am + 1))) * eiphi_inv * Y[am + 1];
                const cplx dph_over_sin = cplx(0.0, am) * y / st;
                grads->col(idx) = f * (part(dth) * e_theta + part(dph_over_sin) * e_phi);
            }
        }
    }
}

}  // namespace raydiff
