#include "raydiff/momdiff/tensors.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "json.hpp"
#include "raydiff/common/errors.hpp"
#include "raydiff/common/quadrature.hpp"

namespace raydiff {

namespace {

void check_direction(const CorrelationModel& corr, const Vec& khat, double k) {
    if (khat.size() != corr.dim()) throw DimensionError(static_cast<int>(khat.size()));
    if (std::abs(khat.norm() - 1.0) > 1e-10) throw ValidationError("khat must be a unit vector");
    if (!(k > 0.0)) throw ValidationError("momentum modulus must be positive");
}

std::vector<double> upper_triangle(const Mat& m) {
    std::vector<double> v;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = i; j < m.cols(); ++j) v.push_back(m(i, j));
    return v;
}

Mat from_upper_triangle(const Vec& v, int d) {
    Mat m(d, d);
    int idx = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) m(i, j) = m(j, i) = v(idx++);
    return m;
}

}  // namespace

double ray_truncation(const CorrelationModel& corr, const Vec& khat, double tail_tol) {
    const double peak = corr.rc_hessian(Vec::Zero(corr.dim())).cwiseAbs().maxCoeff();
    if (peak == 0.0) return 0.0;
    const double ell = corr.ell();
    tail_tol = std::max(tail_tol, corr.tail_floor());
    auto small_on = [&](double s0) {
        for (int i = 0; i <= 32; ++i) {
            const double s = s0 * (1.0 + i / 32.0);
            const Vec y = s * khat;
            const double v = std::max(corr.rc_hessian(y).cwiseAbs().maxCoeff(),
                                      s * corr.rc_grad_laplacian(y).cwiseAbs().maxCoeff());
            if (v >= tail_tol * peak) return false;
        }
        return true;
    };
    for (double s = 0.5 * ell; s <= 400.0 * ell; s *= 1.1)
        if (small_on(s)) return s;
    throw QuadratureTruncation("correlation derivatives along the ray do not fall below " +
                               std::to_string(tail_tol) + " of their peak within 400 ell");
}

Mat compute_D(const CorrelationModel& corr, const BackgroundHamiltonian& h0, const Vec& khat, double k,
              const QuadSpec& quad) {
    check_direction(corr, khat, k);
    const int d = corr.dim();
    if (corr.is_zero()) return Mat::Zero(d, d);
    const double smax = quad.s_max > 0.0 ? quad.s_max : ray_truncation(corr, khat, quad.tail_tol);
    auto res = integrate_gk15(
        [&](double s) {
            const Mat h = corr.rc_hessian(s * khat);
            std::vector<double> u = upper_triangle(h);
            return Vec(Eigen::Map<Vec>(u.data(), u.size()));
        },
        0.0, smax, quad.rel_tol, quad.abs_tol, quad.max_intervals);
    if (!res.converged)
        throw QuadratureTruncation("diffusion-matrix quadrature did not converge: error estimate " +
                                   std::to_string(res.error_estimate) + " after " + std::to_string(res.intervals) +
                                   " intervals");
    const double hk = corr.envelope().value(k);
    return -(hk * hk / h0.d1(k)) * from_upper_triangle(res.value, d);
}

Vec compute_drift_E(const CorrelationModel& corr, const BackgroundHamiltonian& h0, const Vec& khat, double k,
                    const QuadSpec& quad) {
    check_direction(corr, khat, k);
    const int d = corr.dim();
    if (corr.is_zero()) return Vec::Zero(d);
    const double smax = quad.s_max > 0.0 ? quad.s_max : ray_truncation(corr, khat, quad.tail_tol);
    auto res = integrate_gk15([&](double s) { return Vec(s * corr.rc_grad_laplacian(s * khat)); }, 0.0, smax,
                              quad.rel_tol, quad.abs_tol, quad.max_intervals);
    if (!res.converged)
        throw QuadratureTruncation("drift quadrature did not converge: error estimate " +
                                   std::to_string(res.error_estimate));
    const double hk = corr.envelope().value(k);
    return -(hk * hk / (h0.d1(k) * k)) * res.value;
}

Mat compute_D_regularized(const CorrelationModel& corr, const BackgroundHamiltonian& h0, const Vec& khat, double k) {
    check_direction(corr, khat, k);
    const int d = corr.dim();
    if (corr.is_zero()) return Mat::Zero(d, d);
    constexpr int levels = 8;
    const double theta0 = 0.2 / corr.ell();
    boost::math::quadrature::exp_sinh<double> integrator;
    Mat out(d, d);
    for (int m = 0; m < d; ++m)
        for (int n = m; n < d; ++n) {
            double table[levels];
            for (int j = 0; j < levels; ++j) {
                const double theta = theta0 * std::ldexp(1.0, -j);
                auto f = [&](double s) {
                    if (s > 1e6 * corr.ell()) return 0.0;
                    return corr.rc_hessian(s * khat)(m, n) * std::exp(-theta * s);
                };
                table[j] = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
            }
            // Neville extrapolation to theta = 0.
            double th[levels];
            for (int j = 0; j < levels; ++j) th[j] = theta0 * std::ldexp(1.0, -j);
            for (int lvl = 1; lvl < levels; ++lvl)
                for (int j = levels - 1; j >= lvl; --j)
                    table[j] = table[j] + (table[j] - table[j - 1]) * th[j] / (th[j - lvl] - th[j]);
            out(m, n) = out(n, m) = table[levels - 1];
        }
    const double hk = corr.envelope().value(k);
    return -(hk * hk / h0.d1(k)) * out;
}

IsotropicClosedForms isotropic_closed_forms(const CorrelationModel& corr, const BackgroundHamiltonian& h0, double k,
                                            const QuadSpec& quad) {
    if (!corr.is_isotropic()) throw ValidationError("closed forms require an isotropic correlation model");
    const int d = corr.dim();
    IsotropicClosedForms cf;
    const double hk = corr.envelope().value(k);
    if (!corr.is_zero()) {
        Vec e = Vec::Unit(d, 0);
        const double smax = quad.s_max > 0.0 ? quad.s_max : ray_truncation(corr, e, quad.tail_tol);
        double g[2];
        // R'(s)/s = g_1(s).
        const double integral = integrate_gk15_scalar(
            [&](double s) {
                corr.profile().g(s, 1, g);
                return g[1];
            },
            0.0, smax, quad.rel_tol, quad.abs_tol);
        cf.Dbar0 = -hk * hk * integral;
    }
    const double v = h0.d1(k);
    cf.D0 = cf.Dbar0 / v;
    if (!(cf.Dbar0 > 0.0)) throw DegenerateDiffusion("isotropic diffusion coefficient Dbar0 <= 0");
    cf.chi_coefficient = v * v * k * k / ((d - 1) * cf.Dbar0);
    cf.a_scalar = v * v * v * k * k / (d * (d - 1) * cf.Dbar0);
    return cf;
}

MomentumDiffusionTensors::MomentumDiffusionTensors(std::shared_ptr<const CorrelationModel> corr,
                                                   BackgroundHamiltonian h0, QuadSpec quad)
    : corr_(std::move(corr)), h0_(std::move(h0)), quad_(quad) {}

Mat MomentumDiffusionTensors::D(const Vec& khat, double k) const { return compute_D(*corr_, h0_, khat, k, quad_); }

Vec MomentumDiffusionTensors::E(const Vec& khat, double k) const {
    return compute_drift_E(*corr_, h0_, khat, k, quad_);
}

double MomentumDiffusionTensors::D0(double k) const {
    if (corr_->is_zero()) return 0.0;
    return isotropic_closed_forms(*corr_, h0_, k, quad_).D0;
}

std::string tensors_json(const MomentumDiffusionTensors& t, const std::vector<Vec>& khats,
                         const std::vector<double>& ks) {
    nlohmann::json arr = nlohmann::json::array();
    for (double k : ks)
        for (const Vec& kh : khats) {
            const Mat D = t.D(kh, k);
            const Vec E = t.E(kh, k);
            nlohmann::json rec;
            rec["khat"] = std::vector<double>(kh.data(), kh.data() + kh.size());
            rec["k"] = k;
            std::vector<std::vector<double>> rows(D.rows(), std::vector<double>(D.cols()));
            for (int i = 0; i < D.rows(); ++i)
                for (int j = 0; j < D.cols(); ++j) rows[i][j] = D(i, j);
            rec["D"] = rows;
            rec["E"] = std::vector<double>(E.data(), E.data() + E.size());
            arr.push_back(rec);
        }
    return arr.dump(2);
}

}  // namespace raydiff
