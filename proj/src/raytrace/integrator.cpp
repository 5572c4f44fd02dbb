#include "raydiff/raytrace/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "raydiff/common/errors.hpp"

namespace raydiff {

namespace {
constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
constexpr double a21 = 0.2;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace

Vec DenseSegment::eval(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return coeffs.col(0) +
           th * (coeffs.col(1) + th1 * (coeffs.col(2) + th * (coeffs.col(3) + th1 * coeffs.col(4))));
}

Dopri5Result dopri5(const OdeRhs& f, double t0, const Vec& y0, double T, const Dopri5Options& opt) {
    const Eigen::Index n = y0.size();
    Dopri5Result res;
    Vec y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ys(n), ynew(n), err(n);
    double t = t0;
    if (opt.store_steps) {
        res.times.push_back(t);
        res.states.push_back(y);
    }
    std::size_t next_out = 0;
    while (next_out < opt.output_times.size() && opt.output_times[next_out] <= t0) {
        res.outputs.push_back(y0);
        ++next_out;
    }
    if (T <= t0) return res;

    f(t, y, k1);
    auto scale = [&](const Vec& a, const Vec& b) {
        return (opt.atol + opt.rtol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix();
    };
    double h = opt.initial_step;
    if (h <= 0.0) {
        const Vec sc = scale(y, y);
        const double dn0 = std::sqrt((y.cwiseQuotient(sc)).squaredNorm() / n);
        const double dn1 = std::sqrt((k1.cwiseQuotient(sc)).squaredNorm() / n);
        h = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
        h = std::min(h, T - t0);
    }
    double err_old = 1e-4;
    bool last_rejected = false;
    const double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9, facmin = 0.2, facmax = 10.0;

    while (t < T) {
        if (res.accepted + res.rejected > opt.max_steps)
            throw IntegrationFailure("step budget exhausted", t);
        if (h < opt.min_step * std::max(1.0, std::abs(t))) throw IntegrationFailure("step size underflow", t);
        const bool final_step = t + 1.01 * h >= T;
        if (final_step) h = T - t;
        bool stage_failed = false;
        try {
            ys = y + h * a21 * k1;
            f(t + c2 * h, ys, k2);
            ys = y + h * (a31 * k1 + a32 * k2);
            f(t + c3 * h, ys, k3);
            ys = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            f(t + c4 * h, ys, k4);
            ys = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            f(t + c5 * h, ys, k5);
            ys = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            f(t + h, ys, k6);
            ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            f(t + h, ynew, k7);
        } catch (const ShellExit&) {
            // A trial stage strayed outside the momentum shell; a smaller
            // step decides whether the path itself leaves it.
            if (h * 0.25 < opt.min_step * std::max(1.0, std::abs(t))) throw;
            stage_failed = true;
        }
        if (stage_failed) {
            h *= 0.25;
            ++res.rejected;
            last_rejected = true;
            continue;
        }
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double e = std::sqrt(err.cwiseQuotient(scale(y, ynew)).squaredNorm() / n);
        if (!std::isfinite(e)) throw IntegrationFailure("non-finite error estimate", t);
        const double fac11 = std::pow(std::max(e, 1e-300), expo1);
        double fac = fac11 / std::pow(err_old, beta);
        fac = std::clamp(fac / safe, 1.0 / facmax, 1.0 / facmin);
        if (e <= 1.0) {
            err_old = std::max(e, 1e-4);
            if (opt.store_dense || next_out < opt.output_times.size()) {
                DenseSegment seg;
                seg.t0 = t;
                seg.h = h;
                seg.coeffs.resize(n, 5);
                seg.coeffs.col(0) = y;
                seg.coeffs.col(1) = ynew - y;
                seg.coeffs.col(2) = h * k1 - seg.coeffs.col(1);
                seg.coeffs.col(3) = seg.coeffs.col(1) - h * k7 - seg.coeffs.col(2);
                seg.coeffs.col(4) = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                const double t_end = final_step ? T : t + h;
                while (next_out < opt.output_times.size() && opt.output_times[next_out] <= t_end) {
                    const double to = opt.output_times[next_out];
                    res.outputs.push_back(to >= t_end ? ynew : seg.eval(to));
                    ++next_out;
                }
                if (opt.store_dense) res.dense.push_back(std::move(seg));
            }
            t = final_step ? T : t + h;
            y = ynew;
            k1 = k7;
            ++res.accepted;
            if (opt.store_steps) {
                res.times.push_back(t);
                res.states.push_back(y);
            }
            double hnew = h / fac;
            if (last_rejected) hnew = std::min(hnew, h);
            last_rejected = false;
            h = hnew;
        } else {
            h /= std::min(1.0 / facmin, fac11 / safe);
            ++res.rejected;
            last_rejected = true;
        }
    }
    return res;
}

}  // namespace raydiff
