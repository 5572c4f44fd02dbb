#include "raydiff/raytrace/observable.hpp"

#include <cmath>
#include <limits>

#include "raydiff/common/errors.hpp"

namespace raydiff {

double smooth_bump(double s) {
    const double q = 1.0 - s * s;
    return q > 0.0 ? std::exp(1.0 - 1.0 / q) : 0.0;
}

PhaseSpaceObservable::PhaseSpaceObservable(ObservableSpec spec, double M) : M_(M) {
    if (spec.k_center - spec.k_halfwidth < 1.0 / M || spec.k_center + spec.k_halfwidth > M)
        throw ValidationError("observable's momentum support must lie inside the shell (1/M, M)");
    if (!(spec.width > 0.0)) throw ValidationError("observable width must be positive");
    if (spec.axis.size() == 0) spec.axis = Vec::Unit(spec.center.size(), 0);
    if (spec.axis.size() != spec.center.size()) throw ValidationError("observable axis and centre differ in dimension");
    spec.axis = unit(spec.axis);
    support_radius_ = spec.shape == SpatialShape::Bump ? spec.width : spec.width * std::sqrt(2.0 * std::log(1e16));
    spec_ = spec;
    fn_ = [s = spec](const Vec& x, const Vec& k) {
        const double kn = k.norm();
        const double b = smooth_bump((kn - s.k_center) / s.k_halfwidth);
        if (b == 0.0) return 0.0;
        const double r2 = (x - s.center).squaredNorm();
        const double g = s.shape == SpatialShape::Gaussian ? std::exp(-0.5 * r2 / (s.width * s.width))
                                                           : smooth_bump(std::sqrt(r2) / s.width);
        const double c = k.dot(s.axis) / kn;
        return s.amplitude * g * b * (s.c0 + c * (s.c1 + c * s.c2));
    };
}

PhaseSpaceObservable::PhaseSpaceObservable(Fn fn, double M, double support_radius)
    : fn_(std::move(fn)), M_(M), support_radius_(support_radius) {}

double PhaseSpaceObservable::operator()(const Vec& x, const Vec& k) const { return fn_(x, k); }

PhaseSpaceObservable PhaseSpaceObservable::with_x_scale(double scale) const {
    PhaseSpaceObservable out([f = fn_, scale](const Vec& x, const Vec& k) { return f(scale * x, k); }, M_,
                             support_radius_ / scale);
    return out;
}

}  // namespace raydiff
