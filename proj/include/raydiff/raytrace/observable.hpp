#pragma once

#include <functional>
#include <optional>

#include "raydiff/common/types.hpp"

namespace raydiff {

enum class SpatialShape { Gaussian, Bump };

/// Separable initial datum
///   phi0(x, k) = amplitude g(x) b(|k|) (c0 + c1 (khat . axis) + c2 (khat . axis)^2)
/// with g a peak-normalized Gaussian exp(-|x - center|^2 / (2 width^2)) or a
/// compact C-infinity bump of radius width, and b a C-infinity bump in |k|
/// centred at k_center with half-width k_halfwidth.
struct ObservableSpec {
    SpatialShape shape = SpatialShape::Gaussian;
    Vec center;
    double width = 0.5;
    double amplitude = 1.0;
    double k_center = 1.0;
    double k_halfwidth = 0.5;
    Vec axis;
    double c0 = 1.0, c1 = 0.0, c2 = 0.0;
};

double smooth_bump(double s);  // exp(1 - 1/(1 - s^2)) on |s| < 1, else 0

class PhaseSpaceObservable {
  public:
    using Fn = std::function<double(const Vec&, const Vec&)>;

    PhaseSpaceObservable(ObservableSpec spec, double M);
    /// Arbitrary evaluator; support_radius = infinity when not compact.
    PhaseSpaceObservable(Fn fn, double M, double support_radius);

    double operator()(const Vec& x, const Vec& k) const;
    double M() const { return M_; }
    /// Radius of the x-support about the centre. Gaussian data record the
    /// radius where g drops below 1e-16.
    double support_radius() const { return support_radius_; }
    int order_x() const { return -1; }  // C-infinity
    int order_k() const { return -1; }
    const std::optional<ObservableSpec>& spec() const { return spec_; }

    /// Same observable read at (scale x, k).
    PhaseSpaceObservable with_x_scale(double scale) const;

  private:
    std::optional<ObservableSpec> spec_;
    Fn fn_;
    double M_;
    double support_radius_;
};

}  // namespace raydiff
