#include "raydiff/medium/medium.hpp"

#include <cmath>
#include <numbers>

#include "raydiff/common/errors.hpp"
#include "raydiff/common/rng.hpp"

namespace raydiff {

MediumRealization::MediumRealization(std::shared_ptr<const CorrelationModel> corr, Vec amplitudes,
                                     Mat wavevectors, Vec phases, std::uint64_t seed)
    : corr_(std::move(corr)),
      amplitudes_(std::move(amplitudes)),
      wavevectors_(std::move(wavevectors)),
      phases_(std::move(phases)),
      seed_(seed) {
    if (wavevectors_.cols() != amplitudes_.size() || phases_.size() != amplitudes_.size())
        throw ValidationError("medium: mode arrays have mismatched lengths");
}

double MediumRealization::c1(const Vec& x) const {
    const Eigen::ArrayXd arg = (wavevectors_.transpose() * x).array() + phases_.array();
    return (amplitudes_.array() * arg.cos()).sum();
}

double MediumRealization::c1_grad(const Vec& x, Vec& grad) const {
    const Eigen::ArrayXd arg = (wavevectors_.transpose() * x).array() + phases_.array();
    const Vec s = -(amplitudes_.array() * arg.sin()).matrix();
    grad = wavevectors_ * s;
    return (amplitudes_.array() * arg.cos()).sum();
}

Mat MediumRealization::c1_hessian(const Vec& x) const {
    const Eigen::ArrayXd arg = (wavevectors_.transpose() * x).array() + phases_.array();
    const Vec c = -(amplitudes_.array() * arg.cos()).matrix();
    Mat h = wavevectors_ * c.asDiagonal() * wavevectors_.transpose();
    return 0.5 * (h + h.transpose());
}

MediumRealization sample_medium(std::shared_ptr<const CorrelationModel> corr, int dim, int n_modes,
                                std::uint64_t seed) {
    if (dim < 3) throw DimensionError(dim);
    if (dim != corr->dim())
        throw ValidationError("medium dimension " + std::to_string(dim) + " differs from correlation model dimension " +
                              std::to_string(corr->dim()));
    if (n_modes < 1) throw ValidationError("n_modes must be >= 1");
    Rng rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    Vec amp = Vec::Constant(n_modes, corr->sigma() * std::sqrt(2.0 / n_modes));
    Mat p(dim, n_modes);
    Vec phi(n_modes);
    for (int j = 0; j < n_modes; ++j) {
        p.col(j) = corr->sample_wavevector(rng);
        phi(j) = phase(rng);
    }
    return MediumRealization(std::move(corr), std::move(amp), std::move(p), std::move(phi), seed);
}

MediumRealization sample_medium(const CorrelationModel& corr, int dim, int n_modes, std::uint64_t seed) {
    return sample_medium(std::make_shared<const CorrelationModel>(corr), dim, n_modes, seed);
}

double eval_field(const MediumRealization& m, const Vec& x, double k) {
    return m.corr().envelope().value(k) * m.c1(x);
}

Vec eval_grad_x(const MediumRealization& m, const Vec& x, double k) {
    Vec g;
    m.c1_grad(x, g);
    return m.corr().envelope().value(k) * g;
}

double eval_partial_k(const MediumRealization& m, const Vec& x, double k) {
    return m.corr().envelope().eval(k, 1) * m.c1(x);
}

Mat eval_hessian_x(const MediumRealization& m, const Vec& x, double k) {
    return m.corr().envelope().value(k) * m.c1_hessian(x);
}

}  // namespace raydiff
