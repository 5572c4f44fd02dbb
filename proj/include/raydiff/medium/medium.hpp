#pragma once

#include <cstdint>
#include <memory>

#include "raydiff/medium/correlation.hpp"

namespace raydiff {

/// One frozen sample c1(x) = sum_j a_j cos(p_j . x + phi_j) of the random
/// field; H1(x, k) = c1(x) h(k). Immutable after construction.
class MediumRealization {
  public:
    MediumRealization(std::shared_ptr<const CorrelationModel> corr, Vec amplitudes, Mat wavevectors,
                      Vec phases, std::uint64_t seed);

    int dim() const { return static_cast<int>(wavevectors_.rows()); }
    int n_modes() const { return static_cast<int>(amplitudes_.size()); }
    std::uint64_t seed() const { return seed_; }
    const CorrelationModel& corr() const { return *corr_; }
    const Vec& amplitudes() const { return amplitudes_; }
    const Mat& wavevectors() const { return wavevectors_; }
    const Vec& phases() const { return phases_; }

    double c1(const Vec& x) const;
    /// c1 and its gradient in one pass.
    double c1_grad(const Vec& x, Vec& grad) const;
    Mat c1_hessian(const Vec& x) const;

  private:
    std::shared_ptr<const CorrelationModel> corr_;
    Vec amplitudes_;
    Mat wavevectors_;
    Vec phases_;
    std::uint64_t seed_;
};

/// Randomized spectral synthesis: wavevectors from the normalized spectrum,
/// amplitudes sigma sqrt(2 / n_modes), phases uniform on [0, 2 pi).
MediumRealization sample_medium(std::shared_ptr<const CorrelationModel> corr, int dim, int n_modes,
                                std::uint64_t seed);
MediumRealization sample_medium(const CorrelationModel& corr, int dim, int n_modes, std::uint64_t seed);

double eval_field(const MediumRealization& m, const Vec& x, double k);
Vec eval_grad_x(const MediumRealization& m, const Vec& x, double k);
double eval_partial_k(const MediumRealization& m, const Vec& x, double k);
Mat eval_hessian_x(const MediumRealization& m, const Vec& x, double k);

}  // namespace raydiff
