#pragma once

#include <memory>
#include <string>
#include <vector>

#include "raydiff/hamiltonian/background.hpp"
#include "raydiff/medium/correlation.hpp"

namespace raydiff {

struct QuadSpec {
    double rel_tol = 1e-13;
    double abs_tol = 1e-16;
    /// Truncation of the ray integral; 0 picks the point beyond which the
    /// integrand stays below tail_tol times its peak.
    double s_max = 0.0;
    double tail_tol = 1e-12;
    int max_intervals = 2000;
};

/// Integration window along s khat such that |d^2 R_c(s khat)| < tail_tol
/// times its value at 0 for all s in [s_max, 2 s_max]. Throws
/// QuadratureTruncation if no window up to 400 ell qualifies.
double ray_truncation(const CorrelationModel& corr, const Vec& khat, double tail_tol);

/// D_mn = -(1 / (2 H0'(k))) int_R d_m d_n R(s khat, k) ds.
Mat compute_D(const CorrelationModel& corr, const BackgroundHamiltonian& h0, const Vec& khat, double k,
              const QuadSpec& quad = {});

/// E_m = -(1 / (H0'(k) k)) sum_n int_0^inf s d_m d_n d_n R(s khat, k) ds.
Vec compute_drift_E(const CorrelationModel& corr, const BackgroundHamiltonian& h0, const Vec& khat, double k,
                    const QuadSpec& quad = {});

/// Limit theta -> 0+ of -(1/H0') int_0^inf d_m d_n R(s khat) exp(-theta s) ds,
/// evaluated with double-exponential quadrature on [0, inf) and Richardson
/// extrapolation in theta. Independent of compute_D's truncation.
Mat compute_D_regularized(const CorrelationModel& corr, const BackgroundHamiltonian& h0, const Vec& khat, double k);

struct IsotropicClosedForms {
    double D0 = 0.0;        // -(1/H0') int_0^inf R'(s)/s ds
    double Dbar0 = 0.0;     // H0' D0
    double chi_coefficient = 0.0;  // chi_j = chi_coefficient khat_j
    double a_scalar = 0.0;  // A = a_scalar I
};

/// Isotropic models only. Throws DegenerateDiffusion when Dbar0 <= 0.
IsotropicClosedForms isotropic_closed_forms(const CorrelationModel& corr, const BackgroundHamiltonian& h0, double k,
                                            const QuadSpec& quad = {});

/// Bundles a correlation model and H0 and evaluates D and E on demand.
class MomentumDiffusionTensors {
  public:
    MomentumDiffusionTensors(std::shared_ptr<const CorrelationModel> corr, BackgroundHamiltonian h0,
                             QuadSpec quad = {});

    int dim() const { return corr_->dim(); }
    bool isotropic() const { return corr_->is_isotropic(); }
    const CorrelationModel& corr() const { return *corr_; }
    std::shared_ptr<const CorrelationModel> corr_ptr() const { return corr_; }
    const BackgroundHamiltonian& h0() const { return h0_; }
    const QuadSpec& quad() const { return quad_; }

    Mat D(const Vec& khat, double k) const;
    Vec E(const Vec& khat, double k) const;
    /// Isotropic only.
    double D0(double k) const;

  private:
    std::shared_ptr<const CorrelationModel> corr_;
    BackgroundHamiltonian h0_;
    QuadSpec quad_;
};

/// JSON array of {khat, k, D, E} over the product grid.
std::string tensors_json(const MomentumDiffusionTensors& t, const std::vector<Vec>& khats,
                         const std::vector<double>& ks);

}  // namespace raydiff
