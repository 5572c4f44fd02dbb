#pragma once

#include <string>
#include <vector>

#include "raydiff/momdiff/tensors.hpp"
#include "raydiff/spacediff/cell.hpp"
#include "raydiff/spacediff/heat.hpp"

namespace raydiff {

/// phi_bar_gamma ~ w + gamma sum chi_j d_j w + gamma^2 sum psi_jl d_jl w.
/// Needs Gaussian-mixture data so that w has analytic derivatives.
class CorrectorExpansion {
  public:
    CorrectorExpansion(const HeatSolution& heat, const SpatialDiffusionSolution& cell, double gamma);

    double gamma() const { return gamma_; }
    double value(double t, const Vec& x, const Vec& khat) const;
    /// gamma w1 alone.
    double first_corrector(double t, const Vec& x, const Vec& khat) const;

  private:
    const HeatSolution* heat_;
    const SpatialDiffusionSolution* cell_;
    double gamma_;
};

struct ResidualProbe {
    double t = 1.0;
    Vec x;
    Vec khat;
};

/// Generator images L chi_j and L psi_jl at one direction, computed by
/// apply_generator and reused across gamma, t and x.
struct GeneratorImages {
    Vec khat;
    Vec L_chi;
    Mat L_psi;
};

GeneratorImages generator_images(const SpatialDiffusionSolution& cell, const MomentumDiffusionTensors& tensors,
                                 const Vec& khat);

/// Pointwise r = d_t Phi - (1/gamma) H0' khat . grad_x Phi - (1/gamma^2) L Phi
/// for the truncated expansion Phi, i.e. the scaled form of
/// gamma^2 d_t phi = L phi + gamma H0' khat . grad_x phi.
double substitution_residual(const HeatSolution& heat, const SpatialDiffusionSolution& cell,
                             const GeneratorImages& images, double gamma, double t, const Vec& x);

struct ResidualOrderReport {
    std::vector<double> gammas;
    std::vector<double> sup_residual;
    double observed_order = 0.0;  // least-squares slope of log sup vs log gamma
};

ResidualOrderReport corrector_residual_order(const HeatSolution& heat, const SpatialDiffusionSolution& cell,
                                             const MomentumDiffusionTensors& tensors,
                                             const std::vector<ResidualProbe>& probes,
                                             const std::vector<double>& gammas);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

std::string residual_report_json(const ResidualOrderReport& r);

}  // namespace raydiff
