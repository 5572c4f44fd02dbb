#pragma once

#include <array>
#include <memory>
#include <vector>

#include "raydiff/common/interp.hpp"
#include "raydiff/common/rng.hpp"
#include "raydiff/common/types.hpp"

namespace raydiff {

enum class CorrelationKind { IsotropicGaussian, IsotropicTabulated, AnisotropicTabulated };

/// Momentum envelope h(k) = sum_i c_i k^i. Default h = 1.
class Envelope {
  public:
    Envelope() : coeffs_{1.0} {}
    explicit Envelope(std::vector<double> coeffs);

    double value(double k) const { return eval(k, 0); }
    double eval(double k, int order) const;
    bool is_constant() const;
    const std::vector<double>& coeffs() const { return coeffs_; }

  private:
    std::vector<double> coeffs_;
};

/// Isotropic profile f(r) of the correlation of c1 in a fixed dimension,
/// exposed through the functions g_0 = f, g_{j+1}(r) = g_j'(r) / r, all
/// smooth at r = 0. Cartesian derivatives of f(|y|) are polynomial in y
/// with these coefficients.
class RadialProfile {
  public:
    virtual ~RadialProfile() = default;
    /// out[j] = g_j(r) for j = 0..jmax (jmax <= 4).
    virtual void g(double r, int jmax, double* out) const = 0;
    /// d-dimensional Fourier transform of f(|y|) at wavenumber kappa.
    virtual double spectrum(double kappa) const = 0;
    /// Largest wavenumber where the spectrum is defined (infinity if none).
    virtual double kappa_max() const = 0;
    /// Radial derivative f^(order)(r), order 0..4.
    double radial_derivative(double r, int order) const;
};

class CorrelationModel {
  public:
    static CorrelationModel gaussian(int dim, double sigma, double ell, Envelope h = {});
    /// Isotropic model from a sampled radial spectral density S(kappa) on
    /// [kappa_0, kappa_max]. The density is interpolated monotonically,
    /// taken as zero outside the table, and rescaled so that R_c(0) = sigma^2.
    static CorrelationModel tabulated(int dim, double sigma, const std::vector<double>& kappa,
                                      const std::vector<double>& density, Envelope h = {});
    /// d = 3 only: R_c(y) = f(|Lambda^{-1} y|) with Lambda = diag(scales) and f
    /// the isotropic tabulated profile.
    static CorrelationModel anisotropic(double sigma, const std::vector<double>& kappa,
                                        const std::vector<double>& density, const Vec& scales,
                                        Envelope h = {});
    /// R = 0.
    static CorrelationModel zero(int dim) { return gaussian(dim, 0.0, 1.0); }

    CorrelationKind kind() const { return kind_; }
    int dim() const { return dim_; }
    double sigma() const { return sigma_; }
    double ell() const { return ell_; }
    const Envelope& envelope() const { return envelope_; }
    const Vec& scales() const { return scales_; }
    const RadialProfile& profile() const { return *profile_; }
    bool is_isotropic() const { return kind_ != CorrelationKind::AnisotropicTabulated; }
    bool is_zero() const { return sigma_ == 0.0; }
    /// Relative accuracy of the derivative evaluations far from the origin:
    /// 0 for the Gaussian closed form, about 1e-8 for Hankel-transformed
    /// tables (discretization noise in the tail).
    double tail_floor() const { return kind_ == CorrelationKind::IsotropicGaussian ? 0.0 : 1e-8; }

    // Spatial correlation of c1, R_c(y) = R(y,k)/h(k)^2, and derivatives.
    double rc(const Vec& y) const;
    Vec rc_grad(const Vec& y) const;
    Mat rc_hessian(const Vec& y) const;
    /// Gradient of the Laplacian of R_c.
    Vec rc_grad_laplacian(const Vec& y) const;
    /// All derivatives of R_c up to order 4 at y, flattened; used by decay checks.
    double rc_derivative_norm(const Vec& y, int order) const;

    /// Fourier transform of R_c.
    double rc_spectrum(const Vec& p) const;
    /// Largest |p| accepted by rc_spectrum along any direction.
    double spectrum_radius() const;

    /// Wavevector drawn from the normalized spectrum R^_c / ((2 pi)^d sigma^2).
    Vec sample_wavevector(Rng& rng) const;

  private:
    CorrelationKind kind_ = CorrelationKind::IsotropicGaussian;
    int dim_ = 3;
    double sigma_ = 0.0;
    double ell_ = 1.0;
    Envelope envelope_;
    Vec scales_;
    std::shared_ptr<const RadialProfile> profile_;
    // Inverse CDF of |p| for tabulated spectra.
    std::shared_ptr<const std::vector<std::array<double, 2>>> radial_cdf_;

    void local_derivs(const Vec& y, int jmax, Vec& u, double* g) const;
};

/// R(y, k) = h(k)^2 R_c(y).
double correlation(const CorrelationModel& corr, const Vec& y, double k);
/// R^(p, k) = h(k)^2 R^_c(p). Throws ValidationError beyond a tabulated grid.
double power_spectrum(const CorrelationModel& corr, const Vec& p, double k);

struct DecayReport {
    bool passed = true;
    int worst_order = 0;
    int worst_power = 0;
    double worst_ratio = 0.0;
};

/// For derivative orders 0..4 and polynomial weights |y|^m, m in powers,
/// checks that sup over the outer half of the radial window [0, r_max] of
/// |y|^m |d^j R_c| stays below tol times the sup over the whole window.
DecayReport check_decay(const CorrelationModel& corr, double r_max, const std::vector<int>& powers,
                        double tol, int n_radii = 200, int n_directions = 16);

/// For every normal, samples the hyperplane p . normal = 0 on a polar grid
/// and reports whether R^_c is positive somewhere on it.
bool check_nondegenerate(const CorrelationModel& corr, const std::vector<Vec>& normals,
                         int n_samples = 64);

}  // namespace raydiff
