#pragma once

#include <memory>
#include <string>

#include "raydiff/momdiff/tensors.hpp"
#include "raydiff/spacediff/sphere.hpp"

namespace raydiff {

enum class CellMethod { ClosedForm, Galerkin };

struct CellOptions {
    CellMethod method = CellMethod::ClosedForm;
    int L = 12;
    /// Galerkin quadrature; 0 picks 2L + 2 and 4L + 4.
    int n_theta = 0;
    int n_phi = 0;
    /// Relative tolerance on the sphere mean of the psi right-hand side.
    double mean_tol = 1e-9;
};

class GalerkinSystem;

/// Cell correctors chi_j and second correctors psi_jl on one shell |k| = k,
/// plus the spatial diffusion matrix A. Functions live on the unit sphere
/// and are extended to R^d \ 0 as degree-0 homogeneous functions.
class SpatialDiffusionSolution {
  public:
    int dim() const { return dim_; }
    double k() const { return k_; }
    /// H0'(k).
    double speed() const { return speed_; }
    CellMethod method() const { return method_; }
    int degree() const { return L_; }
    bool has_psi() const { return has_psi_; }

    /// (chi_1, ..., chi_d)(khat).
    Vec chi(const Vec& khat) const;
    /// Column j: tangential gradient of chi_j on the unit sphere.
    Mat chi_grad(const Vec& khat) const;
    /// psi_jl(khat), symmetric in (j, l) up to solver error.
    Mat psi(const Vec& khat) const;

    const Mat& A() const { return A_; }
    /// Quadrature error estimate attached to A.
    double A_error() const { return A_error_; }

    /// Closed-form coefficients (isotropic only): chi = c khat,
    /// psi = b (khat khat^T - I/d).
    double chi_coefficient() const { return chi_coef_; }
    double psi_coefficient() const { return psi_coef_; }
    /// Spherical-harmonic coefficients (Galerkin only), one column per chi_j.
    const Mat& chi_coefficients() const { return chi_c_; }

    /// Returns the solution with chi replaced by s chi (A, psi dropped).
    SpatialDiffusionSolution scaled_chi(double s) const;

    std::string to_json() const;

  private:
    friend SpatialDiffusionSolution solve_cell_problem(const MomentumDiffusionTensors&, double, const CellOptions&);
    friend void compute_A(SpatialDiffusionSolution&, int);
    friend void solve_psi(SpatialDiffusionSolution&, double);

    int dim_ = 3;
    double k_ = 1.0;
    double speed_ = 1.0;
    CellMethod method_ = CellMethod::ClosedForm;
    int L_ = 0;
    double chi_coef_ = 0.0;
    double psi_coef_ = 0.0;
    double D0_ = 0.0;
    Mat chi_c_;
    Mat psi_c_;  // column j*d + l
    bool has_psi_ = false;
    Mat A_;
    double A_error_ = 0.0;
    std::shared_ptr<const GalerkinSystem> galerkin_;
};

/// Mean-zero solutions of div_k(D grad_k chi_j) = -H0'(k) khat_j on |k| = k.
/// ClosedForm requires an isotropic model; Galerkin requires d = 3.
/// Throws DegenerateDiffusion when D vanishes or is singular on the tangent
/// space.
SpatialDiffusionSolution solve_cell_problem(const MomentumDiffusionTensors& tensors, double k,
                                            const CellOptions& opt = {});

/// a_nm = (1/Gamma) int H0'(k) khat_n chi_m dOmega, stored in the solution.
/// d = 3 uses product quadrature (n_theta = 0 takes 2L + 4, at least 16) and
/// reports the change against a half-resolution rule as the error.
/// Larger d uses the isotropic closed form.
void compute_A(SpatialDiffusionSolution& sol, int n_theta = 0);

/// Solves L psi_jl = -H0' khat_j chi_l + a_jl. Throws InconsistentA if the
/// right-hand side has sphere mean above mean_tol relative to |A|.
void solve_psi(SpatialDiffusionSolution& sol, double mean_tol = 1e-9);

/// Cell correctors, A and psi in one call.
SpatialDiffusionSolution solve_spatial_diffusion(const MomentumDiffusionTensors& tensors, double k,
                                                 const CellOptions& opt = {});

/// div_k(D grad_k F)(k khat) with F extended homogeneously, by nested
/// fourth-order central differences in Cartesian coordinates with step h.
double apply_generator(const MomentumDiffusionTensors& tensors, const std::function<double(const Vec&)>& F,
                       const Vec& khat, double k, double h = 1e-3);

struct CellResidual {
    double mean_square = 0.0;  // max over j of the mean of r_j^2
    double sup = 0.0;
    int n_points = 0;
};

/// r_j = L chi_j + H0'(k) khat_j at n uniform random points of the sphere.
CellResidual cell_residual(const SpatialDiffusionSolution& sol, const MomentumDiffusionTensors& tensors, int n_points,
                           std::uint64_t seed);

/// (1/(Gamma k^2)) int (D grad_S chi_c) . grad_S chi_c dOmega, chi_c = c . chi.
double dissipation_form(const SpatialDiffusionSolution& sol, const MomentumDiffusionTensors& tensors, const Vec& c,
                        int n_theta = 24);

}  // namespace raydiff
