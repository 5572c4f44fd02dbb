#include "raydiff/spacediff/cell.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "json.hpp"
#include "raydiff/common/errors.hpp"
#include "raydiff/common/rng.hpp"

namespace raydiff {

class GalerkinSystem {
  public:
    GalerkinSystem(const MomentumDiffusionTensors& tensors, double k, int L, int n_theta, int n_phi)
        : sh(L), quad(SphereQuadrature::product(n_theta, n_phi)) {
        const int nq = static_cast<int>(quad.nodes.size());
        const int nb = sh.size();
        values.resize(nq, nb);
        grads.resize(nq);
        Mat K = Mat::Zero(nb, nb);
        Vec y;
        for (int q = 0; q < nq; ++q) {
            sh.eval(quad.nodes[q], y, &grads[q]);
            values.row(q) = y.transpose();
            const Mat D = tensors.D(quad.nodes[q], k);
            K.noalias() += quad.weights[q] * grads[q].transpose() * D * grads[q];
        }
        K /= k * k;
        K = 0.5 * (K + K.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> es(K, Eigen::EigenvaluesOnly);
        const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
        if (!(lmax > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * lmax)
            throw DegenerateDiffusion("Galerkin stiffness matrix is singular: D degenerates on the tangent space");
        llt.compute(K);
    }

    /// Solves L u = F for rhs values F (nq x m) at the quadrature nodes.
    Mat solve(const Mat& F) const {
        const Vec w = Eigen::Map<const Vec>(quad.weights.data(), quad.weights.size());
        const Mat load = -(values.transpose() * w.asDiagonal() * F);
        return llt.solve(load);
    }

    RealSphericalHarmonics sh;
    SphereQuadrature quad;
    Mat values;
    std::vector<Mat> grads;
    Eigen::LLT<Mat> llt;
};

Vec SpatialDiffusionSolution::chi(const Vec& khat) const {
    if (method_ == CellMethod::ClosedForm) return chi_coef_ * khat;
    Vec y;
    galerkin_->sh.eval(khat, y);
    return chi_c_.transpose() * y;
}

Mat SpatialDiffusionSolution::chi_grad(const Vec& khat) const {
    if (method_ == CellMethod::ClosedForm)
        return chi_coef_ * (Mat::Identity(dim_, dim_) - khat * khat.transpose());
    Vec y;
    Mat g;
    galerkin_->sh.eval(khat, y, &g);
    return g * chi_c_;
}

Mat SpatialDiffusionSolution::psi(const Vec& khat) const {
    if (!has_psi_) throw ValidationError("second correctors have not been solved");
    const int d = dim_;
    if (method_ == CellMethod::ClosedForm)
        return psi_coef_ * (khat * khat.transpose() - Mat::Identity(d, d) / d);
    Vec y;
    galerkin_->sh.eval(khat, y);
    const Vec v = psi_c_.transpose() * y;
    return Eigen::Map<const Mat>(v.data(), d, d).transpose();
}

SpatialDiffusionSolution SpatialDiffusionSolution::scaled_chi(double s) const {
    SpatialDiffusionSolution out = *this;
    out.chi_coef_ *= s;
    out.chi_c_ *= s;
    out.has_psi_ = false;
    out.A_ = Mat();
    return out;
}

std::string SpatialDiffusionSolution::to_json() const {
    nlohmann::json j;
    j["dim"] = dim_;
    j["k"] = k_;
    j["speed"] = speed_;
    j["method"] = method_ == CellMethod::ClosedForm ? "closed-form" : "galerkin";
    auto mat = [](const Mat& m) {
        std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
        for (int i = 0; i < m.rows(); ++i)
            for (int c = 0; c < m.cols(); ++c) rows[i][c] = m(i, c);
        return rows;
    };
    if (method_ == CellMethod::ClosedForm) {
        j["chi_coefficient"] = chi_coef_;
        if (has_psi_) j["psi_coefficient"] = psi_coef_;
    } else {
        j["degree"] = L_;
        j["chi_sh_coefficients"] = mat(chi_c_);
        if (has_psi_) j["psi_sh_coefficients"] = mat(psi_c_);
    }
    if (A_.size()) {
        j["A"] = mat(A_);
        j["A_error"] = A_error_;
    }
    return j.dump(2);
}

SpatialDiffusionSolution solve_cell_problem(const MomentumDiffusionTensors& tensors, double k, const CellOptions& opt) {
    if (!(k > 0.0)) throw ValidationError("shell radius must be positive");
    SpatialDiffusionSolution sol;
    sol.dim_ = tensors.dim();
    sol.k_ = k;
    sol.speed_ = tensors.h0().d1(k);
    sol.method_ = opt.method;
    if (tensors.corr().is_zero()) throw DegenerateDiffusion("R = 0: the momentum diffusion matrix vanishes");
    if (opt.method == CellMethod::ClosedForm) {
        const auto cf = isotropic_closed_forms(tensors.corr(), tensors.h0(), k, tensors.quad());
        sol.D0_ = cf.D0;
        sol.chi_coef_ = cf.chi_coefficient;
        return sol;
    }
    if (sol.dim_ != 3) throw ValidationError("Galerkin cell solver is implemented for d = 3 only");
    if (opt.L < 1) throw ValidationError("Galerkin degree L must be >= 1");
    sol.L_ = opt.L;
    const int nt = opt.n_theta > 0 ? opt.n_theta : 2 * opt.L + 2;
    const int np = opt.n_phi > 0 ? opt.n_phi : 4 * opt.L + 4;
    auto sys = std::make_shared<GalerkinSystem>(tensors, k, opt.L, nt, np);
    const int nq = static_cast<int>(sys->quad.nodes.size());
    Mat F(nq, 3);
    for (int q = 0; q < nq; ++q) F.row(q) = -sol.speed_ * sys->quad.nodes[q].transpose();
    sol.chi_c_ = sys->solve(F);
    sol.galerkin_ = std::move(sys);
    return sol;
}

void compute_A(SpatialDiffusionSolution& sol, int n_theta) {
    const int d = sol.dim_;
    if (d != 3) {
        if (sol.method_ != CellMethod::ClosedForm) throw ValidationError("d > 3 requires the closed-form path");
        // Sphere average of khat_n khat_m is delta_nm / d.
        sol.A_ = (sol.speed_ * sol.chi_coef_ / d) * Mat::Identity(d, d);
        sol.A_error_ = 0.0;
        return;
    }
    auto integrate = [&](int nt) {
        const auto q = SphereQuadrature::product(nt, 2 * nt);
        Mat A = Mat::Zero(d, d);
        for (std::size_t i = 0; i < q.nodes.size(); ++i)
            A.noalias() += q.weights[i] * sol.speed_ * q.nodes[i] * sol.chi(q.nodes[i]).transpose();
        return Mat(A / (4.0 * std::numbers::pi));
    };
    const int nt = n_theta > 0 ? n_theta : std::max(16, 2 * sol.L_ + 4);
    const Mat A = integrate(nt);
    const Mat Ac = integrate(std::max(2, nt / 2));
    sol.A_error_ = (A - Ac).cwiseAbs().maxCoeff();
    sol.A_ = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sol.A_, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0))
        throw DegenerateDiffusion("spatial diffusion matrix is not positive definite");
}

void solve_psi(SpatialDiffusionSolution& sol, double mean_tol) {
    if (!sol.A_.size()) compute_A(sol);
    const int d = sol.dim_;
    const double scale = sol.A_.cwiseAbs().maxCoeff();
    if (sol.method_ == CellMethod::ClosedForm) {
        // RHS = -H0' c (khat_j khat_l - delta_jl / d) exactly when a = H0' c / d.
        const double mismatch = std::abs(sol.A_(0, 0) - sol.speed_ * sol.chi_coef_ / d) +
                                (sol.A_ - sol.A_(0, 0) * Mat::Identity(d, d)).cwiseAbs().maxCoeff();
        if (mismatch > mean_tol * scale)
            throw InconsistentA("psi right-hand side has nonzero sphere mean " + std::to_string(mismatch));
        // Degree-2 harmonics are eigenfunctions of L with eigenvalue -2d D0 / k^2.
        sol.psi_coef_ = sol.speed_ * sol.chi_coef_ * sol.k_ * sol.k_ / (2.0 * d * sol.D0_);
        sol.has_psi_ = true;
        return;
    }
    const auto& sys = *sol.galerkin_;
    const int nq = static_cast<int>(sys.quad.nodes.size());
    Mat F(nq, d * d);
    for (int q = 0; q < nq; ++q) {
        const Vec& kh = sys.quad.nodes[q];
        const Vec c = sol.chi(kh);
        for (int j = 0; j < d; ++j)
            for (int l = 0; l < d; ++l) F(q, j * d + l) = -sol.speed_ * kh(j) * c(l) + sol.A_(j, l);
    }
    const Vec w = Eigen::Map<const Vec>(sys.quad.weights.data(), nq);
    const Vec mean = (F.transpose() * w) / (4.0 * std::numbers::pi);
    if (mean.cwiseAbs().maxCoeff() > mean_tol * scale)
        throw InconsistentA("psi right-hand side has nonzero sphere mean " +
                            std::to_string(mean.cwiseAbs().maxCoeff()));
    sol.psi_c_ = sys.solve(F);
    sol.has_psi_ = true;
}

SpatialDiffusionSolution solve_spatial_diffusion(const MomentumDiffusionTensors& tensors, double k,
                                                 const CellOptions& opt) {
    auto sol = solve_cell_problem(tensors, k, opt);
    compute_A(sol);
    solve_psi(sol, opt.mean_tol);
    return sol;
}

double apply_generator(const MomentumDiffusionTensors& tensors, const std::function<double(const Vec&)>& F,
                       const Vec& khat, double k, double h) {
    const int d = tensors.dim();
    static constexpr double off[4] = {-2.0, -1.0, 1.0, 2.0};
    static constexpr double wt[4] = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};
    const double step = h * k;
    auto Fext = [&](const Vec& p) { return F(p / p.norm()); };
    auto flux = [&](const Vec& p) {
        Vec g(d);
        for (int n = 0; n < d; ++n) {
            double s = 0.0;
            for (int i = 0; i < 4; ++i) {
                Vec q = p;
                q(n) += off[i] * step;
                s += wt[i] * Fext(q);
            }
            g(n) = s / step;
        }
        const double pn = p.norm();
        return Vec(tensors.D(p / pn, pn) * g);
    };
    const Vec p0 = k * khat;
    double div = 0.0;
    for (int m = 0; m < d; ++m) {
        double s = 0.0;
        for (int i = 0; i < 4; ++i) {
            Vec q = p0;
            q(m) += off[i] * step;
            s += wt[i] * flux(q)(m);
        }
        div += s / step;
    }
    return div;
}

CellResidual cell_residual(const SpatialDiffusionSolution& sol, const MomentumDiffusionTensors& tensors, int n_points,
                           std::uint64_t seed) {
    const int d = sol.dim();
    Rng rng = make_rng(seed, {stream::sphere});
    CellResidual out;
    out.n_points = n_points;
    Vec ms = Vec::Zero(d);
    for (int i = 0; i < n_points; ++i) {
        const Vec kh = uniform_on_sphere(rng, d);
        for (int j = 0; j < d; ++j) {
            const double Lchi =
                apply_generator(tensors, [&](const Vec& u) { return sol.chi(u)(j); }, kh, sol.k());
            const double r = Lchi + sol.speed() * kh(j);
            ms(j) += r * r;
            out.sup = std::max(out.sup, std::abs(r));
        }
    }
    out.mean_square = ms.maxCoeff() / n_points;
    return out;
}

double dissipation_form(const SpatialDiffusionSolution& sol, const MomentumDiffusionTensors& tensors, const Vec& c,
                        int n_theta) {
    if (sol.dim() != 3) throw ValidationError("dissipation quadrature is implemented for d = 3");
    const auto q = SphereQuadrature::product(n_theta, 2 * n_theta);
    double s = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const Vec g = sol.chi_grad(q.nodes[i]) * c;
        s += q.weights[i] * g.dot(tensors.D(q.nodes[i], sol.k()) * g);
    }
    return s / (4.0 * std::numbers::pi * sol.k() * sol.k());
}

}  // namespace raydiff
