#include "raydiff/medium/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>

#include "raydiff/common/errors.hpp"
#include "raydiff/common/quadrature.hpp"

namespace raydiff {

namespace {

constexpr double kPi = std::numbers::pi;

double sphere_area(int dim) { return 2.0 * std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim); }

class GaussianProfile final : public RadialProfile {
  public:
    GaussianProfile(int dim, double sigma, double ell) : dim_(dim), s2_(sigma * sigma), ell_(ell) {}
    void g(double r, int jmax, double* out) const override {
        const double f = s2_ * std::exp(-0.5 * r * r / (ell_ * ell_));
        const double c = -1.0 / (ell_ * ell_);
        double v = f;
        for (int j = 0; j <= jmax; ++j) {
            out[j] = v;
            v *= c;
        }
    }
    double spectrum(double kappa) const override {
        return s2_ * std::pow(2.0 * kPi * ell_ * ell_, 0.5 * dim_) * std::exp(-0.5 * ell_ * ell_ * kappa * kappa);
    }
    double kappa_max() const override { return std::numeric_limits<double>::infinity(); }

  private:
    int dim_;
    double s2_, ell_;
};

// g_mu(x) = x^{-mu} J_mu(x) for mu = nu, nu+1, ..., nu+count-1.
void bessel_g(double nu, int count, double x, double* out) {
    if (x < 4.0) {
        const double q = -0.25 * x * x;
        for (int i = 0; i < count; ++i) {
            const double mu = nu + i;
            double term = 1.0 / (std::pow(2.0, mu) * std::tgamma(mu + 1.0));
            double sum = term;
            for (int k = 1; k < 40; ++k) {
                term *= q / (k * (mu + k));
                sum += term;
                if (std::abs(term) < 1e-17 * std::abs(sum)) break;
            }
            out[i] = sum;
        }
        return;
    }
    double j0, j1;
    if (nu == 0.5) {
        const double a = std::sqrt(2.0 / (kPi * x));
        const double s = std::sin(x), c = std::cos(x);
        j0 = a * s;
        j1 = a * (s / x - c);
    } else {
        j0 = boost::math::cyl_bessel_j(nu, x);
        j1 = boost::math::cyl_bessel_j(nu + 1.0, x);
    }
    double jm = j0, jc = j1;
    out[0] = j0 / std::pow(x, nu);
    if (count > 1) out[1] = j1 / std::pow(x, nu + 1.0);
    for (int i = 2; i < count; ++i) {
        const double mu = nu + i - 1;
        const double jn = 2.0 * mu / x * jc - jm;
        jm = jc;
        jc = jn;
        out[i] = jn / std::pow(x, mu + 1.0);
    }
}

class TabulatedProfile final : public RadialProfile {
  public:
    TabulatedProfile(int dim, double sigma, std::vector<double> kappa, std::vector<double> density)
        : dim_(dim), nu_(0.5 * dim - 1.0), table_(std::move(kappa), std::move(density)) {
        // Sub-intervals of width <= (kappa_max - kappa_0)/400, 4 Gauss nodes each.
        const auto gl = gauss_legendre(4);
        const double span = table_.back() - table_.front();
        const auto& xs = table_.x();
        double mass = 0.0;
        cdf_.push_back({xs.front(), 0.0});
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            const int pieces = std::max(1, static_cast<int>(std::ceil((xs[i + 1] - xs[i]) / (span / 400.0))));
            const double w = (xs[i + 1] - xs[i]) / pieces;
            for (int p = 0; p < pieces; ++p) {
                const double a = xs[i] + p * w;
                for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
                    const double kap = a + 0.5 * w * (gl.nodes[q] + 1.0);
                    const double wt = 0.5 * w * gl.weights[q] * std::max(0.0, table_(kap)) * std::pow(kap, dim - 1);
                    nodes_.push_back(kap);
                    weights_.push_back(wt);
                    mass += wt;
                }
                cdf_.push_back({a + w, mass});
            }
        }
        if (!(mass > 0.0)) throw AdmissibilityError("tabulated spectrum has zero mass");
        for (auto& c : cdf_) c[1] /= mass;
        double second = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) second += weights_[i] * nodes_[i] * nodes_[i];
        rms_kappa_ = std::sqrt(second / mass);
        // Normalization: f(0) = sigma^2, with Phi_d(0) = 1.
        amp_ = sigma * sigma / mass * std::tgamma(nu_ + 1.0) * std::pow(2.0, nu_);
        spec_scale_ = sigma * sigma / mass * std::pow(2.0 * kPi, dim) / sphere_area(dim);
    }

    void g(double r, int jmax, double* out) const override {
        std::call_once(cache_once_, [this] { build_cache(); });
        if (r < cache_r_) {
            // Cubic Hermite in r with exact slopes g_j' = r g_{j+1}.
            const double u = r / cache_h_;
            const std::size_t i = std::min(static_cast<std::size_t>(u), cache_.size() - 2);
            const double s = u - i, h = cache_h_;
            const double r0 = i * h, r1 = r0 + h;
            const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
            const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
            const auto& a = cache_[i];
            const auto& b = cache_[i + 1];
            for (int j = 0; j <= jmax; ++j)
                out[j] = h00 * a[j] + h10 * h * r0 * a[j + 1] + h01 * b[j] + h11 * h * r1 * b[j + 1];
            return;
        }
        direct(r, jmax, out);
    }

    void direct(double r, int jmax, double* out) const {
        double acc[6] = {0, 0, 0, 0, 0, 0};
        double gv[7];
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const double kap = nodes_[i];
            bessel_g(nu_, jmax + 1, kap * r, gv);
            double pw = weights_[i];
            const double k2 = -kap * kap;
            for (int j = 0; j <= jmax; ++j) {
                acc[j] += pw * gv[j];
                pw *= k2;
            }
        }
        for (int j = 0; j <= jmax; ++j) out[j] = amp_ * acc[j];
    }
    double spectrum(double kappa) const override {
        if (kappa < table_.front() || kappa > table_.back())
            throw ValidationError("wavenumber " + std::to_string(kappa) + " outside the tabulated spectrum grid");
        return spec_scale_ * std::max(0.0, table_(kappa));
    }
    double kappa_max() const override { return table_.back(); }

    double rms_kappa() const { return rms_kappa_; }
    const std::vector<std::array<double, 2>>& cdf() const { return cdf_; }

  private:
    void build_cache() const {
        cache_r_ = 40.0 / rms_kappa_;
        const int n = 4000;
        cache_h_ = cache_r_ / n;
        cache_.resize(n + 1);
        for (int i = 0; i <= n; ++i) direct(i * cache_h_, 5, cache_[i].data());
    }

    mutable std::once_flag cache_once_;
    mutable std::vector<std::array<double, 6>> cache_;
    mutable double cache_r_ = 0.0, cache_h_ = 0.0;

    int dim_;
    double nu_;
    Pchip table_;
    std::vector<double> nodes_, weights_;
    std::vector<std::array<double, 2>> cdf_;
    double amp_ = 0.0, spec_scale_ = 0.0, rms_kappa_ = 0.0;
};

std::shared_ptr<const TabulatedProfile> make_tabulated(int dim, double sigma, const std::vector<double>& kappa,
                                                       const std::vector<double>& density) {
    if (kappa.size() != density.size() || kappa.size() < 3)
        throw AdmissibilityError("spectrum table needs >= 3 (wavenumber, density) rows");
    if (kappa.front() < 0.0) throw AdmissibilityError("spectrum table has negative wavenumbers");
    for (double s : density)
        if (s < 0.0 || !std::isfinite(s)) throw AdmissibilityError("spectrum table has negative density");
    return std::make_shared<TabulatedProfile>(dim, sigma, kappa, density);
}

}  // namespace

Envelope::Envelope(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_ = {1.0};
}

double Envelope::eval(double k, int order) const {
    double v = 0.0, pw = 1.0;
    for (std::size_t i = order; i < coeffs_.size(); ++i) {
        double c = coeffs_[i];
        for (int m = 0; m < order; ++m) c *= static_cast<double>(i - m);
        v += c * pw;
        pw *= k;
    }
    return v;
}

bool Envelope::is_constant() const {
    return std::all_of(coeffs_.begin() + 1, coeffs_.end(), [](double c) { return c == 0.0; });
}

double RadialProfile::radial_derivative(double r, int order) const {
    double gv[5];
    g(r, 4, gv);
    const double r2 = r * r;
    switch (order) {
        case 0: return gv[0];
        case 1: return r * gv[1];
        case 2: return gv[1] + r2 * gv[2];
        case 3: return 3.0 * r * gv[2] + r * r2 * gv[3];
        case 4: return 3.0 * gv[2] + 6.0 * r2 * gv[3] + r2 * r2 * gv[4];
        default: throw std::invalid_argument("radial_derivative: order must be 0..4");
    }
}

CorrelationModel CorrelationModel::gaussian(int dim, double sigma, double ell, Envelope h) {
    if (dim < 3) throw DimensionError(dim);
    if (!(sigma >= 0.0) || !(ell > 0.0)) throw AdmissibilityError("gaussian model needs sigma >= 0, ell > 0");
    CorrelationModel m;
    m.kind_ = CorrelationKind::IsotropicGaussian;
    m.dim_ = dim;
    m.sigma_ = sigma;
    m.ell_ = ell;
    m.envelope_ = std::move(h);
    m.scales_ = Vec::Ones(dim);
    m.profile_ = std::make_shared<GaussianProfile>(dim, sigma, ell);
    return m;
}

CorrelationModel CorrelationModel::tabulated(int dim, double sigma, const std::vector<double>& kappa,
                                             const std::vector<double>& density, Envelope h) {
    if (dim < 3) throw DimensionError(dim);
    if (!(sigma >= 0.0)) throw AdmissibilityError("sigma must be >= 0");
    auto prof = make_tabulated(dim, sigma, kappa, density);
    CorrelationModel m;
    m.kind_ = CorrelationKind::IsotropicTabulated;
    m.dim_ = dim;
    m.sigma_ = sigma;
    m.ell_ = std::sqrt(static_cast<double>(dim)) / prof->rms_kappa();
    m.envelope_ = std::move(h);
    m.scales_ = Vec::Ones(dim);
    m.radial_cdf_ = std::shared_ptr<const std::vector<std::array<double, 2>>>(prof, &prof->cdf());
    m.profile_ = prof;
    return m;
}

CorrelationModel CorrelationModel::anisotropic(double sigma, const std::vector<double>& kappa,
                                               const std::vector<double>& density, const Vec& scales,
                                               Envelope h) {
    if (scales.size() != 3) throw DimensionError(static_cast<int>(scales.size()));
    if ((scales.array() <= 0.0).any()) throw AdmissibilityError("anisotropy scales must be positive");
    CorrelationModel m = tabulated(3, sigma, kappa, density, std::move(h));
    m.kind_ = CorrelationKind::AnisotropicTabulated;
    m.scales_ = scales;
    m.ell_ *= std::cbrt(scales.prod());
    return m;
}

void CorrelationModel::local_derivs(const Vec& y, int jmax, Vec& u, double* g) const {
    if (y.size() != dim_) throw DimensionError(static_cast<int>(y.size()));
    u = y.cwiseQuotient(scales_);
    profile_->g(u.norm(), jmax, g);
}

double CorrelationModel::rc(const Vec& y) const {
    Vec u;
    double g[1];
    local_derivs(y, 0, u, g);
    return g[0];
}

Vec CorrelationModel::rc_grad(const Vec& y) const {
    Vec u;
    double g[2];
    local_derivs(y, 1, u, g);
    return (g[1] * u).cwiseQuotient(scales_);
}

Mat CorrelationModel::rc_hessian(const Vec& y) const {
    Vec u;
    double g[3];
    local_derivs(y, 2, u, g);
    Mat h = g[2] * u * u.transpose();
    h.diagonal().array() += g[1];
    const Vec inv = scales_.cwiseInverse();
    return inv.asDiagonal() * h * inv.asDiagonal();
}

Vec CorrelationModel::rc_grad_laplacian(const Vec& y) const {
    Vec u;
    double g[4];
    local_derivs(y, 3, u, g);
    const Vec inv2 = scales_.array().square().inverse().matrix();
    Vec out(dim_);
    for (int m = 0; m < dim_; ++m) {
        double s = 0.0;
        for (int n = 0; n < dim_; ++n) {
            const double t = g[3] * u(m) * u(n) * u(n) + g[2] * ((m == n ? 2.0 * u(n) : 0.0) + u(m));
            s += inv2(n) * t;
        }
        out(m) = s / scales_(m);
    }
    return out;
}

double CorrelationModel::rc_derivative_norm(const Vec& y, int order) const {
    Vec u;
    double g[5];
    local_derivs(y, 4, u, g);
    const Vec inv = scales_.cwiseInverse();
    const int d = dim_;
    auto dl = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    double s = 0.0;
    switch (order) {
        case 0: return std::abs(g[0]);
        case 1: return (g[1] * u.cwiseProduct(inv)).norm();
        case 2:
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    const double t = (g[2] * u(i) * u(j) + g[1] * dl(i, j)) * inv(i) * inv(j);
                    s += t * t;
                }
            return std::sqrt(s);
        case 3:
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    for (int k = 0; k < d; ++k) {
                        const double t = (g[3] * u(i) * u(j) * u(k) +
                                          g[2] * (dl(i, j) * u(k) + dl(i, k) * u(j) + dl(j, k) * u(i))) *
                                         inv(i) * inv(j) * inv(k);
                        s += t * t;
                    }
            return std::sqrt(s);
        case 4:
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    for (int k = 0; k < d; ++k)
                        for (int l = 0; l < d; ++l) {
                            const double t =
                                (g[4] * u(i) * u(j) * u(k) * u(l) +
                                 g[3] * (dl(i, j) * u(k) * u(l) + dl(i, k) * u(j) * u(l) + dl(i, l) * u(j) * u(k) +
                                         dl(j, k) * u(i) * u(l) + dl(j, l) * u(i) * u(k) + dl(k, l) * u(i) * u(j)) +
                                 g[2] * (dl(i, j) * dl(k, l) + dl(i, k) * dl(j, l) + dl(i, l) * dl(j, k))) *
                                inv(i) * inv(j) * inv(k) * inv(l);
                            s += t * t;
                        }
            return std::sqrt(s);
        default: throw std::invalid_argument("rc_derivative_norm: order must be 0..4");
    }
}

double CorrelationModel::rc_spectrum(const Vec& p) const {
    if (p.size() != dim_) throw DimensionError(static_cast<int>(p.size()));
    return scales_.prod() * profile_->spectrum(p.cwiseProduct(scales_).norm());
}

double CorrelationModel::spectrum_radius() const { return profile_->kappa_max() / scales_.maxCoeff(); }

Vec CorrelationModel::sample_wavevector(Rng& rng) const {
    if (kind_ == CorrelationKind::IsotropicGaussian) return standard_normal_vector(rng, dim_) / ell_;
    const auto& cdf = *radial_cdf_;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng);
    auto it = std::lower_bound(cdf.begin() + 1, cdf.end(), u,
                               [](const std::array<double, 2>& c, double v) { return c[1] < v; });
    if (it == cdf.end()) it = cdf.end() - 1;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double span = hi[1] - lo[1];
    const double frac = span > 0.0 ? (u - lo[1]) / span : 0.5;
    const double kappa = lo[0] + frac * (hi[0] - lo[0]);
    Vec q = kappa * uniform_on_sphere(rng, dim_);
    return q.cwiseQuotient(scales_);
}

double correlation(const CorrelationModel& corr, const Vec& y, double k) {
    const double h = corr.envelope().value(k);
    return h * h * corr.rc(y);
}

double power_spectrum(const CorrelationModel& corr, const Vec& p, double k) {
    const double h = corr.envelope().value(k);
    return h * h * corr.rc_spectrum(p);
}

DecayReport check_decay(const CorrelationModel& corr, double r_max, const std::vector<int>& powers, double tol,
                        int n_radii, int n_directions) {
    DecayReport rep;
    Rng rng(derive_seed(0x64656361ULL, {static_cast<std::uint64_t>(corr.dim())}));
    std::vector<Vec> dirs;
    for (int i = 0; i < n_directions; ++i) dirs.push_back(uniform_on_sphere(rng, corr.dim()));
    const double ell = corr.ell();
    for (int order = 0; order <= 4; ++order) {
        double peak = 0.0;
        std::vector<double> tail(powers.size(), 0.0);
        for (int i = 0; i <= n_radii; ++i) {
            const double r = r_max * i / n_radii;
            for (const Vec& e : dirs) {
                const double v = corr.rc_derivative_norm(r * e, order);
                peak = std::max(peak, v);
                if (r >= 0.5 * r_max)
                    for (std::size_t m = 0; m < powers.size(); ++m)
                        tail[m] = std::max(tail[m], std::pow(r / ell, powers[m]) * v);
            }
        }
        if (peak == 0.0) continue;
        for (std::size_t m = 0; m < powers.size(); ++m) {
            const double ratio = tail[m] / peak;
            if (ratio > rep.worst_ratio) {
                rep.worst_ratio = ratio;
                rep.worst_order = order;
                rep.worst_power = powers[m];
            }
        }
    }
    rep.passed = rep.worst_ratio <= tol;
    return rep;
}

bool check_nondegenerate(const CorrelationModel& corr, const std::vector<Vec>& normals, int n_samples) {
    const int d = corr.dim();
    const double rmax = std::isfinite(corr.spectrum_radius()) ? corr.spectrum_radius() : 8.0 / corr.ell();
    for (const Vec& nrm : normals) {
        // Orthonormal basis of the hyperplane via QR of [n | I].
        Mat a(d, d + 1);
        a.col(0) = unit(nrm);
        a.rightCols(d) = Mat::Identity(d, d);
        Eigen::HouseholderQR<Mat> qr(a);
        Mat q = qr.householderQ() * Mat::Identity(d, d);
        bool positive = false;
        for (int s = 1; s <= n_samples && !positive; ++s) {
            const double rho = rmax * s / (n_samples + 1);
            for (int b = 1; b < d && !positive; ++b) {
                double v = 0.0;
                try {
                    v = corr.rc_spectrum(rho * q.col(b));
                } catch (const ValidationError&) {
                    continue;
                }
                positive = v > 0.0;
            }
        }
        if (!positive) return false;
    }
    return true;
}

}  // namespace raydiff
