#include "raydiff/momdiff/sde.hpp"

#include <algorithm>
#include <cmath>

#include "raydiff/common/errors.hpp"
#include "raydiff/common/io.hpp"
#include "raydiff/common/parallel.hpp"
#include "raydiff/common/rng.hpp"

namespace raydiff {

namespace {

/// One Euler-Maruyama step of the sphere diffusion with fixed |K| = k.
class SphereStepper {
  public:
    static constexpr int kMaxFast = 16;

    SphereStepper(const MomentumDiffusionTensors& t, double k) : t_(t), k_(k), d_(t.dim()) {
        speed_ = t.h0().d1(k);
        if (t.isotropic()) {
            iso_ = true;
            D0_ = t.D0(k);
        }
    }

    double speed() const { return speed_; }
    bool fast() const { return iso_ && d_ <= kMaxFast; }

    /// Full isotropic step on raw arrays, drawing the normals itself; also
    /// advances dx by the midpoint rule. Same arithmetic as step().
    void step_fast(double* kh, double* dx, double dt, Rng& rng, NormalDist& normal) const {
        double xi[kMaxFast], old[kMaxFast];
        double dot = 0.0;
        for (int c = 0; c < d_; ++c) {
            xi[c] = normal(rng);
            old[c] = kh[c];
            dot += kh[c] * xi[c];
        }
        const double s = std::sqrt(2.0 * D0_ * dt);
        const double radial = k_ - (d_ - 1) * D0_ / k_ * dt - s * dot;
        double nn = 0.0;
        for (int c = 0; c < d_; ++c) {
            kh[c] = radial * kh[c] + s * xi[c];
            nn += kh[c] * kh[c];
        }
        const double norm = std::sqrt(nn);
        const double half = 0.5 * dt * speed_;
        for (int c = 0; c < d_; ++c) {
            kh[c] /= norm;
            dx[c] += half * (old[c] + kh[c]);
        }
    }

    /// Advances khat over dt with the normals xi; returns |K_pre| - k.
    double step(Vec& khat, double dt, const Vec& xi, long& clipped) const {
        if (iso_) {
            // D = D0 (I - khat khat^T), sqrt(2D) = sqrt(2 D0) (I - khat khat^T),
            // E = -(d-1) D0 khat / k. Written in place: this is the hot loop.
            const double s = std::sqrt(2.0 * D0_ * dt);
            const double radial = k_ - (d_ - 1) * D0_ / k_ * dt - s * khat.dot(xi);
            khat = radial * khat + s * xi;
            const double norm = khat.norm();
            khat /= norm;
            return norm - k_;
        }
        Vec kvec = k_ * khat;
        {
            const Mat D = t_.D(khat, k_);
            const Vec E = t_.E(khat, k_);
            Eigen::SelfAdjointEigenSolver<Mat> eig(D);
            Vec lam = eig.eigenvalues();
            const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
            if (lam.minCoeff() < -1e-10 * scale) ++clipped;
            lam = lam.cwiseMax(0.0);
            const Mat root = eig.eigenvectors() * (2.0 * lam).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
            kvec += E * dt + std::sqrt(dt) * (root * xi);
        }
        const double norm = kvec.norm();
        khat = kvec / norm;
        return norm - k_;
    }

  private:
    const MomentumDiffusionTensors& t_;
    double k_;
    int d_;
    double speed_ = 0.0;
    bool iso_ = false;
    double D0_ = 0.0;
};

}  // namespace

SdePath simulate_momentum_sde(const MomentumDiffusionTensors& tensors, const PhasePoint& start, double T, double dt,
                              std::uint64_t seed, const SdeOptions& opt) {
    const int d = tensors.dim();
    if (start.k.size() != d || start.x.size() != d) throw DimensionError(static_cast<int>(start.k.size()));
    const double k = start.k.norm();
    if (!(k > 0.0)) throw ValidationError("initial momentum must be nonzero");
    if (!(dt > 0.0)) throw ValidationError("time step must be positive");
    if (T < 0.0) throw ValidationError("horizon must be >= 0");
    SphereStepper stepper(tensors, k);
    Rng rng(seed);
    SdePath path;
    Vec x = start.x, khat = start.k / k;
    path.times.push_back(0.0);
    path.x.push_back(x);
    path.k.push_back(k * khat);
    const long n = static_cast<long>(std::ceil(T / dt - 1e-9));
    for (long i = 0; i < n; ++i) {
        const double h = std::min(dt, T - i * dt);
        const Vec old = khat;
        const Vec xi = standard_normal_vector(rng, d);
        const double radial = stepper.step(khat, h, xi, path.clipped);
        path.max_radial_increment = std::max(path.max_radial_increment, std::abs(radial));
        if (path.clipped > opt.max_clips)
            throw NumericalError("diffusion matrix repeatedly indefinite along the path (" +
                                 std::to_string(path.clipped) + " clipped steps)");
        x += (0.5 * h * stepper.speed()) * (old + khat);
        if ((i + 1) % opt.record_every == 0 || i + 1 == n) {
            path.times.push_back(i + 1 == n ? T : (i + 1) * dt);
            path.x.push_back(x);
            path.k.push_back(k * khat);
        }
    }
    return path;
}

std::string sde_path_csv(const SdePath& path) {
    const int d = path.x.empty() ? 0 : static_cast<int>(path.x.front().size());
    std::vector<std::string> header{"t"};
    for (int i = 1; i <= d; ++i) header.push_back("x" + std::to_string(i));
    for (int i = 1; i <= d; ++i) header.push_back("k" + std::to_string(i));
    CsvWriter csv(header);
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        csv.cell(path.times[i]);
        for (int c = 0; c < d; ++c) csv.cell(path.x[i](c));
        for (int c = 0; c < d; ++c) csv.cell(path.k[i](c));
        csv.end_row();
    }
    return csv.str();
}

std::vector<McEstimate> kolmogorov_estimates(const MomentumDiffusionTensors& tensors, const PhaseSpaceObservable& phi0,
                                             const std::vector<EvalPoint>& points, int n_paths, double dt,
                                             std::uint64_t seed, const KolmogorovOptions& opt) {
    if (n_paths < 1) throw ValidationError("n_paths must be >= 1");
    if (!(dt > 0.0)) throw ValidationError("time step must be positive");
    const int d = tensors.dim();
    struct Group {
        Vec k;
        std::vector<double> times;
        std::vector<std::size_t> members;
    };
    std::vector<Group> groups;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const EvalPoint& p = points[i];
        if (p.t < 0.0) throw ValidationError("evaluation time must be >= 0");
        if (p.k.size() != d || p.x.size() != d) throw DimensionError(static_cast<int>(p.k.size()));
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.k == p.k; });
        if (it == groups.end()) {
            groups.push_back(Group{p.k, {}, {}});
            it = groups.end() - 1;
        }
        it->members.push_back(i);
        it->times.push_back(p.t);
    }
    for (auto& g : groups) {
        std::sort(g.times.begin(), g.times.end());
        g.times.erase(std::unique(g.times.begin(), g.times.end()), g.times.end());
    }
    const long max_clips = SdeOptions{}.max_clips;
    std::vector<SphereStepper> steppers;
    for (const auto& g : groups) steppers.emplace_back(tensors, g.k.norm());

    std::vector<std::vector<double>> values(n_paths, std::vector<double>(points.size()));
    parallel_for(
        static_cast<std::size_t>(n_paths),
        [&](std::size_t r) {
            long clipped = 0;
            for (std::size_t gi = 0; gi < groups.size(); ++gi) {
                const Group& g = groups[gi];
                const SphereStepper& st = steppers[gi];
                const double k = g.k.norm();
                Rng rng = make_rng(seed, {stream::sde, gi, r});
                Rng side = make_rng(seed, {stream::sde, gi, r, 1});
                Vec dx = Vec::Zero(d), khat = g.k / k, old(d), xi(d);
                NormalDist normal;
                double t = 0.0;
                std::size_t next = 0;
                std::vector<Vec> out_dx(g.times.size()), out_k(g.times.size());
                while (next < g.times.size()) {
                    // Outputs inside the coming step get a partial step of their own.
                    while (next < g.times.size() && g.times[next] < t + dt - 1e-12 * dt) {
                        const double tau = g.times[next] - t;
                        Vec kh = khat, xx = dx;
                        if (tau > 0.0) {
                            const Vec xi = standard_normal_vector(side, d);
                            st.step(kh, tau, xi, clipped);
                            xx += (0.5 * tau * st.speed()) * (khat + kh);
                        }
                        out_dx[next] = xx;
                        out_k[next] = k * kh;
                        ++next;
                    }
                    if (next == g.times.size()) break;
                    if (st.fast()) {
                        st.step_fast(khat.data(), dx.data(), dt, rng, normal);
                        t += dt;
                        continue;
                    }
                    old = khat;
                    for (int c = 0; c < d; ++c) xi(c) = normal(rng);
                    st.step(khat, dt, xi, clipped);
                    dx += (0.5 * dt * st.speed()) * (old + khat);
                    t += dt;
                    if (clipped > max_clips)
                        throw NumericalError("diffusion matrix repeatedly indefinite along a path (" +
                                             std::to_string(clipped) + " clipped steps)");
                }
                for (std::size_t m : g.members) {
                    const std::size_t ti =
                        std::lower_bound(g.times.begin(), g.times.end(), points[m].t) - g.times.begin();
                    values[r][m] = phi0(points[m].x + out_dx[ti], out_k[ti]);
                }
            }
        },
        opt.jobs);

    std::vector<McEstimate> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        double sum = 0.0;
        for (int r = 0; r < n_paths; ++r) sum += values[r][i];
        const double mean = sum / n_paths;
        double ss = 0.0;
        for (int r = 0; r < n_paths; ++r) ss += (values[r][i] - mean) * (values[r][i] - mean);
        out[i].mean = mean;
        out[i].n = n_paths;
        out[i].se = n_paths > 1 ? std::sqrt(ss / (n_paths - 1) / n_paths) : 0.0;
    }
    return out;
}

McEstimate kolmogorov_estimate(const MomentumDiffusionTensors& tensors, const PhaseSpaceObservable& phi0,
                               const EvalPoint& point, int n_paths, double dt, std::uint64_t seed) {
    return kolmogorov_estimates(tensors, phi0, {point}, n_paths, dt, seed).front();
}

}  // namespace raydiff
