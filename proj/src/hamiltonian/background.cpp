#include "raydiff/hamiltonian/background.hpp"

#include <algorithm>
#include <cmath>

#include "raydiff/common/errors.hpp"

namespace raydiff {

BackgroundHamiltonian BackgroundHamiltonian::quadratic() { return BackgroundHamiltonian{}; }

BackgroundHamiltonian BackgroundHamiltonian::acoustic(double c0) {
    if (!(c0 > 0.0)) throw ValidationError("acoustic Hamiltonian needs c0 > 0");
    BackgroundHamiltonian h;
    h.kind_ = HamiltonianKind::Acoustic;
    h.c0_ = c0;
    return h;
}

BackgroundHamiltonian BackgroundHamiltonian::tabulated(std::vector<double> k, std::vector<double> h0) {
    if (k.size() < 3) throw ValidationError("tabulated H0 needs at least 3 rows");
    if (k.front() < 0.0) throw ValidationError("tabulated H0: momenta must be >= 0");
    if (h0.front() < 0.0) throw ValidationError("tabulated H0: H0 must be >= 0");
    for (std::size_t i = 1; i < h0.size(); ++i)
        if (!(h0[i] > h0[i - 1])) throw ValidationError("tabulated H0 must be strictly increasing");
    BackgroundHamiltonian h;
    h.kind_ = HamiltonianKind::Tabulated;
    h.table_ = Pchip(std::move(k), std::move(h0));
    return h;
}

double BackgroundHamiltonian::eval(double k, int order) const {
    switch (kind_) {
        case HamiltonianKind::Quadratic:
            return order == 0 ? 0.5 * k * k : order == 1 ? k : order == 2 ? 1.0 : 0.0;
        case HamiltonianKind::Acoustic:
            return order == 0 ? c0_ * k : order == 1 ? c0_ : 0.0;
        case HamiltonianKind::Tabulated:
            if (k < table_.front() || k > table_.back())
                throw ValidationError("momentum " + std::to_string(k) + " outside the tabulated H0 range");
            return table_.eval(k, order);
    }
    return 0.0;
}

double BackgroundHamiltonian::inverse(double value) const {
    switch (kind_) {
        case HamiltonianKind::Quadratic:
            if (value < 0.0) throw ValidationError("H0^{-1}: value below H0(0)");
            return std::sqrt(2.0 * value);
        case HamiltonianKind::Acoustic:
            if (value < 0.0) throw ValidationError("H0^{-1}: value below H0(0)");
            return value / c0_;
        case HamiltonianKind::Tabulated: {
            double lo = table_.front(), hi = table_.back();
            if (value < table_(lo) || value > table_(hi))
                throw ValidationError("H0^{-1}: value outside the tabulated range");
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                (table_(mid) < value ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    return 0.0;
}

namespace {
template <class F>
double scan(double M, F f, bool want_max) {
    const int n = 2000;
    const double a = std::log(1.0 / M), b = std::log(M);
    double best = f(1.0 / M);
    for (int i = 1; i <= n; ++i) {
        const double v = f(std::exp(a + (b - a) * i / n));
        best = want_max ? std::max(best, v) : std::min(best, v);
    }
    return best;
}
}  // namespace

double BackgroundHamiltonian::h_upper(double M) const {
    return scan(M, [&](double k) { return eval(k, 1) + std::abs(eval(k, 2)) + std::abs(eval(k, 3)); }, true);
}

double BackgroundHamiltonian::h_lower(double M) const {
    return scan(M, [&](double k) { return eval(k, 1); }, false);
}

}  // namespace raydiff
