#include "raydiff/common/interp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "raydiff/common/errors.hpp"

namespace raydiff {

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ValidationError("interpolation table needs >= 2 matching points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw ValidationError("interpolation abscissae must be strictly increasing");
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    m_.assign(n, 0.0);
    if (n == 2) {
        m_[0] = m_[1] = delta[0];
        return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) continue;
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        m_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    auto endpoint = [](double h0, double h1, double d0, double d1) {
        double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(m) > std::abs(3.0 * d0)) return 3.0 * d0;
        return m;
    };
    m_[0] = endpoint(h[0], h[1], delta[0], delta[1]);
    m_[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double Pchip::eval(double t, int order) const {
    const std::size_t n = x_.size();
    std::size_t i;
    if (t <= x_.front()) {
        i = 0;
    } else if (t >= x_.back()) {
        i = n - 2;
    } else {
        i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin()) - 1;
    }
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    const double y0 = y_[i], y1 = y_[i + 1], m0 = m_[i] * h, m1 = m_[i + 1] * h;
    // Cubic in s: y0 + m0 s + c2 s^2 + c3 s^3.
    const double c2 = 3.0 * (y1 - y0) - 2.0 * m0 - m1;
    const double c3 = 2.0 * (y0 - y1) + m0 + m1;
    switch (order) {
        case 0: return y0 + s * (m0 + s * (c2 + s * c3));
        case 1: return (m0 + s * (2.0 * c2 + 3.0 * s * c3)) / h;
        case 2: return (2.0 * c2 + 6.0 * s * c3) / (h * h);
        case 3: return 6.0 * c3 / (h * h * h);
        default: return 0.0;
    }
}

std::pair<std::vector<double>, std::vector<double>> read_two_column(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open table " + path.string());
    std::vector<double> a, b;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double u, v;
        if (!(ss >> u)) continue;
        std::string rest;
        if (!(ss >> v) || (ss >> rest))
            throw ConfigError(path.string() + ": expected two numeric columns", lineno);
        if (!a.empty() && !(u > a.back()))
            throw ConfigError(path.string() + ": first column must be strictly increasing", lineno);
        a.push_back(u);
        b.push_back(v);
    }
    if (a.size() < 2) throw ValidationError(path.string() + ": table needs at least two rows");
    return {a, b};
}

}  // namespace raydiff
