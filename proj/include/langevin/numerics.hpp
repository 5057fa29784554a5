#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace langevin {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

inline double log_sum_exp(const Vec& v) {
    const double mx = v.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((v.array() - mx).exp().sum());
}

// Number of worker threads: LANGEVIN_LAB_THREADS overrides hardware count.
inline int worker_threads() {
    if (const char* env = std::getenv("LANGEVIN_LAB_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Deterministic parallel loop over [0,n): the body only writes to
// index-owned slots, so the schedule cannot affect results.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body) {
    const int nt = std::min<std::int64_t>(worker_threads(), std::max<std::int64_t>(n, 1));
    if (nt <= 1 || n < 2) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::int64_t chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        const std::int64_t lo = t * chunk;
        const std::int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_and_se(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("mean_and_se: empty sample");
    const double n = static_cast<double>(x.size());
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double s2 = 0.0;
    for (double v : x) s2 += (v - m) * (v - m);
    s2 /= std::max(1.0, n - 1.0);
    return {m, std::sqrt(s2 / n)};
}

// log(mean exp(x)) with a delta-method standard error of the log.
inline MeanSe log_mean_exp_and_se(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("log_mean_exp: empty sample");
    const double mx = *std::max_element(x.begin(), x.end());
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = std::exp(x[i] - mx);
    const auto ms = mean_and_se(e);
    return {mx + std::log(ms.mean), ms.se / ms.mean};
}

// Least squares line y = a + b t; returns {a, b, r_squared}.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 1.0;
};

inline LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size() || t.size() < 2)
        throw std::invalid_argument("fit_line: need >= 2 paired points");
    const double n = static_cast<double>(t.size());
    double st = 0, sy = 0;
    for (std::size_t i = 0; i < t.size(); ++i) { st += t[i]; sy += y[i]; }
    const double mt = st / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        sxx += (t[i] - mt) * (t[i] - mt);
        sxy += (t[i] - mt) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0) throw std::invalid_argument("fit_line: degenerate abscissa");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mt;
    double ssres = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * t[i]);
        ssres += r * r;
    }
    f.r_squared = syy > 0 ? 1.0 - ssres / syy : 1.0;
    return f;
}

// FNV-1a over bytes; used for config hashes in reports.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

struct MinimizeResult {
    Vec point;
    double value = 0.0;
    double grad_norm = 0.0;
};

// Gradient descent with Armijo backtracking from a single start.
inline MinimizeResult minimize_local(const std::function<double(const Vec&)>& f,
                                     const std::function<Vec(const Vec&)>& g,
                                     Vec w, int max_iter = 2000,
                                     double grad_tol = 1e-12) {
    double fw = f(w);
    for (int it = 0; it < max_iter; ++it) {
        const Vec gw = g(w);
        const double gn = gw.norm();
        if (gn <= grad_tol) break;
        double step = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
            const Vec cand = w - step * gw;
            const double fc = f(cand);
            if (fc <= fw - 1e-4 * step * gn * gn) {
                w = cand;
                fw = fc;
                break;
            }
            step *= 0.5;
            if (ls == 59) { it = max_iter; } // stuck on a flat or kinked spot
        }
    }
    const Vec gw = g(w);
    return {w, fw, gw.norm()};
}

// Multistart descent over a coarse grid of starts in [-radius, radius]^d.
inline MinimizeResult minimize_multistart(const std::function<double(const Vec&)>& f,
                                          const std::function<Vec(const Vec&)>& g,
                                          int dim, double radius,
                                          int starts_per_axis = 9) {
    if (dim < 1 || dim > 2)
        throw std::invalid_argument("minimize_multistart: dim must be 1 or 2");
    MinimizeResult best;
    best.value = std::numeric_limits<double>::infinity();
    std::vector<Vec> starts;
    if (dim == 1) {
        for (int i = 0; i < starts_per_axis; ++i) {
            Vec w(1);
            w[0] = -radius + 2.0 * radius * i / (starts_per_axis - 1);
            starts.push_back(w);
        }
    } else {
        for (int i = 0; i < starts_per_axis; ++i)
            for (int j = 0; j < starts_per_axis; ++j) {
                Vec w(2);
                w[0] = -radius + 2.0 * radius * i / (starts_per_axis - 1);
                w[1] = -radius + 2.0 * radius * j / (starts_per_axis - 1);
                starts.push_back(w);
            }
    }
    for (const Vec& s : starts) {
        const auto r = minimize_local(f, g, s);
        if (r.value < best.value) best = r;
    }
    return best;
}

} // namespace langevin
