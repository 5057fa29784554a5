#pragma once

// 2-Wasserstein distances between empirical and grid measures, the
// Bolley-Villani weighted transportation-cost bound, and the quadratic-growth
// continuity bound. Exact couplings only: sorted quantile coupling in 1D and
// an exact assignment solve (shortest augmenting paths) in 2D.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gibbs_grid.hpp"
#include "measure.hpp"
#include "numerics.hpp"
#include "rng.hpp"

namespace langevin {

struct TransportPlanResult {
    double w2 = 0.0;
    std::string method; // "sorted_1d" | "assignment" | "grid_1d_cdf"
    long n = 0;
    bool subsampled = false;
};

namespace detail {

// Exact W2^2 between two equal-weight 1D point clouds of any sizes
// (step quantile functions integrated over the merged breakpoints).
inline double w2sq_sorted_1d(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double u = 0.0, acc = 0.0;
    while (i < a.size() && j < b.size()) {
        const double ua = (i + 1) / na, ub = (j + 1) / nb;
        const double unext = std::min(ua, ub);
        const double d = a[i] - b[j];
        acc += (unext - u) * d * d;
        u = unext;
        if (ua <= unext + 1e-18) ++i;
        if (ub <= unext + 1e-18) ++j;
    }
    return acc;
}

// Jonker-Volgenant style shortest augmenting path assignment on squared
// Euclidean cost, computed on the fly (cubic time, square instances).
inline double assignment_w2sq(const Mat& A, const Mat& B) {
    const int n = static_cast<int>(A.rows());
    auto cost = [&](int i, int j) { return (A.row(i) - B.row(j)).squaredNorm(); };
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
                if (minv[j] < delta) { delta = minv[j]; j1 = j; }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        if (p[j]) total += cost(p[j] - 1, j - 1);
    return total / n;
}

inline Mat subsample_rows(const Mat& X, long target) {
    // deterministic stride subsample, preserves order
    const long n = X.rows();
    Mat Y(target, X.cols());
    for (long k = 0; k < target; ++k) Y.row(k) = X.row(k * n / target);
    return Y;
}

} // namespace detail

inline TransportPlanResult w2_empirical(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("w2_empirical: empty measure");
    if (a.dim() != b.dim()) throw std::invalid_argument("w2_empirical: dimension mismatch");
    TransportPlanResult r;
    if (a.dim() == 1) {
        r.method = "sorted_1d";
        r.n = std::max(a.size(), b.size());
        r.w2 = std::sqrt(detail::w2sq_sorted_1d(a.as_scalars(), b.as_scalars()));
        return r;
    }
    if (a.size() != b.size())
        throw std::invalid_argument("w2_empirical: d >= 2 requires equal point counts");
    constexpr long kCap = 4096;
    Mat A = a.X, B = b.X;
    if (a.size() > kCap) {
        A = detail::subsample_rows(A, kCap);
        B = detail::subsample_rows(B, kCap);
        r.subsampled = true;
    }
    r.method = "assignment";
    r.n = A.rows();
    r.w2 = std::sqrt(detail::assignment_w2sq(A, B));
    return r;
}

// W2 between two 1D grid measures: int_0^1 |Qmu(u) - Qnu(u)|^2 du with
// piecewise-linear CDFs (uniform density within each cell), integrated
// exactly segment by segment (Simpson is exact for the quadratic integrand).
inline double w2_grid_1d(const GridMeasure& mu, const GridMeasure& nu) {
    if (mu.dim != 1 || nu.dim != 1) throw std::invalid_argument("w2_grid_1d: dim must be 1");

    struct Cdf {
        std::vector<double> x, c; // cell edges and cumulative mass
        double quantile(double q) const {
            const auto it = std::lower_bound(c.begin(), c.end(), q);
            std::size_t k = it - c.begin();
            if (k == 0) return x.front();
            if (k >= c.size()) return x.back();
            const double c0 = c[k - 1], c1 = c[k];
            if (c1 <= c0) return x[k];
            const double t = (q - c0) / (c1 - c0);
            return x[k - 1] + t * (x[k] - x[k - 1]);
        }
    };
    auto make_cdf = [](const GridMeasure& g) {
        Cdf f;
        const double h = g.h(0);
        f.x.push_back(g.box[0].first);
        f.c.push_back(0.0);
        double acc = 0.0;
        for (long i = 0; i < g.nodes(); ++i) {
            const double hi = g.box[0].first + (i + 0.5) * h; // node-centered cell edge
            acc += g.cellmass[i];
            f.x.push_back(std::min(hi, g.box[0].second));
            f.c.push_back(std::min(acc, 1.0));
        }
        f.c.back() = 1.0;
        return f;
    };
    const Cdf fa = make_cdf(mu), fb = make_cdf(nu);

    std::vector<double> breaks;
    breaks.reserve(fa.c.size() + fb.c.size());
    breaks.insert(breaks.end(), fa.c.begin(), fa.c.end());
    breaks.insert(breaks.end(), fb.c.begin(), fb.c.end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double u0 = breaks[k], u1 = breaks[k + 1];
        if (u1 <= u0) continue;
        auto dq = [&](double q) {
            const double d = fa.quantile(q) - fb.quantile(q);
            return d * d;
        };
        acc += (u1 - u0) / 6.0 * (dq(u0) + 4.0 * dq(0.5 * (u0 + u1)) + dq(u1));
    }
    return std::sqrt(std::max(0.0, acc));
}

// log MGF lambda -> log int e^{lambda ||w||^2} dnu of a grid measure
inline std::function<double(double)> mgf_log_of_grid(const GridMeasure& g) {
    std::vector<double> sq(static_cast<std::size_t>(g.nodes()));
    std::vector<double> lm(static_cast<std::size_t>(g.nodes()));
    for (long i = 0; i < g.nodes(); ++i) {
        sq[i] = g.node(i).squaredNorm();
        lm[i] = g.cellmass[i] > 0 ? std::log(g.cellmass[i])
                                  : -std::numeric_limits<double>::infinity();
    }
    return [sq, lm](double lambda) {
        std::vector<double> t(sq.size());
        for (std::size_t i = 0; i < sq.size(); ++i) t[i] = lm[i] + lambda * sq[i];
        return log_sum_exp(t);
    };
}

inline std::function<double(double)> mgf_log_of_empirical(const EmpiricalMeasure& em) {
    auto sq = em.squared_norms();
    const double logn = std::log(static_cast<double>(sq.size()));
    return [sq, logn](double lambda) {
        std::vector<double> t(sq.size());
        for (std::size_t i = 0; i < sq.size(); ++i) t[i] = lambda * sq[i];
        return log_sum_exp(t) - logn;
    };
}

// W2(mu, nu) <= C_nu [ sqrt(KL) + (KL/2)^{1/4} ],
// C_nu = 2 inf_lambda sqrt( (3/2 + log int e^{lambda||w||^2} dnu) / lambda )
// with lambda probed over the dyadic grid 2^-6 .. 2^4.
inline double bolley_villani_bound(double kl, const std::function<double(double)>& nu_mgf_log) {
    if (kl < 0) throw std::invalid_argument("bolley_villani_bound: kl >= 0");
    double cnu = std::numeric_limits<double>::infinity();
    for (int e = -6; e <= 4; ++e) {
        const double lambda = std::ldexp(1.0, e);
        const double lm = nu_mgf_log(lambda);
        if (!std::isfinite(lm)) continue;
        cnu = std::min(cnu, 2.0 * std::sqrt((1.5 + lm) / lambda));
    }
    if (!std::isfinite(cnu))
        throw std::invalid_argument("bolley_villani_bound: MGF infinite at all probed lambda");
    return cnu * (std::sqrt(kl) + std::pow(0.5 * kl, 0.25));
}

// |int g dmu - int g dnu| <= (c1 sigma + c2) W2(mu, nu) for ||grad g|| <= c1||w|| + c2,
// sigma^2 the larger second moment.
inline double function_gap_bound(double c1, double c2, double sigma2, double w2) {
    if (c1 < 0 || c2 < 0 || sigma2 < 0 || w2 < 0)
        throw std::invalid_argument("function_gap_bound: nonnegative inputs required");
    return (c1 * std::sqrt(sigma2) + c2) * w2;
}

// Bootstrap quantiles of the empirical W2 under resampling of both clouds
// (1D path). Used to pad measured distances in inequality verdicts.
struct BootstrapW2 {
    double point = 0.0;
    double lo05 = 0.0;
    double hi95 = 0.0;
};

// paired = true resamples replica indices jointly (both clouds must have the
// same size); use it when the clouds are coupled, else the resampling breaks
// the coupling and the pads blow up to the iid two-sample floor.
inline BootstrapW2 bootstrap_w2_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                   int resamples, std::uint64_t seed,
                                   bool paired = false) {
    if (a.dim() != 1 || b.dim() != 1) throw std::invalid_argument("bootstrap_w2_1d: 1D only");
    if (paired && a.size() != b.size())
        throw std::invalid_argument("bootstrap_w2_1d: paired needs equal sizes");
    const auto av = a.as_scalars();
    const auto bv = b.as_scalars();
    BootstrapW2 out;
    out.point = std::sqrt(detail::w2sq_sorted_1d(av, bv));
    if (resamples <= 0) {
        out.lo05 = out.hi95 = out.point;
        return out;
    }
    std::vector<double> vals(resamples);
    RngStream rs(seed, 0, RngPurpose::kBootstrap);
    for (int r = 0; r < resamples; ++r) {
        std::vector<double> ar(av.size()), br(bv.size());
        if (paired) {
            for (std::size_t i = 0; i < av.size(); ++i) {
                const auto j = rs.uniform_index(r, static_cast<std::uint32_t>(i), av.size());
                ar[i] = av[j];
                br[i] = bv[j];
            }
        } else {
            for (std::size_t i = 0; i < av.size(); ++i)
                ar[i] = av[rs.uniform_index(r, static_cast<std::uint32_t>(i), av.size())];
            for (std::size_t i = 0; i < bv.size(); ++i)
                br[i] = bv[rs.uniform_index(r, static_cast<std::uint32_t>(i + av.size()),
                                            bv.size())];
        }
        vals[r] = std::sqrt(detail::w2sq_sorted_1d(std::move(ar), std::move(br)));
    }
    std::sort(vals.begin(), vals.end());
    out.lo05 = vals[static_cast<std::size_t>(0.05 * (resamples - 1))];
    out.hi95 = vals[static_cast<std::size_t>(std::ceil(0.95 * (resamples - 1)))];
    return out;
}

} // namespace langevin
