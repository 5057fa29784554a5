#pragma once

// Loss families f(w,z) with verified regularity constants.
//
// An Objective carries the constants (A, B, M, m, b) of its assumption set:
//   A, B : |f(0,z)| <= A, ||grad f(0,z)|| <= B
//   M    : gradient Lipschitz constant (for the double-well: on the probe
//          ball only; the restriction is recorded in the report)
//   m, b : dissipativity <w, grad f(w,z)> >= m||w||^2 - b
// verify_assumptions probes these pointwise; violations become report rows,
// never exceptions.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "numerics.hpp"
#include "rng.hpp"

namespace langevin {

struct RegularityConstants {
    double A = 0.0;
    double B = 0.0;
    double M = 1.0;
    double m = 1.0;
    double b = 0.0;

    void validate() const {
        if (!(A >= 0 && B >= 0 && M > 0 && m > 0 && b >= 0))
            throw std::invalid_argument("RegularityConstants: need A,B,b >= 0 and M,m > 0");
    }
};

struct Dataset {
    explicit Dataset(std::vector<Vec> samples) : samples_(std::move(samples)) {
        if (samples_.empty()) throw std::invalid_argument("Dataset: need n >= 1");
        for (const Vec& z : samples_)
            if (!z.allFinite()) throw std::invalid_argument("Dataset: non-finite sample");
    }

    std::size_t size() const { return samples_.size(); }
    const Vec& operator[](std::size_t i) const { return samples_[i]; }
    const std::vector<Vec>& samples() const { return samples_; }

private:
    std::vector<Vec> samples_;
};

inline Dataset dataset_from_scalars(const std::vector<double>& zs) {
    std::vector<Vec> s;
    s.reserve(zs.size());
    for (double z : zs) {
        Vec v(1);
        v[0] = z;
        s.push_back(v);
    }
    return Dataset(std::move(s));
}

struct ProbeConfig {
    double radius = 0.0;       // 0 = use 3*sqrt(b/m + 1)
    int grid_per_axis = 101;   // dense grid resolution within the ball
    int random_points = 10000;
    int fd_points = 100;       // finite-difference gradient probes
    double fd_rel_tol = 1e-5;
    int max_z_probes = 64;     // cap on distinct samples probed
    std::uint64_t seed = 2024;

    double effective_radius(const RegularityConstants& c) const {
        return radius > 0 ? radius : 3.0 * std::sqrt(c.b / c.m + 1.0);
    }
};

struct Objective {
    std::string name;
    int dim = 1;
    std::function<double(const Vec&, const Vec&)> eval;  // f(w,z) >= 0
    std::function<Vec(const Vec&, const Vec&)> grad;
    // optional allocation-free accumulate: g += grad f(w,z); must perform the
    // same floating-point operations as grad so both paths are bit-identical.
    // Anyone replacing grad must replace or clear this too.
    std::function<void(const Vec&, const Vec&, Vec&)> grad_add;
    RegularityConstants constants;
    ProbeConfig probe;                 // shipped probe domain for the constants
    std::string restriction_note;      // nonempty if M holds on a ball only

    void check_dim(const Vec& w) const {
        if (w.size() != dim) throw std::invalid_argument("dimension mismatch: " + name);
    }
};

inline double empirical_risk(const Objective& obj, const Dataset& data, const Vec& w) {
    obj.check_dim(w);
    double s = 0.0;
    for (const Vec& z : data.samples()) s += obj.eval(w, z);
    return s / static_cast<double>(data.size());
}

inline Vec empirical_gradient(const Objective& obj, const Dataset& data, const Vec& w) {
    obj.check_dim(w);
    Vec g = Vec::Zero(obj.dim);
    if (obj.grad_add)
        for (const Vec& z : data.samples()) obj.grad_add(w, z, g);
    else
        for (const Vec& z : data.samples()) g += obj.grad(w, z);
    return g / static_cast<double>(data.size());
}

inline Vec finite_difference_gradient(const Objective& obj, const Vec& w, const Vec& z) {
    Vec g(obj.dim);
    for (int i = 0; i < obj.dim; ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(w[i]));
        Vec wp = w, wm = w;
        wp[i] += h;
        wm[i] -= h;
        g[i] = (obj.eval(wp, z) - obj.eval(wm, z)) / (2.0 * h);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Assumption verification

struct AssumptionViolation {
    std::string check;   // "A1", "A2", "A3", "nonneg", "sandwich_lo", ...
    Vec w;
    int z_index = -1;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct AssumptionReport {
    bool passed = true;
    std::size_t points_probed = 0;
    std::vector<AssumptionViolation> violations;
    double max_fd_rel_error = 0.0;
    std::string restriction_note;

    void add(std::string check, const Vec& w, int zi, double lhs, double rhs) {
        passed = false;
        if (violations.size() < 256)
            violations.push_back({std::move(check), w, zi, lhs, rhs});
    }
};

namespace detail {

inline std::vector<Vec> probe_points(int dim, const ProbeConfig& pc, double radius) {
    std::vector<Vec> pts;
    const int g = std::max(2, pc.grid_per_axis);
    if (dim == 1) {
        for (int i = 0; i < g; ++i) {
            Vec w(1);
            w[0] = -radius + 2.0 * radius * i / (g - 1);
            pts.push_back(w);
        }
    } else {
        const int ga = std::min(g, 64); // keep 2D dense probing tractable
        for (int i = 0; i < ga; ++i)
            for (int j = 0; j < ga; ++j) {
                Vec w(2);
                w[0] = -radius + 2.0 * radius * i / (ga - 1);
                w[1] = -radius + 2.0 * radius * j / (ga - 1);
                if (w.norm() <= radius) pts.push_back(w);
            }
    }
    RngStream rs(pc.seed, 0, RngPurpose::kProbe);
    for (int i = 0; i < pc.random_points; ++i) {
        Vec w(dim);
        for (int k = 0; k < dim; ++k)
            w[k] = (2.0 * rs.uniform(i, k) - 1.0) * radius;
        if (w.norm() <= radius) pts.push_back(w);
    }
    return pts;
}

} // namespace detail

inline AssumptionReport verify_assumptions(const Objective& obj, const Dataset& data,
                                           const ProbeConfig& pc) {
    const RegularityConstants& c = obj.constants;
    c.validate();
    const double radius = pc.effective_radius(c);
    const auto pts = detail::probe_points(obj.dim, pc, radius);

    AssumptionReport rep;
    rep.restriction_note = obj.restriction_note;

    std::vector<int> zidx;
    const int zstride = std::max<std::size_t>(1, data.size() / pc.max_z_probes);
    for (std::size_t i = 0; i < data.size(); i += zstride) zidx.push_back(static_cast<int>(i));

    const double tol = 1e-9;
    const Vec zero = Vec::Zero(obj.dim);
    const double log3 = std::log(3.0);

    for (int zi : zidx) {
        const Vec& z = data[zi];
        // (A.1) at the origin
        const double f0 = obj.eval(zero, z);
        if (std::abs(f0) > c.A * (1 + tol) + tol) rep.add("A1_value", zero, zi, std::abs(f0), c.A);
        const double g0 = obj.grad(zero, z).norm();
        if (g0 > c.B * (1 + tol) + tol) rep.add("A1_grad", zero, zi, g0, c.B);

        Vec prev;
        Vec gprev;
        for (const Vec& w : pts) {
            const double f = obj.eval(w, z);
            const Vec g = obj.grad(w, z);
            const double wn2 = w.squaredNorm();
            ++rep.points_probed;
            if (f < -tol) rep.add("nonneg", w, zi, f, 0.0);
            // (A.3) dissipativity
            const double inner = w.dot(g);
            if (inner < c.m * wn2 - c.b - tol * (1 + wn2))
                rep.add("A3", w, zi, inner, c.m * wn2 - c.b);
            // quadratic sandwich implied by the assumptions
            const double up = 0.5 * c.M * wn2 + c.B * w.norm() + c.A;
            if (f > up * (1 + tol) + tol) rep.add("sandwich_hi", w, zi, f, up);
            const double lo = c.m / 3.0 * wn2 - 0.5 * c.b * log3;
            if (f < lo - tol * (1 + wn2)) rep.add("sandwich_lo", w, zi, f, lo);
            const double gb = c.M * w.norm() + c.B;
            if (g.norm() > gb * (1 + tol) + tol) rep.add("grad_growth", w, zi, g.norm(), gb);
            // (A.2) on consecutive probe pairs
            if (prev.size() == obj.dim) {
                const double dw = (w - prev).norm();
                const double dg = (g - gprev).norm();
                if (dg > c.M * dw * (1 + 1e-7) + tol)
                    rep.add("A2", w, zi, dg, c.M * dw);
            }
            prev = w;
            gprev = g;
        }
    }

    // gradient consistency against central differences
    RngStream rs(pc.seed, 1, RngPurpose::kProbe);
    const double fd_radius = 2.0 * std::sqrt(c.b / c.m + 1.0);
    for (int i = 0; i < pc.fd_points; ++i) {
        Vec w(obj.dim);
        for (int k = 0; k < obj.dim; ++k)
            w[k] = (2.0 * rs.uniform(i, k) - 1.0) * fd_radius;
        const Vec& z = data[i % data.size()];
        const Vec g = obj.grad(w, z);
        const Vec gfd = finite_difference_gradient(obj, w, z);
        const double rel = (g - gfd).norm() / std::max(1.0, g.norm());
        rep.max_fd_rel_error = std::max(rep.max_fd_rel_error, rel);
        if (rel > pc.fd_rel_tol) rep.add("grad_fd", w, static_cast<int>(i % data.size()), rel, pc.fd_rel_tol);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Built-in objective zoo

// f(w,z) = (kappa/2)||w||^2, sample ignored. Tight constants, any dimension.
inline Objective make_quadratic_well(int dim, double kappa = 1.0) {
    if (kappa <= 0) throw std::invalid_argument("quadratic_well: kappa > 0");
    Objective o;
    o.name = "quadratic_well";
    o.dim = dim;
    o.eval = [kappa](const Vec& w, const Vec&) { return 0.5 * kappa * w.squaredNorm(); };
    o.grad = [kappa](const Vec& w, const Vec&) -> Vec { return kappa * w; };
    o.grad_add = [kappa](const Vec& w, const Vec&, Vec& g) { g += kappa * w; };
    o.constants = {0.0, 0.0, kappa, kappa, 0.0};
    return o;
}

// f(w,z) = (w-z)^2/2 on z in [-z_range, z_range]; Young gives m=1/2, b=z_range^2/2.
inline Objective make_quadratic_regression(double z_range = 1.0) {
    if (z_range < 0) throw std::invalid_argument("quadratic_regression: z_range >= 0");
    Objective o;
    o.name = "quadratic_regression";
    o.dim = 1;
    o.eval = [](const Vec& w, const Vec& z) { const double d = w[0] - z[0]; return 0.5 * d * d; };
    o.grad = [](const Vec& w, const Vec& z) -> Vec {
        Vec g(1);
        g[0] = w[0] - z[0];
        return g;
    };
    o.grad_add = [](const Vec& w, const Vec& z, Vec& g) { g[0] += w[0] - z[0]; };
    if (z_range == 0.0)
        o.constants = {0.0, 0.0, 1.0, 1.0, 0.0};
    else
        o.constants = {0.5 * z_range * z_range, z_range, 1.0, 0.5, 0.5 * z_range * z_range};
    return o;
}

namespace detail {

// b(m=1) for the double-well: max over w>=0 of (2-gamma) w^2 + zr w - w^4,
// located by Newton on the cubic stationarity condition.
inline double double_well_b(double gamma, double z_range) {
    const double a2 = 2.0 - gamma;
    if (a2 <= 0 && z_range == 0) return 0.0;
    double w = std::sqrt(std::max(0.5, a2 * 0.5));
    for (int it = 0; it < 200; ++it) {
        const double h = 2 * a2 * w + z_range - 4 * w * w * w;
        const double hp = 2 * a2 - 12 * w * w;
        const double step = h / hp;
        w -= step;
        if (std::abs(step) < 1e-14) break;
    }
    const double val = a2 * w * w + z_range * w - w * w * w * w;
    return std::max(0.0, val);
}

} // namespace detail

// f(w,z) = (w^2-1)^2/4 + z w + (gamma/2) w^2 + c0, z in [-z_range, z_range].
// M is the gradient Lipschitz constant on |w| <= ball_radius only; global
// M-smoothness fails for the quartic and the restriction is reported.
inline Objective make_double_well(double gamma = 0.5, double z_range = 1.0,
                                  double c0 = 1.0, double ball_radius = 1.3) {
    Objective o;
    o.name = "double_well";
    o.dim = 1;
    o.eval = [gamma, c0](const Vec& w, const Vec& z) {
        const double x = w[0];
        const double q = x * x - 1.0;
        return 0.25 * q * q + z[0] * x + 0.5 * gamma * x * x + c0;
    };
    o.grad = [gamma](const Vec& w, const Vec& z) -> Vec {
        const double x = w[0];
        Vec g(1);
        g[0] = x * x * x - x + z[0] + gamma * x;
        return g;
    };
    o.grad_add = [gamma](const Vec& w, const Vec& z, Vec& g) {
        const double x = w[0];
        g[0] += x * x * x - x + z[0] + gamma * x;
    };
    RegularityConstants c;
    c.A = 0.25 + c0;
    c.B = z_range;
    c.m = 1.0;
    c.b = detail::double_well_b(gamma, z_range);
    c.M = std::max(3.0 * ball_radius * ball_radius - (1.0 - gamma), gamma + 2.0);
    o.constants = c;
    o.probe.radius = ball_radius;
    std::ostringstream note;
    note << "M = " << c.M << " is the gradient Lipschitz constant on |w| <= "
         << ball_radius << " only; the quartic is not globally M-smooth";
    o.restriction_note = note.str();
    return o;
}

// 2D regularized logistic loss, z = (x1, x2, y), ||x|| <= x_max, y in {-1,1}:
//   f(w,z) = log(1 + exp(-y <x,w>)) + (gamma/2)||w||^2.
inline Objective make_logistic_2d(double gamma = 1.0, double x_max = 1.0) {
    if (gamma <= 0) throw std::invalid_argument("logistic_2d: gamma > 0");
    Objective o;
    o.name = "logistic_2d";
    o.dim = 2;
    o.eval = [gamma](const Vec& w, const Vec& z) {
        const double t = z[2] * (z[0] * w[0] + z[1] * w[1]);
        // log(1+e^{-t}) evaluated stably
        const double l = t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
        return l + 0.5 * gamma * w.squaredNorm();
    };
    o.grad = [gamma](const Vec& w, const Vec& z) -> Vec {
        const double t = z[2] * (z[0] * w[0] + z[1] * w[1]);
        const double s = t > 0 ? std::exp(-t) / (1.0 + std::exp(-t))
                               : 1.0 / (1.0 + std::exp(t)); // sigmoid(-t)
        Vec g(2);
        g[0] = -z[2] * z[0] * s + gamma * w[0];
        g[1] = -z[2] * z[1] * s + gamma * w[1];
        return g;
    };
    o.grad_add = [gamma](const Vec& w, const Vec& z, Vec& g) {
        const double t = z[2] * (z[0] * w[0] + z[1] * w[1]);
        const double s = t > 0 ? std::exp(-t) / (1.0 + std::exp(-t))
                               : 1.0 / (1.0 + std::exp(t));
        g[0] += -z[2] * z[0] * s + gamma * w[0];
        g[1] += -z[2] * z[1] * s + gamma * w[1];
    };
    RegularityConstants c;
    c.A = std::log(2.0);
    c.B = 0.5 * x_max;
    c.M = 0.25 * x_max * x_max + gamma;        // sigmoid' <= 1/4
    c.m = 0.5 * gamma;                          // weight decay
    c.b = 0.5 * x_max * x_max / gamma;          // L = x_max Lipschitz base
    o.constants = c;
    return o;
}

// ---------------------------------------------------------------------------
// Constructors that enforce the assumptions

// A base loss with known Lipschitz/regularity data, to be regularized.
struct LipschitzObjective {
    std::string name;
    int dim = 1;
    std::function<double(const Vec&, const Vec&)> eval;
    std::function<Vec(const Vec&, const Vec&)> grad;
    double lipschitz = 0.0;  // L for w -> f0(w,z)
    double smooth_M0 = 0.0;  // gradient Lipschitz constant of f0
    double A0 = 0.0;         // |f0(0,z)| bound
    double B0 = 0.0;         // ||grad f0(0,z)|| bound
};

// f(w,z) = f0(w,z) + (gamma/2)||w||^2 with m = gamma/2, b = L^2/(2 gamma).
inline Objective with_weight_decay(const LipschitzObjective& base, double gamma) {
    if (gamma <= 0) throw std::invalid_argument("with_weight_decay: gamma > 0");
    Objective o;
    o.name = base.name + "+decay";
    o.dim = base.dim;
    auto ev = base.eval;
    auto gr = base.grad;
    o.eval = [ev, gamma](const Vec& w, const Vec& z) {
        return ev(w, z) + 0.5 * gamma * w.squaredNorm();
    };
    o.grad = [gr, gamma](const Vec& w, const Vec& z) -> Vec {
        return gr(w, z) + gamma * w;
    };
    RegularityConstants c;
    c.A = base.A0;
    c.B = base.B0;
    c.M = base.smooth_M0 + gamma;
    c.m = 0.5 * gamma;
    c.b = 0.5 * base.lipschitz * base.lipschitz / gamma;
    o.constants = c;
    return o;
}

// ---------------------------------------------------------------------------
// Smoothed objective (Gaussian convolution of the tilted Gibbs weight):
//   F~(w) = -(1/beta) log  int_{||v||<=R} exp(-beta gamma ||v-w||^2 / 2)
//                                        exp(-beta F_z(v)) dv
// evaluated on a fixed v-grid; the gradient gamma (w - mean_rho(v)) is the
// exact gradient of the quadrature approximation.

struct QuadratureConfig {
    int nodes_per_axis = 513;
};

inline Objective smoothed_objective(const Objective& obj, const Dataset& data,
                                    double beta, double gamma, double radius,
                                    const QuadratureConfig& quad) {
    if (obj.dim > 2) throw std::invalid_argument("smoothed_objective: dim <= 2 required");
    if (beta <= 0 || gamma <= 0 || radius <= 0)
        throw std::invalid_argument("smoothed_objective: beta, gamma, radius > 0");
    const int n = quad.nodes_per_axis;
    if (n < 8) throw std::invalid_argument("smoothed_objective: quadrature grid too coarse to cover radius");

    struct State {
        std::vector<Vec> nodes;
        std::vector<double> logw; // log(quad weight) - beta F_z(v)
        double beta, gamma, shift;
        int dim;
    };
    auto st = std::make_shared<State>();
    st->beta = beta;
    st->gamma = gamma;
    st->dim = obj.dim;
    const double h = 2.0 * radius / (n - 1);
    if (obj.dim == 1) {
        for (int i = 0; i < n; ++i) {
            Vec v(1);
            v[0] = -radius + i * h;
            const double wq = (i == 0 || i == n - 1) ? 0.5 * h : h;
            st->nodes.push_back(v);
            st->logw.push_back(std::log(wq) - beta * empirical_risk(obj, data, v));
        }
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Vec v(2);
                v[0] = -radius + i * h;
                v[1] = -radius + j * h;
                if (v.norm() > radius) continue; // disk mask
                st->nodes.push_back(v);
                st->logw.push_back(std::log(h * h) - beta * empirical_risk(obj, data, v));
            }
    }

    auto raw_eval = [st](const Vec& w) {
        std::vector<double> terms(st->nodes.size());
        for (std::size_t j = 0; j < st->nodes.size(); ++j) {
            const double d2 = (st->nodes[j] - w).squaredNorm();
            terms[j] = st->logw[j] - 0.5 * st->beta * st->gamma * d2;
        }
        return -log_sum_exp(terms) / st->beta;
    };

    // shift so the result is nonnegative on the covered range
    double minval = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 32; ++i) {
        Vec w = Vec::Zero(obj.dim);
        w[0] = -radius + 2.0 * radius * i / 32.0;
        minval = std::min(minval, raw_eval(w));
        if (obj.dim == 2) {
            Vec w2 = Vec::Zero(2);
            w2[1] = w[0];
            minval = std::min(minval, raw_eval(w2));
        }
    }
    st->shift = minval < 0 ? -minval : 0.0;

    Objective o;
    o.name = obj.name + "+smoothed";
    o.dim = obj.dim;
    o.eval = [st, raw_eval](const Vec& w, const Vec&) { return raw_eval(w) + st->shift; };
    o.grad = [st](const Vec& w, const Vec&) -> Vec {
        std::vector<double> terms(st->nodes.size());
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < st->nodes.size(); ++j) {
            const double d2 = (st->nodes[j] - w).squaredNorm();
            terms[j] = st->logw[j] - 0.5 * st->beta * st->gamma * d2;
            mx = std::max(mx, terms[j]);
        }
        double den = 0.0;
        Vec num = Vec::Zero(st->dim);
        for (std::size_t j = 0; j < st->nodes.size(); ++j) {
            const double e = std::exp(terms[j] - mx);
            den += e;
            num += e * st->nodes[j];
        }
        return st->gamma * (w - num / den);
    };
    RegularityConstants c;
    c.m = 0.5 * gamma;
    c.b = 0.5 * gamma * radius * radius;
    c.M = gamma * (1.0 + beta * gamma * radius * radius);
    c.B = gamma * radius;
    {
        Vec zero = Vec::Zero(obj.dim);
        Vec dummy = Vec::Zero(1);
        c.A = std::abs(raw_eval(zero) + st->shift);
        (void)dummy;
    }
    o.constants = c;
    o.probe.radius = radius;
    return o;
}

// ---------------------------------------------------------------------------
// Registry (string name + parameter map, used by the JSON config layer)

inline Objective make_objective(const std::string& name,
                                const std::map<std::string, double>& params) {
    auto get = [&params](const std::string& k, double dflt) {
        auto it = params.find(k);
        return it == params.end() ? dflt : it->second;
    };
    if (name == "quadratic_well")
        return make_quadratic_well(static_cast<int>(get("dim", 1)), get("kappa", 1.0));
    if (name == "quadratic_regression")
        return make_quadratic_regression(get("z_range", 1.0));
    if (name == "double_well")
        return make_double_well(get("gamma", 0.5), get("z_range", 1.0), get("c0", 1.0),
                                get("ball_radius", 1.3));
    if (name == "logistic_2d")
        return make_logistic_2d(get("gamma", 1.0), get("x_max", 1.0));
    throw std::invalid_argument("unknown objective: " + name);
}

} // namespace langevin
