#pragma once

// Explicit theory constants and assembled bounds: the Girsanov KL bound and
// its Wasserstein consequence, the log-Sobolev constant, the Lyapunov
// criteria, the initial relative-entropy bound, Gibbs stability, the
// excess-risk assembly, and the spectral-gap lower bounds. All pure
// functions of their inputs.

#include <cmath>
#include <stdexcept>
#include <string>

#include "numerics.hpp"
#include "objective.hpp"

namespace langevin {

enum class LambdaProvenance { Numeric, Lyapunov, Bardet, User };

inline const char* to_string(LambdaProvenance p) {
    switch (p) {
        case LambdaProvenance::Numeric: return "numeric";
        case LambdaProvenance::Lyapunov: return "lyapunov";
        case LambdaProvenance::Bardet: return "bardet";
        case LambdaProvenance::User: return "user";
    }
    return "?";
}

struct BoundsInput {
    RegularityConstants consts;
    int d = 1;
    long n = 1;
    double beta = 1.0;
    double delta = 0.0;
    double kappa0 = 0.0;
    double log_p0_inf = 0.0;
    double lambda_star = 1.0;
    LambdaProvenance lambda_provenance = LambdaProvenance::User;
    double universal_C = 1.0; // the unpinned constant of the Poincare criterion

    void validate() const {
        consts.validate();
        if (d < 1) throw std::invalid_argument("BoundsInput: d >= 1");
        if (n < 1) throw std::invalid_argument("BoundsInput: n >= 1");
        if (beta <= 0) throw std::invalid_argument("BoundsInput: beta > 0");
        if (!(delta >= 0 && delta < 1))
            throw std::invalid_argument("BoundsInput: delta in [0,1)");
        if (kappa0 < 0) throw std::invalid_argument("BoundsInput: kappa0 >= 0");
        if (lambda_star <= 0) throw std::invalid_argument("BoundsInput: lambda_star > 0");
        if (universal_C <= 0) throw std::invalid_argument("BoundsInput: universal_C > 0");
    }

    double eta_max() const {
        const double m = consts.m, M = consts.M;
        return std::min(1.0, m / (4.0 * M * M));
    }

    // kappa0 + 2 (1 v 1/m)(b + 2B^2 + d/beta): the uniform L^2 bound
    double sigma2_uniform() const {
        const auto& c = consts;
        return kappa0 + 2.0 * std::max(1.0, 1.0 / c.m) *
                            (c.b + 2.0 * c.B * c.B + static_cast<double>(d) / beta);
    }
};

struct GirsanovConstants {
    double C0 = 0.0; // M^2 (kappa0 + 2(1 v 1/m)(b + 2B^2 + d/beta)) + B^2
    double C1 = 0.0; // 6 M^2 (beta C0 + d)
};

inline GirsanovConstants girsanov_constants(const BoundsInput& in) {
    in.validate();
    const auto& c = in.consts;
    GirsanovConstants g;
    g.C0 = c.M * c.M * in.sigma2_uniform() + c.B * c.B;
    g.C1 = 6.0 * c.M * c.M * (in.beta * g.C0 + in.d);
    return g;
}

// KL(mu_k || nu_{k eta}) <= (C0 beta delta + C1 eta) k eta
inline double kl_discretization_bound(const BoundsInput& in, double k, double eta) {
    if (!(eta > 0 && eta < in.eta_max()))
        throw std::invalid_argument("kl_discretization_bound: eta outside (0, 1 ^ m/4M^2)");
    const auto g = girsanov_constants(in);
    return (g.C0 * in.beta * in.delta + g.C1 * eta) * k * eta;
}

struct W2DiscretizationBound {
    double C0_tilde_sq = 0.0;
    double C1_tilde_sq = 0.0;
    double value = 0.0; // sqrt(C0~^2 sqrt(delta) + C1~^2 sqrt(eta)) * k eta
};

inline W2DiscretizationBound w2_discretization_constants(const BoundsInput& in) {
    const auto g = girsanov_constants(in);
    const auto& c = in.consts;
    const double pref =
        12.0 + 8.0 * (in.kappa0 + 2.0 * c.b + 2.0 * static_cast<double>(in.d) / in.beta);
    W2DiscretizationBound r;
    r.C0_tilde_sq = pref * (in.beta * g.C0 + std::sqrt(in.beta * g.C0));
    r.C1_tilde_sq = pref * (g.C1 + std::sqrt(g.C1));
    return r;
}

inline W2DiscretizationBound w2_discretization_bound(const BoundsInput& in, double k,
                                                     double eta) {
    if (!(eta > 0 && eta < in.eta_max()))
        throw std::invalid_argument("w2_discretization_bound: eta outside (0, 1 ^ m/4M^2)");
    if (k * eta < 1.0)
        throw std::invalid_argument("w2_discretization_bound: requires k eta >= 1");
    auto r = w2_discretization_constants(in);
    r.value = std::sqrt(r.C0_tilde_sq * std::sqrt(in.delta) +
                        r.C1_tilde_sq * std::sqrt(eta)) *
              k * eta;
    return r;
}

// c_LS <= (2m^2 + 8M^2)/(m^2 M beta) + (1/lambda*)(6M(d+beta)/m + 2)
inline double lsi_constant(const BoundsInput& in) {
    in.validate();
    const auto& c = in.consts;
    if (in.beta < 2.0 / c.m)
        throw std::invalid_argument("lsi_constant: requires beta >= 2/m");
    return (2.0 * c.m * c.m + 8.0 * c.M * c.M) / (c.m * c.m * c.M * in.beta) +
           (6.0 * c.M * (in.d + in.beta) / c.m + 2.0) / in.lambda_star;
}

// Lyapunov-certificate route, evaluated in log space:
//  1/lambda <= 1/(m beta (d + b beta))
//            + (2C (d + b beta)/(m beta)) exp((2/m)(M+B)(b beta + d) + beta(A+B))
struct SpectralGapLowerBound {
    double lambda_lb = 0.0;  // may underflow to 0; log_inv_lambda is exact
    double log_inv_lambda = 0.0;
};

inline SpectralGapLowerBound spectral_gap_lower_bound(const BoundsInput& in) {
    in.validate();
    const auto& c = in.consts;
    const double dbb = in.d + c.b * in.beta;
    const double t1 = -std::log(c.m * in.beta * dbb);
    const double t2 = std::log(2.0 * in.universal_C * dbb / (c.m * in.beta)) +
                      (2.0 / c.m) * (c.M + c.B) * dbb + in.beta * (c.A + c.B);
    SpectralGapLowerBound r;
    r.log_inv_lambda = log_sum_exp(std::vector<double>{t1, t2});
    r.lambda_lb = std::exp(-r.log_inv_lambda);
    return r;
}

// Drift parameters of the Lyapunov function V = exp(m beta ||w||^2 / 4).
struct LyapunovDrift {
    double kappa = 0.0;   // m beta (d + b beta)/2
    double gamma = 0.0;   // (m beta)^2 / 4
    double R = 0.0;       // sqrt(2 kappa / gamma)
    double lambda0 = 0.0; // 2 kappa
};

inline LyapunovDrift lyapunov_drift(const BoundsInput& in) {
    LyapunovDrift l;
    l.kappa = 0.5 * in.consts.m * in.beta * (in.d + in.consts.b * in.beta);
    l.gamma = 0.25 * in.consts.m * in.consts.m * in.beta * in.beta;
    l.R = std::sqrt(2.0 * l.kappa / l.gamma);
    l.lambda0 = 2.0 * l.kappa;
    return l;
}

// c_P = (1/lambda0) (1 + C kappa R^2 e^{Osc_R(beta F_z)})
inline double lyapunov_poincare(const BoundsInput& in, double R, double osc_R) {
    in.validate();
    const auto l = lyapunov_drift(in);
    if (R <= 0) throw std::invalid_argument("lyapunov_poincare: R > 0");
    return (1.0 + in.universal_C * l.kappa * R * R * std::exp(osc_R)) / l.lambda0;
}

// Osc over the ball ||w|| <= R of beta F_z, from a dense grid.
inline double oscillation_on_ball(const Objective& obj, const Dataset& data, double beta,
                                  double R, int points_per_axis = 301) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto visit = [&](const Vec& w) {
        const double v = beta * empirical_risk(obj, data, w);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    if (obj.dim == 1) {
        for (int i = 0; i < points_per_axis; ++i) {
            Vec w(1);
            w[0] = -R + 2.0 * R * i / (points_per_axis - 1);
            visit(w);
        }
    } else {
        const int g = std::min(points_per_axis, 151);
        for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j) {
                Vec w(2);
                w[0] = -R + 2.0 * R * i / (g - 1);
                w[1] = -R + 2.0 * R * j / (g - 1);
                if (w.norm() <= R) visit(w);
            }
    }
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("oscillation_on_ball: grid does not cover the ball");
    return hi - lo;
}

// c_LS = C1 + (C2 + 2) c_P with K = beta M, C1 = 2K/gamma + 2/K,
// C2 = (2K/gamma)(kappa + gamma * second_moment).
inline double lyapunov_lsi(const BoundsInput& in, double c_P, double second_moment) {
    in.validate();
    if (c_P <= 0) throw std::invalid_argument("lyapunov_lsi: c_P > 0");
    const double K = in.beta * in.consts.M;
    if (K <= 0) throw std::invalid_argument("lyapunov_lsi: K = beta M > 0");
    const auto l = lyapunov_drift(in);
    const double C1 = 2.0 * K / l.gamma + 2.0 / K;
    const double C2 = 2.0 * K / l.gamma * (l.kappa + l.gamma * second_moment);
    return C1 + (C2 + 2.0) * c_P;
}

// D(mu_0 || pi_z) <= log||p0||_inf + (d/2) log(3 pi/(m beta))
//                  + beta (M kappa0/3 + B sqrt(kappa0) + A + (b/2) log 3)
inline double relent_init_bound(const BoundsInput& in) {
    in.validate();
    const auto& c = in.consts;
    return in.log_p0_inf + 0.5 * in.d * std::log(3.0 * M_PI / (c.m * in.beta)) +
           in.beta * (c.M * in.kappa0 / 3.0 + c.B * std::sqrt(in.kappa0) + c.A +
                      0.5 * c.b * std::log(3.0));
}

struct StabilityBounds {
    double w2_stability = 0.0;     // (2 c_LS beta / n) sqrt(B^2 + M^2 (b + d/beta)/m)
    double C3_tilde = 0.0;         // 4 (M^2 (b + d/beta)/m + B^2) beta c_LS
    double uniform_stability = 0.0; // C3_tilde / n
};

inline StabilityBounds stability_bounds(const BoundsInput& in, double c_LS) {
    in.validate();
    const auto& c = in.consts;
    const double q = c.M * c.M * (c.b + static_cast<double>(in.d) / in.beta) / c.m;
    StabilityBounds s;
    s.w2_stability = 2.0 * c_LS * in.beta / static_cast<double>(in.n) *
                     std::sqrt(c.B * c.B + q);
    s.C3_tilde = 4.0 * (q + c.B * c.B) * in.beta * c_LS;
    s.uniform_stability = s.C3_tilde / static_cast<double>(in.n);
    return s;
}

// W2(mu_k, pi_z) <= (C0~ delta^{1/4} + C1~ eta^{1/4}) k eta + C2~ e^{-k eta/(beta c_LS)}
struct W2ToGibbsBound {
    double drift_term = 0.0;
    double relaxation_term = 0.0;
    double C2_tilde = 0.0;
    double value = 0.0;
};

inline W2ToGibbsBound w2_to_gibbs_bound(const BoundsInput& in, double c_LS, double k,
                                        double eta) {
    const auto disc = w2_discretization_bound(in, k, eta);
    W2ToGibbsBound r;
    r.C2_tilde = std::sqrt(2.0 * c_LS * relent_init_bound(in));
    r.drift_term = (std::sqrt(disc.C0_tilde_sq) * std::pow(in.delta, 0.25) +
                    std::sqrt(disc.C1_tilde_sq) * std::pow(eta, 0.25)) *
                   k * eta;
    r.relaxation_term = r.C2_tilde * std::exp(-k * eta / (in.beta * c_LS));
    r.value = r.drift_term + r.relaxation_term;
    return r;
}

// Full assembly at accuracy eps: schedule k eta = beta c_LS log(1/eps),
// eta = (eps / log(1/eps))^4, and the total excess-risk bound
//   K0 delta^{1/4} log(1/eps) + K1 eps + C3~/n + (d/2 beta) log(e M (b beta/d + 1)/m).
struct ExcessRiskAssembly {
    double c_LS = 0.0;
    double K0 = 0.0;
    double K1 = 0.0;
    double k_eta = 0.0;
    double eta_required = 0.0;
    double k_required = 0.0;
    double eps_cap = 0.0; // exp(-1/(beta c_LS)), from requiring k eta >= 1
    double term_sgld_vs_gibbs = 0.0;
    double term_generalization = 0.0;
    double term_suboptimality = 0.0;
    double total_bound = 0.0;
};

inline ExcessRiskAssembly excess_risk_assembly(const BoundsInput& in, double eps) {
    in.validate();
    const auto& c = in.consts;
    if (in.beta < std::max(1.0, 2.0 / c.m))
        throw std::invalid_argument("excess_risk_assembly: requires beta >= max(1, 2/m)");
    ExcessRiskAssembly r;
    r.c_LS = lsi_constant(in);
    r.eps_cap = std::exp(-1.0 / (in.beta * r.c_LS));
    const double eps_max = std::min({in.eta_max(), std::exp(-1.0), r.eps_cap});
    if (!(eps > 0 && eps < eps_max))
        throw std::invalid_argument("excess_risk_assembly: eps outside (0, " +
                                    std::to_string(eps_max) + ")");
    const double log1e = std::log(1.0 / eps);
    const auto disc = w2_discretization_constants(in);
    const double growth = c.M * std::sqrt(in.sigma2_uniform()) + c.B;
    const double C2t = std::sqrt(2.0 * r.c_LS * relent_init_bound(in));
    r.K0 = growth * std::sqrt(disc.C0_tilde_sq) * in.beta * r.c_LS;
    r.K1 = growth * (std::sqrt(disc.C1_tilde_sq) * in.beta * r.c_LS + C2t);
    r.k_eta = in.beta * r.c_LS * log1e;
    r.eta_required = std::pow(eps / log1e, 4.0);
    r.k_required = std::ceil(r.k_eta / r.eta_required);
    r.term_sgld_vs_gibbs = r.K0 * std::pow(in.delta, 0.25) * log1e + r.K1 * eps;
    const auto stab = stability_bounds(in, r.c_LS);
    r.term_generalization = stab.uniform_stability;
    r.term_suboptimality =
        0.5 * in.d / in.beta *
        std::log(M_E * c.M / c.m * (c.b * in.beta / in.d + 1.0));
    r.total_bound = r.term_sgld_vs_gibbs + r.term_generalization + r.term_suboptimality;
    return r;
}

// Dimension-free gap bound for the smoothed objective: lambda* >= beta gamma e^{-4 beta gamma R^2}.
inline double bardet_gap_bound(double beta, double gamma, double R) {
    if (beta <= 0 || gamma <= 0 || R < 0)
        throw std::invalid_argument("bardet_gap_bound: positive inputs required");
    return beta * gamma * std::exp(-4.0 * beta * gamma * R * R);
}

} // namespace langevin
