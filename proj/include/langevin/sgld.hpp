#pragma once

// The discrete SGLD chain
//   W_{k+1} = W_k - eta g(W_k, U_k) + sqrt(2 eta / beta) xi_k
// with Gaussian initialization N(0, sigma^2 I_d), sigma^2 < 1/2, simulated
// as an ensemble of independent replicas (the law-of-the-iterate viewpoint).

#include <cmath>
#include <stdexcept>

#include "measure.hpp"
#include "numerics.hpp"
#include "objective.hpp"
#include "oracle.hpp"
#include "rng.hpp"

namespace langevin {

struct SgldConfig {
    double eta = 1e-3;
    double beta = 1.0;
    long steps = 1000;
    double init_sigma2 = 0.25; // must be < 1/2 so kappa_0 is finite
    long replicas = 1;
    std::uint64_t seed = 1;
    long record_stride = 0;    // 0 = terminal only

    void validate() const {
        if (eta <= 0) throw std::invalid_argument("SgldConfig: eta > 0");
        if (beta <= 0) throw std::invalid_argument("SgldConfig: beta > 0");
        if (steps < 0) throw std::invalid_argument("SgldConfig: steps >= 0");
        if (!(init_sigma2 > 0 && init_sigma2 < 0.5))
            throw std::invalid_argument("SgldConfig: init_sigma2 in (0, 1/2)");
        if (replicas < 1) throw std::invalid_argument("SgldConfig: replicas >= 1");
    }
};

// kappa_0 = log int e^{||w||^2} p_0(w) dw for the Gaussian init, plus the
// density sup needed by the relative-entropy bound.
struct GaussianInitConstants {
    double kappa0 = 0.0;
    double log_p0_inf = 0.0; // log (2 pi sigma^2)^{-d/2}
    double p0_inf = 0.0;
};

inline GaussianInitConstants kappa0_gaussian(double sigma2, int d) {
    if (!(sigma2 > 0 && sigma2 < 0.5))
        throw std::invalid_argument("kappa0_gaussian: sigma2 in (0, 1/2), else kappa0 infinite");
    GaussianInitConstants r;
    r.kappa0 = -0.5 * d * std::log1p(-2.0 * sigma2);
    r.log_p0_inf = -0.5 * d * std::log(2.0 * M_PI * sigma2);
    r.p0_inf = std::exp(r.log_p0_inf);
    return r;
}

// One SGLD step; xi is the standard normal draw, injected for testability.
inline Vec sgld_step(const Vec& w, const Vec& g, const Vec& xi, double eta, double beta) {
    if (eta <= 0 || beta <= 0) throw std::invalid_argument("sgld_step: eta, beta > 0");
    if (g.size() != w.size() || xi.size() != w.size())
        throw std::invalid_argument("sgld_step: dimension mismatch");
    return w - eta * g + std::sqrt(2.0 * eta / beta) * xi;
}

// How the Gaussian noise is keyed.
//   Independent: private per-step draws (purpose kSgldNoise).
//   Brownian:    xi_k aggregates fine_per_step shared Brownian increments
//                (purpose kBrownian), so a diffusion run with
//                eta_ref = eta / fine_per_step sees the same noise.
struct NoiseCoupling {
    enum class Mode { Independent, Brownian };
    Mode mode = Mode::Independent;
    long fine_per_step = 1;
};

namespace detail {

inline Vec gaussian_init(int dim, double sigma2, std::uint64_t seed, std::uint32_t replica) {
    RngStream init(seed, replica, RngPurpose::kInit);
    Vec w(dim);
    init.fill_normal(0, w);
    return std::sqrt(sigma2) * w;
}

} // namespace detail

inline ReplicaEnsemble run_sgld(const Objective& obj, const Dataset& data,
                                const OracleSpec& spec, const SgldConfig& cfg,
                                const NoiseCoupling& coupling = {}) {
    cfg.validate();
    const int d = obj.dim;
    const long stride = cfg.record_stride > 0 ? cfg.record_stride : std::max<long>(cfg.steps, 1);
    const long nsnap = cfg.steps / stride + 1;

    std::vector<Mat> snaps(static_cast<std::size_t>(nsnap));
    for (auto& s : snaps) s.resize(cfg.replicas, d);

    const double noise_scale = std::sqrt(2.0 * cfg.eta / cfg.beta);
    const long fine = std::max<long>(1, coupling.fine_per_step);
    const double inv_sqrt_fine = 1.0 / std::sqrt(static_cast<double>(fine));

    parallel_for(cfg.replicas, [&](std::int64_t lo, std::int64_t hi) {
        Vec xi(d), zeta(d);
        for (std::int64_t r = lo; r < hi; ++r) {
            const auto rid = static_cast<std::uint32_t>(r);
            RngStream noise(cfg.seed, rid,
                            coupling.mode == NoiseCoupling::Mode::Brownian
                                ? RngPurpose::kBrownian
                                : RngPurpose::kSgldNoise);
            RngStream oracle(cfg.seed, rid, RngPurpose::kOracle);
            Vec w = detail::gaussian_init(d, cfg.init_sigma2, cfg.seed, rid);
            snaps[0].row(r) = w;
            for (long k = 0; k < cfg.steps; ++k) {
                const Vec g = sample_gradient(spec, obj, data, w, oracle,
                                              static_cast<std::uint64_t>(k));
                if (coupling.mode == NoiseCoupling::Mode::Brownian) {
                    xi.setZero();
                    for (long j = 0; j < fine; ++j) {
                        noise.fill_normal(static_cast<std::uint64_t>(k * fine + j), zeta);
                        xi += zeta;
                    }
                    xi *= inv_sqrt_fine;
                } else {
                    noise.fill_normal(static_cast<std::uint64_t>(k), xi);
                }
                w = w - cfg.eta * g + noise_scale * xi;
                if ((k + 1) % stride == 0 && (k + 1) / stride < nsnap)
                    snaps[(k + 1) / stride].row(r) = w;
            }
        }
    });

    ReplicaEnsemble ens;
    for (long s = 0; s < nsnap; ++s) {
        ens.steps.push_back(s * stride);
        ens.times.push_back(static_cast<double>(s * stride) * cfg.eta);
        ens.snapshots.emplace_back(std::move(snaps[s]));
    }
    return ens;
}

} // namespace langevin
