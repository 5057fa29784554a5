#pragma once

// Fine-step Euler-Maruyama reference for the Langevin diffusion
//   dW(t) = -grad F_z(W(t)) dt + sqrt(2/beta) dB(t),
// used as the continuous-time law proxy. Brownian increments are keyed by
// (seed, replica, kBrownian, fine step), so an SGLD run in Brownian coupling
// mode rides the same noise.

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "measure.hpp"
#include "objective.hpp"
#include "oracle.hpp"
#include "sgld.hpp"

namespace langevin {

struct DiffusionConfig {
    double eta_ref = 1e-5;
    double t_end = 1.0;
    double beta = 1.0;
    double init_sigma2 = 0.25;
    long replicas = 1;
    std::uint64_t seed = 1;
    std::vector<double> record_times; // empty = terminal only
    // optional deterministic start (overrides the Gaussian init in tests)
    std::optional<Vec> fixed_init;

    void validate() const {
        if (eta_ref <= 0) throw std::invalid_argument("DiffusionConfig: eta_ref > 0");
        if (t_end < 0) throw std::invalid_argument("DiffusionConfig: t_end >= 0");
        if (beta <= 0) throw std::invalid_argument("DiffusionConfig: beta > 0");
        if (!fixed_init && !(init_sigma2 > 0 && init_sigma2 < 0.5))
            throw std::invalid_argument("DiffusionConfig: init_sigma2 in (0, 1/2)");
        if (replicas < 1) throw std::invalid_argument("DiffusionConfig: replicas >= 1");
    }
};

inline ReplicaEnsemble run_diffusion(const Objective& obj, const Dataset& data,
                                     const DiffusionConfig& cfg) {
    cfg.validate();
    const int d = obj.dim;
    const long total = std::lround(cfg.t_end / cfg.eta_ref);

    // snap record times onto the eta_ref grid
    std::vector<long> rec_steps;
    std::vector<std::string> warnings;
    if (cfg.record_times.empty()) {
        rec_steps = {0, total};
    } else {
        rec_steps.push_back(0);
        for (double t : cfg.record_times) {
            const long j = std::lround(t / cfg.eta_ref);
            if (std::abs(j * cfg.eta_ref - t) > 1e-9 * std::max(1.0, std::abs(t))) {
                std::ostringstream w;
                w << "record time " << t << " snapped to " << j * cfg.eta_ref;
                warnings.push_back(w.str());
            }
            if (j >= 0 && j <= total) rec_steps.push_back(j);
        }
    }
    std::sort(rec_steps.begin(), rec_steps.end());
    rec_steps.erase(std::unique(rec_steps.begin(), rec_steps.end()), rec_steps.end());

    std::vector<Mat> snaps(rec_steps.size());
    for (auto& s : snaps) s.resize(cfg.replicas, d);

    const double noise_scale = std::sqrt(2.0 * cfg.eta_ref / cfg.beta);

    parallel_for(cfg.replicas, [&](std::int64_t lo, std::int64_t hi) {
        Vec zeta(d);
        for (std::int64_t r = lo; r < hi; ++r) {
            const auto rid = static_cast<std::uint32_t>(r);
            RngStream noise(cfg.seed, rid, RngPurpose::kBrownian);
            Vec w = cfg.fixed_init
                        ? *cfg.fixed_init
                        : detail::gaussian_init(d, cfg.init_sigma2, cfg.seed, rid);
            std::size_t next = 0;
            if (rec_steps[next] == 0) snaps[next++].row(r) = w;
            for (long j = 0; j < total; ++j) {
                const Vec g = empirical_gradient(obj, data, w);
                noise.fill_normal(static_cast<std::uint64_t>(j), zeta);
                w = w - cfg.eta_ref * g + noise_scale * zeta;
                while (next < rec_steps.size() && rec_steps[next] == j + 1)
                    snaps[next++].row(r) = w;
            }
        }
    });

    ReplicaEnsemble ens;
    ens.warnings = warnings;
    for (std::size_t s = 0; s < rec_steps.size(); ++s) {
        ens.steps.push_back(rec_steps[s]);
        ens.times.push_back(rec_steps[s] * cfg.eta_ref);
        ens.snapshots.emplace_back(std::move(snaps[s]));
    }
    return ens;
}

// SGLD at step size eta and its coupled fine diffusion, sharing one Brownian
// path; a single pass generates each increment once. Returns the terminal
// ensembles at time k * eta.
struct CoupledPair {
    EmpiricalMeasure sgld;
    EmpiricalMeasure diffusion;
};

inline CoupledPair run_coupled_pair(const Objective& obj, const Dataset& data,
                                    const OracleSpec& spec, const SgldConfig& cfg,
                                    long fine_per_step) {
    cfg.validate();
    if (fine_per_step < 1) throw std::invalid_argument("run_coupled_pair: fine_per_step >= 1");
    const int d = obj.dim;
    const double h = cfg.eta / fine_per_step;
    const double fine_noise = std::sqrt(2.0 * h / cfg.beta);
    const double coarse_noise = std::sqrt(2.0 * cfg.eta / cfg.beta);
    const double inv_sqrt_fine = 1.0 / std::sqrt(static_cast<double>(fine_per_step));

    Mat sg(cfg.replicas, d), df(cfg.replicas, d);
    parallel_for(cfg.replicas, [&](std::int64_t lo, std::int64_t hi) {
        Vec zeta(d), xi(d);
        for (std::int64_t r = lo; r < hi; ++r) {
            const auto rid = static_cast<std::uint32_t>(r);
            RngStream noise(cfg.seed, rid, RngPurpose::kBrownian);
            RngStream oracle(cfg.seed, rid, RngPurpose::kOracle);
            Vec w = detail::gaussian_init(d, cfg.init_sigma2, cfg.seed, rid);
            Vec v = w;
            for (long k = 0; k < cfg.steps; ++k) {
                const Vec g = sample_gradient(spec, obj, data, w, oracle,
                                              static_cast<std::uint64_t>(k));
                xi.setZero();
                for (long j = 0; j < fine_per_step; ++j) {
                    const auto fs = static_cast<std::uint64_t>(k * fine_per_step + j);
                    noise.fill_normal(fs, zeta);
                    xi += zeta;
                    v = v - h * empirical_gradient(obj, data, v) + fine_noise * zeta;
                }
                w = w - cfg.eta * g + coarse_noise * inv_sqrt_fine * xi;
            }
            sg.row(r) = w;
            df.row(r) = v;
        }
    });
    return {EmpiricalMeasure(std::move(sg)), EmpiricalMeasure(std::move(df))};
}

// ---------------------------------------------------------------------------
// Moment-bound checks (uniform L^2 bound, time-resolved diffusion bound,
// exponential integrability). A row is violated only when the estimate minus
// a 3 sigma pad exceeds the bound.

struct MomentCheckRow {
    double t = 0.0;
    std::string quantity;
    double measured = 0.0;
    double se = 0.0;
    double bound = 0.0;
    bool holds = true;
};

struct MomentReport {
    bool passed = true;
    std::vector<MomentCheckRow> rows;

    void add(double t, std::string q, const MeanSe& ms, double bound) {
        MomentCheckRow r{t, std::move(q), ms.mean, ms.se, bound,
                         ms.mean - 3.0 * ms.se <= bound};
        passed = passed && r.holds;
        rows.push_back(std::move(r));
    }
};

// sup_k E||W_k||^2 <= kappa0 + 2 (1 v 1/m) (b + 2B^2 + d/beta)
inline MomentReport check_sgld_moment_bound(const ReplicaEnsemble& ens,
                                            const RegularityConstants& c,
                                            double kappa0, double beta) {
    const int d = ens.snapshots.front().dim();
    const double bound =
        kappa0 + 2.0 * std::max(1.0, 1.0 / c.m) * (c.b + 2.0 * c.B * c.B + d / beta);
    MomentReport rep;
    for (std::size_t s = 0; s < ens.size(); ++s) {
        const auto ms = mean_and_se(ens.at(s).squared_norms());
        rep.add(ens.times[s], "sgld_second_moment", ms, bound);
    }
    return rep;
}

// E||W(t)||^2 <= kappa0 e^{-2mt} + (b + d/beta)(1 - e^{-2mt})/m   and, for
// beta >= 2/m,  log E e^{||W(t)||^2} <= kappa0 + 2 (b + d/beta) t.
inline MomentReport check_moment_bounds(const ReplicaEnsemble& ens,
                                        const RegularityConstants& c,
                                        double kappa0, double beta) {
    const int d = ens.snapshots.front().dim();
    MomentReport rep;
    const double bd = c.b + static_cast<double>(d) / beta;
    for (std::size_t s = 0; s < ens.size(); ++s) {
        const double t = ens.times[s];
        const double decay = std::exp(-2.0 * c.m * t);
        const auto sq = ens.at(s).squared_norms();
        rep.add(t, "second_moment", mean_and_se(sq),
                kappa0 * decay + bd / c.m * (1.0 - decay));
        if (beta >= 2.0 / c.m)
            rep.add(t, "log_mgf", log_mean_exp_and_se(sq), kappa0 + 2.0 * bd * t);
    }
    return rep;
}

} // namespace langevin
