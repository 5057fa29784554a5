#pragma once

// Stochastic gradient oracles: conditionally unbiased estimates of the
// empirical gradient whose relative noise level delta obeys
//   E ||g - grad F_z||^2 <= 2 delta (M^2 ||w||^2 + B^2).

#include <functional>
#include <stdexcept>
#include <vector>

#include "numerics.hpp"
#include "objective.hpp"
#include "rng.hpp"

namespace langevin {

struct OracleSpec {
    enum class Kind { Full, Minibatch, Custom };

    Kind kind = Kind::Full;
    int batch = 0;        // minibatch size l (with replacement)
    double delta = 0.0;   // full -> 0, minibatch -> 1/l, custom -> declared
    // Custom oracles supply g(w, data, stream, step); they must declare delta.
    std::function<Vec(const Objective&, const Dataset&, const Vec&,
                      const RngStream&, std::uint64_t)>
        custom;

    static OracleSpec full() { return {}; }

    static OracleSpec minibatch(int l) {
        if (l <= 0) throw std::invalid_argument("minibatch: l >= 1");
        OracleSpec s;
        s.kind = Kind::Minibatch;
        s.batch = l;
        s.delta = 1.0 / l;
        return s;
    }

    static OracleSpec zero_drift() {
        // testing hook: g == 0 (disables the drift entirely)
        OracleSpec s;
        s.kind = Kind::Custom;
        s.delta = 0.0;
        s.custom = [](const Objective& obj, const Dataset&, const Vec&,
                      const RngStream&, std::uint64_t) -> Vec {
            return Vec::Zero(obj.dim);
        };
        return s;
    }
};

inline Vec sample_gradient(const OracleSpec& spec, const Objective& obj,
                           const Dataset& data, const Vec& w,
                           const RngStream& stream, std::uint64_t step = 0) {
    obj.check_dim(w);
    if (data.size() == 0) throw std::invalid_argument("sample_gradient: empty dataset");
    switch (spec.kind) {
        case OracleSpec::Kind::Full:
            return empirical_gradient(obj, data, w);
        case OracleSpec::Kind::Minibatch: {
            if (spec.batch <= 0) throw std::invalid_argument("sample_gradient: batch >= 1");
            Vec g = Vec::Zero(obj.dim);
            for (int j = 0; j < spec.batch; ++j) {
                const auto idx = stream.uniform_index(step, static_cast<std::uint32_t>(j),
                                                      data.size());
                if (obj.grad_add) obj.grad_add(w, data[idx], g);
                else g += obj.grad(w, data[idx]);
            }
            return g / spec.batch;
        }
        case OracleSpec::Kind::Custom:
            return spec.custom(obj, data, w, stream, step);
    }
    throw std::logic_error("sample_gradient: unreachable");
}

struct NoiseProbeRow {
    Vec w;
    double measured_second_moment = 0.0; // E||g - grad F_z||^2 estimate
    double se = 0.0;
    double bound = 0.0;                  // 2 delta (M^2||w||^2 + B^2)
    double margin = 0.0;                 // bound - (measured + 3 se)
    bool holds = true;
};

struct NoiseReport {
    bool passed = true;
    std::vector<NoiseProbeRow> rows;
};

// Monte-Carlo check of the oracle noise bound on probe points; a row is a
// violation only if measured + 3 standard errors exceeds the bound.
inline NoiseReport verify_noise_bound(const OracleSpec& spec, const Objective& obj,
                                      const Dataset& data, const ProbeConfig& pc,
                                      long draws) {
    if (draws < 10000)
        throw std::invalid_argument("verify_noise_bound: need >= 1e4 draws");
    const auto& c = obj.constants;
    const double radius = pc.effective_radius(c);

    std::vector<Vec> probes;
    probes.push_back(Vec::Zero(obj.dim));
    RngStream ps(pc.seed, 2, RngPurpose::kProbe);
    for (int i = 0; i < 8; ++i) {
        Vec w(obj.dim);
        for (int k = 0; k < obj.dim; ++k)
            w[k] = (2.0 * ps.uniform(i, k) - 1.0) * radius;
        probes.push_back(w);
    }

    NoiseReport rep;
    RngStream os(pc.seed, 3, RngPurpose::kOracle);
    std::uint64_t step = 0;
    for (const Vec& w : probes) {
        const Vec gf = empirical_gradient(obj, data, w);
        std::vector<double> sq(static_cast<std::size_t>(draws));
        for (long i = 0; i < draws; ++i)
            sq[i] = (sample_gradient(spec, obj, data, w, os, step++) - gf).squaredNorm();
        const auto ms = mean_and_se(sq);
        NoiseProbeRow row;
        row.w = w;
        row.measured_second_moment = ms.mean;
        row.se = ms.se;
        row.bound = 2.0 * spec.delta * (c.M * c.M * w.squaredNorm() + c.B * c.B);
        row.margin = row.bound - (ms.mean + 3.0 * ms.se);
        row.holds = row.margin >= 0.0 || ms.mean == 0.0;
        if (spec.kind == OracleSpec::Kind::Full) row.holds = ms.mean == 0.0;
        rep.passed = rep.passed && row.holds;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

// Exact per-draw oracle noise for the minibatch oracle:
// E||g - grad F_z||^2 = (1/l) * (1/n) sum_i ||grad f(w,z_i) - grad F_z(w)||^2.
inline double minibatch_noise_exact(const Objective& obj, const Dataset& data,
                                    const Vec& w, int batch) {
    const Vec gf = empirical_gradient(obj, data, w);
    double s = 0.0;
    for (const Vec& z : data.samples()) s += (obj.grad(w, z) - gf).squaredNorm();
    return s / (static_cast<double>(data.size()) * batch);
}

} // namespace langevin
