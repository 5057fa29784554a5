#include <catch2/catch_amalgamated.hpp>

#include "langevin/oracle.hpp"

using namespace langevin;

namespace {

// data {1,2,3} with f(w,z) = (w-z)^2/2: grad f(0,z) = -z, grad F(0) = -2,
// per-draw minibatch(1) noise = Var(z) = 2/3.
const Dataset kData123 = dataset_from_scalars({1.0, 2.0, 3.0});

Objective quad3() { return make_quadratic_regression(3.0); }

} // namespace

TEST_CASE("full oracle returns the exact empirical gradient") {
    const auto obj = quad3();
    RngStream rs(1, 0, RngPurpose::kOracle);
    Vec w(1);
    w[0] = 0.7;
    const Vec g = sample_gradient(OracleSpec::full(), obj, kData123, w, rs);
    REQUIRE(g[0] == Catch::Approx(0.7 - 2.0).epsilon(1e-15));
    REQUIRE(OracleSpec::full().delta == 0.0);
}

TEST_CASE("minibatch of one is unbiased with the population variance") {
    const auto obj = quad3();
    const auto spec = OracleSpec::minibatch(1);
    REQUIRE(spec.delta == 1.0);
    RngStream rs(7, 0, RngPurpose::kOracle);
    Vec w = Vec::Zero(1);
    const long draws = 100000;
    std::vector<double> gs(draws), sq(draws);
    const Vec gf = empirical_gradient(obj, kData123, w);
    for (long i = 0; i < draws; ++i) {
        const Vec g = sample_gradient(spec, obj, kData123, w, rs, i);
        gs[i] = g[0];
        sq[i] = (g - gf).squaredNorm();
    }
    const auto mg = mean_and_se(gs);
    REQUIRE(std::abs(mg.mean - (-2.0)) <= 3.0 * mg.se);
    const auto mv = mean_and_se(sq);
    REQUIRE(mv.mean == Catch::Approx(2.0 / 3.0).epsilon(0.05));
    REQUIRE(minibatch_noise_exact(obj, kData123, w, 1) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("noise bound holds: zero for full, 2 delta (M^2|w|^2 + B^2) for minibatch") {
    const auto obj = quad3();
    ProbeConfig pc;
    pc.seed = 11;
    const auto full_rep = verify_noise_bound(OracleSpec::full(), obj, kData123, pc, 10000);
    REQUIRE(full_rep.passed);
    for (const auto& row : full_rep.rows) REQUIRE(row.measured_second_moment == 0.0);

    const auto mb = verify_noise_bound(OracleSpec::minibatch(1), obj, kData123, pc, 20000);
    REQUIRE(mb.passed);
    // at w=0 the bound is 2*1*(M^2*0 + B^2) = 2 B^2 = 18 with B = 3
    REQUIRE(mb.rows.front().w.norm() == 0.0);
    REQUIRE(mb.rows.front().bound == Catch::Approx(18.0));
    REQUIRE(mb.rows.front().measured_second_moment == Catch::Approx(2.0 / 3.0).epsilon(0.1));

    REQUIRE_THROWS_AS(verify_noise_bound(OracleSpec::full(), obj, kData123, pc, 100),
                      std::invalid_argument);
}

TEST_CASE("minibatch noise scales as 1/l against the exact law") {
    const auto obj = make_double_well();
    std::vector<Vec> zs;
    RngStream ds(3, 0, RngPurpose::kDataset);
    for (int i = 0; i < 20; ++i) {
        Vec z(1);
        z[0] = 2.0 * ds.uniform(i, 0) - 1.0;
        zs.push_back(z);
    }
    const Dataset data(std::move(zs));
    Vec w(1);
    w[0] = 0.6;
    const Vec gf = empirical_gradient(obj, data, w);
    double noise1 = 0.0;
    for (int l : {1, 2, 4, 8}) {
        const auto spec = OracleSpec::minibatch(l);
        REQUIRE(spec.delta == Catch::Approx(1.0 / l));
        RngStream rs(5, static_cast<std::uint32_t>(l), RngPurpose::kOracle);
        const long draws = 100000;
        std::vector<double> sq(draws);
        for (long i = 0; i < draws; ++i)
            sq[i] = (sample_gradient(spec, obj, data, w, rs, i) - gf).squaredNorm();
        const double mc = mean_and_se(sq).mean;
        const double exact = minibatch_noise_exact(obj, data, w, l);
        REQUIRE(mc == Catch::Approx(exact).epsilon(0.15));
        if (l == 1) noise1 = mc;
        if (l == 8) REQUIRE(mc == Catch::Approx(noise1 / 8.0).epsilon(0.10));
    }
}

TEST_CASE("unbiasedness holds componentwise on 2D minibatch oracles") {
    const auto obj = make_logistic_2d();
    std::vector<Vec> zs;
    RngStream ds(9, 0, RngPurpose::kDataset);
    for (int i = 0; i < 12; ++i) {
        Vec z(3);
        const double r = std::sqrt(ds.uniform(i, 0));
        const double th = 2 * M_PI * ds.uniform(i, 1);
        z[0] = r * std::cos(th);
        z[1] = r * std::sin(th);
        z[2] = ds.uniform(i, 2) < 0.5 ? -1.0 : 1.0;
        zs.push_back(z);
    }
    const Dataset data(std::move(zs));
    Vec w(2);
    w << 0.4, -0.2;
    const Vec gf = empirical_gradient(obj, data, w);
    const auto spec = OracleSpec::minibatch(4);
    RngStream rs(2, 0, RngPurpose::kOracle);
    const long draws = 100000;
    Vec sum = Vec::Zero(2), sumsq = Vec::Zero(2);
    for (long i = 0; i < draws; ++i) {
        const Vec g = sample_gradient(spec, obj, data, w, rs, i);
        sum += g;
        sumsq += g.cwiseProduct(g);
    }
    for (int c = 0; c < 2; ++c) {
        const double mean = sum[c] / draws;
        const double var = sumsq[c] / draws - mean * mean;
        const double se = std::sqrt(var / draws);
        REQUIRE(std::abs(mean - gf[c]) <= 4.0 * se);
    }
}

TEST_CASE("oracle error paths") {
    const auto obj = quad3();
    REQUIRE_THROWS_AS(OracleSpec::minibatch(0), std::invalid_argument);
    const auto zero = OracleSpec::zero_drift();
    RngStream rs(1, 0, RngPurpose::kOracle);
    Vec w(1);
    w[0] = 5.0;
    REQUIRE(sample_gradient(zero, obj, kData123, w, rs).norm() == 0.0);
}
