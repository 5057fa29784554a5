#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <set>

#include "langevin/rng.hpp"
#include "langevin/numerics.hpp"

using namespace langevin;

TEST_CASE("draws are pure functions of their coordinates") {
    RngStream a(42, 7, RngPurpose::kBrownian);
    RngStream b(42, 7, RngPurpose::kBrownian);
    for (int s = 0; s < 10; ++s)
        for (int g = 0; g < 4; ++g)
            REQUIRE(a.normal(s, g) == b.normal(s, g));
    REQUIRE(a.uniform(3, 1) == b.uniform(3, 1));
    REQUIRE(a.uniform_index(5, 0, 97) == b.uniform_index(5, 0, 97));
}

TEST_CASE("different purposes, streams and seeds decorrelate") {
    RngStream a(42, 7, RngPurpose::kBrownian);
    RngStream b(42, 7, RngPurpose::kSgldNoise);
    RngStream c(42, 8, RngPurpose::kBrownian);
    RngStream d(43, 7, RngPurpose::kBrownian);
    std::set<double> vals;
    for (const auto* s : {&a, &b, &c, &d}) vals.insert(s->normal(11, 0));
    REQUIRE(vals.size() == 4);
}

TEST_CASE("uniform lands in [0,1) and indices stay in range") {
    RngStream s(1, 0, RngPurpose::kProbe);
    double mean = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform(i, 0);
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        mean += u;
        REQUIRE(s.uniform_index(i, 1, 13) < 13);
    }
    mean /= n;
    REQUIRE(std::abs(mean - 0.5) < 4.0 / std::sqrt(12.0 * n));
}

TEST_CASE("normals have standard moments") {
    RngStream s(9, 0, RngPurpose::kInit);
    const int n = 100000;
    double m1 = 0, m2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = s.normal(i, static_cast<std::uint32_t>(i & 1));
        m1 += x;
        m2 += x * x;
    }
    m1 /= n;
    m2 /= n;
    REQUIRE(std::abs(m1) < 4.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(m2 == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("box-muller lanes of one pair are both standard normal") {
    RngStream s(77, 0, RngPurpose::kGibbsSample);
    double v_even = 0, v_odd = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double e = s.normal(i, 0);
        const double o = s.normal(i, 1);
        v_even += e * e;
        v_odd += o * o;
    }
    REQUIRE(v_even / n == Catch::Approx(1.0).margin(0.03));
    REQUIRE(v_odd / n == Catch::Approx(1.0).margin(0.03));
}

TEST_CASE("parallel_for partitions deterministically") {
    std::vector<int> out(1000, -1);
    parallel_for(1000, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) out[i] = static_cast<int>(i) * 3;
    });
    for (int i = 0; i < 1000; ++i) REQUIRE(out[i] == i * 3);
}
