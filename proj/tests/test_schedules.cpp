#include <catch_amalgamated.hpp>

#include <cmath>

#include "streamrisk/schedules.hpp"

using namespace streamrisk;
using Catch::Approx;

TEST_CASE("gains follow the power laws with the shifted superquantile index", "[schedules]") {
    const StepSchedule s{2.0, 0.75, 0.5, 1.0};
    CHECK(s.gain_a(1) == 2.0);
    CHECK(s.gain_a(16) == Approx(2.0 / 8.0).epsilon(1e-15));
    CHECK(s.gain_b(0) == 0.5);
    CHECK(s.gain_b(3) == Approx(0.5 / 4.0).epsilon(1e-15));
    CHECK_THROWS_AS(s.gain_a(0), DomainError);
}

TEST_CASE("gain_a halves by exactly 2^a when n doubles", "[schedules]") {
    for (double a : {0.51, 0.6, 2.0 / 3.0, 0.75, 0.9}) {
        const StepSchedule s{1.3, a, 1.0, 1.0};
        for (std::uint64_t n : {1ULL, 7ULL, 1000ULL, 123456789ULL}) {
            const double ratio = s.gain_a(n) / s.gain_a(2 * n);
            const double expect = std::pow(2.0, a);
            CHECK(std::abs(ratio - expect) <= 4 * std::numeric_limits<double>::epsilon() * expect);
        }
    }
}

TEST_CASE("gains are monotone in n", "[schedules]") {
    const StepSchedule s{1.0, 0.6, 2.0, 0.75};
    double prev_a = s.gain_a(1), prev_b = s.gain_b(0);
    for (std::uint64_t n = 1; n < 5000; ++n) {
        CHECK(s.gain_a(n + 1) < prev_a);
        CHECK(s.gain_b(n) <= prev_b);
        prev_a = s.gain_a(n + 1);
        prev_b = s.gain_b(n);
    }
}

TEST_CASE("validate reports hypotheses without throwing", "[schedules]") {
    SECTION("a=2/3, b=1, b1=1 satisfies everything") {
        const auto r = StepSchedule{1.0, 2.0 / 3.0, 1.0, 1.0}.validate();
        CHECK(r.ok());
        CHECK(r.chain);
        CHECK(r.fast_regime);
        CHECK(r.clt_fast_b1);
        CHECK(r.rate_fast_b1_threshold == Approx(5.0 / 6.0));
        CHECK(r.rate_fast_b1);
        CHECK(r.violations.empty());
    }
    SECTION("a below 1/2 breaks the chain") {
        const auto r = StepSchedule{1.0, 0.4, 1.0, 0.8}.validate();
        CHECK_FALSE(r.chain);
        CHECK_FALSE(r.ok());
    }
    SECTION("a above b breaks the chain") {
        const auto r = StepSchedule{1.0, 0.7, 1.0, 0.6}.validate();
        CHECK_FALSE(r.chain);
    }
    SECTION("b above 1 and non-positive multipliers") {
        CHECK_FALSE(StepSchedule{1.0, 0.7, 1.0, 1.2}.validate().chain);
        const auto r = StepSchedule{0.0, 0.7, -1.0, 0.9}.validate();
        CHECK_FALSE(r.positive_multipliers);
        CHECK(r.violations.size() == 2);
    }
    SECTION("small b1 in the fast regime is advisory only") {
        const auto r = StepSchedule{1.0, 2.0 / 3.0, 0.5, 1.0}.validate();
        CHECK(r.ok());
        CHECK_FALSE(r.clt_fast_b1);
        CHECK_FALSE(r.rate_fast_b1);
    }
    SECTION("slow regime leaves the b1 flags unset") {
        const auto r = StepSchedule{1.0, 0.6, 0.1, 0.75}.validate();
        CHECK(r.ok());
        CHECK_FALSE(r.fast_regime);
        CHECK(r.violations.empty());
    }
}

TEST_CASE("validate is pure", "[schedules]") {
    const StepSchedule s{0.3, 0.55, 0.6, 1.0};
    const StepSchedule copy = s;
    CHECK(s.validate() == s.validate());
    CHECK(s == copy);
}
