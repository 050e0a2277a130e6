#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "streamrisk/asymptotics.hpp"
#include "streamrisk/distributions.hpp"

using namespace streamrisk;
using Catch::Approx;

namespace {

RiskOracle uniform_half() { return oracle(DistributionModel::uniform(0.0, 1.0), 0.5); }

// Random model with positive theta and vartheta.
DistributionModel random_positive_model(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (gen() % 4) {
        case 0: return DistributionModel::exponential(0.2 + 3.0 * u(gen));
        case 1: return DistributionModel::pareto(0.5 + 2.0 * u(gen), 2.05 + 4.0 * u(gen));
        case 2: {
            const double lo = 0.1 + u(gen);
            return DistributionModel::uniform(lo, lo + 0.1 + 3.0 * u(gen));
        }
        default: return DistributionModel::gaussian(3.0 + 2.0 * u(gen), 0.2 + u(gen));
    }
}

bool rel_close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("slow-regime limiting variance", "[asymptotics]") {
    CHECK(clt_variance_slow(uniform_half()) == Approx((29.0 / 192.0) / 0.5).epsilon(1e-14));
    CHECK(clt_variance_slow(uniform_half()) == Approx(0.3020833).margin(1e-7));

    RiskOracle zero = uniform_half();
    zero.v_alpha = 0.0;
    CHECK(clt_variance_slow(zero) == 0.0);

    const auto e = oracle(DistributionModel::exponential(1.0), 0.9);
    CHECK(clt_variance_slow(e) == Approx(50.0 * e.v_alpha).epsilon(1e-12));
    CHECK(clt_variance_slow(e) == Approx(54.0819).margin(1e-4));
}

TEST_CASE("fast-regime joint covariance", "[asymptotics]") {
    const auto s2 = clt_covariance_fast(uniform_half(), 1.0);
    CHECK(s2.xx == Approx(0.25).epsilon(1e-15));
    CHECK(s2.xy == Approx(0.125).epsilon(1e-15));
    // (29/192)/0.25 - 0.25 = 29/48 - 12/48
    CHECK(s2.yy == Approx(17.0 / 48.0).epsilon(1e-14));
    CHECK(s2.xx == quantile_clt_variance(uniform_half()));

    double prev = std::numeric_limits<double>::infinity();
    for (double b1 : {0.51, 0.6, 0.8}) {
        const double yy = clt_covariance_fast(uniform_half(), b1).yy;
        CHECK(yy < prev);
        prev = yy;
    }
    CHECK(clt_covariance_fast(uniform_half(), 0.5 + 1e-9).yy > 1e6);
    CHECK_THROWS_AS(clt_covariance_fast(uniform_half(), 0.5), DomainError);

    RiskOracle flat = uniform_half();
    flat.vartheta_alpha = flat.theta_alpha;
    CHECK(clt_covariance_fast(flat, 0.8).xy == 0.0);
}

TEST_CASE("generator route reproduces the covariance", "[asymptotics]") {
    const auto sigma = sigma_from_generator(uniform_half(), 1.0);
    const auto s2 = clt_covariance_fast(uniform_half(), 1.0);
    CHECK(rel_close(sigma.xx, s2.xx, 1e-12));
    CHECK(rel_close(sigma.xy, s2.xy, 1e-12));
    CHECK(rel_close(sigma.yy, s2.yy, 1e-12));

    for (double b1 : {0.6, 0.8, 1.0}) {
        const auto lhs = rescale_sigma(sigma_from_generator(uniform_half(), b1), b1);
        const auto rhs = clt_covariance_fast(uniform_half(), b1);
        CHECK(rel_close(lhs.xx, rhs.xx, 1e-12));
        CHECK(rel_close(lhs.xy, rhs.xy, 1e-12));
        CHECK(rel_close(lhs.yy, rhs.yy, 1e-12));
        // moment-equation closed form for Sigma_yy
        const auto o = uniform_half();
        const double expect_yy = 2.0 / (2.0 * b1 - 1.0) *
                                 (b1 * o.v_alpha / (2.0 * 0.25) -
                                  o.alpha * o.theta_alpha * (o.vartheta_alpha - o.theta_alpha) / 0.5);
        CHECK(rel_close(sigma_from_generator(o, b1).yy, expect_yy, 1e-12));
    }

    RiskOracle flat = uniform_half();
    flat.vartheta_alpha = flat.theta_alpha;
    CHECK(std::abs(sigma_from_generator(flat, 0.7).xy) < 1e-15);
    CHECK_THROWS_AS(sigma_from_generator(uniform_half(), 0.4), DomainError);
}

TEST_CASE("covariance routes agree on random admissible inputs", "[asymptotics]") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const auto model = random_positive_model(gen);
        const double alpha = 0.05 + 0.9 * u(gen);
        const double b1 = 0.55 + 2.0 * u(gen);
        const auto o = oracle(model, alpha);
        INFO(model.to_string() << " alpha=" << alpha << " b1=" << b1);
        const auto lhs = rescale_sigma(sigma_from_generator(o, b1), b1);
        const auto rhs = clt_covariance_fast(o, b1);
        CHECK(rel_close(lhs.xx, rhs.xx, 1e-12));
        CHECK(rel_close(lhs.xy, rhs.xy, 1e-12));
        CHECK(rel_close(lhs.yy, rhs.yy, 1e-12));
    }
}

TEST_CASE("MSE first-order terms", "[asymptotics]") {
    const auto o = uniform_half();
    const StepSchedule slow{1.0, 0.6, 1.0, 0.75};
    // b_n = 0.08 * 16^(-3/4) = 0.01 at n = 15
    const StepSchedule small{1.0, 0.6, 0.08, 0.75};
    REQUIRE(small.gain_b(15) == Approx(0.01).epsilon(1e-15));
    CHECK(mse_bound_embedded(o, small, 15).first_order ==
          Approx(0.3020833 * 0.01).margin(1e-9));
    CHECK(mse_bound_embedded(o, slow, 100).first_order ==
          Approx(clt_variance_slow(o) * std::pow(101.0, -0.75)).epsilon(1e-14));
    CHECK(mse_bound_embedded(o, slow, 100).remainder_exponent == Approx(0.875));

    const StepSchedule fast{1.0, 2.0 / 3.0, 1.0, 1.0};
    const double c = std::pow(1.0 + std::sqrt(77.0 / 48.0), 2.0);
    CHECK(c_alpha_b1(o, 1.0) == Approx(c).epsilon(1e-14));
    CHECK(mse_bound_embedded(o, fast, 1000).first_order == Approx(c / 1000.0).epsilon(1e-14));
    CHECK(mse_bound_embedded(o, fast, 1000).remainder_exponent == Approx(4.0 / 3.0));
    CHECK_THROWS_AS(mse_bound_embedded(o, StepSchedule{1.0, 2.0 / 3.0, 0.5, 1.0}, 10), DomainError);
    CHECK(c_alpha_b1(o, 0.7) > 0.0);

    double prev = std::numeric_limits<double>::infinity();
    for (std::uint64_t n = 1; n < 1'000'000; n *= 3) {
        const double v = mse_bound_embedded(o, slow, n).first_order;
        CHECK(v < prev);
        prev = v;
    }

    CHECK(mse_bound_averaged_quantile(o, fast, 10000).first_order == Approx(2.5e-5).epsilon(1e-14));
    CHECK(mse_bound_averaged_quantile(o, fast, 10000).remainder_exponent == Approx(7.0 / 6.0));
    CHECK(mse_bound_averaged_quantile(o, StepSchedule{1.0, 0.5, 1.0, 1.0}, 10).remainder_exponent ==
          Approx(1.0));
}

TEST_CASE("variance comparison examples", "[asymptotics]") {
    const auto p3 = oracle(DistributionModel::pareto(1.0, 3.0), 0.9);
    const auto r3 = variance_comparison(p3, 0.8, 1.0);
    CHECK(r3.b1_threshold == Approx(0.5).margin(1e-12));
    CHECK(r3.verdict == Verdict::Boundary);
    CHECK(to_string(r3.verdict) == "boundary");

    const auto p22 = oracle(DistributionModel::pareto(1.0, 2.2), 0.9);
    const double ratio = 2.2 / 1.2;
    CHECK(p22.vartheta_alpha / p22.theta_alpha == Approx(ratio).epsilon(1e-13));
    const auto r22 = variance_comparison(p22, 0.55, 1.0);
    CHECK(r22.b1_threshold == Approx(1.0 - 1.0 / (2.0 * ratio - 1.0)).epsilon(1e-13));
    CHECK(r22.b1_threshold == Approx(0.625).margin(1e-12));
    CHECK(r22.verdict == Verdict::EmbeddedBetter);
    CHECK(variance_comparison(p22, 0.7, 1.0).verdict == Verdict::CompetitorBetter);

    RiskOracle zero = uniform_half();
    zero.theta_alpha = 0.0;
    CHECK(b1_threshold(zero) == 1.0);
    CHECK(variance_comparison(zero, 0.8, 1.0).degenerate);

    const auto u = variance_comparison(uniform_half(), 1.0, 1.0);
    CHECK(u.verdict == Verdict::Boundary);
    CHECK_FALSE(u.degenerate);
    CHECK(u.tau_alpha_sq == Approx((29.0 / 192.0) / 0.25 - 0.5 * (1.5 - 0.5)).epsilon(1e-14));
    CHECK(u.gamma_vartheta == Approx(u.tau_alpha_sq).epsilon(1e-14));

    const auto slow = variance_comparison(p22, 0.3, 0.75);
    CHECK(slow.gamma_vartheta == Approx(0.3 * slow.tau_alpha_sq / 2.0).epsilon(1e-14));
    CHECK(slow.verdict == Verdict::CompetitorBetter);

    CHECK_THROWS_AS(variance_comparison(p22, 0.5, 1.0), DomainError);
}

TEST_CASE("verdict matches the sign of S22 - Gamma on random inputs", "[asymptotics]") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 20) {
        const auto model = random_positive_model(gen);
        const double alpha = 0.05 + 0.9 * u(gen);
        const double b1 = 0.51 + 1.5 * u(gen);
        const auto o = oracle(model, alpha);
        const auto r = variance_comparison(o, b1, 1.0);
        if (r.verdict == Verdict::Boundary || std::abs(b1 - r.b1_threshold) < 1e-6) continue;
        INFO(model.to_string() << " alpha=" << alpha << " b1=" << b1);
        const double tail = 1.0 - alpha;
        const double tau2 = o.v_alpha / (tail * tail) -
                            alpha * o.theta_alpha / tail * (2.0 * o.vartheta_alpha - o.theta_alpha);
        const double gamma = b1 * b1 * tau2 / (2.0 * b1 - 1.0);
        const double s22 = clt_covariance_fast(o, b1).yy;
        CHECK((s22 < gamma) == (r.verdict == Verdict::EmbeddedBetter));
        CHECK((s22 > gamma) == (r.verdict == Verdict::CompetitorBetter));
        ++checked;
    }
}

TEST_CASE("variance outputs are nonnegative on the distribution menu", "[asymptotics]") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const auto o = oracle(random_positive_model(gen), 0.02 + 0.96 * u(gen));
        const double b1 = 0.505 + 3.0 * u(gen);
        CHECK(clt_covariance_fast(o, b1).yy >= 0.0);
        CHECK(tau_alpha_sq(o) >= -1e-12 * std::abs(o.v_alpha));
        CHECK(clt_variance_slow(o) >= 0.0);
    }
}

TEST_CASE("asymptotic report bundles every constant", "[asymptotics]") {
    const auto r = asymptotic_report(uniform_half(), StepSchedule{1.0, 2.0 / 3.0, 1.0, 1.0});
    REQUIRE(r.s2);
    CHECK(r.s2->xx == r.quantile_clt_var);
    REQUIRE(r.c_alpha_b1);
    CHECK(*r.c_alpha_b1 > 0.0);
    CHECK(r.verdict == Verdict::Boundary);
    CHECK(r.averaged_quantile_remainder_exponent == Approx(7.0 / 6.0));

    const auto half = asymptotic_report(uniform_half(), StepSchedule{1.0, 2.0 / 3.0, 0.5, 1.0});
    CHECK_FALSE(half.s2);
    CHECK_FALSE(half.verdict);
    CHECK(std::isinf(half.gamma_vartheta));

    const auto slow = asymptotic_report(uniform_half(), StepSchedule{1.0, 0.6, 1.0, 0.8});
    CHECK(slow.embedded_remainder_exponent == Approx(0.9));
    REQUIRE(slow.verdict);
}
