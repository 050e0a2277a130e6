#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "streamrisk/experiments.hpp"

using namespace streamrisk;
using Catch::Approx;

namespace {

ExperimentConfig small_uniform() {
    ExperimentConfig c;
    c.model = DistributionModel::uniform(0.0, 1.0);
    c.alpha = 0.5;
    c.n_grid = {10};
    c.replicates = 2;
    c.master_seed = 1234;
    return c;
}

}  // namespace

TEST_CASE("fit_rate recovers exact power laws", "[experiments]") {
    std::vector<std::pair<double, double>> pts;
    for (double n : {1e3, 1e4, 1e5, 1e6}) pts.emplace_back(n, 4.0 * std::pow(n, -0.75));
    const auto fit = fit_rate(pts);
    CHECK(fit.slope == Approx(-0.75).margin(1e-10));
    CHECK(fit.intercept == Approx(std::log(4.0)).margin(1e-9));
    CHECK(fit.r2 == Approx(1.0).margin(1e-10));

    const std::vector<std::pair<double, double>> three{{10, 1.0}, {100, 0.1}, {1000, 0.01}};
    CHECK(fit_rate(three).r2 == Approx(1.0).margin(1e-12));
}

TEST_CASE("fit_rate on noisy 1/n data", "[experiments]") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<std::pair<double, double>> pts;
    for (int k = 0; k <= 12; ++k) {
        const double n = std::pow(10.0, 3.0 + 0.25 * k);
        pts.emplace_back(n, 2.0 / n * (1.0 + noise(gen)));
    }
    const auto fit = fit_rate(pts);
    CHECK(fit.slope >= -1.05);
    CHECK(fit.slope <= -0.95);
    CHECK(fit.r2 >= 0.0);
    CHECK(fit.r2 <= 1.0);
}

TEST_CASE("fit_rate rejects degenerate input", "[experiments]") {
    const std::vector<std::pair<double, double>> zero{{10, 1.0}, {100, 0.0}, {1000, 0.01}};
    CHECK_THROWS_AS(fit_rate(zero), DomainError);
    const std::vector<std::pair<double, double>> two{{10, 1.0}, {100, 0.1}};
    CHECK_THROWS_AS(fit_rate(two), DomainError);
}

TEST_CASE("jackknife covariance on degenerate and synthetic samples", "[experiments]") {
    const std::vector<std::array<double, 2>> same(40, {1.5, -2.0});
    const auto z = sample_covariance_jackknife(same);
    CHECK(z.cov == SymMatrix2{0.0, 0.0, 0.0});
    CHECK(z.stderr_ == SymMatrix2{0.0, 0.0, 0.0});

    // x = 2 g1, y = 0.9 g1 + 1.2 g2  ->  C = (4, 1.8, 2.25)
    std::mt19937_64 gen(31);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::array<double, 2>> xs(5000);
    for (auto& p : xs) {
        const double g1 = g(gen), g2 = g(gen);
        p = {2.0 * g1, 0.9 * g1 + 1.2 * g2};
    }
    const auto est = sample_covariance_jackknife(xs);
    CHECK(std::abs(est.cov.xx - 4.0) <= 3.0 * est.stderr_.xx);
    CHECK(std::abs(est.cov.xy - 1.8) <= 3.0 * est.stderr_.xy);
    CHECK(std::abs(est.cov.yy - 2.25) <= 3.0 * est.stderr_.yy);
    // Gaussian theory: SE(var) = sqrt(2/R) var
    CHECK(est.stderr_.xx == Approx(std::sqrt(2.0 / 5000.0) * 4.0).epsilon(0.15));
}

TEST_CASE("paired MSE ratio", "[experiments]") {
    const std::vector<double> a{0.1, -0.3, 0.2, 0.05};
    const auto same = paired_mse_ratio(a, a);
    CHECK(same.ratio == 1.0);
    CHECK(same.stderr_ == 0.0);
    CHECK(empirical_verdict(same) == Verdict::Tie);

    const std::vector<double> half{0.05, -0.15, 0.1, 0.025};
    const auto r = paired_mse_ratio(half, a);
    CHECK(r.ratio == Approx(0.25));
    CHECK(empirical_verdict(r) == Verdict::EmbeddedBetter);

    const std::vector<double> zeros(4, 0.0);
    CHECK(paired_mse_ratio(zeros, zeros).ratio == 1.0);
}

TEST_CASE("config validation", "[experiments]") {
    auto c = small_uniform();
    CHECK_NOTHROW(validate(c));
    c.n_grid = {100, 10};
    CHECK_THROWS_AS(validate(c), DomainError);
    c = small_uniform();
    c.replicates = 1;
    CHECK_THROWS_AS(validate(c), DomainError);
    c = small_uniform();
    c.variants = {Series::Quantile};
    CHECK_THROWS_AS(validate(c), DomainError);
    c = small_uniform();
    c.schedule.a_exp = 1.0;
    CHECK_THROWS_AS(validate(c), DomainError);
}

TEST_CASE("small experiment replays by hand", "[experiments]") {
    const auto c = small_uniform();
    const auto res = run_experiment(c);
    for (std::size_t r = 0; r < 2; ++r) {
        RandomStream rng = RandomStream::substream(c.master_seed, c.experiment_id, r);
        auto s = init_from_observation(c.alpha, c.schedule, sample(c.model, rng));
        for (int i = 0; i < 10; ++i) s = step(s, sample(c.model, rng));
        CHECK(res.value(r, 0, Series::Quantile) == s.theta);
        CHECK(res.value(r, 0, Series::AveragedQuantile) == s.theta_bar);
        CHECK(res.value(r, 0, Series::Embedded) == s.sq_embedded);
        CHECK(res.value(r, 0, Series::Classical) == s.sq_classical);
        CHECK(res.value(r, 0, Series::Bardou) == s.sq_bardou);
    }
    CHECK(res.mse(Series::Embedded, 0).mse >= 0.0);
    const double e0 = res.error(0, 0, Series::Embedded), e1 = res.error(1, 0, Series::Embedded);
    CHECK(res.mse(Series::Embedded, 0).mse == Approx((e0 * e0 + e1 * e1) / 2.0));
}

TEST_CASE("warm start with one step gives the single-step deviation", "[experiments]") {
    ExperimentConfig c = small_uniform();
    c.model = DistributionModel::exponential(1.0);
    c.alpha = 0.9;
    c.schedule = {0.7, 2.0 / 3.0, 0.8, 1.0};
    c.warm_start = true;
    c.n_grid = {1};
    c.replicates = 30;
    const auto res = run_experiment(c);
    const auto o = oracle(c.model, c.alpha);
    const auto samples = res.clt_samples(0);
    for (std::size_t r = 0; r < c.replicates; ++r) {
        RandomStream rng = RandomStream::substream(c.master_seed, c.experiment_id, r);
        const double x = sample(c.model, rng);
        const double theta1 = o.theta_alpha - 0.7 * ((x <= o.theta_alpha ? 1.0 : 0.0) - 0.9);
        const double target = x > o.theta_alpha ? x / 0.1 : 0.0;
        const double sq1 = o.vartheta_alpha + 0.8 * (target - o.vartheta_alpha);
        CHECK(samples[r][0] == Approx(theta1 - o.theta_alpha).margin(1e-14));
        CHECK(samples[r][1] == Approx(sq1 - o.vartheta_alpha).margin(1e-12));
    }
}

TEST_CASE("results do not depend on the thread count", "[experiments]") {
    ExperimentConfig c;
    c.model = DistributionModel::pareto(1.0, 2.5);
    c.alpha = 0.9;
    c.schedule = {1.0, 0.6, 1.0, 0.8};
    c.n_grid = {10, 100, 1000};
    c.replicates = 37;
    c.master_seed = 99;
    const auto one = run_experiment(c, 1);
    for (unsigned t : {2u, 5u, 8u}) {
        const auto many = run_experiment(c, t);
        bool same = true;
        for (std::size_t r = 0; r < c.replicates; ++r)
            for (std::size_t g = 0; g < 3; ++g)
                for (std::size_t k = 0; k < kSeriesCount; ++k)
                    same = same && one.value(r, g, Series(k)) == many.value(r, g, Series(k));
        CHECK(same);
    }
}

TEST_CASE("empirical CLT covariance needs enough replicates", "[experiments]") {
    auto c = small_uniform();
    c.replicates = 29;
    const auto res = run_experiment(c);
    CHECK_THROWS_AS(empirical_clt_cov(res, 0), DomainError);
    c.replicates = 30;
    const auto ok = run_experiment(c);
    const auto est = empirical_clt_cov(ok, 0);
    CHECK(est.cov.xx >= 0.0);
    CHECK(est.cov.yy >= 0.0);
}

TEST_CASE("compare_variants pairs every variant and carries the theory verdict", "[experiments]") {
    ExperimentConfig c;
    c.model = DistributionModel::uniform(0.0, 1.0);
    c.alpha = 0.5;
    c.n_grid = {100, 1000};
    c.replicates = 50;
    c.variants = {Series::Bardou, Series::Embedded, Series::Classical};
    const auto res = run_experiment(c);
    const auto cmp = compare_variants(res);
    CHECK(cmp.rows.size() == 6);
    for (const auto& row : cmp.rows) CHECK(row.numerator < row.denominator);
    REQUIRE(cmp.theory);
    CHECK(cmp.theory->verdict == Verdict::Boundary);
    CHECK(cmp.empirical.size() == 2);

    c.variants = {Series::Classical};
    CHECK_THROWS_AS(compare_variants(run_experiment(c)), DomainError);
}

TEST_CASE("MSE rates on a short slow-regime grid", "[experiments][slow]") {
    ExperimentConfig c;
    c.model = DistributionModel::uniform(0.0, 1.0);
    c.alpha = 0.5;
    c.schedule = {1.0, 0.6, 1.0, 0.75};
    c.n_grid = {1000, 3162, 10000, 31623, 100000};
    c.replicates = 200;
    c.master_seed = 3;
    const auto res = run_experiment(c);
    for (Series s : {Series::AveragedQuantile, Series::Embedded, Series::Classical, Series::Bardou}) {
        const auto fit = fit_rate(res, s);
        INFO(to_string(s) << " slope " << fit.slope << " r2 " << fit.r2);
        CHECK(fit.slope < 0.0);
        CHECK(fit.r2 > 0.95);
        CHECK(fit.r2 <= 1.0);
    }
}
