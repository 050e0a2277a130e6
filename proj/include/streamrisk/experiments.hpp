#pragma once

// Monte-Carlo harness: independent replicate streams, MSE curves on a grid of
// checkpoints, log-log rate fits, empirical CLT covariances with jackknife
// standard errors, and paired comparisons between superquantile variants.
//
// Replicate r of experiment e draws from RandomStream::substream(seed, e, r) and
// writes only its own slot of the result table; aggregation runs in replicate
// order afterwards, so results do not depend on the number of threads.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "streamrisk/asymptotics.hpp"
#include "streamrisk/distributions.hpp"
#include "streamrisk/errors.hpp"
#include "streamrisk/estimators.hpp"
#include "streamrisk/random.hpp"
#include "streamrisk/schedules.hpp"

namespace streamrisk {

// Every estimate tracked per checkpoint.
enum class Series : std::size_t { Quantile = 0, AveragedQuantile, Embedded, Classical, Bardou };
inline constexpr std::size_t kSeriesCount = 5;

inline std::string_view to_string(Series s) noexcept {
    switch (s) {
        case Series::Quantile: return "quantile";
        case Series::AveragedQuantile: return "averaged_quantile";
        case Series::Embedded: return "embedded";
        case Series::Classical: return "classical";
        case Series::Bardou: return "bardou";
    }
    return "unknown";
}

inline std::optional<Series> parse_series(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kSeriesCount; ++i)
        if (to_string(static_cast<Series>(i)) == name) return static_cast<Series>(i);
    return std::nullopt;
}

inline bool is_superquantile(Series s) noexcept {
    return s == Series::Embedded || s == Series::Classical || s == Series::Bardou;
}

struct ExperimentConfig {
    DistributionModel model = DistributionModel::uniform(0.0, 1.0);
    double alpha = 0.5;
    StepSchedule schedule{};
    std::vector<std::uint64_t> n_grid{1000};
    std::size_t replicates = 2;
    std::uint64_t master_seed = 0;
    std::uint64_t experiment_id = 0;
    bool warm_start = false;
    std::vector<Series> variants{Series::Embedded, Series::Classical, Series::Bardou};
};

inline void validate(const ExperimentConfig& c) {
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    if (c.n_grid.empty()) throw DomainError("n_grid must not be empty");
    if (c.n_grid.front() == 0) throw DomainError("n_grid entries must be positive");
    for (std::size_t i = 1; i < c.n_grid.size(); ++i)
        if (c.n_grid[i] <= c.n_grid[i - 1]) throw DomainError("n_grid must be strictly ascending");
    if (c.replicates < 2) throw DomainError("replicates must be at least 2");
    if (c.variants.empty()) throw DomainError("at least one variant is required");
    for (auto v : c.variants)
        if (!is_superquantile(v)) throw DomainError("variants must be embedded, classical or bardou");
    const auto report = c.schedule.validate();
    if (!report.ok()) throw DomainError("invalid schedule: " + report.violations.front());
}

struct MseEntry {
    double mse = 0.0;
    double stderr_ = 0.0;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

class ExperimentResult {
public:
    ExperimentResult(ExperimentConfig config, RiskOracle truth)
        : config_(std::move(config)),
          truth_(truth),
          values_(config_.replicates * config_.n_grid.size() * kSeriesCount, 0.0) {}

    const ExperimentConfig& config() const noexcept { return config_; }
    const RiskOracle& truth() const noexcept { return truth_; }
    std::size_t replicates() const noexcept { return config_.replicates; }
    std::size_t checkpoints() const noexcept { return config_.n_grid.size(); }
    std::uint64_t checkpoint_n(std::size_t g) const { return config_.n_grid.at(g); }

    double value(std::size_t r, std::size_t g, Series s) const {
        return values_[index(r, g, s)];
    }
    double& value(std::size_t r, std::size_t g, Series s) { return values_[index(r, g, s)]; }

    double target(Series s) const noexcept {
        return is_superquantile(s) ? truth_.vartheta_alpha : truth_.theta_alpha;
    }

    double error(std::size_t r, std::size_t g, Series s) const { return value(r, g, s) - target(s); }

    // Mean over replicates of |estimate - truth|^power, with its standard error.
    MseEntry moment(Series s, std::size_t g, double power) const {
        const std::size_t R = replicates();
        double mean = 0.0;
        for (std::size_t r = 0; r < R; ++r) mean += std::pow(std::abs(error(r, g, s)), power);
        mean /= static_cast<double>(R);
        double ss = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            const double d = std::pow(std::abs(error(r, g, s)), power) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(R - 1));
        return {mean, sd / std::sqrt(static_cast<double>(R))};
    }

    MseEntry mse(Series s, std::size_t g) const {
        const std::size_t R = replicates();
        double mean = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            const double e = error(r, g, s);
            mean += e * e;
        }
        mean /= static_cast<double>(R);
        double ss = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            const double e = error(r, g, s);
            const double d = e * e - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(R - 1));
        return {mean, sd / std::sqrt(static_cast<double>(R))};
    }

    // Rescaling of the superquantile error: sqrt(n) when b = 1, b_n^(-1/2) otherwise.
    double superquantile_rescale(std::uint64_t n) const {
        const auto& sched = config_.schedule;
        return sched.fast_regime() ? std::sqrt(static_cast<double>(n))
                                   : 1.0 / std::sqrt(sched.gain_b(n));
    }

    // Per-replicate (sqrt(n)(theta_bar_n - theta), rescale (embedded_n - vartheta)).
    std::vector<std::array<double, 2>> clt_samples(std::size_t g) const {
        const std::uint64_t n = checkpoint_n(g);
        const double rq = std::sqrt(static_cast<double>(n));
        const double rs = superquantile_rescale(n);
        std::vector<std::array<double, 2>> out(replicates());
        for (std::size_t r = 0; r < replicates(); ++r)
            out[r] = {rq * error(r, g, Series::AveragedQuantile), rs * error(r, g, Series::Embedded)};
        return out;
    }

private:
    std::size_t index(std::size_t r, std::size_t g, Series s) const noexcept {
        return (r * config_.n_grid.size() + g) * kSeriesCount + static_cast<std::size_t>(s);
    }

    ExperimentConfig config_;
    RiskOracle truth_;
    std::vector<double> values_;
};

namespace detail {

template <typename Kind>
void run_replicate(const Kind& dist, const ExperimentConfig& c, const RiskOracle& truth,
                   std::size_t r, ExperimentResult& out) {
    RandomStream rng = RandomStream::substream(c.master_seed, c.experiment_id, r);
    JointEstimatorState s =
        c.warm_start ? init(c.alpha, c.schedule, truth.theta_alpha, truth.vartheta_alpha)
                     : init_from_observation(c.alpha, c.schedule, inverse_cdf(dist, rng.uniform_open()));

    std::size_t g = 0;
    const std::uint64_t last = c.n_grid.back();
    while (s.n < last) {
        const std::uint64_t stop = c.n_grid[g];
        while (s.n < stop) advance(s, inverse_cdf(dist, rng.uniform_open()));
        const TracePoint p = trace_point(s);
        const std::array<double, kSeriesCount> vals{p.theta, p.theta_bar, p.sq_embedded,
                                                   p.sq_classical, p.sq_bardou};
        for (std::size_t k = 0; k < kSeriesCount; ++k) {
            if (!std::isfinite(vals[k])) throw ExperimentError("non-finite estimate", r, s.n);
            out.value(r, g, static_cast<Series>(k)) = vals[k];
        }
        ++g;
    }
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 1) {
    validate(config);
    const RiskOracle truth = oracle(config.model, config.alpha);
    ExperimentResult result(config, truth);

    const std::size_t R = config.replicates;
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(R)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= R) return;
            try {
                std::visit([&](const auto& d) { detail::run_replicate(d, config, truth, r, result); },
                           config.model.kind());
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(R);
                return;
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return result;
}

// Ordinary least squares of log(mse) on log(n).
inline RateFit fit_rate(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw DomainError("fit_rate needs at least 3 points");
    double sx = 0.0, sy = 0.0;
    for (const auto& [n, m] : points) {
        if (!(n > 0.0)) throw DomainError("fit_rate needs positive n");
        if (!(m > 0.0)) throw DomainError("fit_rate needs positive mse");
        sx += std::log(n);
        sy += std::log(m);
    }
    const double k = static_cast<double>(points.size());
    const double mx = sx / k, my = sy / k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [n, m] : points) {
        const double dx = std::log(n) - mx, dy = std::log(m) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw DomainError("fit_rate needs at least two distinct n");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_res = std::max(0.0, syy - fit.slope * sxy);
    fit.r2 = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    return fit;
}

inline RateFit fit_rate(const ExperimentResult& result, Series s) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t g = 0; g < result.checkpoints(); ++g)
        pts.emplace_back(static_cast<double>(result.checkpoint_n(g)), result.mse(s, g).mse);
    return fit_rate(pts);
}

struct CovarianceEstimate {
    SymMatrix2 cov;
    SymMatrix2 stderr_;  // jackknife standard errors per entry
};

// Unbiased sample covariance with leave-one-out jackknife standard errors.
inline CovarianceEstimate sample_covariance_jackknife(std::span<const std::array<double, 2>> xs) {
    const std::size_t R = xs.size();
    if (R < 3) throw DomainError("covariance estimation needs at least 3 samples");
    const double dR = static_cast<double>(R);
    double mx = 0.0, my = 0.0;
    for (const auto& p : xs) {
        mx += p[0];
        my += p[1];
    }
    mx /= dR;
    my /= dR;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : xs) {
        const double u = p[0] - mx, v = p[1] - my;
        sxx += u * u;
        sxy += u * v;
        syy += v * v;
    }
    CovarianceEstimate est;
    est.cov = {sxx / (dR - 1.0), sxy / (dR - 1.0), syy / (dR - 1.0)};

    // Leave-one-out sum of centred products: S - u_i v_i R/(R-1).
    const double shrink = dR / (dR - 1.0);
    std::array<double, 3> loo_mean{0.0, 0.0, 0.0};
    std::vector<std::array<double, 3>> loo(R);
    for (std::size_t i = 0; i < R; ++i) {
        const double u = xs[i][0] - mx, v = xs[i][1] - my;
        loo[i] = {(sxx - u * u * shrink) / (dR - 2.0), (sxy - u * v * shrink) / (dR - 2.0),
                  (syy - v * v * shrink) / (dR - 2.0)};
        for (int k = 0; k < 3; ++k) loo_mean[k] += loo[i][k];
    }
    for (auto& m : loo_mean) m /= dR;
    std::array<double, 3> ss{0.0, 0.0, 0.0};
    for (const auto& l : loo)
        for (int k = 0; k < 3; ++k) ss[k] += (l[k] - loo_mean[k]) * (l[k] - loo_mean[k]);
    const double factor = (dR - 1.0) / dR;
    est.stderr_ = {std::sqrt(factor * ss[0]), std::sqrt(factor * ss[1]), std::sqrt(factor * ss[2])};
    return est;
}

inline CovarianceEstimate empirical_clt_cov(const ExperimentResult& result, std::size_t g) {
    if (result.replicates() < 30) throw DomainError("replicates >= 30 required");
    const auto samples = result.clt_samples(g);
    return sample_covariance_jackknife(samples);
}

struct RatioEstimate {
    double ratio = 1.0;
    double stderr_ = 0.0;
    double ci_lo = 1.0;
    double ci_hi = 1.0;
};

// Ratio of mean squared errors of two paired columns with a delta-method 95% CI.
inline RatioEstimate paired_mse_ratio(std::span<const double> err_num, std::span<const double> err_den) {
    const std::size_t R = err_num.size();
    if (R != err_den.size() || R < 2) throw DomainError("paired ratio needs matching columns");
    const double dR = static_cast<double>(R);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        a += err_num[i] * err_num[i];
        b += err_den[i] * err_den[i];
    }
    a /= dR;
    b /= dR;
    RatioEstimate est;
    if (b == 0.0) {
        est.ratio = a == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
        est.ci_lo = est.ci_hi = est.ratio;
        return est;
    }
    est.ratio = a / b;
    double ss = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        const double d = err_num[i] * err_num[i] - est.ratio * err_den[i] * err_den[i];
        ss += d * d;
    }
    est.stderr_ = std::sqrt(ss / (dR - 1.0) / dR) / b;
    est.ci_lo = est.ratio - 1.959963984540054 * est.stderr_;
    est.ci_hi = est.ratio + 1.959963984540054 * est.stderr_;
    return est;
}

struct ComparisonRow {
    std::uint64_t n = 0;
    Series numerator = Series::Embedded;
    Series denominator = Series::Classical;
    RatioEstimate ratio;
};

struct VariantComparison {
    std::vector<ComparisonRow> rows;
    std::optional<ComparisonReport> theory;  // absent when b = 1 and b1 <= 1/2
    // Direction at the final checkpoint for embedded vs each competitor:
    // EmbeddedBetter / CompetitorBetter when the 95% CI excludes 1, Tie otherwise.
    std::vector<std::pair<Series, Verdict>> empirical;
};

inline Verdict empirical_verdict(const RatioEstimate& r) noexcept {
    if (r.ci_hi < 1.0) return Verdict::EmbeddedBetter;
    if (r.ci_lo > 1.0) return Verdict::CompetitorBetter;
    return Verdict::Tie;
}

inline VariantComparison compare_variants(const ExperimentResult& result) {
    auto variants = result.config().variants;
    std::sort(variants.begin(), variants.end());
    variants.erase(std::unique(variants.begin(), variants.end()), variants.end());
    if (variants.size() < 2) throw DomainError("comparison needs at least two variants");
    VariantComparison out;
    const std::size_t R = result.replicates();
    std::vector<double> num(R), den(R);
    for (std::size_t g = 0; g < result.checkpoints(); ++g) {
        for (std::size_t i = 0; i < variants.size(); ++i) {
            for (std::size_t j = i + 1; j < variants.size(); ++j) {
                for (std::size_t r = 0; r < R; ++r) {
                    num[r] = result.error(r, g, variants[i]);
                    den[r] = result.error(r, g, variants[j]);
                }
                out.rows.push_back({result.checkpoint_n(g), variants[i], variants[j],
                                    paired_mse_ratio(num, den)});
            }
        }
    }
    const auto& sched = result.config().schedule;
    if (!sched.fast_regime() || sched.b1 > 0.5)
        out.theory = variance_comparison(result.truth(), sched.b1, sched.b_exp);

    const std::size_t last = result.checkpoints() - 1;
    for (const auto& row : out.rows) {
        if (row.n != result.checkpoint_n(last) || row.numerator != Series::Embedded) continue;
        out.empirical.emplace_back(row.denominator, empirical_verdict(row.ratio));
    }
    return out;
}

}  // namespace streamrisk
