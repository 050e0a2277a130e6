#pragma once

// Samplable distribution models and their risk oracles.
//
// For a level alpha in (0,1):
//   theta_alpha    = inf { t : F(t) >= alpha }                 (quantile / VaR)
//   vartheta_alpha = E[X | X >= theta_alpha]                   (superquantile / CVaR)
//   V_alpha        = Var(X 1{X > theta_alpha})
//                  = int_theta x^2 f(x) dx - (int_theta x f(x) dx)^2
//
// oracle() uses closed forms; numeric_oracle() recomputes everything from the
// CDF and density alone (bisection + tanh-sinh quadrature) and serves as an
// independent check of the closed forms.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "streamrisk/errors.hpp"
#include "streamrisk/random.hpp"

namespace streamrisk {

struct Gaussian {
    double mean = 0.0;
    double stddev = 1.0;
};

struct Exponential {
    double rate = 1.0;
};

struct Uniform {
    double lo = 0.0;
    double hi = 1.0;
};

struct Pareto {
    double scale = 1.0;
    double shape = 3.0;
};

struct RiskOracle {
    double alpha = 0.5;
    double theta_alpha = 0.0;
    double vartheta_alpha = 0.0;
    double density_at_quantile = 1.0;
    double v_alpha = 0.0;
};

namespace detail {

inline double normal_pdf(double z) noexcept {
    return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

}  // namespace detail

inline double inverse_cdf(const Gaussian& d, double p) {
    return d.mean + d.stddev * detail::normal_quantile(p);
}
inline double inverse_cdf(const Exponential& d, double p) noexcept {
    return -std::log1p(-p) / d.rate;
}
inline double inverse_cdf(const Uniform& d, double p) noexcept { return d.lo + p * (d.hi - d.lo); }
inline double inverse_cdf(const Pareto& d, double p) noexcept {
    return d.scale * std::pow(1.0 - p, -1.0 / d.shape);
}

class DistributionModel {
public:
    using Kind = std::variant<Gaussian, Exponential, Uniform, Pareto>;

    static DistributionModel gaussian(double mean, double stddev) {
        if (!std::isfinite(mean)) throw DomainError("gaussian mean must be finite");
        if (!(stddev > 0.0) || !std::isfinite(stddev))
            throw DomainError("gaussian stddev must be positive");
        return DistributionModel(Gaussian{mean, stddev});
    }

    static DistributionModel exponential(double rate) {
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw DomainError("exponential rate must be positive");
        return DistributionModel(Exponential{rate});
    }

    static DistributionModel uniform(double lo, double hi) {
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
            throw DomainError("uniform bounds must satisfy lo < hi");
        return DistributionModel(Uniform{lo, hi});
    }

    // shape > 2 keeps a moment of order > 2, which the recursions require.
    static DistributionModel pareto(double scale, double shape) {
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw DomainError("pareto scale must be positive");
        if (!(shape > 2.0) || !std::isfinite(shape))
            throw DomainError("pareto shape must exceed 2");
        return DistributionModel(Pareto{scale, shape});
    }

    const Kind& kind() const noexcept { return kind_; }

    std::string_view name() const noexcept {
        return std::visit(
            [](const auto& d) -> std::string_view {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Gaussian>) return "gaussian";
                if constexpr (std::is_same_v<T, Exponential>) return "exponential";
                if constexpr (std::is_same_v<T, Uniform>) return "uniform";
                if constexpr (std::is_same_v<T, Pareto>) return "pareto";
            },
            kind_);
    }

    double cdf(double x) const noexcept {
        return std::visit(
            [x](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Gaussian>) {
                    return detail::normal_cdf((x - d.mean) / d.stddev);
                } else if constexpr (std::is_same_v<T, Exponential>) {
                    return x <= 0.0 ? 0.0 : -std::expm1(-d.rate * x);
                } else if constexpr (std::is_same_v<T, Uniform>) {
                    if (x <= d.lo) return 0.0;
                    if (x >= d.hi) return 1.0;
                    return (x - d.lo) / (d.hi - d.lo);
                } else {
                    return x <= d.scale ? 0.0 : 1.0 - std::pow(d.scale / x, d.shape);
                }
            },
            kind_);
    }

    double log_pdf(double x) const noexcept {
        constexpr double neg_inf = -std::numeric_limits<double>::infinity();
        return std::visit(
            [x](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Gaussian>) {
                    const double z = (x - d.mean) / d.stddev;
                    return -0.5 * z * z - std::log(d.stddev) -
                           0.5 * std::log(2.0 * std::numbers::pi);
                } else if constexpr (std::is_same_v<T, Exponential>) {
                    return x < 0.0 ? neg_inf : std::log(d.rate) - d.rate * x;
                } else if constexpr (std::is_same_v<T, Uniform>) {
                    return (x < d.lo || x > d.hi) ? neg_inf : -std::log(d.hi - d.lo);
                } else {
                    return x < d.scale ? neg_inf
                                       : std::log(d.shape) + d.shape * std::log(d.scale) -
                                             (d.shape + 1.0) * std::log(x);
                }
            },
            kind_);
    }

    double pdf(double x) const noexcept { return std::exp(log_pdf(x)); }

    // Inverse CDF for p in (0,1).
    double quantile(double p) const {
        return std::visit([p](const auto& d) { return inverse_cdf(d, p); }, kind_);
    }

    // Support bounds; infinite where the support is unbounded.
    double support_lo() const noexcept {
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Gaussian>) return -std::numeric_limits<double>::infinity();
                if constexpr (std::is_same_v<T, Exponential>) return 0.0;
                if constexpr (std::is_same_v<T, Uniform>) return d.lo;
                if constexpr (std::is_same_v<T, Pareto>) return d.scale;
            },
            kind_);
    }

    double support_hi() const noexcept {
        if (const auto* u = std::get_if<Uniform>(&kind_)) return u->hi;
        return std::numeric_limits<double>::infinity();
    }

    // Characteristic length of the model.
    double scale() const noexcept {
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Gaussian>) return d.stddev;
                if constexpr (std::is_same_v<T, Exponential>) return 1.0 / d.rate;
                if constexpr (std::is_same_v<T, Uniform>) return d.hi - d.lo;
                if constexpr (std::is_same_v<T, Pareto>) return d.scale;
            },
            kind_);
    }

    // "kind:p1,p2" form, parseable by parse_distribution().
    std::string to_string() const {
        auto num = [](double v) {
            char buf[32];
            auto res = std::to_chars(buf, buf + sizeof buf, v);
            return std::string(buf, res.ptr);
        };
        return std::visit(
            [&](const auto& d) -> std::string {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Gaussian>)
                    return "gaussian:" + num(d.mean) + "," + num(d.stddev);
                if constexpr (std::is_same_v<T, Exponential>) return "exponential:" + num(d.rate);
                if constexpr (std::is_same_v<T, Uniform>)
                    return "uniform:" + num(d.lo) + "," + num(d.hi);
                if constexpr (std::is_same_v<T, Pareto>)
                    return "pareto:" + num(d.scale) + "," + num(d.shape);
            },
            kind_);
    }

private:
    explicit DistributionModel(Kind k) : kind_(k) {}
    Kind kind_;
};

// One i.i.d. draw by inversion; consumes exactly one 64-bit word of the stream.
inline double sample(const DistributionModel& model, RandomStream& rng) {
    return model.quantile(rng.uniform_open());
}

// Closed-form oracle.
inline RiskOracle oracle(const DistributionModel& model, double alpha) {
    detail::require_alpha(alpha);
    const double tail = 1.0 - alpha;
    RiskOracle o;
    o.alpha = alpha;
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            double m1 = 0.0;  // E[X 1{X > theta}]
            double m2 = 0.0;  // E[X^2 1{X > theta}]
            if constexpr (std::is_same_v<T, Gaussian>) {
                const double z = detail::normal_quantile(alpha);
                const double phi = detail::normal_pdf(z);
                o.theta_alpha = d.mean + d.stddev * z;
                o.vartheta_alpha = d.mean + d.stddev * phi / tail;
                o.density_at_quantile = phi / d.stddev;
                m1 = d.mean * tail + d.stddev * phi;
                m2 = d.mean * d.mean * tail + 2.0 * d.mean * d.stddev * phi +
                     d.stddev * d.stddev * (z * phi + tail);
            } else if constexpr (std::is_same_v<T, Exponential>) {
                const double th = -std::log1p(-alpha) / d.rate;
                const double inv = 1.0 / d.rate;
                o.theta_alpha = th;
                o.vartheta_alpha = th + inv;
                o.density_at_quantile = d.rate * tail;
                m1 = tail * (th + inv);
                m2 = tail * (th * th + 2.0 * th * inv + 2.0 * inv * inv);
            } else if constexpr (std::is_same_v<T, Uniform>) {
                const double w = d.hi - d.lo;
                const double th = d.lo + alpha * w;
                o.theta_alpha = th;
                o.vartheta_alpha = 0.5 * (th + d.hi);
                o.density_at_quantile = 1.0 / w;
                m1 = (d.hi * d.hi - th * th) / (2.0 * w);
                m2 = (d.hi * d.hi * d.hi - th * th * th) / (3.0 * w);
            } else {
                const double k = d.shape;
                const double th = d.scale * std::pow(tail, -1.0 / k);
                o.theta_alpha = th;
                o.vartheta_alpha = th * k / (k - 1.0);
                o.density_at_quantile = k * tail / th;
                m1 = tail * o.vartheta_alpha;
                // k xm^k th^(2-k) / (k-2), with xm^k = tail * th^k
                m2 = k * tail * th * th / (k - 2.0);
            }
            o.v_alpha = m2 - m1 * m1;
        },
        model.kind());
    return o;
}

namespace detail {

// int_theta^upper x^power f(x) dx by tanh-sinh on (-1,1). Unbounded tails use
// x = theta + L t/(1-t), evaluated in log space with the endpoint complement so
// heavy polynomial tails are integrated without truncation.
inline double tail_moment(const DistributionModel& model, double theta, int power,
                          double rel_tol) {
    const double upper = model.support_hi();
    const bool bounded = std::isfinite(upper);
    const double length = bounded ? upper - theta : std::max(model.scale(), std::abs(theta));

    auto integrand = [&](double z, double zc) -> double {
        // t = (1+z)/2 and 1-t = (1-z)/2, both computed without cancellation.
        const double t = z < 0.0 ? -0.5 * zc : 0.5 * (1.0 + z);
        const double one_minus_t = z >= 0.0 ? 0.5 * zc : 0.5 * (1.0 - z);
        double x;
        double log_jacobian;
        if (bounded) {
            x = theta + length * t;
            log_jacobian = std::log(0.5 * length);
        } else {
            x = theta + length * (t / one_minus_t);
            log_jacobian = std::log(0.5 * length) - 2.0 * std::log(one_minus_t);
        }
        const double lf = model.log_pdf(x);
        if (!std::isfinite(lf)) return 0.0;
        if (x == 0.0) return power == 0 ? std::exp(lf + log_jacobian) : 0.0;
        const double sign = (power % 2 == 1 && x < 0.0) ? -1.0 : 1.0;
        return sign * std::exp(power * std::log(std::abs(x)) + lf + log_jacobian);
    };

    boost::math::quadrature::tanh_sinh<double> integrator(20);
    double error = 0.0;
    double l1 = 0.0;
    const double value = integrator.integrate(integrand, rel_tol, &error, &l1);
    if (!std::isfinite(value) || error > 100.0 * rel_tol * std::max(l1, 1e-300))
        throw QuadratureError("tail moment quadrature did not converge", error,
                              100.0 * rel_tol * l1);
    return value;
}

inline double bisect_quantile(const DistributionModel& model, double alpha) {
    double lo = model.support_lo();
    double hi = model.support_hi();
    if (!std::isfinite(lo)) {
        lo = -1.0;
        while (model.cdf(lo) > alpha) lo *= 2.0;
    }
    if (!std::isfinite(hi)) {
        hi = std::max(1.0, 2.0 * std::abs(lo));
        while (model.cdf(hi) < alpha) hi *= 2.0;
    }
    for (int it = 0; it < 4000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (model.cdf(mid) < alpha)
            lo = mid;
        else
            hi = mid;
    }
    const double th = std::abs(model.cdf(lo) - alpha) < std::abs(model.cdf(hi) - alpha) ? lo : hi;
    const double residual = std::abs(model.cdf(th) - alpha);
    if (residual >= 1e-12) throw QuadratureError("quantile bisection did not converge", residual, 1e-12);
    return th;
}

}  // namespace detail

// Brute-force oracle: bisection on the CDF and quadrature of the tail moments.
inline RiskOracle numeric_oracle(const DistributionModel& model, double alpha) {
    detail::require_alpha(alpha);
    RiskOracle o;
    o.alpha = alpha;
    o.theta_alpha = detail::bisect_quantile(model, alpha);
    o.density_at_quantile = model.pdf(o.theta_alpha);
    constexpr double tol = 1e-13;
    const double m1 = detail::tail_moment(model, o.theta_alpha, 1, tol);
    const double m2 = detail::tail_moment(model, o.theta_alpha, 2, tol);
    o.vartheta_alpha = m1 / (1.0 - alpha);
    o.v_alpha = m2 - m1 * m1;
    return o;
}

// Accepts "kind:p1,p2" (e.g. "uniform:0,1") or "kind name=value ..."
// (e.g. "exponential rate=1.0"). Parameter names: gaussian mean/stddev,
// exponential rate, uniform lo/hi, pareto scale/shape.
inline DistributionModel parse_distribution(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    auto to_double = [](std::string_view s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw DomainError("invalid number '" + std::string(s) + "' in distribution");
        return v;
    };

    text = trim(text);
    std::string kind;
    std::vector<std::pair<std::string, double>> params;
    if (auto colon = text.find(':'); colon != std::string_view::npos) {
        kind = std::string(trim(text.substr(0, colon)));
        std::string_view rest = text.substr(colon + 1);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            auto comma = rest.find(',', pos);
            if (comma == std::string_view::npos) comma = rest.size();
            const auto tok = trim(rest.substr(pos, comma - pos));
            if (!tok.empty()) params.emplace_back("", to_double(tok));
            pos = comma + 1;
        }
    } else {
        std::istringstream in{std::string(text)};
        in >> kind;
        std::string tok;
        while (in >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) throw DomainError("expected name=value, got '" + tok + "'");
            params.emplace_back(tok.substr(0, eq), to_double(tok.substr(eq + 1)));
        }
    }
    for (auto& c : kind) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    auto get = [&](std::size_t idx, std::string_view name, double fallback, bool required) {
        for (const auto& [n, v] : params)
            if (n == name) return v;
        if (idx < params.size() && params[idx].first.empty()) return params[idx].second;
        if (required) throw DomainError(kind + " requires parameter '" + std::string(name) + "'");
        return fallback;
    };
    auto expect_at_most = [&](std::size_t n) {
        if (params.size() > n) throw DomainError("too many parameters for " + kind);
    };

    if (kind == "gaussian" || kind == "normal") {
        expect_at_most(2);
        return DistributionModel::gaussian(get(0, "mean", 0.0, false), get(1, "stddev", 1.0, false));
    }
    if (kind == "exponential") {
        expect_at_most(1);
        return DistributionModel::exponential(get(0, "rate", 1.0, false));
    }
    if (kind == "uniform") {
        expect_at_most(2);
        return DistributionModel::uniform(get(0, "lo", 0.0, false), get(1, "hi", 1.0, false));
    }
    if (kind == "pareto") {
        expect_at_most(2);
        return DistributionModel::pareto(get(0, "scale", 1.0, false), get(1, "shape", 0.0, true));
    }
    throw DomainError("unknown distribution kind '" + kind + "'");
}

}  // namespace streamrisk
