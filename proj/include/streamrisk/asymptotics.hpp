#pragma once

// Closed-form limiting variances and first-order MSE terms for the averaged
// quantile and the embedded superquantile recursion, plus the variance algebra
// comparing it with the classical and convexified (Bardou) competitors.
//
// Remainder constants of the non-asymptotic bounds are not known in closed form;
// bounds are returned as a first-order term and the exponent of the remainder.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "streamrisk/distributions.hpp"
#include "streamrisk/errors.hpp"
#include "streamrisk/schedules.hpp"

namespace streamrisk {

struct SymMatrix2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    friend bool operator==(const SymMatrix2&, const SymMatrix2&) = default;
};

struct FirstOrderBound {
    double first_order = 0.0;
    double remainder_exponent = 0.0;  // remainder is O(n^-remainder_exponent)
};

enum class Verdict { EmbeddedBetter, CompetitorBetter, Tie, Boundary };

inline std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::EmbeddedBetter: return "embedded-better";
        case Verdict::CompetitorBetter: return "competitor-better";
        case Verdict::Tie: return "tie";
        case Verdict::Boundary: return "boundary";
    }
    return "unknown";
}

struct ComparisonReport {
    double tau_alpha_sq = 0.0;
    // Limiting variance of the classical / Bardou recursions on the n^(-b/2) scale.
    double gamma_vartheta = 0.0;
    // Embedded recursion's limiting variance on the same scale.
    double embedded_variance = 0.0;
    // 1 - theta/(2 vartheta - theta); the embedded variant wins iff b1 is below it (b = 1).
    double b1_threshold = 0.0;
    Verdict verdict = Verdict::Tie;
    // theta <= 0, vartheta <= 0 or vartheta == theta: the ordering argument assumes
    // both risk quantities are positive and distinct.
    bool degenerate = false;
};

struct AsymptoticReport {
    double quantile_clt_var = 0.0;
    double sq_var_slow = 0.0;
    std::optional<SymMatrix2> s2;       // b1 > 1/2 only
    std::optional<double> c_alpha_b1;   // b1 > 1/2 only
    double tau_alpha_sq = 0.0;
    double gamma_vartheta = 0.0;
    double b1_threshold = 0.0;
    double averaged_quantile_remainder_exponent = 0.0;
    double embedded_remainder_exponent = 0.0;
    std::optional<Verdict> verdict;
    bool degenerate = false;
};

namespace detail {

inline void require_oracle(const RiskOracle& o) {
    if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    if (!(o.density_at_quantile > 0.0)) throw DomainError("density at the quantile must be positive");
    if (!(o.v_alpha >= 0.0)) throw DomainError("V_alpha must be nonnegative");
}

inline void require_fast_b1(double b1) {
    if (!(b1 > 0.5)) throw DomainError("b1 must exceed 1/2 (the limiting variance has a pole at 1/2)");
}

inline double nonnegative(double v, const char* what) {
    if (v < 0.0) throw DomainError(std::string(what) + " is negative for this oracle");
    return v;
}

}  // namespace detail

// alpha(1-alpha)/f(theta)^2: limiting variance of sqrt(n)(theta_bar_n - theta).
inline double quantile_clt_variance(const RiskOracle& o) {
    detail::require_oracle(o);
    const double f = o.density_at_quantile;
    return o.alpha * (1.0 - o.alpha) / (f * f);
}

// V/(2(1-alpha)^2): limiting variance of b_n^(-1/2)(embedded_n - vartheta) when b < 1.
inline double clt_variance_slow(const RiskOracle& o) {
    detail::require_oracle(o);
    const double tail = 1.0 - o.alpha;
    return o.v_alpha / (2.0 * tail * tail);
}

// Joint limiting covariance S^2 of sqrt(n)(theta_bar_n - theta, embedded_n - vartheta), b = 1.
inline SymMatrix2 clt_covariance_fast(const RiskOracle& o, double b1) {
    detail::require_oracle(o);
    detail::require_fast_b1(b1);
    const double a = o.alpha;
    const double tail = 1.0 - a;
    const double f = o.density_at_quantile;
    const double gap = o.vartheta_alpha - o.theta_alpha;
    const double denom = 2.0 * b1 - 1.0;
    SymMatrix2 s;
    s.xx = a * tail / (f * f);
    s.xy = a * gap / f;
    s.yy = b1 * b1 / denom * o.v_alpha / (tail * tail) -
           2.0 * b1 / denom * a * o.theta_alpha * gap / tail;
    detail::nonnegative(s.yy, "S^2_22");
    return s;
}

// Solves A S + S A^T + D = 0 for symmetric S, given 2x2 drift A and diffusion D.
inline SymMatrix2 solve_lyapunov(const std::array<std::array<double, 2>, 2>& drift,
                                 const SymMatrix2& diffusion) {
    const double a11 = drift[0][0], a12 = drift[0][1], a21 = drift[1][0], a22 = drift[1][1];
    // Unknowns (xx, xy, yy); rows are the (xx), (xy), (yy) entries of the equation.
    double m[3][4] = {
        {2.0 * a11, 2.0 * a12, 0.0, -diffusion.xx},
        {a21, a11 + a22, a12, -diffusion.xy},
        {0.0, 2.0 * a21, 2.0 * a22, -diffusion.yy},
    };
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        if (m[pivot][col] == 0.0) throw DomainError("drift matrix is not stable");
        for (int c = 0; c < 4; ++c) std::swap(m[col][c], m[pivot][c]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double factor = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= factor * m[col][c];
        }
    }
    return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

// Covariance Sigma of the invariant law of the limiting Ornstein-Uhlenbeck
// generator of the rescaled pair, obtained by solving its moment equations.
// S^2 = diag(1, sqrt(b1)) Sigma diag(1, sqrt(b1)).
inline SymMatrix2 sigma_from_generator(const RiskOracle& o, double b1) {
    detail::require_oracle(o);
    detail::require_fast_b1(b1);
    const double a = o.alpha;
    const double tail = 1.0 - a;
    const double f = o.density_at_quantile;
    const double rb1 = std::sqrt(b1);

    const std::array<std::array<double, 2>, 2> drift{{
        {-0.5, 0.0},
        {-rb1 * o.theta_alpha * f / tail, -(b1 - 0.5)},
    }};
    const SymMatrix2 diffusion{a * tail / (f * f), rb1 * a * o.vartheta_alpha / f,
                               b1 * o.v_alpha / (tail * tail)};
    SymMatrix2 sigma = solve_lyapunov(drift, diffusion);
    detail::nonnegative(sigma.yy, "Sigma_yy");

#ifndef NDEBUG
    const SymMatrix2 s2 = clt_covariance_fast(o, b1);
    auto close = [](double x, double y) {
        return std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)});
    };
    assert(close(sigma.xx, s2.xx));
    assert(close(rb1 * sigma.xy, s2.xy));
    assert(close(b1 * sigma.yy, s2.yy));
#endif
    return sigma;
}

inline SymMatrix2 rescale_sigma(const SymMatrix2& sigma, double b1) noexcept {
    const double rb1 = std::sqrt(b1);
    return {sigma.xx, rb1 * sigma.xy, b1 * sigma.yy};
}

// C_{alpha,b1}: the constant of the 1/n superquantile MSE bound when b = 1.
inline double c_alpha_b1(const RiskOracle& o, double b1) {
    detail::require_oracle(o);
    detail::require_fast_b1(b1);
    const double a = o.alpha;
    const double tail = 1.0 - a;
    const double f = o.density_at_quantile;
    const double d = 2.0 * b1 - 1.0;
    const double lead = 4.0 * b1 * b1 * a * tail / (d * d * f * f);
    const double root = 1.0 + std::sqrt(1.0 + o.v_alpha * f * f * d / (4.0 * a * tail * tail * tail));
    return lead * root * root;
}

inline FirstOrderBound mse_bound_averaged_quantile(const RiskOracle& o, const StepSchedule& sched,
                                                   std::uint64_t n) {
    if (n == 0) throw DomainError("n must be at least 1");
    const double a = sched.a_exp;
    return {quantile_clt_variance(o) / static_cast<double>(n),
            std::min(0.5 + a, 1.5 - 0.5 * a)};
}

inline FirstOrderBound mse_bound_embedded(const RiskOracle& o, const StepSchedule& sched,
                                          std::uint64_t n) {
    if (n == 0) throw DomainError("n must be at least 1");
    if (sched.fast_regime()) {
        const double a = sched.a_exp;
        return {c_alpha_b1(o, sched.b1) / static_cast<double>(n),
                std::min(1.0 + 0.5 * a, 2.0 - a)};
    }
    return {clt_variance_slow(o) * sched.gain_b(n), 0.5 * (sched.b_exp + 1.0)};
}

inline double tau_alpha_sq(const RiskOracle& o) {
    detail::require_oracle(o);
    const double tail = 1.0 - o.alpha;
    return o.v_alpha / (tail * tail) -
           (o.alpha * o.theta_alpha / tail) * (2.0 * o.vartheta_alpha - o.theta_alpha);
}

inline double b1_threshold(const RiskOracle& o) noexcept {
    return 1.0 - o.theta_alpha / (2.0 * o.vartheta_alpha - o.theta_alpha);
}

inline ComparisonReport variance_comparison(const RiskOracle& o, double b1, double b_exp) {
    detail::require_oracle(o);
    if (!(b1 > 0.0)) throw DomainError("b1 must be positive");
    const bool fast = b_exp == 1.0;
    if (fast) detail::require_fast_b1(b1);

    ComparisonReport r;
    r.tau_alpha_sq = detail::nonnegative(tau_alpha_sq(o), "tau_alpha^2");
    r.b1_threshold = b1_threshold(o);
    r.degenerate = !(o.theta_alpha > 0.0) || !(o.vartheta_alpha > 0.0) ||
                   o.vartheta_alpha == o.theta_alpha;

    if (fast) {
        r.gamma_vartheta = b1 * b1 * r.tau_alpha_sq / (2.0 * b1 - 1.0);
        r.embedded_variance = clt_covariance_fast(o, b1).yy;
        constexpr double boundary_tol = 1e-9;
        if (std::abs(r.b1_threshold - 0.5) <= boundary_tol)
            r.verdict = Verdict::Boundary;
        else if (b1 < r.b1_threshold)
            r.verdict = Verdict::EmbeddedBetter;
        else if (b1 > r.b1_threshold)
            r.verdict = Verdict::CompetitorBetter;
        else
            r.verdict = Verdict::Tie;
    } else {
        r.gamma_vartheta = b1 * r.tau_alpha_sq / 2.0;
        r.embedded_variance = b1 * clt_variance_slow(o);
        // The gap embedded - competitor is b1/2 * alpha theta (2 vartheta - theta)/(1-alpha).
        const double gap = o.alpha * o.theta_alpha * (2.0 * o.vartheta_alpha - o.theta_alpha);
        r.verdict = gap > 0.0   ? Verdict::CompetitorBetter
                    : gap < 0.0 ? Verdict::EmbeddedBetter
                                : Verdict::Tie;
    }
    return r;
}

inline AsymptoticReport asymptotic_report(const RiskOracle& o, const StepSchedule& sched) {
    AsymptoticReport r;
    r.quantile_clt_var = quantile_clt_variance(o);
    r.sq_var_slow = clt_variance_slow(o);
    r.tau_alpha_sq = tau_alpha_sq(o);
    r.b1_threshold = b1_threshold(o);
    r.averaged_quantile_remainder_exponent = std::min(0.5 + sched.a_exp, 1.5 - 0.5 * sched.a_exp);
    r.embedded_remainder_exponent = sched.fast_regime()
                                        ? std::min(1.0 + 0.5 * sched.a_exp, 2.0 - sched.a_exp)
                                        : 0.5 * (sched.b_exp + 1.0);
    const double b1 = sched.b1;
    if (b1 > 0.5) {
        r.s2 = clt_covariance_fast(o, b1);
        r.c_alpha_b1 = c_alpha_b1(o, b1);
    }
    if (!sched.fast_regime() || b1 > 0.5) {
        const auto cmp = variance_comparison(o, b1, sched.b_exp);
        r.gamma_vartheta = cmp.gamma_vartheta;
        r.verdict = cmp.verdict;
        r.degenerate = cmp.degenerate;
    } else {
        r.gamma_vartheta = std::numeric_limits<double>::infinity();
    }
    return r;
}

}  // namespace streamrisk
