#pragma once

// Power-law gain sequences for the joint quantile / superquantile recursions:
//
//     a_n = a1 * n^(-a)        (n >= 1)
//     b_n = b1 * (n+1)^(-b)    (n >= 0)
//
// with 1/2 < a < b <= 1. Gains are evaluated on demand so that a stream of
// any length runs in O(1) memory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "streamrisk/errors.hpp"

namespace streamrisk {

struct ValidationReport {
    bool positive_multipliers = false;  // a1 > 0 and b1 > 0
    bool chain = false;                 // 1/2 < a < b <= 1
    bool fast_regime = false;           // b == 1
    // Only meaningful in the fast regime (b == 1); false otherwise.
    bool rate_fast_b1 = false;          // b1 > ((1+a)/2) ^ (5/2 - a)
    bool clt_fast_b1 = false;           // b1 > 1/2
    double rate_fast_b1_threshold = 0.0;
    std::vector<std::string> violations;

    bool ok() const noexcept { return positive_multipliers && chain; }

    friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

struct StepSchedule {
    double a1 = 1.0;
    double a_exp = 2.0 / 3.0;
    double b1 = 1.0;
    double b_exp = 1.0;

    friend bool operator==(const StepSchedule&, const StepSchedule&) = default;

    // Quantile gain a_n. n = 0 is outside the sequence's domain.
    double gain_a(std::uint64_t n) const {
        if (n == 0) throw DomainError("gain_a is defined for n >= 1");
        return a1 * inverse_power(static_cast<double>(n), a_exp);
    }

    // Superquantile gain b_n; the (n+1) shift makes n = 0 legal.
    double gain_b(std::uint64_t n) const noexcept {
        return b1 * inverse_power(static_cast<double>(n) + 1.0, b_exp);
    }

    bool fast_regime() const noexcept { return b_exp == 1.0; }

    // (1+a)/2 ^ (5/2-a): the lower bound on b1 for the 1/n superquantile MSE bound.
    double rate_fast_b1_threshold() const noexcept {
        return std::min((1.0 + a_exp) / 2.0, 2.5 - a_exp);
    }

    ValidationReport validate() const {
        ValidationReport r;
        r.positive_multipliers = a1 > 0.0 && b1 > 0.0;
        if (!(a1 > 0.0)) r.violations.emplace_back("a1 must be positive");
        if (!(b1 > 0.0)) r.violations.emplace_back("b1 must be positive");

        const bool a_ok = a_exp > 0.5;
        const bool ab_ok = a_exp < b_exp;
        const bool b_ok = b_exp <= 1.0;
        r.chain = a_ok && ab_ok && b_ok;
        if (!a_ok) r.violations.emplace_back("exponent a must exceed 1/2");
        if (!ab_ok) r.violations.emplace_back("exponent a must be strictly below b");
        if (!b_ok) r.violations.emplace_back("exponent b must not exceed 1");

        r.fast_regime = fast_regime();
        r.rate_fast_b1_threshold = rate_fast_b1_threshold();
        if (r.fast_regime) {
            r.rate_fast_b1 = b1 > r.rate_fast_b1_threshold;
            r.clt_fast_b1 = b1 > 0.5;
            if (!r.rate_fast_b1)
                r.violations.emplace_back("b1 below the fast-regime MSE bound threshold");
            if (!r.clt_fast_b1) r.violations.emplace_back("b1 must exceed 1/2 for the joint CLT");
        }
        return r;
    }

private:
    static double inverse_power(double x, double e) noexcept {
        if (e == 1.0) return 1.0 / x;
        if (e == 0.5) return 1.0 / std::sqrt(x);
        return std::pow(x, -e);
    }
};

}  // namespace streamrisk
