#pragma once

// Streaming joint quantile / superquantile recursions.
//
// One observation x = X_{n+1} updates, with a_n = gain_a(max(n,1)) and b_n = gain_b(n):
//
//   theta     <- theta - a_n (1{x <= theta} - alpha)
//   theta_bar <- theta_bar n/(n+1) + theta_new/(n+1)
//   embedded  <- embedded + b_n (x/(1-alpha) 1{x > theta_bar_old} - embedded)
//   classical <- classical + b_n (x/(1-alpha) 1{x > theta_old} - classical)
//   bardou    <- bardou + b_n (L(theta_old, x) - bardou),
//                L(t, x) = t + (x - t)/(1-alpha) 1{x > t}
//
// All three superquantile variants consume the same observation so comparisons
// between them share randomness.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "streamrisk/errors.hpp"
#include "streamrisk/schedules.hpp"

namespace streamrisk {

struct JointEstimatorState {
    std::uint64_t n = 0;
    double theta = 0.0;
    double theta_bar = 0.0;
    double sq_embedded = 0.0;
    double sq_classical = 0.0;
    double sq_bardou = 0.0;
    double alpha = 0.5;
    StepSchedule schedule{};

    friend bool operator==(const JointEstimatorState&, const JointEstimatorState&) = default;
};

// Trace row recorded by run_stream at caller-chosen checkpoints.
struct TracePoint {
    std::uint64_t n = 0;
    double theta = 0.0;
    double theta_bar = 0.0;
    double sq_embedded = 0.0;
    double sq_classical = 0.0;
    double sq_bardou = 0.0;

    friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

inline JointEstimatorState init(double alpha, const StepSchedule& schedule, double theta0,
                                double sq0) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    const auto report = schedule.validate();
    if (!report.ok()) throw DomainError("invalid schedule: " + report.violations.front());
    if (!std::isfinite(theta0) || !std::isfinite(sq0))
        throw DomainError("initial estimates must be finite");
    JointEstimatorState s;
    s.alpha = alpha;
    s.schedule = schedule;
    s.theta = s.theta_bar = theta0;
    s.sq_embedded = s.sq_classical = s.sq_bardou = sq0;
    return s;
}

// Cold start from a first observation: theta0 = x0, sq0 = x0/(1-alpha).
inline JointEstimatorState init_from_observation(double alpha, const StepSchedule& schedule,
                                                 double x0) {
    return init(alpha, schedule, x0, x0 / (1.0 - alpha));
}

// In-place update; the caller guarantees x is finite.
inline void advance(JointEstimatorState& s, double x) noexcept {
    const double a_n = s.schedule.gain_a(s.n == 0 ? 1 : s.n);
    const double b_n = s.schedule.gain_b(s.n);
    const double inv_tail = 1.0 / (1.0 - s.alpha);
    const double theta_old = s.theta;
    const double theta_bar_old = s.theta_bar;

    const double q_indicator = x <= theta_old ? 1.0 : 0.0;
    s.theta = theta_old - a_n * (q_indicator - s.alpha);
    assert(std::abs(s.theta - theta_old) <=
           a_n * std::max(s.alpha, 1.0 - s.alpha) * (1.0 + 1e-12));

    const double np1 = static_cast<double>(s.n) + 1.0;
    s.theta_bar = theta_bar_old * (static_cast<double>(s.n) / np1) + s.theta / np1;

    const double embedded_target = x > theta_bar_old ? x * inv_tail : 0.0;
    s.sq_embedded += b_n * (embedded_target - s.sq_embedded);

    const bool above = x > theta_old;
    const double classical_target = above ? x * inv_tail : 0.0;
    s.sq_classical += b_n * (classical_target - s.sq_classical);

    const double bardou_target = above ? theta_old + (x - theta_old) * inv_tail : theta_old;
    s.sq_bardou += b_n * (bardou_target - s.sq_bardou);

    ++s.n;
}

// Pure update. Non-finite observations are rejected and leave no trace.
inline JointEstimatorState step(JointEstimatorState s, double x) {
    if (!std::isfinite(x)) throw StepError("non-finite observation", s.n);
    advance(s, x);
    return s;
}

inline TracePoint trace_point(const JointEstimatorState& s) noexcept {
    return {s.n, s.theta, s.theta_bar, s.sq_embedded, s.sq_classical, s.sq_bardou};
}

// Folds step over `observations`. When `checkpoints` is non-empty (ascending
// observation counts), a trace row is appended to `trace` each time the state's
// counter reaches one of them. Errors carry the index within `observations`; the
// input state is not modified on failure.
inline JointEstimatorState run_stream(JointEstimatorState s, std::span<const double> observations,
                                      std::span<const std::uint64_t> checkpoints = {},
                                      std::vector<TracePoint>* trace = nullptr) {
    std::size_t next = 0;
    while (next < checkpoints.size() && checkpoints[next] < s.n) ++next;
    auto record = [&] {
        while (next < checkpoints.size() && checkpoints[next] == s.n) {
            if (trace) trace->push_back(trace_point(s));
            ++next;
        }
    };
    record();
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const double x = observations[i];
        if (!std::isfinite(x)) throw StepError("non-finite observation", i);
        advance(s, x);
        record();
    }
    return s;
}

}  // namespace streamrisk
