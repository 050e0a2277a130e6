#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace streamrisk {

// Raised when an argument violates a mathematical precondition
// (alpha outside (0,1), n = 0 for a_n, b1 <= 1/2 at a pole, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Numerical integration did not reach the requested tolerance.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved, double requested)
        : std::runtime_error(what + " (achieved error " + std::to_string(achieved) +
                             ", requested " + std::to_string(requested) + ")"),
          achieved_(achieved),
          requested_(requested) {}

    double achieved() const noexcept { return achieved_; }
    double requested() const noexcept { return requested_; }

private:
    double achieved_;
    double requested_;
};

// A stream update was rejected; carries the position of the offending observation.
class StepError : public std::runtime_error {
public:
    StepError(const std::string& what, std::size_t index)
        : std::runtime_error(what + " at observation index " + std::to_string(index)),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// Failure inside a Monte-Carlo experiment, tagged with replicate and step.
class ExperimentError : public std::runtime_error {
public:
    ExperimentError(const std::string& what, std::size_t replicate, std::size_t step)
        : std::runtime_error(what + " (replicate " + std::to_string(replicate) + ", step " +
                             std::to_string(step) + ")"),
          replicate_(replicate),
          step_(step) {}

    std::size_t replicate() const noexcept { return replicate_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t replicate_;
    std::size_t step_;
};

}  // namespace streamrisk
