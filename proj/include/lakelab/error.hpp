#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lakelab {

/// Argument outside the mathematical domain of an operation (x < 0, p >= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure failed to deliver its postcondition.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, std::vector<double> history = {})
        : std::runtime_error(what), history_(std::move(history)) {}

    /// Residual (or other progress measure) per iteration, when the failing
    /// procedure is iterative.
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CacheError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lakelab
