#pragma once

#include <stdexcept>
#include <string>

namespace qzeno {

// Invalid argument values or inconsistent problem setup.
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation exceeded its configured budget (subdivisions, samples, memory).
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical evaluation left its domain of validity (non-positive survival
// probability, failed convergence, non-finite intermediate).
class EvaluationError : public std::runtime_error {
public:
    explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

// A statistical estimator could not be formed from the given data.
class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

// A quantity is degenerate at the requested point (deterministic survival,
// zero Fisher information) and the requested object does not exist.
class SingularityError : public std::runtime_error {
public:
    explicit SingularityError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qzeno
