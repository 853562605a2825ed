#pragma once

#include <stdexcept>
#include <string>

namespace conecouple {

/// Invalid argument or violated precondition.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Request exceeds a fixed capacity (e.g. exact state-space size).
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// A statistical estimator had nothing to work with.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace conecouple
