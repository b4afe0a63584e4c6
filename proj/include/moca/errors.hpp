#pragma once

#include <stdexcept>
#include <string>

namespace moca {

/// Invalid argument, range or shape. Maps to CLI exit code 2.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A query outside the domain of a function (e.g. a denoiser asked about t = 0).
class DomainError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

/// No usable mask was available when an edit was due.
class DegenerateTrackError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File system or format failure. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf detected or a singular computation. Maps to CLI exit code 4.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ParameterError(what);
}

}  // namespace moca
