#pragma once

#include <stdexcept>
#include <string>

namespace driftflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sample with zero spread was handed to a test that needs spread.
class DegenerateSampleError : public Error {
public:
    explicit DegenerateSampleError(const std::string& what)
        : Error("degenerate sample: " + what) {}
};

/// Requested batch sequence reaches before the first batch.
class WindowUnderflowError : public Error {
public:
    explicit WindowUnderflowError(const std::string& what)
        : Error("window underflow: " + what) {}
};

/// Malformed input file, config, or spec.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace driftflow
