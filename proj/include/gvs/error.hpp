#pragma once

#include <stdexcept>
#include <string>

namespace gvs {

// Exit codes used by the command line front end. Each error class maps to one.
enum class ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kIo = 3,
    kSchema = 4,
    kNumeric = 5,
};

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, ExitCode code = ExitCode::kInternal)
        : std::runtime_error(what), code_(code) {}

    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Shapes or dimensions that do not agree.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error("dimension error: " + what, ExitCode::kSchema) {}
};

/// An argument outside its documented domain.
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error("parameter error: " + what, ExitCode::kUsage) {}
};

/// Inputs for which the operation is undefined (zero vectors, zero resultants).
class DegenerateInputError : public Error {
public:
    explicit DegenerateInputError(const std::string& what)
        : Error("degenerate input: " + what, ExitCode::kNumeric) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io error: " + what, ExitCode::kIo) {}
};

/// Malformed file contents (bad JSON, wrong sizes, non-finite values).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error("format error: " + what, ExitCode::kSchema) {}
};

class SamplingError : public Error {
public:
    explicit SamplingError(const std::string& what) : Error("sampling error: " + what, ExitCode::kNumeric) {}
};

}  // namespace gvs
