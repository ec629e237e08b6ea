#pragma once

#include <stdexcept>
#include <string>

namespace stochsim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document. Carries the offending field and its 1-based line
/// (0 when the position is unknown).
class ParseError : public Error {
public:
    ParseError(std::string field, int line, const std::string& what)
        : Error(format(field, line, what)), field_(std::move(field)), line_(line) {}

    const std::string& field() const noexcept { return field_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& field, int line, const std::string& what) {
        std::string msg = "parse error";
        if (!field.empty()) msg += " in '" + field + "'";
        if (line > 0) msg += " at line " + std::to_string(line);
        return msg + ": " + what;
    }

    std::string field_;
    int line_;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// Iterative solve that did not reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : Error(what + " (residual " + std::to_string(residual) + " after " +
                std::to_string(iterations) + " iterations)"),
          residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

}  // namespace stochsim
