#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace riddle {

// Base of every error thrown by the library.  `kind()` is a stable
// machine-readable tag; the CLI maps kinds onto exit codes.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

namespace expr {

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, const std::string& msg)
        : Error("SyntaxError", msg + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class UnknownIdentifier : public Error {
public:
    UnknownIdentifier(std::size_t offset, const std::string& name)
        : Error("UnknownIdentifier",
                "unknown identifier '" + name + "' (at byte " + std::to_string(offset) + ")"),
          offset_(offset), name_(name) {}
    std::size_t offset() const { return offset_; }
    const std::string& name() const { return name_; }

private:
    std::size_t offset_;
    std::string name_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error("DomainError", msg) {}
};

class Unsupported : public Error {
public:
    explicit Unsupported(const std::string& msg) : Error("Unsupported", msg) {}
};

} // namespace expr

namespace dynamics {

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error("ValidationError", msg) {}
};

class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& msg) : Error("ConvergenceError", msg) {}
};

} // namespace dynamics

namespace thermo {

class NonConvergence : public Error {
public:
    explicit NonConvergence(const std::string& msg) : Error("NonConvergence", msg) {}
};

class MethodDisagreement : public Error {
public:
    explicit MethodDisagreement(const std::string& msg) : Error("MethodDisagreement", msg) {}
};

class NoRoot : public Error {
public:
    explicit NoRoot(const std::string& msg) : Error("NoRoot", msg) {}
};

class HypothesisViolation : public Error {
public:
    explicit HypothesisViolation(const std::string& msg) : Error("HypothesisViolation", msg) {}
};

} // namespace thermo

namespace stability {

class InsufficientTail : public Error {
public:
    explicit InsufficientTail(const std::string& msg) : Error("InsufficientTail", msg) {}
};

class RejectionStall : public Error {
public:
    explicit RejectionStall(const std::string& msg) : Error("RejectionStall", msg) {}
};

class Inconclusive : public Error {
public:
    explicit Inconclusive(const std::string& msg) : Error("Inconclusive", msg) {}
};

class WrongSide : public Error {
public:
    explicit WrongSide(const std::string& msg) : Error("WrongSide", msg) {}
};

} // namespace stability

namespace multifractal {

class BracketFailure : public Error {
public:
    explicit BracketFailure(const std::string& msg) : Error("BracketFailure", msg) {}
};

class RouteDisagreement : public Error {
public:
    explicit RouteDisagreement(const std::string& msg) : Error("RouteDisagreement", msg) {}
};

} // namespace multifractal

namespace config {

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("ConfigError", msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("IoError", msg) {}
};

} // namespace config

} // namespace riddle
