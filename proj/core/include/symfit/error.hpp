#pragma once

#include <stdexcept>
#include <string>

namespace symfit {

enum class ErrorKind {
    input,         // malformed input, shape or tag errors
    domain,        // function evaluated outside its domain
    singular,      // numerically singular linear system
    convergence,   // iterative method failed
    inconsistent,  // fitted values do not satisfy the model they claim
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InputError : Error {
    explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

struct SingularityError : Error {
    explicit SingularityError(const std::string& what) : Error(ErrorKind::singular, what) {}
};

struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& what) : Error(ErrorKind::convergence, what) {}
};

struct InconsistencyError : Error {
    explicit InconsistencyError(const std::string& what) : Error(ErrorKind::inconsistent, what) {}
};

}  // namespace symfit
