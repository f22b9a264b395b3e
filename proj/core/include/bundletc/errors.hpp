#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bundletc {

// Base for every domain error thrown by the engine. `what()` carries the
// rendered message; subclasses add structured fields where callers need them.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime axis-tag disagreement in a tensor operation (fiber space, dimension
// or variance). Signals either a genuinely ill-typed pairing or a binding bug.
class TagMismatch : public Error {
public:
    explicit TagMismatch(const std::string& msg) : Error(msg) {}
};

// Operation misuse that is not a tag problem (odd-rank parallel product
// without a declared split, asymmetric metric passed where symmetry is
// required, ...).
class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

class SingularMatrix : public Error {
public:
    explicit SingularMatrix(const std::string& msg) : Error(msg) {}
};

// Static type errors from the bundle-type algebra and the typechecker.
enum class TypeErrorKind {
    Valence,       // factor counts/variance insufficient for the pairing
    Space,         // fiber spaces differ (the A∘B failure)
    Base,          // base spaces cannot be joined
    UnknownSymbol, // symbol not declared in the environment
    Structural,    // malformed type expression
};

const char* type_error_kind_name(TypeErrorKind k);

class TypeCheckError : public Error {
public:
    TypeCheckError(TypeErrorKind kind, const std::string& msg, std::string path = {})
        : Error(std::string(type_error_kind_name(kind)) + ": " + msg),
          kind(kind), detail(msg), node_path(std::move(path)) {}

    TypeErrorKind kind;
    std::string detail;
    std::string node_path; // path to the offending node, for structural errors
    // Expected/found type renderings at telescope levels 0 (terse), 1 (mid),
    // 2 (fully specified); empty when the error has no such pair.
    std::vector<std::string> expected_levels;
    std::vector<std::string> found_levels;
};

// Chart-related failures from manifolds and solvers.
class OutOfChart : public Error {
public:
    explicit OutOfChart(const std::string& msg) : Error(msg) {}
};

class ChartExit : public Error {
public:
    ChartExit(const std::string& msg, double time) : Error(msg), exit_time(time) {}
    double exit_time;
};

// Variational-module failures.
class DomainNotInterval : public Error {
public:
    explicit DomainNotInterval(const std::string& msg) : Error(msg) {}
};

class NonAutonomousLagrangian : public Error {
public:
    explicit NonAutonomousLagrangian(const std::string& msg) : Error(msg) {}
};

class NotCritical : public Error {
public:
    explicit NotCritical(const std::string& msg) : Error(msg) {}
};

class FlowDiverged : public Error {
public:
    explicit FlowDiverged(const std::string& msg) : Error(msg) {}
};

} // namespace bundletc
