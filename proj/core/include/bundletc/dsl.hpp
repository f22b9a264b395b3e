#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bundletc/bundle_types.hpp"
#include "bundletc/covariant.hpp"

namespace bundletc::dsl {

struct Span {
    int line = 1, col = 1;
    int end_line = 1, end_col = 1;
};

class ParseError : public Error {
public:
    ParseError(Span s, const std::string& msg, std::vector<std::string> expected = {})
        : Error(msg), span(s), expected(std::move(expected)) {}
    Span span;
    std::vector<std::string> expected;
};

// Source expression: prefix calls head(arg, ...), bare identifiers, integers,
// and permutation literals in cycle notation "(2 3)(1 4)". Every node carries
// its source span.
struct Expr {
    enum class Kind { Call, Ident, Int, Perm };
    Kind kind = Kind::Ident;
    Span span;
    std::string text; // call head or identifier
    long value = 0;
    std::vector<std::vector<int>> cycles; // 1-based entries
    std::vector<Expr> args;
};

std::vector<Expr> parse(const std::string& source);
std::string render(const Expr& e);
bool ast_equal(const Expr& a, const Expr& b);

// Typechecking error with a source span and expected/found types rendered at
// the three telescope levels.
class TypeError : public Error {
public:
    TypeError(TypeErrorKind kind, Span span, std::string detail,
              std::vector<std::string> expected = {}, std::vector<std::string> found = {})
        : Error(std::string(type_error_kind_name(kind)) + ": " + detail), kind(kind), span(span),
          detail(std::move(detail)), expected_levels(std::move(expected)),
          found_levels(std::move(found)) {}

    std::string render(int telescope) const;

    TypeErrorKind kind;
    Span span;
    std::string detail;
    std::vector<std::string> expected_levels;
    std::vector<std::string> found_levels;
};

// Declared symbols: the bundle-type environment plus value symbols.
struct Environment {
    TypeEnv types;
    std::map<std::string, BundleType::Ptr> fields; // normalized declared types
};

struct TypedExpr {
    enum class Op { Var, Pair, Trace, Permute, Otimes, Boxtimes, Pullback, Cov, Dmap, Dual };
    Op op = Op::Var;
    Span span;
    std::string symbol;     // Var / Pullback / Dmap map name
    int n = 0;              // Pair
    std::vector<int> sigma; // Permute, one-line 0-based
    BundleType::Ptr type;   // normalized
    std::vector<TypedExpr> children;
};

bool is_declaration(const Expr& e);
// manifold / map / compose / metric / field declarations mutate the
// environment; throws TypeError on malformed or duplicate declarations.
void apply_declaration(const Expr& e, Environment& env);
// Typecheck an expression form against the environment.
TypedExpr typecheck(const Expr& e, const Environment& env);

// --- Evaluation -----------------------------------------------------------

// Base points for every manifold mentioned by the expression's type.
using PointMap = std::map<std::string, Vec>;

struct EvalContext {
    const Environment* env = nullptr;
    std::map<std::string, ManifoldPtr> manifolds;
    std::map<std::string, MapPtr> maps;
    // Bindings receive the context in effect at evaluation time, so contexts
    // stay freely copyable.
    std::map<std::string, std::function<TypedTensor(const EvalContext&, const PointMap&)>>
        bindings;

    // Binds a symbol to fixed component data, tagged from its declared type.
    void bind_constant(const std::string& name, std::vector<double> data);
    // Binds a symbol to a tensor field over its base manifold.
    void bind_field(const std::string& name, const TensorField& field);
    // Binds a declared metric symbol to the manifold's metric field.
    void bind_metric(const std::string& name);
    void register_manifold(const ManifoldPtr& m);
    void register_map(const std::string& name, MapPtr m);
};

// Axis tags of a normalized bundle type at the given base points (Line
// factors contribute no axis; scalars have none).
std::vector<AxisTag> tags_of(const BundleType::Ptr& type, const EvalContext& ctx,
                             const PointMap& points);

TypedTensor evaluate(const TypedExpr& e, const EvalContext& ctx, const PointMap& points);

// --- File-level driver -----------------------------------------------------

struct Diagnostic {
    Span span;
    std::string kind;
    std::string message;
};

struct FileCheckResult {
    Environment env;
    std::vector<Diagnostic> diagnostics;
    int forms = 0;
    int expressions = 0;
    bool ok() const { return diagnostics.empty(); }
};

FileCheckResult check_source(const std::string& source, int telescope = 2);

} // namespace bundletc::dsl
