#include "bundletc/dsl.hpp"

#include <cctype>
#include <sstream>

namespace bundletc::dsl {

namespace {

enum class Tok { Ident, Int, LParen, RParen, Comma, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    long value = 0;
    Span span;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') step();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                step();
            } else {
                break;
            }
        }
        tok_.span = {line_, col_, line_, col_};
        if (pos_ >= src_.size()) {
            tok_.kind = Tok::End;
            tok_.text = "end of input";
            return;
        }
        const char c = src_[pos_];
        if (c == '(') { tok_ = simple(Tok::LParen, "("); return; }
        if (c == ')') { tok_ = simple(Tok::RParen, ")"); return; }
        if (c == ',') { tok_ = simple(Tok::Comma, ","); return; }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            Token t;
            t.kind = Tok::Int;
            t.span = {line_, col_, line_, col_};
            std::string num;
            if (c == '-') { num += '-'; step(); }
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                num += src_[pos_];
                step();
            }
            t.text = num;
            t.value = std::stol(num);
            t.span.end_line = line_;
            t.span.end_col = col_;
            tok_ = t;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            Token t;
            t.kind = Tok::Ident;
            t.span = {line_, col_, line_, col_};
            std::string id;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                id += src_[pos_];
                step();
            }
            t.text = id;
            t.span.end_line = line_;
            t.span.end_col = col_;
            tok_ = t;
            return;
        }
        throw ParseError({line_, col_, line_, col_},
                         std::string("unexpected character '") + c + "'");
    }

    Token simple(Tok k, const char* text) {
        Token t;
        t.kind = k;
        t.text = text;
        t.span = {line_, col_, line_, col_};
        step();
        t.span.end_line = line_;
        t.span.end_col = col_;
        return t;
    }

    void step() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) {}

    std::vector<Expr> parse_file() {
        std::vector<Expr> forms;
        while (lex_.peek().kind != Tok::End) forms.push_back(parse_form());
        return forms;
    }

private:
    Expr parse_form() {
        const Token head = expect(Tok::Ident, "a form head");
        if (lex_.peek().kind != Tok::LParen) {
            // Bare identifier as a top-level expression form.
            Expr e;
            e.kind = Expr::Kind::Ident;
            e.text = head.text;
            e.span = head.span;
            return e;
        }
        lex_.take();
        Expr e;
        e.kind = Expr::Kind::Call;
        e.text = head.text;
        e.span = head.span;
        if (lex_.peek().kind != Tok::RParen) {
            e.args.push_back(parse_arg());
            while (lex_.peek().kind == Tok::Comma) {
                lex_.take();
                e.args.push_back(parse_arg());
            }
        }
        const Token close = expect_closing();
        e.span.end_line = close.span.end_line;
        e.span.end_col = close.span.end_col;
        return e;
    }

    Expr parse_arg() {
        const Token& t = lex_.peek();
        switch (t.kind) {
            case Tok::Ident: {
                Token id = lex_.take();
                if (lex_.peek().kind == Tok::LParen) {
                    lex_.take();
                    Expr e;
                    e.kind = Expr::Kind::Call;
                    e.text = id.text;
                    e.span = id.span;
                    if (lex_.peek().kind != Tok::RParen) {
                        e.args.push_back(parse_arg());
                        while (lex_.peek().kind == Tok::Comma) {
                            lex_.take();
                            e.args.push_back(parse_arg());
                        }
                    }
                    const Token close = expect_closing();
                    e.span.end_line = close.span.end_line;
                    e.span.end_col = close.span.end_col;
                    return e;
                }
                Expr e;
                e.kind = Expr::Kind::Ident;
                e.text = id.text;
                e.span = id.span;
                return e;
            }
            case Tok::Int: {
                Token num = lex_.take();
                Expr e;
                e.kind = Expr::Kind::Int;
                e.value = num.value;
                e.span = num.span;
                return e;
            }
            case Tok::LParen: {
                // Permutation literal: one or more cycles of integers.
                Expr e;
                e.kind = Expr::Kind::Perm;
                e.span = t.span;
                while (lex_.peek().kind == Tok::LParen) {
                    lex_.take();
                    std::vector<int> cycle;
                    while (lex_.peek().kind == Tok::Int)
                        cycle.push_back(static_cast<int>(lex_.take().value));
                    if (cycle.empty())
                        throw ParseError(lex_.peek().span, "empty permutation cycle",
                                         {"an integer"});
                    const Token close = expect(Tok::RParen, "')'");
                    e.cycles.push_back(cycle);
                    e.span.end_line = close.span.end_line;
                    e.span.end_col = close.span.end_col;
                }
                return e;
            }
            default:
                throw ParseError(t.span, "unexpected " + describe(t) + ", expected an argument",
                                 {"identifier", "integer", "'('"});
        }
    }

    Token expect(Tok k, const std::string& what) {
        const Token& t = lex_.peek();
        if (t.kind != k)
            throw ParseError(t.span, "unexpected " + describe(t) + ", expected " + what, {what});
        return lex_.take();
    }

    Token expect_closing() {
        const Token& t = lex_.peek();
        if (t.kind != Tok::RParen)
            throw ParseError(t.span, "unexpected " + describe(t) + ", expected ',' or ')'",
                             {"','", "')'"});
        return lex_.take();
    }

    static std::string describe(const Token& t) {
        if (t.kind == Tok::End) return "end of input";
        return "'" + t.text + "'";
    }

    Lexer lex_;
};

} // namespace

std::vector<Expr> parse(const std::string& source) { return Parser(source).parse_file(); }

std::string render(const Expr& e) {
    std::ostringstream os;
    switch (e.kind) {
        case Expr::Kind::Ident: os << e.text; break;
        case Expr::Kind::Int: os << e.value; break;
        case Expr::Kind::Perm:
            for (const auto& cyc : e.cycles) {
                os << "(";
                for (std::size_t i = 0; i < cyc.size(); ++i) {
                    if (i) os << " ";
                    os << cyc[i];
                }
                os << ")";
            }
            break;
        case Expr::Kind::Call: {
            os << e.text << "(";
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) os << ", ";
                os << render(e.args[i]);
            }
            os << ")";
            break;
        }
    }
    return os.str();
}

bool ast_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind || a.text != b.text || a.value != b.value || a.cycles != b.cycles ||
        a.args.size() != b.args.size())
        return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!ast_equal(a.args[i], b.args[i])) return false;
    return true;
}

std::string TypeError::render(int telescope) const {
    std::string msg = detail;
    if (!expected_levels.empty()) {
        const int lvl = std::min<int>(telescope, static_cast<int>(expected_levels.size()) - 1);
        msg += " (expected " + expected_levels[lvl] + ", found " + found_levels[lvl] + ")";
    }
    return msg;
}

namespace {

TypeError wrap(const TypeCheckError& err, Span span) {
    return TypeError(err.kind, span, err.detail, err.expected_levels, err.found_levels);
}

const Expr& arg_at(const Expr& e, std::size_t i, const char* what) {
    if (i >= e.args.size())
        throw TypeError(TypeErrorKind::Structural, e.span,
                        e.text + ": missing argument " + std::to_string(i + 1) + " (" + what +
                            ")");
    return e.args[i];
}

std::string ident_arg(const Expr& e, std::size_t i, const char* what) {
    const Expr& a = arg_at(e, i, what);
    if (a.kind != Expr::Kind::Ident)
        throw TypeError(TypeErrorKind::Structural, a.span,
                        e.text + ": argument " + std::to_string(i + 1) + " must be " + what);
    return a.text;
}

long int_arg(const Expr& e, std::size_t i, const char* what) {
    const Expr& a = arg_at(e, i, what);
    if (a.kind != Expr::Kind::Int)
        throw TypeError(TypeErrorKind::Structural, a.span,
                        e.text + ": argument " + std::to_string(i + 1) + " must be " + what);
    return a.value;
}

// Type expressions in field declarations.
BundleType::Ptr analyze_type(const Expr& e, Environment& env) {
    if (e.kind != Expr::Kind::Call)
        throw TypeError(TypeErrorKind::Structural, e.span, "expected a bundle type expression");
    try {
        if (e.text == "tangent") return BundleType::tangent(env.types.manifold(ident_arg(e, 0, "a manifold")));
        if (e.text == "cotangent")
            return BundleType::cotangent(env.types.manifold(ident_arg(e, 0, "a manifold")));
        if (e.text == "line") return BundleType::line(env.types.manifold(ident_arg(e, 0, "a manifold")));
        if (e.text == "dual") return BundleType::dual(analyze_type(arg_at(e, 0, "a type"), env));
        if (e.text == "otimes" || e.text == "oplus") {
            auto l = analyze_type(arg_at(e, 0, "a type"), env);
            auto r = analyze_type(arg_at(e, 1, "a type"), env);
            // Bases are joined when possible, kept separate otherwise.
            const auto bl = l->base_space(), br = r->base_space();
            const bool joined = bl.size() == 1 && br.size() == 1 && bl[0] == br[0];
            if (e.text == "otimes")
                return joined ? BundleType::tensor_shared(l, r) : BundleType::tensor_full(l, r);
            return joined ? BundleType::sum_shared(l, r) : BundleType::sum_full(l, r);
        }
        if (e.text == "pullback") {
            const MapId& f = env.types.map(ident_arg(e, 0, "a map"));
            return BundleType::pullback(f, analyze_type(arg_at(e, 1, "a type"), env));
        }
    } catch (const TypeCheckError& err) {
        throw wrap(err, e.span);
    }
    throw TypeError(TypeErrorKind::Structural, e.span,
                    "unknown type constructor '" + e.text + "'");
}

} // namespace

bool is_declaration(const Expr& e) {
    return e.kind == Expr::Kind::Call &&
           (e.text == "manifold" || e.text == "map" || e.text == "compose" ||
            e.text == "metric" || e.text == "field");
}

void apply_declaration(const Expr& e, Environment& env) {
    try {
        if (e.text == "manifold") {
            env.types.declare_manifold(ident_arg(e, 0, "a name"),
                                       static_cast<int>(int_arg(e, 1, "the dimension")));
            return;
        }
        if (e.text == "map") {
            bool identity = false;
            if (e.args.size() >= 4) {
                if (ident_arg(e, 3, "'identity'") != "identity")
                    throw TypeError(TypeErrorKind::Structural, e.args[3].span,
                                    "map: fourth argument must be 'identity'");
                identity = true;
            }
            env.types.declare_map(ident_arg(e, 0, "a name"), ident_arg(e, 1, "the domain"),
                                  ident_arg(e, 2, "the codomain"), identity);
            return;
        }
        if (e.text == "compose") {
            env.types.declare_composition(ident_arg(e, 0, "the composite"),
                                          ident_arg(e, 1, "the outer map"),
                                          ident_arg(e, 2, "the inner map"));
            return;
        }
        if (e.text == "metric") {
            const std::string name = ident_arg(e, 0, "a name");
            const ManifoldId& m = env.types.manifold(ident_arg(e, 1, "a manifold"));
            if (env.fields.count(name))
                throw TypeError(TypeErrorKind::Structural, e.span,
                                "symbol '" + name + "' already declared");
            env.fields[name] =
                BundleType::tensor_shared(BundleType::cotangent(m), BundleType::cotangent(m));
            return;
        }
        if (e.text == "field") {
            const std::string name = ident_arg(e, 0, "a name");
            if (env.fields.count(name))
                throw TypeError(TypeErrorKind::Structural, e.span,
                                "symbol '" + name + "' already declared");
            env.fields[name] = normalize(analyze_type(arg_at(e, 1, "a type"), env), env.types);
            return;
        }
    } catch (const TypeCheckError& err) {
        throw wrap(err, e.span);
    }
    throw TypeError(TypeErrorKind::Structural, e.span, "unknown declaration '" + e.text + "'");
}

namespace {

std::vector<int> one_line_from_cycles(const std::vector<std::vector<int>>& cycles, int n,
                                      Span span) {
    for (const auto& cyc : cycles)
        for (int v : cyc)
            if (v < 1 || v > n)
                throw TypeError(TypeErrorKind::Valence, span,
                                "cycle entry " + std::to_string(v) +
                                    " out of range for a rank-" + std::to_string(n) + " operand");
    return permutation_from_cycles(cycles, n);
}

BundleType::Ptr regroup(const std::vector<BundleType::Ptr>& word, const TypeEnv& env,
                        const ManifoldId& scalar_base) {
    if (word.empty()) return BundleType::line(scalar_base);
    BundleType::Ptr acc = word[0];
    for (std::size_t i = 1; i < word.size(); ++i) {
        const auto bl = acc->base_space(), br = word[i]->base_space();
        const bool joined = bl.size() == 1 && br.size() == 1 && bl[0] == br[0];
        acc = joined ? BundleType::tensor_shared(acc, word[i])
                     : BundleType::tensor_full(acc, word[i]);
    }
    return normalize(acc, env);
}

} // namespace

TypedExpr typecheck(const Expr& e, const Environment& env) {
    TypedExpr out;
    out.span = e.span;

    if (e.kind == Expr::Kind::Ident) {
        auto it = env.fields.find(e.text);
        if (it == env.fields.end())
            throw TypeError(TypeErrorKind::UnknownSymbol, e.span,
                            "'" + e.text + "' is not a declared field");
        out.op = TypedExpr::Op::Var;
        out.symbol = e.text;
        out.type = it->second;
        return out;
    }
    if (e.kind != Expr::Kind::Call)
        throw TypeError(TypeErrorKind::Structural, e.span, "expected an expression");

    auto child = [&](std::size_t i) { return typecheck(arg_at(e, i, "an expression"), env); };

    try {
        if (e.text == "pair") {
            out.op = TypedExpr::Op::Pair;
            out.children.push_back(child(0));
            out.children.push_back(child(1));
            out.n = static_cast<int>(int_arg(e, 2, "the contraction order"));
            if (out.n < 1)
                throw TypeError(TypeErrorKind::Structural, e.span,
                                "pair: contraction order must be >= 1");
            out.type =
                contract_type(out.children[0].type, out.children[1].type, out.n, env.types);
            return out;
        }
        if (e.text == "trace") {
            out.op = TypedExpr::Op::Trace;
            out.children.push_back(child(0));
            auto word = factor_word(out.children[0].type);
            if (word.size() != 2)
                throw TypeError(TypeErrorKind::Valence, e.span,
                                "trace needs a two-factor operand, got " +
                                    std::to_string(word.size()) + " factors");
            // Contracting the two factors reuses the mismatch classifier and
            // yields the Line bundle on success.
            out.type = contract_type(word[0], word[1], 1, env.types);
            return out;
        }
        if (e.text == "permute") {
            out.op = TypedExpr::Op::Permute;
            out.children.push_back(child(0));
            const Expr& perm = arg_at(e, 1, "a permutation");
            if (perm.kind != Expr::Kind::Perm)
                throw TypeError(TypeErrorKind::Structural, perm.span,
                                "permute: second argument must be a permutation literal");
            auto word = factor_word(out.children[0].type);
            out.sigma =
                one_line_from_cycles(perm.cycles, static_cast<int>(word.size()), perm.span);
            std::vector<BundleType::Ptr> permuted(word.size());
            for (std::size_t i = 0; i < word.size(); ++i) permuted[out.sigma[i]] = word[i];
            out.type = regroup(permuted, env.types, out.children[0].type->base_space().at(0));
            return out;
        }
        if (e.text == "otimes") {
            out.op = TypedExpr::Op::Otimes;
            out.children.push_back(child(0));
            out.children.push_back(child(1));
            auto word = factor_word(out.children[0].type);
            auto rw = factor_word(out.children[1].type);
            word.insert(word.end(), rw.begin(), rw.end());
            out.type = regroup(word, env.types, out.children[0].type->base_space().at(0));
            return out;
        }
        if (e.text == "boxtimes") {
            out.op = TypedExpr::Op::Boxtimes;
            out.children.push_back(child(0));
            out.children.push_back(child(1));
            auto wa = factor_word(out.children[0].type);
            auto wb = factor_word(out.children[1].type);
            if (wa.size() != 2 || wb.size() != 2)
                throw TypeError(TypeErrorKind::Valence, e.span,
                                "boxtimes needs two-factor operands without a declared split");
            out.type = regroup({wa[0], wb[0], wa[1], wb[1]}, env.types,
                                out.children[0].type->base_space().at(0));
            return out;
        }
        if (e.text == "pullback") {
            out.op = TypedExpr::Op::Pullback;
            out.symbol = ident_arg(e, 0, "a map");
            const MapId& f = env.types.map(out.symbol);
            out.children.push_back(child(1));
            out.type = normalize(BundleType::pullback(f, out.children[0].type), env.types);
            return out;
        }
        if (e.text == "cov") {
            out.op = TypedExpr::Op::Cov;
            out.children.push_back(child(0));
            const auto base = out.children[0].type->base_space();
            if (base.size() != 1)
                throw TypeError(TypeErrorKind::Base, e.span,
                                "cov: operand lives over a product base");
            auto word = factor_word(out.children[0].type);
            word.push_back(BundleType::cotangent(base[0]));
            out.type = regroup(word, env.types, base[0]);
            return out;
        }
        if (e.text == "dmap") {
            out.op = TypedExpr::Op::Dmap;
            out.symbol = ident_arg(e, 0, "a map");
            const MapId& f = env.types.map(out.symbol);
            out.type = normalize(
                BundleType::tensor_shared(
                    BundleType::pullback(f, BundleType::tangent(f.codomain)),
                    BundleType::cotangent(f.domain)),
                env.types);
            return out;
        }
        if (e.text == "dual") {
            out.op = TypedExpr::Op::Dual;
            out.children.push_back(child(0));
            auto word = factor_word(out.children[0].type);
            if (word.size() != 2)
                throw TypeError(TypeErrorKind::Valence, e.span,
                                "dual (adjoint) needs a two-factor operand");
            out.type = regroup({word[1], word[0]}, env.types,
                                out.children[0].type->base_space().at(0));
            return out;
        }
    } catch (const TypeCheckError& err) {
        throw wrap(err, e.span);
    }
    throw TypeError(TypeErrorKind::UnknownSymbol, e.span, "unknown operator '" + e.text + "'");
}

// --- Evaluation -------------------------------------------------------------

namespace {

struct FactorInfo {
    std::string space;
    int dim = 0;
    Variance variance = Variance::Vector;
    bool is_line = false;
};

FactorInfo factor_info(const BundleType::Ptr& f, const EvalContext& ctx, const PointMap& points) {
    // Walk pullback chains, applying maps outermost-first to find the fiber's
    // base point.
    std::vector<const MapId*> chain;
    BundleType::Ptr leaf = f;
    while (leaf->kind == TypeNodeKind::Pullback) {
        chain.push_back(&leaf->map);
        leaf = leaf->left;
    }
    const ManifoldId base = f->base_space().at(0);
    auto pt = points.find(base.name);
    if (pt == points.end())
        throw UsageError("evaluate: no base point supplied for manifold '" + base.name + "'");
    Vec x = pt->second;
    for (const MapId* m : chain) {
        auto impl = ctx.maps.find(m->name);
        if (impl == ctx.maps.end())
            throw UsageError("evaluate: no implementation bound for map '" + m->name + "'");
        x = (*impl->second)(x);
    }
    FactorInfo info;
    if (leaf->kind == TypeNodeKind::Line) {
        info.is_line = true;
        return info;
    }
    if (leaf->kind != TypeNodeKind::Tangent && leaf->kind != TypeNodeKind::Cotangent)
        throw UsageError("evaluate: unsupported factor " + leaf->render(2));
    info.space = leaf->manifold.name + "@" + point_key(x);
    info.dim = leaf->manifold.dim;
    info.variance =
        leaf->kind == TypeNodeKind::Tangent ? Variance::Vector : Variance::Covector;
    return info;
}

} // namespace

std::vector<AxisTag> tags_of(const BundleType::Ptr& type, const EvalContext& ctx,
                             const PointMap& points) {
    std::vector<AxisTag> tags;
    for (const auto& f : factor_word(type)) {
        FactorInfo info = factor_info(f, ctx, points);
        if (info.is_line) continue;
        tags.push_back({info.space, info.dim, info.variance});
    }
    return tags;
}

void EvalContext::bind_constant(const std::string& name, std::vector<double> data) {
    auto it = env->fields.find(name);
    if (it == env->fields.end()) throw UsageError("bind_constant: unknown field '" + name + "'");
    BundleType::Ptr type = it->second;
    bindings[name] = [type, data = std::move(data)](const EvalContext& ctx,
                                                    const PointMap& points) {
        return TypedTensor(tags_of(type, ctx, points), data);
    };
}

void EvalContext::bind_field(const std::string& name, const TensorField& field) {
    auto it = env->fields.find(name);
    if (it == env->fields.end()) throw UsageError("bind_field: unknown field '" + name + "'");
    const std::string base = field.manifold()->name();
    bindings[name] = [field, base](const EvalContext&, const PointMap& points) {
        auto pt = points.find(base);
        if (pt == points.end())
            throw UsageError("evaluate: no base point supplied for manifold '" + base + "'");
        return field.eval(pt->second);
    };
}

void EvalContext::bind_metric(const std::string& name) {
    auto it = env->fields.find(name);
    if (it == env->fields.end()) throw UsageError("bind_metric: unknown metric '" + name + "'");
    const std::string base = it->second->base_space().at(0).name;
    auto mit = manifolds.find(base);
    if (mit == manifolds.end())
        throw UsageError("bind_metric: manifold '" + base + "' has no implementation");
    bind_field(name, metric_field(mit->second));
}

void EvalContext::register_manifold(const ManifoldPtr& m) { manifolds[m->name()] = m; }

void EvalContext::register_map(const std::string& name, MapPtr m) { maps[name] = std::move(m); }

namespace {

const ManifoldPtr& manifold_impl(const EvalContext& ctx, const std::string& name) {
    auto it = ctx.manifolds.find(name);
    if (it == ctx.manifolds.end())
        throw UsageError("evaluate: manifold '" + name + "' has no implementation");
    return it->second;
}

const MapPtr& map_impl(const EvalContext& ctx, const std::string& name) {
    auto it = ctx.maps.find(name);
    if (it == ctx.maps.end())
        throw UsageError("evaluate: no implementation bound for map '" + name + "'");
    return it->second;
}

// Realize a subexpression as a field or section so cov() can differentiate
// it. Factors must be leaves over one base manifold, optionally pulled back
// through one common map.
TypedTensor evaluate_cov(const TypedExpr& e, const EvalContext& ctx, const PointMap& points) {
    const TypedExpr& operand = e.children[0];
    const ManifoldId base = operand.type->base_space().at(0);
    const ManifoldPtr& m = manifold_impl(ctx, base.name);

    auto word = factor_word(operand.type);
    bool any_pullback = false;
    std::string common_map;
    std::vector<Factor> sfactors;
    std::vector<Variance> fvariances;
    for (const auto& f : word) {
        if (f->kind == TypeNodeKind::Pullback) {
            any_pullback = true;
            if (f->left->kind == TypeNodeKind::Pullback)
                throw UsageError("cov: nested pullback factors are not supported");
            if (common_map.empty()) common_map = f->map.name;
            if (common_map != f->map.name)
                throw UsageError("cov: factors pulled back through different maps");
            sfactors.push_back({FactorBase::Target,
                                f->left->kind == TypeNodeKind::Tangent ? Variance::Vector
                                                                       : Variance::Covector});
        } else if (f->kind == TypeNodeKind::Tangent || f->kind == TypeNodeKind::Cotangent) {
            const Variance v =
                f->kind == TypeNodeKind::Tangent ? Variance::Vector : Variance::Covector;
            sfactors.push_back({FactorBase::Domain, v});
            fvariances.push_back(v);
        } else {
            throw UsageError("cov: unsupported factor " + f->render(2));
        }
    }

    auto pt = points.find(base.name);
    if (pt == points.end())
        throw UsageError("evaluate: no base point supplied for manifold '" + base.name + "'");

    // Raw components of the operand as a function of the base point.
    auto raw = [&ctx, &operand, points, base](const Vec& x) {
        PointMap moved = points;
        moved[base.name] = x;
        return evaluate(operand, ctx, moved).data();
    };

    std::vector<double> data;
    if (!any_pullback) {
        TensorField tf(m, fvariances, raw);
        data = covariant_derivative(tf).raw(pt->second);
    } else {
        SectionAlongMap sec(map_impl(ctx, common_map), sfactors, raw);
        data = pullback_covariant_derivative(sec).raw(pt->second);
    }
    return TypedTensor(tags_of(e.type, ctx, points), std::move(data));
}

} // namespace

TypedTensor evaluate(const TypedExpr& e, const EvalContext& ctx, const PointMap& points) {
    switch (e.op) {
        case TypedExpr::Op::Var: {
            auto it = ctx.bindings.find(e.symbol);
            if (it == ctx.bindings.end())
                throw UsageError("evaluate: no binding for '" + e.symbol + "'");
            TypedTensor t = it->second(ctx, points);
            const std::vector<AxisTag> expected = tags_of(e.type, ctx, points);
            if (t.tags() != expected) {
                std::string want = "(";
                for (const auto& tag : expected) want += tag.to_string() + " ";
                throw TagMismatch("binding '" + e.symbol + "' produced " + t.shape_string() +
                                  ", declared type wants " + want + ")");
            }
            return t;
        }
        case TypedExpr::Op::Pair:
            return contract(evaluate(e.children[0], ctx, points),
                            evaluate(e.children[1], ctx, points), e.n);
        case TypedExpr::Op::Trace:
            return TypedTensor::scalar(trace(evaluate(e.children[0], ctx, points)));
        case TypedExpr::Op::Permute:
            return permute(evaluate(e.children[0], ctx, points), e.sigma);
        case TypedExpr::Op::Otimes:
            return tensor_product(evaluate(e.children[0], ctx, points),
                                  evaluate(e.children[1], ctx, points));
        case TypedExpr::Op::Boxtimes:
            return parallel_product(evaluate(e.children[0], ctx, points),
                                    evaluate(e.children[1], ctx, points));
        case TypedExpr::Op::Dual:
            return adjoint(evaluate(e.children[0], ctx, points));
        case TypedExpr::Op::Pullback: {
            // ρ is the identity on fiber data: evaluate the operand with the
            // moved base point; the tags already coincide.
            const MapPtr& f = map_impl(ctx, e.symbol);
            const std::string dom = f->domain()->name();
            auto pt = points.find(dom);
            if (pt == points.end())
                throw UsageError("evaluate: no base point supplied for manifold '" + dom + "'");
            PointMap moved = points;
            moved[f->codomain()->name()] = (*f)(pt->second);
            return evaluate(e.children[0], ctx, moved);
        }
        case TypedExpr::Op::Dmap: {
            const MapPtr& f = map_impl(ctx, e.symbol);
            const std::string dom = f->domain()->name();
            auto pt = points.find(dom);
            if (pt == points.end())
                throw UsageError("evaluate: no base point supplied for manifold '" + dom + "'");
            return tangent_map(f).eval(pt->second);
        }
        case TypedExpr::Op::Cov:
            return evaluate_cov(e, ctx, points);
    }
    throw UsageError("evaluate: unhandled operator");
}

FileCheckResult check_source(const std::string& source, int telescope) {
    FileCheckResult out;
    std::vector<Expr> forms;
    try {
        forms = parse(source);
    } catch (const ParseError& pe) {
        out.diagnostics.push_back({pe.span, "ParseError", pe.what()});
        return out;
    }
    out.forms = static_cast<int>(forms.size());
    for (const Expr& form : forms) {
        try {
            if (is_declaration(form)) {
                apply_declaration(form, out.env);
            } else {
                ++out.expressions;
                typecheck(form, out.env);
            }
        } catch (const TypeError& te) {
            out.diagnostics.push_back(
                {te.span, type_error_kind_name(te.kind), te.render(telescope)});
        }
    }
    return out;
}

} // namespace bundletc::dsl
