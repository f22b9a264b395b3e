#include "bundletc/bundle_types.hpp"

#include <algorithm>
#include <sstream>

namespace bundletc {

const ManifoldId& TypeEnv::declare_manifold(const std::string& name, int dim) {
    if (dim < 1) throw TypeCheckError(TypeErrorKind::Structural, "manifold dim must be >= 1");
    if (find_manifold(name) || find_map(name))
        throw TypeCheckError(TypeErrorKind::Structural, "symbol '" + name + "' already declared");
    manifolds_.push_back({name, dim});
    return manifolds_.back();
}

const MapId& TypeEnv::declare_map(const std::string& name, const std::string& domain,
                                  const std::string& codomain, bool identity) {
    if (find_manifold(name) || find_map(name))
        throw TypeCheckError(TypeErrorKind::Structural, "symbol '" + name + "' already declared");
    const ManifoldId& d = manifold(domain);
    const ManifoldId& c = manifold(codomain);
    if (identity && !(d == c))
        throw TypeCheckError(TypeErrorKind::Structural,
                             "identity map '" + name + "' needs equal domain and codomain");
    maps_.push_back({name, d, c, identity});
    return maps_.back();
}

void TypeEnv::declare_composition(const std::string& name, const std::string& outer,
                                  const std::string& inner) {
    const MapId& f = map(outer);
    const MapId& g = map(inner);
    if (!(g.codomain == f.domain))
        throw TypeCheckError(TypeErrorKind::Base,
                             "composition " + outer + "∘" + inner + ": codomain of " + inner +
                                 " is " + g.codomain.name + ", domain of " + outer + " is " +
                                 f.domain.name);
    const MapId* composite = find_map(name);
    if (!composite) {
        declare_map(name, g.domain.name, f.codomain.name);
        composite = find_map(name);
    }
    if (!(composite->domain == g.domain) || !(composite->codomain == f.codomain))
        throw TypeCheckError(TypeErrorKind::Base,
                             "composite '" + name + "' has mismatched domain/codomain");
    compositions_.push_back({outer, inner, name});
}

const ManifoldId* TypeEnv::find_manifold(const std::string& name) const {
    for (const auto& m : manifolds_)
        if (m.name == name) return &m;
    return nullptr;
}

const MapId* TypeEnv::find_map(const std::string& name) const {
    for (const auto& m : maps_)
        if (m.name == name) return &m;
    return nullptr;
}

const MapId* TypeEnv::find_composition(const std::string& outer, const std::string& inner) const {
    for (const auto& c : compositions_)
        if (c.outer == outer && c.inner == inner) return find_map(c.composite);
    return nullptr;
}

const ManifoldId& TypeEnv::manifold(const std::string& name) const {
    const ManifoldId* m = find_manifold(name);
    if (!m) throw TypeCheckError(TypeErrorKind::UnknownSymbol, "manifold '" + name + "'");
    return *m;
}

const MapId& TypeEnv::map(const std::string& name) const {
    const MapId* m = find_map(name);
    if (!m) throw TypeCheckError(TypeErrorKind::UnknownSymbol, "map '" + name + "'");
    return *m;
}

namespace {

std::shared_ptr<BundleType> make_node() { return std::make_shared<BundleType>(); }

std::vector<ManifoldId> concat(std::vector<ManifoldId> a, const std::vector<ManifoldId>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::string base_string(const std::vector<ManifoldId>& b) {
    std::string s;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (i) s += "×";
        s += b[i].name;
    }
    return s;
}

} // namespace

BundleType::Ptr BundleType::tangent(const ManifoldId& m) {
    auto n = make_node();
    n->kind = TypeNodeKind::Tangent;
    n->manifold = m;
    return n;
}

BundleType::Ptr BundleType::cotangent(const ManifoldId& m) {
    auto n = make_node();
    n->kind = TypeNodeKind::Cotangent;
    n->manifold = m;
    return n;
}

BundleType::Ptr BundleType::line(const ManifoldId& m) {
    auto n = make_node();
    n->kind = TypeNodeKind::Line;
    n->manifold = m;
    return n;
}

BundleType::Ptr BundleType::pullback(const MapId& f, Ptr base) {
    auto bases = base->base_space();
    if (bases.size() != 1)
        throw TypeCheckError(TypeErrorKind::Base,
                             "pullback by '" + f.name + "' of a bundle over product base " +
                                 base_string(bases));
    if (!(bases[0] == f.codomain))
        throw TypeCheckError(TypeErrorKind::Base,
                             "pullback by '" + f.name + "': codomain " + f.codomain.name +
                                 " is not the base " + bases[0].name);
    auto n = make_node();
    n->kind = TypeNodeKind::Pullback;
    n->map = f;
    n->left = std::move(base);
    return n;
}

static BundleType::Ptr make_pair(TypeNodeKind kind, BundleType::Ptr l, BundleType::Ptr r) {
    const bool shared =
        kind == TypeNodeKind::TensorShared || kind == TypeNodeKind::SumShared;
    auto bl = l->base_space();
    auto br = r->base_space();
    if (shared) {
        if (bl.size() != 1 || br.size() != 1 || !(bl[0] == br[0]))
            throw TypeCheckError(TypeErrorKind::Base,
                                 "shared-base constructor over unequal bases " +
                                     base_string(bl) + " vs " + base_string(br));
    }
    auto n = std::make_shared<BundleType>();
    n->kind = kind;
    n->left = std::move(l);
    n->right = std::move(r);
    return n;
}

BundleType::Ptr BundleType::tensor_shared(Ptr l, Ptr r) {
    return make_pair(TypeNodeKind::TensorShared, std::move(l), std::move(r));
}
BundleType::Ptr BundleType::tensor_full(Ptr l, Ptr r) {
    return make_pair(TypeNodeKind::TensorFull, std::move(l), std::move(r));
}
BundleType::Ptr BundleType::sum_shared(Ptr l, Ptr r) {
    return make_pair(TypeNodeKind::SumShared, std::move(l), std::move(r));
}
BundleType::Ptr BundleType::sum_full(Ptr l, Ptr r) {
    return make_pair(TypeNodeKind::SumFull, std::move(l), std::move(r));
}

BundleType::Ptr BundleType::dual(Ptr f) {
    auto n = make_node();
    n->kind = TypeNodeKind::Dual;
    n->left = std::move(f);
    return n;
}

int BundleType::rank() const {
    switch (kind) {
        case TypeNodeKind::Tangent:
        case TypeNodeKind::Cotangent: return manifold.dim;
        case TypeNodeKind::Line: return 1;
        case TypeNodeKind::Pullback:
        case TypeNodeKind::Dual: return left->rank();
        case TypeNodeKind::TensorShared:
        case TypeNodeKind::TensorFull: return left->rank() * right->rank();
        case TypeNodeKind::SumShared:
        case TypeNodeKind::SumFull: return left->rank() + right->rank();
    }
    return 0;
}

std::vector<ManifoldId> BundleType::base_space() const {
    switch (kind) {
        case TypeNodeKind::Tangent:
        case TypeNodeKind::Cotangent:
        case TypeNodeKind::Line: return {manifold};
        case TypeNodeKind::Pullback: return {map.domain};
        case TypeNodeKind::Dual: return left->base_space();
        case TypeNodeKind::TensorShared:
        case TypeNodeKind::SumShared: return left->base_space();
        case TypeNodeKind::TensorFull:
        case TypeNodeKind::SumFull: return concat(left->base_space(), right->base_space());
    }
    return {};
}

std::string BundleType::render(int telescope) const {
    std::ostringstream os;
    switch (kind) {
        case TypeNodeKind::Tangent:
            os << "T" << (telescope >= 1 ? "(" + manifold.name + ")" : "");
            break;
        case TypeNodeKind::Cotangent:
            os << "T*" << (telescope >= 1 ? "(" + manifold.name + ")" : "");
            break;
        case TypeNodeKind::Line:
            os << "Line" << (telescope >= 1 ? "(" + manifold.name + ")" : "");
            break;
        case TypeNodeKind::Pullback:
            if (telescope >= 1) os << map.name << "*";
            os << left->render(telescope);
            break;
        case TypeNodeKind::Dual:
            os << "Dual(" << left->render(telescope) << ")";
            break;
        case TypeNodeKind::TensorShared:
        case TypeNodeKind::TensorFull:
        case TypeNodeKind::SumShared:
        case TypeNodeKind::SumFull: {
            const bool tensor =
                kind == TypeNodeKind::TensorShared || kind == TypeNodeKind::TensorFull;
            os << "(" << left->render(telescope) << (tensor ? " ⊗" : " ⊕");
            if (telescope >= 2) os << "_" << base_string(base_space());
            os << " " << right->render(telescope) << ")";
            break;
        }
    }
    return os.str();
}

bool equal(const BundleType::Ptr& a, const BundleType::Ptr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case TypeNodeKind::Tangent:
        case TypeNodeKind::Cotangent:
        case TypeNodeKind::Line: return a->manifold == b->manifold;
        case TypeNodeKind::Pullback:
            return a->map.name == b->map.name && equal(a->left, b->left);
        case TypeNodeKind::Dual: return equal(a->left, b->left);
        default: return equal(a->left, b->left) && equal(a->right, b->right);
    }
}

namespace {

void note(NormalizeTrace* trace, const std::string& rule) {
    if (trace) trace->rewrites.push_back(rule);
}

BundleType::Ptr norm(const BundleType::Ptr& t, const TypeEnv& env, NormalizeTrace* trace);

BundleType::Ptr norm_dual(const BundleType::Ptr& child, const TypeEnv& env,
                          NormalizeTrace* trace) {
    switch (child->kind) {
        case TypeNodeKind::Dual:
            note(trace, "Dual(Dual(F)) -> F");
            return child->left;
        case TypeNodeKind::Tangent:
            note(trace, "Dual(Tangent) -> Cotangent");
            return BundleType::cotangent(child->manifold);
        case TypeNodeKind::Cotangent:
            note(trace, "Dual(Cotangent) -> Tangent");
            return BundleType::tangent(child->manifold);
        case TypeNodeKind::Line:
            note(trace, "Dual(Line) -> Line");
            return child;
        case TypeNodeKind::Pullback:
            note(trace, "Dual commutes with pullback");
            return norm(BundleType::pullback(child->map, BundleType::dual(child->left)), env,
                        trace);
        case TypeNodeKind::TensorShared:
            note(trace, "Dual distributes over ⊗");
            return BundleType::tensor_shared(norm_dual(child->left, env, trace),
                                             norm_dual(child->right, env, trace));
        case TypeNodeKind::TensorFull:
            note(trace, "Dual distributes over ⊗");
            return BundleType::tensor_full(norm_dual(child->left, env, trace),
                                           norm_dual(child->right, env, trace));
        case TypeNodeKind::SumShared:
            note(trace, "Dual distributes over ⊕");
            return BundleType::sum_shared(norm_dual(child->left, env, trace),
                                          norm_dual(child->right, env, trace));
        case TypeNodeKind::SumFull:
            note(trace, "Dual distributes over ⊕");
            return BundleType::sum_full(norm_dual(child->left, env, trace),
                                        norm_dual(child->right, env, trace));
    }
    return child;
}

BundleType::Ptr norm_pullback(const MapId& f, const BundleType::Ptr& child, const TypeEnv& env,
                              NormalizeTrace* trace) {
    if (f.identity) {
        note(trace, "Id*(F) -> F");
        return child;
    }
    switch (child->kind) {
        case TypeNodeKind::Pullback: {
            // ψ*(φ*F) with ψ = f, φ = child->map.
            if (const MapId* composite = env.find_composition(child->map.name, f.name)) {
                note(trace, "ψ*(φ*F) -> (φ∘ψ)*F");
                return norm_pullback(*composite, child->left, env, trace);
            }
            break;
        }
        case TypeNodeKind::TensorShared:
            note(trace, "f*(F ⊗ G) -> f*F ⊗ f*G");
            return BundleType::tensor_shared(norm_pullback(f, child->left, env, trace),
                                             norm_pullback(f, child->right, env, trace));
        case TypeNodeKind::Line:
            note(trace, "f*(Line) -> Line");
            return BundleType::line(f.domain);
        default: break;
    }
    return BundleType::pullback(f, child);
}

BundleType::Ptr norm(const BundleType::Ptr& t, const TypeEnv& env, NormalizeTrace* trace) {
    switch (t->kind) {
        case TypeNodeKind::Tangent:
        case TypeNodeKind::Cotangent:
        case TypeNodeKind::Line: return t;
        case TypeNodeKind::Dual: return norm_dual(norm(t->left, env, trace), env, trace);
        case TypeNodeKind::Pullback:
            return norm_pullback(t->map, norm(t->left, env, trace), env, trace);
        case TypeNodeKind::TensorShared:
        case TypeNodeKind::TensorFull: {
            auto l = norm(t->left, env, trace);
            auto r = norm(t->right, env, trace);
            // Unit law of the trivial line bundle: ℝ ⊗ F ≅ F.
            if (l->kind == TypeNodeKind::Line) {
                note(trace, "Line ⊗ F -> F");
                return r;
            }
            if (r->kind == TypeNodeKind::Line) {
                note(trace, "F ⊗ Line -> F");
                return l;
            }
            return t->kind == TypeNodeKind::TensorShared ? BundleType::tensor_shared(l, r)
                                                         : BundleType::tensor_full(l, r);
        }
        case TypeNodeKind::SumShared:
            return BundleType::sum_shared(norm(t->left, env, trace), norm(t->right, env, trace));
        case TypeNodeKind::SumFull:
            return BundleType::sum_full(norm(t->left, env, trace), norm(t->right, env, trace));
    }
    return t;
}

void validate_walk(const BundleType::Ptr& t, const std::string& path) {
    if (!t) throw TypeCheckError(TypeErrorKind::Structural, "null node", path);
    switch (t->kind) {
        case TypeNodeKind::Tangent:
        case TypeNodeKind::Cotangent:
        case TypeNodeKind::Line:
            if (t->manifold.dim < 1)
                throw TypeCheckError(TypeErrorKind::Structural, "manifold dim < 1", path);
            return;
        case TypeNodeKind::Pullback: {
            validate_walk(t->left, path + "/Pullback");
            auto b = t->left->base_space();
            if (b.size() != 1 || !(b[0] == t->map.codomain))
                throw TypeCheckError(TypeErrorKind::Base, "pullback codomain/base mismatch",
                                     path + "/Pullback");
            return;
        }
        case TypeNodeKind::Dual: validate_walk(t->left, path + "/Dual"); return;
        case TypeNodeKind::TensorShared:
        case TypeNodeKind::SumShared: {
            const char* name = t->kind == TypeNodeKind::TensorShared ? "/TensorShared" : "/SumShared";
            validate_walk(t->left, path + name + "[0]");
            validate_walk(t->right, path + name + "[1]");
            auto bl = t->left->base_space();
            auto br = t->right->base_space();
            if (bl.size() != 1 || br.size() != 1 || !(bl[0] == br[0]))
                throw TypeCheckError(TypeErrorKind::Base, "shared constructor over unequal bases",
                                     path + name);
            return;
        }
        case TypeNodeKind::TensorFull:
        case TypeNodeKind::SumFull: {
            const char* name = t->kind == TypeNodeKind::TensorFull ? "/TensorFull" : "/SumFull";
            validate_walk(t->left, path + name + "[0]");
            validate_walk(t->right, path + name + "[1]");
            return;
        }
    }
}

} // namespace

BundleType::Ptr normalize(const BundleType::Ptr& t, const TypeEnv& env, NormalizeTrace* trace) {
    return norm(t, env, trace);
}

void validate(const BundleType::Ptr& t) { validate_walk(t, ""); }

std::vector<BundleType::Ptr> factor_word(const BundleType::Ptr& t) {
    std::vector<BundleType::Ptr> out;
    if (t->kind == TypeNodeKind::TensorShared || t->kind == TypeNodeKind::TensorFull) {
        auto l = factor_word(t->left);
        auto r = factor_word(t->right);
        out.insert(out.end(), l.begin(), l.end());
        out.insert(out.end(), r.begin(), r.end());
    } else if (t->kind != TypeNodeKind::Line) {
        // Scalar factors contribute no contraction slots.
        out.push_back(t);
    }
    return out;
}

namespace {

BundleType::Ptr strip_pullbacks(const BundleType::Ptr& t) {
    BundleType::Ptr c = t;
    while (c->kind == TypeNodeKind::Pullback) c = c->left;
    return c;
}

bool leaf_kind(const BundleType::Ptr& t) {
    return t->kind == TypeNodeKind::Tangent || t->kind == TypeNodeKind::Cotangent ||
           t->kind == TypeNodeKind::Line;
}

// Classify why `found` fails to match `expected` (both normalized).
TypeCheckError classify_mismatch(const BundleType::Ptr& expected, const BundleType::Ptr& found,
                                 int slot) {
    const std::string msg = "factor mismatch at contraction slot " + std::to_string(slot);
    auto ue = strip_pullbacks(expected);
    auto uf = strip_pullbacks(found);
    TypeErrorKind kind = TypeErrorKind::Space;
    if (leaf_kind(ue) && leaf_kind(uf) && ue->manifold == uf->manifold)
        kind = ue->kind == uf->kind ? TypeErrorKind::Base   // same fiber space, bases differ
                                    : TypeErrorKind::Valence; // right space, wrong variance
    TypeCheckError err(kind, msg);
    for (int lvl = 0; lvl <= 2; ++lvl) {
        err.expected_levels.push_back(expected->render(lvl));
        err.found_levels.push_back(found->render(lvl));
    }
    return err;
}

// Regroup a factor word: maximal runs over one base become shared tensor
// chains; distinct runs are joined with the full tensor product.
BundleType::Ptr group_word(const std::vector<BundleType::Ptr>& word) {
    std::vector<BundleType::Ptr> runs;
    std::size_t i = 0;
    while (i < word.size()) {
        auto base = word[i]->base_space();
        BundleType::Ptr run = word[i];
        std::size_t j = i + 1;
        while (j < word.size() && base.size() == 1 && word[j]->base_space().size() == 1 &&
               word[j]->base_space()[0] == base[0]) {
            run = BundleType::tensor_shared(run, word[j]);
            ++j;
        }
        runs.push_back(run);
        i = j;
    }
    BundleType::Ptr out = runs.back();
    for (int k = static_cast<int>(runs.size()) - 2; k >= 0; --k)
        out = BundleType::tensor_full(runs[k], out);
    return out;
}

} // namespace

BundleType::Ptr contract_type(const BundleType::Ptr& left, const BundleType::Ptr& right, int n,
                              const TypeEnv& env) {
    if (n < 0) throw UsageError("contract_type: negative contraction count");
    auto l = normalize(left, env);
    auto r = normalize(right, env);
    auto lw = factor_word(l);
    auto rw = factor_word(r);
    const int L = static_cast<int>(lw.size());
    const int R = static_cast<int>(rw.size());
    if (n > L || n > R)
        throw TypeCheckError(TypeErrorKind::Valence,
                             "contraction over " + std::to_string(n) + " factors, operands have " +
                                 std::to_string(L) + " and " + std::to_string(R));

    std::vector<ManifoldId> pair_bases;
    for (int k = 0; k < n; ++k) {
        auto expected = normalize(BundleType::dual(lw[L - n + k]), env);
        const auto& found = rw[k];
        if (!equal(expected, found)) throw classify_mismatch(expected, found, k);
        auto b = found->base_space();
        if (b.size() == 1 &&
            std::find(pair_bases.begin(), pair_bases.end(), b[0]) == pair_bases.end())
            pair_bases.push_back(b[0]);
    }

    std::vector<BundleType::Ptr> word(lw.begin(), lw.end() - n);
    word.insert(word.end(), rw.begin() + n, rw.end());
    if (word.empty()) {
        // Scalar result. Full contractions over separate bases collapse to
        // the trivial line bundle of the first pairing base; the fiber is ℝ
        // either way.
        if (pair_bases.empty())
            throw TypeCheckError(TypeErrorKind::Base, "scalar result with no pairing base");
        return BundleType::line(pair_bases[0]);
    }
    return group_word(word);
}

} // namespace bundletc
