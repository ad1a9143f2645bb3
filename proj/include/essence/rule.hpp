#pragma once

#include "essence/kb.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace essence {

/// An argument slot of a rule: a variable (by id) or a constant.
struct Term {
    enum class Kind : std::uint8_t { Variable, Constant };

    Kind kind = Kind::Variable;
    std::uint32_t id = 0;

    static Term var(std::uint32_t v) { return {Kind::Variable, v}; }
    static Term constant(ConstantId c) { return {Kind::Constant, c}; }
    bool is_var() const { return kind == Kind::Variable; }
    bool is_const() const { return kind == Kind::Constant; }

    friend bool operator==(const Term&, const Term&) = default;
    friend auto operator<=>(const Term&, const Term&) = default;
};

struct Atom {
    RelationId relation = 0;
    std::vector<Term> args;

    friend bool operator==(const Atom&, const Atom&) = default;
    friend auto operator<=>(const Atom&, const Atom&) = default;
};

/// Argument position: atom index (0 = head) and 0-based argument index.
struct ArgLocation {
    std::uint32_t atom = 0;
    std::uint32_t arg = 0;

    friend bool operator==(const ArgLocation&, const ArgLocation&) = default;
    friend auto operator<=>(const ArgLocation&, const ArgLocation&) = default;
};

/// Positions bound to one variable, or a single position bound to a constant.
struct EquivalenceClass {
    std::vector<ArgLocation> members;
    std::optional<ConstantId> constant;
};

/**
 * A Horn rule `head :- body`. Variables are renumbered on construction in
 * order of first occurrence (head first, then body left to right), so two
 * rules that differ only in variable names compare equal.
 */
class Rule {
public:
    Rule() = default;

    Rule(Atom head, std::vector<Atom> body) {
        atoms_.reserve(body.size() + 1);
        atoms_.push_back(std::move(head));
        for (Atom& a : body) {
            atoms_.push_back(std::move(a));
        }
        normalize();
    }

    const Atom& head() const { return atoms_.front(); }
    std::span<const Atom> body() const { return std::span<const Atom>(atoms_).subspan(1); }
    std::span<const Atom> atoms() const { return atoms_; }
    std::size_t variable_count() const { return variable_count_; }

    const Term& at(ArgLocation loc) const { return atoms_[loc.atom].args[loc.arg]; }

    /// Number of argument positions bound to each variable id.
    std::vector<std::uint32_t> occurrences() const {
        std::vector<std::uint32_t> occ(variable_count_, 0);
        for (const Atom& a : atoms_) {
            for (const Term& t : a.args) {
                if (t.is_var()) {
                    ++occ[t.id];
                }
            }
        }
        return occ;
    }

    /// Sum over classes of (size - 1); a constant counts as the second element of its class.
    std::size_t length() const {
        std::size_t positions = 0;
        for (const Atom& a : atoms_) {
            positions += a.args.size();
        }
        return positions - variable_count_;
    }

    std::vector<EquivalenceClass> classes() const {
        std::vector<EquivalenceClass> out(variable_count_);
        for (std::uint32_t i = 0; i < atoms_.size(); ++i) {
            for (std::uint32_t k = 0; k < atoms_[i].args.size(); ++k) {
                const Term& t = atoms_[i].args[k];
                if (t.is_var()) {
                    out[t.id].members.push_back({i, k});
                } else {
                    out.push_back(EquivalenceClass{{{i, k}}, t.id});
                }
            }
        }
        return out;
    }

    friend bool operator==(const Rule& a, const Rule& b) { return a.atoms_ == b.atoms_; }

private:
    void normalize() {
        std::unordered_map<std::uint32_t, std::uint32_t> remap;
        for (Atom& a : atoms_) {
            for (Term& t : a.args) {
                if (t.is_var()) {
                    auto [it, fresh] = remap.try_emplace(t.id, static_cast<std::uint32_t>(remap.size()));
                    t.id = it->second;
                }
            }
        }
        variable_count_ = remap.size();
    }

    std::vector<Atom> atoms_;
    std::size_t variable_count_ = 0;
};

/// Cost charged for a rule in |H|: its length, but at least 1.
inline std::size_t rule_cost(const Rule& r) { return std::max<std::size_t>(r.length(), 1); }

/// `rel(X0, ..., Xk) :- .` with every argument a distinct unlimited variable.
inline Rule new_head_rule(const Vocabulary& vocab, RelationId rel) {
    Atom head{rel, {}};
    for (std::uint32_t k = 0; k < vocab.relation(rel).arity; ++k) {
        head.args.push_back(Term::var(k));
    }
    return Rule(std::move(head), {});
}

// ---------------------------------------------------------------------------
// Fingerprint

struct Fingerprint {
    std::string canonical;

    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
    friend auto operator<=>(const Fingerprint&, const Fingerprint&) = default;
};

struct FingerprintHash {
    std::size_t operator()(const Fingerprint& f) const noexcept { return std::hash<std::string>{}(f.canonical); }
};

using FingerprintSet = std::unordered_set<Fingerprint, FingerprintHash>;

namespace detail {

/// Encodes the classes of `rule` with body atoms labelled by `tags`
/// ((relation name, occurrence index) per body atom).
inline std::string encode_classes(const Rule& rule, const Vocabulary& vocab, const std::vector<std::uint32_t>& tags) {
    std::vector<std::string> classes;
    for (const EquivalenceClass& cls : rule.classes()) {
        std::vector<std::string> members;
        members.reserve(cls.members.size());
        for (const ArgLocation& loc : cls.members) {
            if (loc.atom == 0) {
                members.push_back("h[" + std::to_string(loc.arg) + "]");
            } else {
                const Atom& a = rule.atoms()[loc.atom];
                members.push_back("b:" + vocab.relation(a.relation).name + "#" + std::to_string(tags[loc.atom - 1]) +
                                  "[" + std::to_string(loc.arg) + "]");
            }
        }
        std::sort(members.begin(), members.end());
        std::string enc = "{";
        for (const std::string& m : members) {
            enc += m;
            enc += ',';
        }
        if (cls.constant) {
            enc += "=" + quote_constant(vocab.constant(*cls.constant));
        }
        enc += '}';
        classes.push_back(std::move(enc));
    }
    std::sort(classes.begin(), classes.end());
    std::string out;
    for (const std::string& c : classes) {
        out += c;
    }
    return out;
}

}  // namespace detail

/**
 * Canonical identity of a rule: the sorted set of its equivalence classes,
 * each encoded as its member positions labelled by relation name and argument
 * index, head positions flagged. Body atoms sharing a relation are told apart
 * by an occurrence tag; the minimal encoding over all tag assignments is used,
 * which makes the result independent of body order and variable names.
 */
inline Fingerprint fingerprint(const Rule& rule, const Vocabulary& vocab) {
    auto body = rule.body();
    std::map<std::string, std::vector<std::uint32_t>> groups;  // relation name -> body indices
    for (std::uint32_t i = 0; i < body.size(); ++i) {
        groups[vocab.relation(body[i].relation).name].push_back(i);
    }
    std::vector<std::vector<std::uint32_t>*> perms;
    for (auto& [name, idx] : groups) {
        perms.push_back(&idx);
    }

    std::vector<std::uint32_t> tags(body.size(), 0);
    std::string best;
    bool have = false;
    // Odometer over the permutations of every duplicate group.
    auto visit = [&](auto&& self, std::size_t g) -> void {
        if (g == perms.size()) {
            std::string enc = detail::encode_classes(rule, vocab, tags);
            if (!have || enc < best) {
                best = std::move(enc);
                have = true;
            }
            return;
        }
        std::vector<std::uint32_t> order(perms[g]->size());
        std::iota(order.begin(), order.end(), 0u);
        do {
            for (std::size_t k = 0; k < order.size(); ++k) {
                tags[(*perms[g])[k]] = order[k];
            }
            self(self, g + 1);
        } while (std::next_permutation(order.begin(), order.end()));
    };
    visit(visit, 0);
    return Fingerprint{vocab.relation(rule.head().relation).name + ":-" + best};
}

// ---------------------------------------------------------------------------
// Validity (membership in the pruned rule space)

/// True if some body atom repeats the head position for position.
inline bool is_trivial(const Rule& rule) {
    const Atom& head = rule.head();
    for (const Atom& a : rule.body()) {
        if (a == head) {
            return true;
        }
    }
    return false;
}

/**
 * True if some body atom has no linked path to the head, where two atoms are
 * linked when they share a limited variable.
 */
inline bool has_independent_fragment(const Rule& rule) {
    auto atoms = rule.atoms();
    if (atoms.size() <= 1) {
        return false;
    }
    std::vector<std::vector<std::uint32_t>> atoms_of_var(rule.variable_count());
    for (std::uint32_t i = 0; i < atoms.size(); ++i) {
        for (const Term& t : atoms[i].args) {
            if (t.is_var() && (atoms_of_var[t.id].empty() || atoms_of_var[t.id].back() != i)) {
                atoms_of_var[t.id].push_back(i);
            }
        }
    }
    std::vector<bool> reached(atoms.size(), false);
    std::vector<std::uint32_t> stack{0};
    reached[0] = true;
    while (!stack.empty()) {
        std::uint32_t i = stack.back();
        stack.pop_back();
        for (const Term& t : atoms[i].args) {
            if (!t.is_var()) {
                continue;
            }
            for (std::uint32_t j : atoms_of_var[t.id]) {
                if (!reached[j]) {
                    reached[j] = true;
                    stack.push_back(j);
                }
            }
        }
    }
    return std::find(reached.begin(), reached.end(), false) != reached.end();
}

inline bool in_search_space(const Rule& rule) { return !is_trivial(rule) && !has_independent_fragment(rule); }

// ---------------------------------------------------------------------------
// Extension operators

struct ExtensionContext {
    const Vocabulary* vocab = nullptr;
    /// Candidate constants per (relation, argument); null disables constant binding.
    const ColumnConstants* constants = nullptr;
};

/**
 * All rules obtained from `rule` by exactly one extension step, restricted to
 * the pruned rule space and deduplicated by fingerprint. Each step merges one
 * unlimited position into a class, so every result is one longer:
 *   1. bind an unlimited position to an existing limited variable;
 *   2. add an atom and bind one of its arguments to an existing limited variable;
 *   3. bind two unlimited positions to a new variable;
 *   4. add an atom and bind one of its arguments together with an existing
 *      unlimited position to a new variable;
 *   5. bind an unlimited position to a constant.
 */
inline std::vector<Rule> extensions(const Rule& rule, const ExtensionContext& ctx) {
    const Vocabulary& vocab = *ctx.vocab;
    std::vector<Rule> out;
    FingerprintSet seen;
    auto emit = [&](std::vector<Atom> atoms) {
        Atom head = std::move(atoms.front());
        atoms.erase(atoms.begin());
        Rule r(std::move(head), std::move(atoms));
        if (!in_search_space(r)) {
            return;
        }
        if (seen.insert(fingerprint(r, vocab)).second) {
            out.push_back(std::move(r));
        }
    };

    auto occ = rule.occurrences();
    auto fresh = static_cast<std::uint32_t>(rule.variable_count());
    std::vector<ArgLocation> unlimited;
    std::vector<std::uint32_t> limited;
    for (std::uint32_t i = 0; i < rule.atoms().size(); ++i) {
        const Atom& a = rule.atoms()[i];
        for (std::uint32_t k = 0; k < a.args.size(); ++k) {
            if (a.args[k].is_var() && occ[a.args[k].id] == 1) {
                unlimited.push_back({i, k});
            }
        }
    }
    for (std::uint32_t v = 0; v < occ.size(); ++v) {
        if (occ[v] >= 2) {
            limited.push_back(v);
        }
    }
    const std::vector<Atom> base(rule.atoms().begin(), rule.atoms().end());
    auto new_atom = [&](RelationId rel, std::uint32_t first_var) {
        Atom a{rel, {}};
        for (std::uint32_t k = 0; k < vocab.relation(rel).arity; ++k) {
            a.args.push_back(Term::var(first_var + k));
        }
        return a;
    };

    // Bind a free position to an existing variable.
    for (const ArgLocation& loc : unlimited) {
        for (std::uint32_t v : limited) {
            auto atoms = base;
            atoms[loc.atom].args[loc.arg] = Term::var(v);
            emit(std::move(atoms));
        }
    }
    // New atom sharing one existing variable.
    for (RelationId rel = 0; rel < vocab.relation_count(); ++rel) {
        for (std::uint32_t k = 0; k < vocab.relation(rel).arity; ++k) {
            for (std::uint32_t v : limited) {
                auto atoms = base;
                Atom a = new_atom(rel, fresh);
                a.args[k] = Term::var(v);
                atoms.push_back(std::move(a));
                emit(std::move(atoms));
            }
        }
    }
    // Join two free positions with a fresh variable.
    for (std::size_t i = 0; i < unlimited.size(); ++i) {
        for (std::size_t j = i + 1; j < unlimited.size(); ++j) {
            auto atoms = base;
            atoms[unlimited[i].atom].args[unlimited[i].arg] = Term::var(fresh);
            atoms[unlimited[j].atom].args[unlimited[j].arg] = Term::var(fresh);
            emit(std::move(atoms));
        }
    }
    // New atom joined to a free position; the pair never lies entirely inside the new atom.
    for (RelationId rel = 0; rel < vocab.relation_count(); ++rel) {
        for (std::uint32_t k = 0; k < vocab.relation(rel).arity; ++k) {
            for (const ArgLocation& loc : unlimited) {
                auto atoms = base;
                Atom a = new_atom(rel, fresh + 1);
                a.args[k] = Term::var(fresh);
                atoms[loc.atom].args[loc.arg] = Term::var(fresh);
                atoms.push_back(std::move(a));
                emit(std::move(atoms));
            }
        }
    }
    // Bind a free position to a constant seen in that column.
    if (ctx.constants != nullptr) {
        for (const ArgLocation& loc : unlimited) {
            RelationId rel = base[loc.atom].relation;
            for (ConstantId c : (*ctx.constants)[rel][loc.arg]) {
                auto atoms = base;
                atoms[loc.atom].args[loc.arg] = Term::constant(c);
                emit(std::move(atoms));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Text form: `head :- atom, ..., atom .`

inline std::string format_atom(const Atom& a, const Vocabulary& vocab) {
    std::string out = quote_constant(vocab.relation(a.relation).name);
    out += '(';
    for (std::size_t k = 0; k < a.args.size(); ++k) {
        if (k > 0) {
            out += ',';
        }
        const Term& t = a.args[k];
        out += t.is_var() ? "X" + std::to_string(t.id) : quote_constant(vocab.constant(t.id));
    }
    out += ')';
    return out;
}

inline std::string format_rule(const Rule& rule, const Vocabulary& vocab) {
    std::string out = format_atom(rule.head(), vocab) + " :- ";
    auto body = rule.body();
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += format_atom(body[i], vocab);
    }
    out += body.empty() ? "." : " .";
    return out;
}

/**
 * Parses one rule. Relations and constants are interned into `vocab`; a
 * relation seen for the first time gets the arity used here.
 */
inline Rule parse_rule(std::string_view text, Vocabulary& vocab, std::size_t line = 0) {
    AtomLexer lex(text, line);
    std::unordered_map<std::string, std::uint32_t> vars;
    auto atom = [&]() {
        std::string name = lex.name();
        lex.expect('(');
        std::vector<Term> args;
        do {
            if (auto v = lex.variable()) {
                auto [it, fresh] = vars.try_emplace(*v, static_cast<std::uint32_t>(vars.size()));
                args.push_back(Term::var(it->second));
            } else {
                args.push_back(Term::constant(vocab.intern_constant(lex.name())));
            }
        } while (lex.accept(','));
        lex.expect(')');
        RelationId rel = vocab.intern_relation(name, static_cast<std::uint32_t>(args.size()), line);
        return Atom{rel, std::move(args)};
    };
    Atom head = atom();
    if (!lex.accept(":-")) {
        lex.fail("expected ':-'");
    }
    std::vector<Atom> body;
    if (!lex.accept('.')) {
        do {
            body.push_back(atom());
        } while (lex.accept(','));
        lex.expect('.');
    }
    if (!lex.at_end()) {
        lex.fail("trailing input");
    }
    return Rule(std::move(head), std::move(body));
}

}  // namespace essence
