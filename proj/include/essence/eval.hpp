#pragma once

#include "essence/kb.hpp"
#include "essence/rule.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

namespace essence {

inline constexpr ConstantId kUnbound = std::numeric_limits<ConstantId>::max();

/// Half-open range of fact ids a body atom may match.
struct FactRange {
    FactId lo = 0;
    FactId hi = std::numeric_limits<FactId>::max();
};

namespace detail {

inline std::span<const FactId> clip(std::span<const FactId> ids, FactRange range) {
    auto lo = std::lower_bound(ids.begin(), ids.end(), range.lo);
    auto hi = std::lower_bound(lo, ids.end(), range.hi);
    return {lo, hi};
}

template <class F>
void match_from(const std::vector<Atom>& body, std::size_t i, const FactStore& store, std::span<const FactRange> ranges,
                std::vector<ConstantId>& binding, std::vector<FactId>& grounding, F& on_match) {
    if (i == body.size()) {
        on_match(std::span<const ConstantId>(binding), std::span<const FactId>(grounding));
        return;
    }
    const Atom& atom = body[i];
    // Narrowest candidate list: an index hit on the first bound position, else the whole relation.
    std::span<const FactId> candidates;
    bool indexed = false;
    for (std::uint32_t k = 0; k < atom.args.size() && !indexed; ++k) {
        const Term& t = atom.args[k];
        if (t.is_const()) {
            candidates = store.with_arg(atom.relation, k, t.id);
            indexed = true;
        } else if (binding[t.id] != kUnbound) {
            candidates = store.with_arg(atom.relation, k, binding[t.id]);
            indexed = true;
        }
    }
    if (!indexed) {
        candidates = store.of_relation(atom.relation);
    }
    candidates = clip(candidates, ranges[i]);

    std::vector<std::uint32_t> newly_bound;
    for (FactId id : candidates) {
        const Fact& f = store[id];
        newly_bound.clear();
        bool ok = true;
        for (std::uint32_t k = 0; k < atom.args.size(); ++k) {
            const Term& t = atom.args[k];
            if (t.is_const()) {
                if (f.args[k] != t.id) {
                    ok = false;
                    break;
                }
            } else if (binding[t.id] == kUnbound) {
                binding[t.id] = f.args[k];
                newly_bound.push_back(t.id);
            } else if (binding[t.id] != f.args[k]) {
                ok = false;
                break;
            }
        }
        if (ok) {
            grounding.push_back(id);
            match_from(body, i + 1, store, ranges, binding, grounding, on_match);
            grounding.pop_back();
        }
        for (std::uint32_t v : newly_bound) {
            binding[v] = kUnbound;
        }
    }
}

}  // namespace detail

/**
 * Enumerates substitutions satisfying the body of `rule` over `store`. Body
 * atoms are joined left to right and facts are visited in insertion order.
 * `ranges` (one per body atom, or empty for "everything") restrict which
 * facts each atom may match. `on_match(binding, grounding)` receives the
 * variable binding (kUnbound for variables not in the body) and the matched
 * fact ids.
 */
template <class F>
void match_body(const Rule& rule, const FactStore& store, std::span<const FactRange> ranges, F&& on_match) {
    std::vector<Atom> body(rule.body().begin(), rule.body().end());
    std::vector<FactRange> all;
    if (ranges.empty()) {
        all.assign(body.size(), FactRange{});
        ranges = all;
    }
    std::vector<ConstantId> binding(rule.variable_count(), kUnbound);
    std::vector<FactId> grounding;
    grounding.reserve(body.size());
    detail::match_from(body, 0, store, ranges, binding, grounding, on_match);
}

/**
 * Calls `emit(fact)` for every head instance under `binding`. Head variables
 * left unbound by the body range over `domain`.
 */
template <class F>
void instantiate_head(const Rule& rule, std::span<const ConstantId> binding, std::span<const ConstantId> domain,
                      F&& emit) {
    const Atom& head = rule.head();
    Fact f{head.relation, std::vector<ConstantId>(head.args.size())};
    std::vector<std::uint32_t> free_vars;
    for (std::size_t k = 0; k < head.args.size(); ++k) {
        const Term& t = head.args[k];
        if (t.is_const()) {
            f.args[k] = t.id;
        } else if (binding[t.id] != kUnbound) {
            f.args[k] = binding[t.id];
        } else if (std::find(free_vars.begin(), free_vars.end(), t.id) == free_vars.end()) {
            free_vars.push_back(t.id);
        }
    }
    if (free_vars.empty()) {
        emit(f);
        return;
    }
    if (domain.empty()) {
        return;
    }
    std::vector<ConstantId> value(rule.variable_count(), kUnbound);
    std::vector<std::size_t> odometer(free_vars.size(), 0);
    while (true) {
        for (std::size_t i = 0; i < free_vars.size(); ++i) {
            value[free_vars[i]] = domain[odometer[i]];
        }
        for (std::size_t k = 0; k < head.args.size(); ++k) {
            const Term& t = head.args[k];
            if (t.is_var() && binding[t.id] == kUnbound) {
                f.args[k] = value[t.id];
            }
        }
        emit(f);
        std::size_t i = free_vars.size();
        while (i > 0) {
            --i;
            if (++odometer[i] < domain.size()) {
                break;
            }
            odometer[i] = 0;
            if (i == 0) {
                return;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Evidence and score

/// One recorded proof: an entailed fact of the KB and the body facts used.
struct Proof {
    FactId head = 0;
    std::vector<FactId> body;
};

struct Evidence {
    /// Entailed facts that are in the KB, one proof each, in discovery order.
    std::vector<Proof> positive;
    /// Entailed atoms absent from the KB, in discovery order.
    std::vector<Fact> negative;
};

/**
 * What `rule` entails over `kb`: positives (entailed facts of the KB with one
 * proof each) and negatives (entailed atoms the KB lacks). For each positive
 * the first proof found is kept, except that a proof using the head fact
 * itself is replaced by the first proof that does not.
 */
inline Evidence ground(const Rule& rule, const KnowledgeBase& kb) {
    Evidence ev;
    std::unordered_map<FactId, std::size_t> pos_index;
    FactSet neg_seen;
    auto domain = kb.vocab().domain();
    const FactStore& store = kb.store();
    match_body(rule, store, {}, [&](std::span<const ConstantId> binding, std::span<const FactId> grounding) {
        instantiate_head(rule, binding, domain, [&](const Fact& f) {
            if (auto id = store.find(f)) {
                bool self = std::find(grounding.begin(), grounding.end(), *id) != grounding.end();
                auto [it, fresh] = pos_index.try_emplace(*id, ev.positive.size());
                if (fresh) {
                    ev.positive.push_back(Proof{*id, {grounding.begin(), grounding.end()}});
                } else if (!self) {
                    Proof& p = ev.positive[it->second];
                    if (std::find(p.body.begin(), p.body.end(), *id) != p.body.end()) {
                        p.body.assign(grounding.begin(), grounding.end());
                    }
                }
            } else if (neg_seen.insert(f).second) {
                ev.negative.push_back(f);
            }
        });
    });
    return ev;
}

/**
 * Marginal size reduction of adding a rule. `delta = new_positive - negative -
 * cycle_penalty - cost`, with cost = max(length, 1).
 */
struct Score {
    long long delta = 0;
    std::size_t new_positive = 0;
    std::size_t negative = 0;
    long long cycle_penalty = 0;
    std::size_t cost = 0;
};

/// Score from evidence alone: positives not already covered, minus negatives and cost.
inline Score score(const Evidence& ev, const std::unordered_set<FactId>& covered, const Rule& rule) {
    Score s;
    for (const Proof& p : ev.positive) {
        if (!covered.contains(p.head)) {
            ++s.new_positive;
        }
    }
    s.negative = ev.negative.size();
    s.cost = rule_cost(rule);
    s.delta = static_cast<long long>(s.new_positive) - static_cast<long long>(s.negative) -
              static_cast<long long>(s.cost);
    return s;
}

// ---------------------------------------------------------------------------
// Forward chaining

/**
 * Semi-naive forward chaining in place. Facts at index >= `delta_begin` are
 * the initial frontier for `rules`; `fresh` rules are first applied to the
 * whole store once and then join the fixpoint loop. Returns the number of
 * rounds that produced new facts.
 */
inline std::size_t saturate(FactStore& store, std::span<const Rule> rules, std::span<const ConstantId> domain,
                            std::size_t delta_begin, std::span<const Rule> fresh = {}) {
    std::vector<const Rule*> all;
    for (const Rule& r : rules) {
        all.push_back(&r);
    }
    for (const Rule& r : fresh) {
        all.push_back(&r);
    }
    std::size_t rounds = 0;
    std::vector<Fact> pending;
    auto collect = [&](const Rule& rule, std::span<const FactRange> ranges) {
        match_body(rule, store, ranges, [&](std::span<const ConstantId> binding, std::span<const FactId>) {
            instantiate_head(rule, binding, domain, [&](const Fact& f) {
                if (!store.contains(f)) {
                    pending.push_back(f);
                }
            });
        });
    };
    auto flush = [&]() {
        std::size_t before = store.size();
        for (Fact& f : pending) {
            store.insert(std::move(f));
        }
        pending.clear();
        return store.size() > before;
    };

    auto lo = static_cast<FactId>(std::min(delta_begin, store.size()));
    auto hi = static_cast<FactId>(store.size());
    for (const Rule& r : fresh) {
        collect(r, {});
    }
    std::vector<FactRange> ranges;
    while (true) {
        if (lo < hi) {
            for (const Rule* r : all) {
                const std::size_t n = r->body().size();
                ranges.resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        ranges[j] = j < i ? FactRange{0, lo} : (j == i ? FactRange{lo, hi} : FactRange{0, hi});
                    }
                    collect(*r, ranges);
                }
            }
        }
        if (!flush()) {
            break;
        }
        ++rounds;
        lo = hi;
        hi = static_cast<FactId>(store.size());
    }
    return rounds;
}

struct ClosureResult {
    FactStore facts;
    std::size_t iterations = 0;
};

/// Least fixpoint of `rules` over `seed`; unsafe head variables range over `domain`.
inline ClosureResult closure(std::span<const Fact> seed, std::span<const Rule> rules,
                             std::span<const ConstantId> domain) {
    ClosureResult res;
    for (const Fact& f : seed) {
        res.facts.insert(f);
    }
    res.iterations = saturate(res.facts, {}, domain, res.facts.size(), rules);
    return res;
}

}  // namespace essence
