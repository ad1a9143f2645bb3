#pragma once

#include "essence/dependency_graph.hpp"
#include "essence/eval.hpp"
#include "essence/kb.hpp"
#include "essence/rule.hpp"
#include "essence/search.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace essence {

struct Accounting {
    std::size_t original = 0;
    std::size_t necessary = 0;
    std::size_t counterexamples = 0;
    /// Sum of max(length, 1) over the rules.
    std::size_t hypothesis = 0;

    std::size_t total() const { return necessary + counterexamples + hypothesis; }
};

/// The triple (H, N, C) over the vocabulary of the source KB.
struct ExtractionResult {
    std::vector<Rule> rules;
    std::vector<Score> rule_scores;
    std::vector<Fact> necessary;
    std::vector<Fact> counterexamples;
    /// Facts in `necessary` that were forced in to break proof cycles.
    std::vector<Fact> cycle_cover;
    Accounting accounting;
    DependencyGraph graph;
};

inline std::size_t hypothesis_size(std::span<const Rule> rules) {
    std::size_t n = 0;
    for (const Rule& r : rules) {
        n += rule_cost(r);
    }
    return n;
}

/**
 * Greedy essence extraction: accept rules from `find_single_rule` until none
 * qualifies, collecting their counterexamples and proofs; the necessary facts
 * are then the unproved facts plus a cover of the proof cycles.
 */
inline ExtractionResult extract(const KnowledgeBase& kb, const SearchConfig& cfg) {
    SearchState state(kb);
    while (auto cand = find_single_rule(state, cfg)) {
        state.accept(*cand);
    }

    ExtractionResult res;
    res.rules = state.rules();
    res.rule_scores = state.scores();
    res.graph = state.graph();
    std::vector<FactId> cover = res.graph.cover_cycles();
    std::vector<FactId> necessary = res.graph.zero_in_degree();
    necessary.insert(necessary.end(), cover.begin(), cover.end());
    std::sort(necessary.begin(), necessary.end());
    for (FactId f : necessary) {
        res.necessary.push_back(kb.store()[f]);
    }
    for (FactId f : cover) {
        res.cycle_cover.push_back(kb.store()[f]);
    }
    auto cex = state.counterexamples();
    res.counterexamples.assign(cex.begin(), cex.end());

    res.accounting.original = kb.size();
    res.accounting.necessary = res.necessary.size();
    res.accounting.counterexamples = res.counterexamples.size();
    res.accounting.hypothesis = hypothesis_size(res.rules);
    return res;
}

struct VerifyReport {
    bool ok = false;
    /// In B ∪ C but not derivable from N and H.
    std::vector<Fact> missing;
    /// Derivable from N and H but outside B ∪ C.
    std::vector<Fact> extra;
    /// Counterexamples that are actually facts of B.
    std::vector<Fact> overlap;
    std::size_t iterations = 0;
};

/**
 * Checks that N and H derive exactly B ∪ C, with unsafe variables ranging
 * over `domain`.
 */
inline VerifyReport verify(const FactStore& original, std::span<const Fact> necessary, std::span<const Rule> rules,
                           std::span<const Fact> counterexamples, std::span<const ConstantId> domain) {
    VerifyReport rep;
    ClosureResult cl = closure(necessary, rules, domain);
    rep.iterations = cl.iterations;
    FactSet expected(original.facts().begin(), original.facts().end());
    expected.insert(counterexamples.begin(), counterexamples.end());
    for (const Fact& f : original.facts()) {
        if (!cl.facts.contains(f)) {
            rep.missing.push_back(f);
        }
    }
    for (const Fact& f : counterexamples) {
        if (original.contains(f)) {
            rep.overlap.push_back(f);
        } else if (!cl.facts.contains(f)) {
            rep.missing.push_back(f);
        }
    }
    for (const Fact& f : cl.facts.facts()) {
        if (!expected.contains(f)) {
            rep.extra.push_back(f);
        }
    }
    rep.ok = rep.missing.empty() && rep.extra.empty() && rep.overlap.empty();
    return rep;
}

inline VerifyReport verify(const KnowledgeBase& original, const ExtractionResult& res) {
    auto domain = original.vocab().domain();
    return verify(original.store(), res.necessary, res.rules, res.counterexamples, domain);
}

}  // namespace essence
