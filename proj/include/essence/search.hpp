#pragma once

#include "essence/dependency_graph.hpp"
#include "essence/eval.hpp"
#include "essence/kb.hpp"
#include "essence/parallel.hpp"
#include "essence/rule.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace essence {

struct SearchConfig {
    std::size_t beam_width = 5;
    std::size_t max_rule_length = 4;
    long long min_delta = 0;
    /// Head relations to mine rules for; empty means every relation with facts.
    std::vector<std::string> target_relations;
    /// Allow binding arguments to constants seen in that column of the KB.
    bool use_constants = true;
    std::size_t threads = 1;

    void validate() const {
        if (beam_width < 1) {
            throw std::invalid_argument("beam width must be at least 1");
        }
        if (max_rule_length < 1) {
            throw std::invalid_argument("maximum rule length must be at least 1");
        }
        if (threads < 1) {
            throw std::invalid_argument("thread count must be at least 1");
        }
    }
};

/// A scored rule proposal.
struct Candidate {
    Rule rule;
    Fingerprint fp;
    Evidence evidence;
    Score score;
};

/**
 * Everything the extraction has committed to so far: accepted rules, the
 * dependency graph of their proofs, and the current entailment B ∪ C, kept
 * closed under the accepted rules.
 */
class SearchState {
public:
    explicit SearchState(const KnowledgeBase& kb)
        : kb_(&kb), graph_(kb.size()), domain_(kb.vocab().domain()), columns_(column_constants(kb)) {
        for (const Fact& f : kb.facts()) {
            entailed_.insert(f);
        }
    }

    const KnowledgeBase& kb() const { return *kb_; }
    const DependencyGraph& graph() const { return graph_; }
    const std::vector<Rule>& rules() const { return rules_; }
    const std::vector<Score>& scores() const { return scores_; }
    const FingerprintSet& seen() const { return seen_; }
    const FactStore& entailed() const { return entailed_; }
    std::span<const ConstantId> domain() const { return domain_; }
    const ColumnConstants& columns() const { return columns_; }
    std::size_t cover_size() const { return cover_size_; }

    /// Atoms entailed so far that are not in the KB, in discovery order.
    std::span<const Fact> counterexamples() const {
        return entailed_.facts().subspan(kb_->size());
    }

    void accept(const Candidate& c) {
        std::size_t before = entailed_.size();
        saturate(entailed_, rules_, domain_, before, std::span<const Rule>(&c.rule, 1));
        rules_.push_back(c.rule);
        scores_.push_back(c.score);
        seen_.insert(c.fp);
        graph_.add_proofs(rules_.size() - 1, c.evidence);
        cover_size_ = graph_.cover_cycles().size();
    }

private:
    const KnowledgeBase* kb_;
    DependencyGraph graph_;
    std::vector<Rule> rules_;
    std::vector<Score> scores_;
    FingerprintSet seen_;
    FactStore entailed_;
    std::vector<ConstantId> domain_;
    ColumnConstants columns_;
    std::size_t cover_size_ = 0;
};

namespace detail {

struct Evaluated {
    Candidate cand;
    /// Best delta any extension could reach.
    long long potential = 0;
    bool eligible = false;
    bool expandable = false;
};

/**
 * Scores `rule` against the committed state. The delta charges the
 * counterexamples the rule adds to B ∪ C after chaining with the accepted
 * rules, and the growth of the cycle cover its proofs cause, so that the
 * accepted deltas sum exactly to |B| - (|N| + |C| + |H|).
 */
inline Evaluated evaluate(Rule rule, Fingerprint fp, const SearchState& st, const SearchConfig& cfg,
                          std::optional<FactStore>& scratch) {
    Evaluated out;
    out.cand.rule = std::move(rule);
    out.cand.fp = std::move(fp);
    const Rule& r = out.cand.rule;
    out.cand.evidence = ground(r, st.kb());
    const Evidence& ev = out.cand.evidence;
    Score& s = out.cand.score;
    s.cost = rule_cost(r);
    for (const Proof& p : ev.positive) {
        s.new_positive += st.graph().owned(p.head) ? 0 : 1;
    }
    const auto len = static_cast<long long>(r.length());
    const auto pos = static_cast<long long>(s.new_positive);
    out.potential = pos - (len + 1);
    out.expandable = s.new_positive > 0 && r.length() < cfg.max_rule_length && out.potential >= cfg.min_delta;

    std::size_t direct_new = 0;
    for (const Fact& f : ev.negative) {
        direct_new += st.entailed().contains(f) ? 0 : 1;
    }
    s.negative = direct_new;
    s.delta = pos - static_cast<long long>(direct_new) - static_cast<long long>(s.cost);
    if (s.new_positive == 0 || s.delta < cfg.min_delta || st.seen().contains(out.cand.fp)) {
        return out;
    }

    // Counterexamples after chaining through the accepted rules.
    if (!scratch) {
        scratch.emplace(st.entailed());
    }
    std::size_t mark = scratch->size();
    saturate(*scratch, st.rules(), st.domain(), mark, std::span<const Rule>(&r, 1));
    s.negative = scratch->size() - mark;
    scratch->truncate(mark);

    // Cycle cover growth, only when a new proof leans on a proved fact.
    bool may_cycle = false;
    std::vector<char> heads(st.kb().size(), 0);
    for (const Proof& p : ev.positive) {
        if (!st.graph().owned(p.head)) {
            heads[p.head] = 1;
        }
    }
    for (const Proof& p : ev.positive) {
        if (st.graph().owned(p.head)) {
            continue;
        }
        for (FactId b : p.body) {
            if (heads[b] || st.graph().owned(b)) {
                may_cycle = true;
                break;
            }
        }
        if (may_cycle) {
            break;
        }
    }
    if (may_cycle) {
        DependencyGraph g = st.graph();
        g.add_proofs(st.rules().size(), ev);
        s.cycle_penalty = static_cast<long long>(g.cover_cycles().size()) - static_cast<long long>(st.cover_size());
    }
    s.delta = pos - static_cast<long long>(s.negative) - s.cycle_penalty - static_cast<long long>(s.cost);
    out.eligible = s.delta >= cfg.min_delta;
    return out;
}

/// Orders final picks: higher delta, then shorter, then smaller fingerprint.
inline bool better_pick(const Candidate& a, const Candidate& b) {
    if (a.score.delta != b.score.delta) {
        return a.score.delta > b.score.delta;
    }
    if (a.rule.length() != b.rule.length()) {
        return a.rule.length() < b.rule.length();
    }
    return a.fp < b.fp;
}

/// Orders the beam: extension potential first, then the pick order.
inline bool better_beam(const Evaluated& a, const Evaluated& b) {
    if (a.potential != b.potential) {
        return a.potential > b.potential;
    }
    return better_pick(a.cand, b.cand);
}

inline std::vector<RelationId> head_relations(const KnowledgeBase& kb, const SearchConfig& cfg) {
    std::vector<RelationId> heads;
    if (cfg.target_relations.empty()) {
        for (RelationId r = 0; r < kb.vocab().relation_count(); ++r) {
            if (!kb.store().of_relation(r).empty()) {
                heads.push_back(r);
            }
        }
        return heads;
    }
    for (const std::string& name : cfg.target_relations) {
        auto r = kb.vocab().find_relation(name);
        if (!r) {
            throw KbError("unknown target relation '" + name + "'");
        }
        if (std::find(heads.begin(), heads.end(), *r) == heads.end()) {
            heads.push_back(*r);
        }
    }
    std::sort(heads.begin(), heads.end());
    return heads;
}

}  // namespace detail

/**
 * Beam search for the next rule. Per head relation the frontier starts at the
 * most general head-only rule and grows by one extension step per round.
 * Proposals are scored against `state`; the beam keeps the `beam_width` best
 * by extension potential (new positives minus the next length), and the best
 * proposal overall by delta with delta >= min_delta is returned. Rules whose
 * fingerprint is in `state.seen()` are never returned.
 */
inline std::optional<Candidate> find_single_rule(const SearchState& state, const SearchConfig& cfg) {
    cfg.validate();
    const KnowledgeBase& kb = state.kb();
    if (kb.empty()) {
        return std::nullopt;
    }
    ExtensionContext ext{&kb.vocab(), cfg.use_constants ? &state.columns() : nullptr};
    std::vector<std::optional<FactStore>> scratch(cfg.threads);
    std::optional<Candidate> best;
    FingerprintSet visited;

    auto evaluate_all = [&](std::vector<std::pair<Rule, Fingerprint>>& batch) {
        std::vector<detail::Evaluated> results(batch.size());
        parallel_for(batch.size(), cfg.threads, [&](std::size_t worker, std::size_t i) {
            results[i] = detail::evaluate(std::move(batch[i].first), std::move(batch[i].second), state, cfg,
                                          scratch[worker]);
        });
        for (detail::Evaluated& e : results) {
            if (e.eligible && (!best || detail::better_pick(e.cand, *best))) {
                best = e.cand;
            }
        }
        return results;
    };

    for (RelationId head : detail::head_relations(kb, cfg)) {
        Rule start = new_head_rule(kb.vocab(), head);
        Fingerprint fp = fingerprint(start, kb.vocab());
        visited.insert(fp);
        std::vector<std::pair<Rule, Fingerprint>> batch;
        batch.emplace_back(std::move(start), std::move(fp));
        std::vector<detail::Evaluated> frontier = evaluate_all(batch);

        while (true) {
            std::erase_if(frontier, [](const detail::Evaluated& e) { return !e.expandable; });
            if (frontier.empty()) {
                break;
            }
            batch.clear();
            for (const detail::Evaluated& e : frontier) {
                for (Rule& r : extensions(e.cand.rule, ext)) {
                    Fingerprint f = fingerprint(r, kb.vocab());
                    if (visited.insert(f).second) {
                        batch.emplace_back(std::move(r), std::move(f));
                    }
                }
            }
            std::vector<detail::Evaluated> results = evaluate_all(batch);
            std::erase_if(results, [](const detail::Evaluated& e) { return !e.expandable; });
            std::sort(results.begin(), results.end(), detail::better_beam);
            if (results.size() > cfg.beam_width) {
                results.resize(cfg.beam_width);
            }
            frontier = std::move(results);
        }
    }
    return best;
}

}  // namespace essence
