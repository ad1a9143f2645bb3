#pragma once

#include "essence/eval.hpp"
#include "essence/kb.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

namespace essence {

/**
 * Proof dependencies among the facts of a KB. Vertices are fact ids
 * 0..n-1 plus a truth vertex `top()` standing for empty-bodied proofs. Each
 * fact keeps in-edges from at most one proof: the one recorded by the first
 * rule that proved it.
 */
class DependencyGraph {
public:
    using Vertex = std::uint32_t;

    DependencyGraph() = default;
    explicit DependencyGraph(std::size_t fact_count)
        : in_(fact_count + 1), out_(fact_count + 1), owner_(fact_count, std::nullopt) {}

    std::size_t fact_count() const { return owner_.size(); }
    Vertex top() const { return static_cast<Vertex>(owner_.size()); }

    const std::vector<Vertex>& in(Vertex v) const { return in_[v]; }
    const std::vector<Vertex>& out(Vertex v) const { return out_[v]; }
    std::optional<std::size_t> owner(FactId f) const { return owner_[f]; }
    bool owned(FactId f) const { return owner_[f].has_value(); }

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& e : out_) {
            n += e.size();
        }
        return n;
    }

    /// Records one proof for `head` unless it already has one. Returns whether it was recorded.
    bool add_proof(std::size_t rule_id, FactId head, std::span<const FactId> body) {
        if (owner_[head]) {
            return false;
        }
        owner_[head] = rule_id;
        if (body.empty()) {
            link(top(), head);
        }
        for (FactId b : body) {
            link(b, head);
        }
        return true;
    }

    /// Adds the proofs of every positive in `ev`; returns how many facts gained a proof.
    std::size_t add_proofs(std::size_t rule_id, const Evidence& ev) {
        std::size_t added = 0;
        for (const Proof& p : ev.positive) {
            added += add_proof(rule_id, p.head, p.body) ? 1 : 0;
        }
        return added;
    }

    /// Fact vertices with no incoming edge.
    std::vector<FactId> zero_in_degree() const {
        std::vector<FactId> out;
        for (FactId f = 0; f < fact_count(); ++f) {
            if (in_[f].empty()) {
                out.push_back(f);
            }
        }
        return out;
    }

    /**
     * A set of fact vertices meeting every directed cycle. Per strongly
     * connected component that holds a cycle, the vertex with the largest
     * in-degree times out-degree inside the component (lowest id on ties) is
     * taken, and the rest of the component is processed again.
     */
    std::vector<FactId> cover_cycles() const {
        std::vector<FactId> cover;
        std::vector<char> alive(fact_count(), 1);
        std::vector<std::vector<Vertex>> work{all_facts()};
        while (!work.empty()) {
            std::vector<Vertex> part = std::move(work.back());
            work.pop_back();
            for (std::vector<Vertex>& scc : components(part, alive)) {
                if (scc.size() == 1 && !has_self_loop(scc[0])) {
                    continue;
                }
                std::vector<char> in_scc(fact_count(), 0);
                for (Vertex v : scc) {
                    in_scc[v] = 1;
                }
                Vertex pick = scc.front();
                std::size_t best = 0;
                bool first = true;
                for (Vertex v : scc) {
                    std::size_t din = 0;
                    std::size_t dout = 0;
                    for (Vertex u : in_[v]) {
                        din += (u < fact_count() && in_scc[u]) ? 1 : 0;
                    }
                    for (Vertex w : out_[v]) {
                        dout += in_scc[w] ? 1 : 0;
                    }
                    std::size_t weight = din * dout;
                    if (first || weight > best || (weight == best && v < pick)) {
                        pick = v;
                        best = weight;
                        first = false;
                    }
                }
                cover.push_back(pick);
                alive[pick] = 0;
                std::erase(scc, pick);
                if (scc.size() > 1 || (scc.size() == 1 && has_self_loop(scc[0]))) {
                    work.push_back(std::move(scc));
                }
            }
        }
        std::sort(cover.begin(), cover.end());
        return cover;
    }

    /**
     * Facts guaranteed provable from `seeds`: a fact is marked if it is a seed,
     * or it has a recorded proof whose body facts are all marked (the truth
     * vertex counts as marked).
     */
    std::vector<char> mark_provable(std::span<const FactId> seeds) const {
        std::vector<char> marked(fact_count(), 0);
        std::vector<std::size_t> unmet(fact_count(), 0);
        std::vector<Vertex> queue;
        for (FactId f = 0; f < fact_count(); ++f) {
            for (Vertex u : in_[f]) {
                unmet[f] += u == top() ? 0 : 1;
            }
        }
        auto mark = [&](FactId f) {
            if (!marked[f]) {
                marked[f] = 1;
                queue.push_back(f);
            }
        };
        for (FactId f : seeds) {
            mark(f);
        }
        for (FactId f = 0; f < fact_count(); ++f) {
            if (owner_[f] && unmet[f] == 0) {
                mark(f);
            }
        }
        while (!queue.empty()) {
            Vertex v = queue.back();
            queue.pop_back();
            for (Vertex w : out_[v]) {
                if (--unmet[w] == 0 && owner_[w]) {
                    mark(w);
                }
            }
        }
        return marked;
    }

    /// Edge list `body<TAB>head<TAB>rule_id`, facts rendered as atoms and the truth vertex as `__top__`.
    void dump(std::ostream& os, const KnowledgeBase& kb) const {
        for (FactId h = 0; h < fact_count(); ++h) {
            for (Vertex b : in_[h]) {
                os << (b == top() ? std::string("__top__") : format_fact_atom(kb.vocab(), kb.store()[b])) << '\t'
                   << format_fact_atom(kb.vocab(), kb.store()[h]) << '\t' << *owner_[h] << '\n';
            }
        }
    }

private:
    void link(Vertex from, Vertex to) {
        if (std::find(out_[from].begin(), out_[from].end(), to) == out_[from].end()) {
            out_[from].push_back(to);
            in_[to].push_back(from);
        }
    }

    bool has_self_loop(Vertex v) const { return std::find(out_[v].begin(), out_[v].end(), v) != out_[v].end(); }

    std::vector<Vertex> all_facts() const {
        std::vector<Vertex> v(fact_count());
        for (Vertex i = 0; i < v.size(); ++i) {
            v[i] = i;
        }
        return v;
    }

    /// Iterative Tarjan restricted to `part` and alive vertices.
    std::vector<std::vector<Vertex>> components(const std::vector<Vertex>& part, const std::vector<char>& alive) const {
        constexpr std::uint32_t kNone = UINT32_MAX;
        std::vector<char> member(fact_count(), 0);
        for (Vertex v : part) {
            member[v] = alive[v];
        }
        std::vector<std::uint32_t> index(fact_count(), kNone);
        std::vector<std::uint32_t> low(fact_count(), 0);
        std::vector<char> on_stack(fact_count(), 0);
        std::vector<Vertex> stack;
        std::vector<std::vector<Vertex>> out;
        std::uint32_t counter = 0;
        struct Frame {
            Vertex v;
            std::size_t next;
        };
        std::vector<Frame> call;
        for (Vertex root : part) {
            if (!member[root] || index[root] != kNone) {
                continue;
            }
            call.push_back({root, 0});
            index[root] = low[root] = counter++;
            stack.push_back(root);
            on_stack[root] = 1;
            while (!call.empty()) {
                Frame& fr = call.back();
                const auto& succ = out_[fr.v];
                if (fr.next < succ.size()) {
                    Vertex w = succ[fr.next++];
                    if (w >= fact_count() || !member[w]) {
                        continue;
                    }
                    if (index[w] == kNone) {
                        index[w] = low[w] = counter++;
                        stack.push_back(w);
                        on_stack[w] = 1;
                        call.push_back({w, 0});
                    } else if (on_stack[w]) {
                        low[fr.v] = std::min(low[fr.v], index[w]);
                    }
                    continue;
                }
                Vertex v = fr.v;
                call.pop_back();
                if (!call.empty()) {
                    low[call.back().v] = std::min(low[call.back().v], low[v]);
                }
                if (low[v] == index[v]) {
                    std::vector<Vertex> scc;
                    Vertex w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        scc.push_back(w);
                    } while (w != v);
                    std::sort(scc.begin(), scc.end());
                    out.push_back(std::move(scc));
                }
            }
        }
        return out;
    }

    std::vector<std::vector<Vertex>> in_;
    std::vector<std::vector<Vertex>> out_;
    std::vector<std::optional<std::size_t>> owner_;
};

}  // namespace essence
