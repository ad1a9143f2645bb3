#pragma once

#include "essence/eval.hpp"
#include "essence/extractor.hpp"
#include "essence/kb.hpp"
#include "essence/rule.hpp"
#include "essence/rule_space.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace essence::vc {

/// Simple undirected graph on vertices 1..vertex_count.
struct UndirectedGraph {
    std::uint32_t vertex_count = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

    /// Throws std::invalid_argument on self-loops, duplicates or out-of-range endpoints.
    void validate() const {
        std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
        for (auto [i, j] : edges) {
            if (i < 1 || j < 1 || i > vertex_count || j > vertex_count) {
                throw std::invalid_argument("edge endpoint out of range");
            }
            if (i == j) {
                throw std::invalid_argument("self-loop on vertex " + std::to_string(i));
            }
            if (!seen.insert(std::minmax(i, j)).second) {
                throw std::invalid_argument("duplicate edge " + std::to_string(i) + " " + std::to_string(j));
            }
        }
    }

    std::size_t degree(std::uint32_t v) const {
        return static_cast<std::size_t>(
            std::count_if(edges.begin(), edges.end(), [v](auto e) { return e.first == v || e.second == v; }));
    }
};

/// Reads `n m` followed by m lines `i j` (1-based).
inline UndirectedGraph parse_graph(std::istream& in) {
    UndirectedGraph g;
    std::string line;
    std::size_t lineno = 0;
    std::size_t expected = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto text = detail::trim(line);
        if (text.empty() || text.starts_with('#')) {
            continue;
        }
        std::istringstream fields{std::string(text)};
        long long a = 0;
        long long b = 0;
        std::string rest;
        if (!(fields >> a >> b) || (fields >> rest)) {
            throw KbError("expected two integers", lineno);
        }
        if (a < 0 || b < 0) {
            throw KbError("negative value", lineno);
        }
        if (!header) {
            g.vertex_count = static_cast<std::uint32_t>(a);
            expected = static_cast<std::size_t>(b);
            header = true;
            continue;
        }
        g.edges.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
    }
    if (!header) {
        throw KbError("missing 'n m' header");
    }
    if (g.edges.size() != expected) {
        throw KbError("header announces " + std::to_string(expected) + " edges, found " +
                      std::to_string(g.edges.size()));
    }
    try {
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw KbError(e.what());
    }
    return g;
}

inline std::string vertex_relation(std::uint32_t v) { return "v" + std::to_string(v); }

/**
 * Builds the compression instance for a vertex cover instance. Per edge
 * (vi, vj), i < j: constants e_i_j and ep_i_j with facts vi(.), vj(.) and
 * edge(.) on both. Then edge(c_1..c_{2m+1}) and fact-less constants
 * d_1..d_{4m+1}, which make `edge(X) :- .` exactly break even.
 */
inline KnowledgeBase graph_to_kb(const UndirectedGraph& g) {
    g.validate();
    KnowledgeBase kb;
    Vocabulary& vocab = kb.vocab();
    for (std::uint32_t v = 1; v <= g.vertex_count; ++v) {
        vocab.intern_relation(vertex_relation(v), 1);
    }
    RelationId edge = vocab.intern_relation("edge", 1);

    std::vector<std::pair<ConstantId, ConstantId>> edge_consts;
    for (auto [a, b] : g.edges) {
        auto [i, j] = std::minmax(a, b);
        std::string tag = std::to_string(i) + "_" + std::to_string(j);
        ConstantId e = vocab.intern_constant("e_" + tag);
        ConstantId ep = vocab.intern_constant("ep_" + tag);
        edge_consts.emplace_back(e, ep);
    }
    const std::size_t m = g.edges.size();
    std::vector<ConstantId> cs;
    for (std::size_t k = 1; k <= 2 * m + 1; ++k) {
        cs.push_back(vocab.intern_constant("c_" + std::to_string(k)));
    }
    for (std::size_t k = 1; k <= 4 * m + 1; ++k) {
        vocab.intern_constant("d_" + std::to_string(k));
    }

    for (std::size_t e = 0; e < m; ++e) {
        auto [i, j] = std::minmax(g.edges[e].first, g.edges[e].second);
        for (std::uint32_t v : {i, j}) {
            RelationId rel = *vocab.find_relation(vertex_relation(v));
            kb.add(Fact{rel, {edge_consts[e].first}});
            kb.add(Fact{rel, {edge_consts[e].second}});
        }
    }
    for (auto [e, ep] : edge_consts) {
        kb.add(Fact{edge, {e}});
        kb.add(Fact{edge, {ep}});
    }
    for (ConstantId c : cs) {
        kb.add(Fact{edge, {c}});
    }
    return kb;
}

/// `edge(X) :- v(X)` for vertex `v`; the relations must exist in `vocab`.
inline Rule edge_rule(const Vocabulary& vocab, std::uint32_t v) {
    RelationId edge = *vocab.find_relation("edge");
    RelationId rel = *vocab.find_relation(vertex_relation(v));
    return Rule(Atom{edge, {Term::var(0)}}, {Atom{rel, {Term::var(0)}}});
}

/// Smallest vertex cover by exhaustive search over subsets in increasing size,
/// lexicographically first among ties. At most 20 vertices.
inline std::vector<std::uint32_t> brute_force_vertex_cover(const UndirectedGraph& g) {
    if (g.vertex_count > 20) {
        throw std::length_error("brute-force vertex cover is limited to 20 vertices");
    }
    const std::uint32_t n = g.vertex_count;
    auto covers = [&](const std::vector<std::uint32_t>& set) {
        std::vector<char> in(n + 1, 0);
        for (std::uint32_t v : set) {
            in[v] = 1;
        }
        return std::all_of(g.edges.begin(), g.edges.end(), [&](auto e) { return in[e.first] || in[e.second]; });
    };
    for (std::uint32_t k = 0; k <= n; ++k) {
        std::vector<std::uint32_t> pick(k);
        for (std::uint32_t i = 0; i < k; ++i) {
            pick[i] = i + 1;
        }
        while (true) {
            if (covers(pick)) {
                return pick;
            }
            // Next k-combination of 1..n in lexicographic order.
            std::int64_t i = static_cast<std::int64_t>(k) - 1;
            while (i >= 0 && pick[i] == n - k + i + 1) {
                --i;
            }
            if (i < 0) {
                break;
            }
            ++pick[i];
            for (auto j = static_cast<std::size_t>(i) + 1; j < k; ++j) {
                pick[j] = pick[j - 1] + 1;
            }
        }
    }
    return {};
}

/// Vertices v such that `edge(X) :- v(X)` is among `rules` (compared by fingerprint).
inline std::vector<std::uint32_t> cover_from_rules(std::span<const Rule> rules, const Vocabulary& vocab) {
    std::vector<std::uint32_t> out;
    if (!vocab.find_relation("edge")) {
        return out;
    }
    FingerprintSet present;
    for (const Rule& r : rules) {
        present.insert(fingerprint(r, vocab));
    }
    for (const Relation& rel : vocab.relations()) {
        if (rel.arity != 1 || rel.name.size() < 2 || rel.name[0] != 'v' ||
            !std::all_of(rel.name.begin() + 1, rel.name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            continue;
        }
        auto v = static_cast<std::uint32_t>(std::stoul(rel.name.substr(1)));
        if (present.contains(fingerprint(edge_rule(vocab, v), vocab))) {
            out.push_back(v);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline bool is_vertex_cover(const UndirectedGraph& g, std::span<const std::uint32_t> cover) {
    return std::all_of(g.edges.begin(), g.edges.end(), [&](auto e) {
        return std::find(cover.begin(), cover.end(), e.first) != cover.end() ||
               std::find(cover.begin(), cover.end(), e.second) != cover.end();
    });
}

struct BruteForceLimits {
    std::size_t max_facts = 12;
    std::size_t max_candidates = 16;
};

/**
 * Exact minimum of |N| + |C| + |H| over rule sets drawn from the candidate
 * pool: every rule of the pruned space with length <= max_len whose positive
 * evidence is at least its cost. For each subset H, C is the closure of B
 * under H minus B, and N is a smallest subset of B from which H re-derives B.
 * Throws std::length_error when the KB or the pool exceeds `limits`.
 */
inline ExtractionResult brute_force_compress(const KnowledgeBase& kb, std::size_t max_len,
                                             BruteForceLimits limits = {}) {
    if (max_len > 2) {
        throw std::length_error("brute-force compression supports rules of length <= 2");
    }
    if (kb.size() > limits.max_facts) {
        throw std::length_error("brute-force compression is limited to " + std::to_string(limits.max_facts) +
                                " facts");
    }
    const auto domain = kb.vocab().domain();
    const auto columns = column_constants(kb);
    std::vector<Rule> pool;
    for (RelationId head = 0; head < kb.vocab().relation_count(); ++head) {
        if (kb.store().of_relation(head).empty()) {
            continue;
        }
        enumerate_search_space(kb.vocab(), head, max_len, &columns, [&](const Rule& r) {
            if (ground(r, kb).positive.size() >= rule_cost(r)) {
                pool.push_back(r);
            }
        });
    }
    if (pool.size() > limits.max_candidates) {
        throw std::length_error("candidate pool of " + std::to_string(pool.size()) + " rules exceeds " +
                                std::to_string(limits.max_candidates));
    }

    const std::size_t n = kb.size();
    std::vector<Fact> b(kb.facts().begin(), kb.facts().end());
    auto derives_all = [&](const std::vector<Fact>& seed, std::span<const Rule> rules) {
        ClosureResult cl = closure(seed, rules, domain);
        return std::all_of(b.begin(), b.end(), [&](const Fact& f) { return cl.facts.contains(f); });
    };

    ExtractionResult best;
    best.necessary = b;
    best.accounting.original = n;
    best.accounting.necessary = n;
    std::size_t best_total = n;

    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << pool.size()); ++mask) {
        std::vector<Rule> h;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (mask >> i & 1) {
                h.push_back(pool[i]);
            }
        }
        const std::size_t h_size = hypothesis_size(h);
        if (h_size >= best_total) {
            continue;
        }
        ClosureResult full = closure(b, h, domain);
        const std::size_t c_size = full.facts.size() - n;
        // Facts derivable without themselves; the rest must stay in N.
        std::vector<std::size_t> derivable;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<Fact> seed;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) {
                    seed.push_back(b[j]);
                }
            }
            if (closure(seed, h, domain).facts.contains(b[i])) {
                derivable.push_back(i);
            }
        }
        const std::size_t floor_n = n - derivable.size();
        if (h_size + c_size + floor_n >= best_total) {
            continue;
        }
        // Largest removable subset of the derivable facts.
        const std::size_t d = derivable.size();
        std::size_t best_removed = 0;
        std::uint64_t best_mask = 0;
        for (std::uint64_t rm = 1; rm < (std::uint64_t{1} << d); ++rm) {
            auto removed = static_cast<std::size_t>(std::popcount(rm));
            if (removed <= best_removed) {
                continue;
            }
            std::vector<char> drop(n, 0);
            for (std::size_t k = 0; k < d; ++k) {
                if (rm >> k & 1) {
                    drop[derivable[k]] = 1;
                }
            }
            std::vector<Fact> seed;
            for (std::size_t j = 0; j < n; ++j) {
                if (!drop[j]) {
                    seed.push_back(b[j]);
                }
            }
            if (derives_all(seed, h)) {
                best_removed = removed;
                best_mask = rm;
            }
        }
        const std::size_t total = h_size + c_size + (n - best_removed);
        if (total < best_total) {
            best_total = total;
            best.rules = h;
            best.necessary.clear();
            std::vector<char> drop(n, 0);
            for (std::size_t k = 0; k < d; ++k) {
                if (best_mask >> k & 1) {
                    drop[derivable[k]] = 1;
                }
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (!drop[j]) {
                    best.necessary.push_back(b[j]);
                }
            }
            auto cf = full.facts.facts().subspan(n);
            best.counterexamples.assign(cf.begin(), cf.end());
            best.accounting.necessary = best.necessary.size();
            best.accounting.counterexamples = c_size;
            best.accounting.hypothesis = h_size;
        }
    }
    return best;
}

}  // namespace essence::vc
