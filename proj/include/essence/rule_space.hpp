#pragma once

#include "essence/kb.hpp"
#include "essence/rule.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace essence {

/**
 * Enumerates every rule in the pruned space with the given head relation and
 * length at most `max_len`, straight from the definition: pick a multiset of
 * body relations, partition all argument positions into variables, then bind
 * some singleton positions to constants from `constants` (if given). Each
 * rule is reported once, by fingerprint. Independent of `extensions()`.
 */
inline void enumerate_search_space(const Vocabulary& vocab, RelationId head, std::size_t max_len,
                                   const ColumnConstants* constants, const std::function<void(const Rule&)>& visit) {
    FingerprintSet seen;
    const std::size_t rel_count = vocab.relation_count();

    std::vector<RelationId> body_rels;
    std::vector<ArgLocation> positions;
    std::vector<std::uint32_t> block;  // restricted growth string over positions
    std::vector<std::uint32_t> block_size;

    auto build = [&](const std::vector<std::uint32_t>& blocks, const std::vector<std::int64_t>& binding) {
        std::vector<Atom> atoms;
        atoms.push_back(Atom{head, std::vector<Term>(vocab.relation(head).arity)});
        for (RelationId r : body_rels) {
            atoms.push_back(Atom{r, std::vector<Term>(vocab.relation(r).arity)});
        }
        for (std::size_t p = 0; p < positions.size(); ++p) {
            Term t = binding[blocks[p]] >= 0 ? Term::constant(static_cast<ConstantId>(binding[blocks[p]]))
                                             : Term::var(blocks[p]);
            atoms[positions[p].atom].args[positions[p].arg] = t;
        }
        Atom h = std::move(atoms.front());
        atoms.erase(atoms.begin());
        Rule r(std::move(h), std::move(atoms));
        if (in_search_space(r) && seen.insert(fingerprint(r, vocab)).second) {
            visit(r);
        }
    };

    // Binds constants to a subset of singleton blocks, respecting the length budget.
    auto bind_constants = [&](std::uint32_t blocks_used, std::size_t budget) {
        std::vector<std::uint32_t> singles;
        for (std::uint32_t b = 0; b < blocks_used; ++b) {
            if (block_size[b] == 1) {
                singles.push_back(b);
            }
        }
        std::vector<std::uint32_t> owner(blocks_used, 0);
        for (std::size_t p = 0; p < positions.size(); ++p) {
            owner[block[p]] = static_cast<std::uint32_t>(p);
        }
        std::vector<std::int64_t> binding(blocks_used, -1);
        auto rec = [&](auto&& self, std::size_t i, std::size_t left) -> void {
            if (i == singles.size()) {
                build(block, binding);
                return;
            }
            self(self, i + 1, left);
            if (left == 0 || constants == nullptr) {
                return;
            }
            const ArgLocation& loc = positions[owner[singles[i]]];
            RelationId rel = loc.atom == 0 ? head : body_rels[loc.atom - 1];
            for (ConstantId c : (*constants)[rel][loc.arg]) {
                binding[singles[i]] = c;
                self(self, i + 1, left - 1);
            }
            binding[singles[i]] = -1;
        };
        rec(rec, 0, budget);
    };

    auto partitions = [&](auto&& self, std::size_t p, std::uint32_t blocks_used, std::size_t merges) -> void {
        if (p == positions.size()) {
            bind_constants(blocks_used, max_len - merges);
            return;
        }
        for (std::uint32_t b = 0; b < blocks_used; ++b) {
            if (merges + 1 > max_len) {
                break;
            }
            block[p] = b;
            ++block_size[b];
            self(self, p + 1, blocks_used, merges + 1);
            --block_size[b];
        }
        block[p] = blocks_used;
        block_size[blocks_used] = 1;
        self(self, p + 1, blocks_used + 1, merges);
        block_size[blocks_used] = 0;
    };

    // Every body atom needs at least one merge to be linked, so |body| <= max_len.
    auto bodies = [&](auto&& self, RelationId from, std::size_t left) -> void {
        positions.clear();
        for (std::uint32_t k = 0; k < vocab.relation(head).arity; ++k) {
            positions.push_back({0, k});
        }
        for (std::uint32_t i = 0; i < body_rels.size(); ++i) {
            for (std::uint32_t k = 0; k < vocab.relation(body_rels[i]).arity; ++k) {
                positions.push_back({i + 1, k});
            }
        }
        block.assign(positions.size(), 0);
        block_size.assign(positions.size() + 1, 0);
        partitions(partitions, 0, 0, 0);
        if (left == 0) {
            return;
        }
        for (RelationId r = from; r < rel_count; ++r) {
            body_rels.push_back(r);
            self(self, r, left - 1);
            body_rels.pop_back();
        }
    };
    bodies(bodies, 0, max_len);
}

/// Convenience wrapper collecting the enumeration into a vector.
inline std::vector<Rule> search_space(const Vocabulary& vocab, RelationId head, std::size_t max_len,
                                      const ColumnConstants* constants = nullptr) {
    std::vector<Rule> out;
    enumerate_search_space(vocab, head, max_len, constants, [&](const Rule& r) { out.push_back(r); });
    return out;
}

}  // namespace essence
