#include "essence/rule_space.hpp"
#include "essence/search.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>

using namespace essence;

namespace {

/// Delta of `r` against an empty state, from the naive oracle plus the cycle cover of its own proofs.
long long first_round_delta(const Rule& r, const KnowledgeBase& kb) {
    oracle::NaiveEvidence ev = oracle::naive_ground(r, kb);
    DependencyGraph g(kb.size());
    g.add_proofs(0, ground(r, kb));
    return static_cast<long long>(ev.positive.size()) - static_cast<long long>(ev.negative.size()) -
           static_cast<long long>(g.cover_cycles().size()) - static_cast<long long>(rule_cost(r));
}

struct Best {
    long long delta = std::numeric_limits<long long>::min();
    std::size_t count = 0;
};

/// Best first-round delta over every rule of the space with at least one positive.
Best exhaustive_best(const KnowledgeBase& kb, std::size_t max_len, bool constants) {
    Best best;
    ColumnConstants cols = column_constants(kb);
    for (RelationId head = 0; head < kb.vocab().relation_count(); ++head) {
        if (kb.store().of_relation(head).empty()) {
            continue;
        }
        enumerate_search_space(kb.vocab(), head, max_len, constants ? &cols : nullptr, [&](const Rule& r) {
            if (oracle::naive_ground(r, kb).positive.empty()) {
                return;
            }
            ++best.count;
            best.delta = std::max(best.delta, first_round_delta(r, kb));
        });
    }
    return best;
}

}  // namespace

TEST(Config, Validation) {
    SearchConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.beam_width = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.beam_width = 1;
    cfg.max_rule_length = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Search, ReductionPicksHighestDegreeVertex) {
    KnowledgeBase kb = oracle::load_tsv("star.tsv");
    SearchState st(kb);
    auto c = find_single_rule(st, SearchConfig{});
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(format_rule(c->rule, kb.vocab()), "edge(X0) :- v1(X0) .");
    EXPECT_EQ(c->score.delta, 3);
}

TEST(Search, SingleFactAxiomBreaksEven) {
    KnowledgeBase kb = parse_kb("p\ta\n", KbFormat::Tsv);
    SearchState st(kb);
    auto c = find_single_rule(st, SearchConfig{});
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(format_rule(c->rule, kb.vocab()), "p(X0) :- .");
    EXPECT_EQ(c->score.delta, 0);
    SearchConfig strict;
    strict.min_delta = 1;
    EXPECT_FALSE(find_single_rule(st, strict).has_value());
}

TEST(Search, EmptyKb) {
    KnowledgeBase kb;
    SearchState st(kb);
    EXPECT_FALSE(find_single_rule(st, SearchConfig{}).has_value());
}

TEST(Search, UnknownTargetRelation) {
    KnowledgeBase kb = oracle::load_tsv("family.tsv");
    SearchState st(kb);
    SearchConfig cfg;
    cfg.target_relations = {"uncle"};
    EXPECT_THROW(find_single_rule(st, cfg), KbError);
}

TEST(Search, FamilyTargetedAtFatherAndMother) {
    KnowledgeBase kb = oracle::load_tsv("family.tsv");
    SearchState st(kb);
    SearchConfig cfg;
    cfg.target_relations = {"father", "mother"};
    auto c = find_single_rule(st, cfg);
    ASSERT_TRUE(c.has_value());
    Vocabulary& v = kb.vocab();
    Fingerprint one = fingerprint(parse_rule("father(X,Y) :- parent(X,Y), male(X).", v), v);
    Fingerprint two = fingerprint(parse_rule("mother(X,Y) :- parent(X,Y), female(X).", v), v);
    EXPECT_TRUE(c->fp == one || c->fp == two) << format_rule(c->rule, v);
    EXPECT_EQ(c->score.delta, 0);
}

// Untargeted, the family KB has rules that beat the two parent rules outright.
TEST(Search, FamilyUntargetedFindsBestRule) {
    KnowledgeBase kb = oracle::load_tsv("family.tsv");
    SearchState st(kb);
    auto c = find_single_rule(st, SearchConfig{});
    ASSERT_TRUE(c.has_value());
    Best best = exhaustive_best(kb, 3, true);
    EXPECT_EQ(c->score.delta, best.delta);
    EXPECT_GT(c->score.delta, 0);
}

TEST(Search, SeenRulesAreNotReturned) {
    KnowledgeBase kb = parse_kb("p\ta\np\tb\nq\ta\nq\tb\n", KbFormat::Tsv);
    SearchState st(kb);
    SearchConfig cfg;
    auto first = find_single_rule(st, cfg);
    ASSERT_TRUE(first.has_value());
    st.accept(*first);
    while (auto next = find_single_rule(st, cfg)) {
        ASSERT_FALSE(st.seen().contains(next->fp));
        st.accept(*next);
    }
}

TEST(Search, ThreadCountDoesNotChangeResult) {
    std::mt19937 rng(51);
    for (int i = 0; i < 30; ++i) {
        KnowledgeBase kb = oracle::random_kb(rng, 30, 2 + i % 3, 3 + i % 4);
        SearchState st(kb);
        SearchConfig one;
        SearchConfig many;
        many.threads = 4;
        auto a = find_single_rule(st, one);
        auto b = find_single_rule(st, many);
        auto c = find_single_rule(st, one);
        ASSERT_EQ(a.has_value(), b.has_value());
        ASSERT_EQ(a.has_value(), c.has_value());
        if (a) {
            ASSERT_EQ(a->fp, b->fp);
            ASSERT_EQ(a->fp, c->fp);
            ASSERT_EQ(a->score.delta, b->score.delta);
        }
    }
}

TEST(Property, ReturnedRulesRespectConfig) {
    std::mt19937 rng(52);
    for (int i = 0; i < 60; ++i) {
        KnowledgeBase kb = oracle::random_kb(rng, 40, 1 + i % 5, 2 + i % 6);
        SearchConfig cfg;
        cfg.max_rule_length = 1 + i % 4;
        cfg.min_delta = (i % 3) - 1;
        cfg.beam_width = 1 + i % 6;
        SearchState st(kb);
        for (int round = 0; round < 4; ++round) {
            auto c = find_single_rule(st, cfg);
            if (!c) {
                break;
            }
            ASSERT_TRUE(in_search_space(c->rule));
            ASSERT_LE(c->rule.length(), cfg.max_rule_length);
            ASSERT_GE(c->score.delta, cfg.min_delta);
            ASSERT_GE(c->score.new_positive, 1u);
            ASSERT_EQ(c->fp, fingerprint(c->rule, kb.vocab()));
            ASSERT_FALSE(st.seen().contains(c->fp));
            st.accept(*c);
        }
    }
}

// With an unbounded beam the search is exhaustive, so it must hit the oracle's best delta.
TEST(Property, UnboundedBeamFindsTrueMaximum) {
    std::mt19937 rng(53);
    int compared = 0;
    for (int i = 0; i < 60; ++i) {
        KnowledgeBase kb = oracle::random_kb(rng, 14, 1 + i % 3, 2 + i % 3);
        SearchConfig cfg;
        cfg.beam_width = std::numeric_limits<std::size_t>::max();
        cfg.max_rule_length = 2;
        cfg.min_delta = std::numeric_limits<long long>::min() / 4;
        cfg.use_constants = i % 2 == 0;
        SearchState st(kb);
        auto c = find_single_rule(st, cfg);
        Best best = exhaustive_best(kb, 2, cfg.use_constants);
        if (best.count == 0) {
            ASSERT_FALSE(c.has_value());
            continue;
        }
        ASSERT_TRUE(c.has_value());
        ASSERT_EQ(c->score.delta, best.delta) << format_rule(c->rule, kb.vocab());
        ++compared;
    }
    EXPECT_GT(compared, 40);
}
