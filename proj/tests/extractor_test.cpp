#include "essence/extractor.hpp"
#include "essence/vc_reduction.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace essence;

namespace {

std::set<Fingerprint> fingerprints(const std::vector<Rule>& rules, const Vocabulary& v) {
    std::set<Fingerprint> out;
    for (const Rule& r : rules) {
        out.insert(fingerprint(r, v));
    }
    return out;
}

void check_invariants(const KnowledgeBase& kb, const ExtractionResult& res) {
    VerifyReport rep = verify(kb, res);
    ASSERT_TRUE(rep.ok) << rep.missing.size() << " missing, " << rep.extra.size() << " extra";
    const Accounting& a = res.accounting;
    ASSERT_EQ(a.original, kb.size());
    ASSERT_EQ(a.necessary, res.necessary.size());
    ASSERT_EQ(a.counterexamples, res.counterexamples.size());
    ASSERT_EQ(a.hypothesis, hypothesis_size(res.rules));
    ASSERT_LE(a.total(), a.original);
    for (const Fact& f : res.necessary) {
        ASSERT_TRUE(kb.store().contains(f));
    }
    for (const Fact& f : res.counterexamples) {
        ASSERT_FALSE(kb.store().contains(f));
    }
    ASSERT_EQ(oracle::fact_set(res.necessary).size(), res.necessary.size());
    ASSERT_EQ(oracle::fact_set(res.counterexamples).size(), res.counterexamples.size());
    // The accepted deltas account for the whole size reduction.
    long long sum = 0;
    for (const Score& s : res.rule_scores) {
        sum += s.delta;
    }
    ASSERT_EQ(sum, static_cast<long long>(a.original) - static_cast<long long>(a.total()));
    // Independent check of losslessness with the naive closure.
    std::set<Fact> want = oracle::fact_set(kb.facts());
    want.insert(res.counterexamples.begin(), res.counterexamples.end());
    ASSERT_EQ(oracle::naive_closure(res.necessary, res.rules, kb.vocab()), want);
}

}  // namespace

TEST(Extract, FamilyTargetedReproducesParentRules) {
    KnowledgeBase kb = oracle::load_tsv("family.tsv");
    SearchConfig cfg;
    cfg.target_relations = {"father", "mother"};
    ExtractionResult res = extract(kb, cfg);
    Vocabulary v = kb.vocab();
    std::set<Fingerprint> want{fingerprint(parse_rule("father(X,Y) :- parent(X,Y), male(X).", v), v),
                               fingerprint(parse_rule("mother(X,Y) :- parent(X,Y), female(X).", v), v)};
    EXPECT_EQ(fingerprints(res.rules, kb.vocab()), want);
    EXPECT_EQ(res.necessary.size(), 12u);
    for (const Fact& f : res.necessary) {
        const std::string& rel = kb.vocab().relation(f.relation).name;
        EXPECT_TRUE(rel == "parent" || rel == "male" || rel == "female");
    }
    EXPECT_TRUE(res.counterexamples.empty());
    EXPECT_EQ(res.accounting.total(), 18u);
    check_invariants(kb, res);
}

TEST(Extract, FamilyDefaultsCompressBelowOriginal) {
    KnowledgeBase kb = oracle::load_tsv("family.tsv");
    ExtractionResult res = extract(kb, SearchConfig{});
    check_invariants(kb, res);
    EXPECT_LT(res.accounting.total(), 18u);
}

TEST(Extract, ReductionUsesOnlyVertexOne) {
    KnowledgeBase kb = oracle::load_tsv("star.tsv");
    ExtractionResult res = extract(kb, SearchConfig{});
    check_invariants(kb, res);
    EXPECT_EQ(vc::cover_from_rules(res.rules, kb.vocab()), (std::vector<std::uint32_t>{1}));
    ASSERT_FALSE(res.rules.empty());
    EXPECT_EQ(format_rule(res.rules[0], kb.vocab()), "edge(X0) :- v1(X0) .");
}

TEST(Extract, EmptyKb) {
    KnowledgeBase kb;
    ExtractionResult res = extract(kb, SearchConfig{});
    EXPECT_TRUE(res.rules.empty());
    EXPECT_TRUE(res.necessary.empty());
    EXPECT_TRUE(res.counterexamples.empty());
    EXPECT_EQ(res.accounting.total(), 0u);
    EXPECT_TRUE(verify(kb, res).ok);
}

TEST(Extract, CycleCoverEntersNecessary) {
    // A symmetric relation: e(X,Y) :- e(Y,X) proves each fact from its mirror image.
    KnowledgeBase kb = parse_kb("e\ta\tb\ne\tb\ta\ne\tc\td\ne\td\tc\ne\tf\tg\ne\tg\tf\n", KbFormat::Tsv);
    ExtractionResult res = extract(kb, SearchConfig{});
    check_invariants(kb, res);
    EXPECT_EQ(res.cycle_cover.size(), 3u);
    EXPECT_LE(res.accounting.total(), 5u);
}

TEST(Verify, MissingFact) {
    KnowledgeBase kb = oracle::load_tsv("family.tsv");
    Fact fjh{*kb.vocab().find_relation("father"),
             {*kb.vocab().find_constant("james"), *kb.vocab().find_constant("harry")}};
    std::vector<Fact> n;
    for (const Fact& f : kb.facts()) {
        if (f != fjh) {
            n.push_back(f);
        }
    }
    auto domain = kb.vocab().domain();
    VerifyReport rep = verify(kb.store(), n, {}, {}, domain);
    EXPECT_FALSE(rep.ok);
    EXPECT_EQ(rep.missing, (std::vector<Fact>{fjh}));
    EXPECT_TRUE(rep.extra.empty());
}

TEST(Verify, SpuriousAxiomInflates) {
    KnowledgeBase kb = oracle::load_tsv("family.tsv");
    std::vector<Rule> h{parse_rule("male(X) :- .", kb.vocab())};
    std::vector<Fact> n(kb.facts().begin(), kb.facts().end());
    auto domain = kb.vocab().domain();
    VerifyReport rep = verify(kb.store(), n, h, {}, domain);
    EXPECT_FALSE(rep.ok);
    EXPECT_EQ(rep.extra.size(), 2u);  // male(lily), male(ginny)
    EXPECT_TRUE(rep.missing.empty());
}

TEST(Verify, CounterexampleInsideKb) {
    KnowledgeBase kb = parse_kb("p\ta\n", KbFormat::Tsv);
    std::vector<Fact> n(kb.facts().begin(), kb.facts().end());
    auto domain = kb.vocab().domain();
    VerifyReport rep = verify(kb.store(), n, {}, n, domain);
    EXPECT_FALSE(rep.ok);
    EXPECT_EQ(rep.overlap.size(), 1u);
}

TEST(Property, RandomKbsRoundTrip) {
    std::mt19937 rng(61);
    for (int i = 0; i < 120; ++i) {
        KnowledgeBase kb = oracle::random_kb(rng, 50, 1 + i % 5, 2 + i % 8);
        SearchConfig cfg;
        cfg.beam_width = 1 + i % 5;
        cfg.max_rule_length = 1 + i % 4;
        ExtractionResult res = extract(kb, cfg);
        ASSERT_NO_FATAL_FAILURE(check_invariants(kb, res)) << "instance " << i;
    }
}

TEST(Property, ProvabilityMarkingCoversB) {
    std::mt19937 rng(62);
    for (int i = 0; i < 60; ++i) {
        KnowledgeBase kb = oracle::random_kb(rng, 40, 1 + i % 4, 2 + i % 6);
        ExtractionResult res = extract(kb, SearchConfig{});
        std::vector<FactId> seeds;
        for (const Fact& f : res.necessary) {
            seeds.push_back(*kb.store().find(f));
        }
        auto marked = res.graph.mark_provable(seeds);
        ASSERT_TRUE(std::all_of(marked.begin(), marked.end(), [](char c) { return c != 0; }));
    }
}

TEST(Property, Deterministic) {
    std::mt19937 rng(63);
    for (int i = 0; i < 20; ++i) {
        KnowledgeBase kb = oracle::random_kb(rng, 40, 2 + i % 4, 3 + i % 5);
        SearchConfig a;
        SearchConfig b;
        b.threads = 3;
        ExtractionResult x = extract(kb, a);
        ExtractionResult y = extract(kb, b);
        ASSERT_EQ(x.rules, y.rules);
        ASSERT_EQ(x.necessary, y.necessary);
        ASSERT_EQ(x.counterexamples, y.counterexamples);
    }
}
