#include "essence/kb.hpp"
#include "essence/vc_reduction.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace essence;

namespace {

KnowledgeBase family() { return oracle::load_tsv("family.tsv"); }

std::size_t line_of(const std::string& text, KbFormat format) {
    try {
        parse_kb(text, format);
    } catch (const KbError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST(Parse, FamilyTableCounts) {
    KnowledgeBase kb = family();
    KbStats s = stats(kb);
    EXPECT_EQ(s.relations, 5u);
    EXPECT_EQ(s.facts, 18u);
    EXPECT_EQ(s.constants, 6u);
    std::vector<std::pair<std::string, std::size_t>> expected{
        {"parent", 6}, {"father", 3}, {"mother", 3}, {"male", 4}, {"female", 2}};
    EXPECT_EQ(s.per_relation, expected);
}

TEST(Parse, EmptyInput) {
    KbStats s = stats(parse_kb("", KbFormat::Tsv));
    EXPECT_EQ(s.relations, 0u);
    EXPECT_EQ(s.facts, 0u);
    EXPECT_EQ(s.constants, 0u);
    EXPECT_TRUE(s.per_relation.empty());
}

TEST(Parse, DuplicateLinesMerge) {
    KnowledgeBase kb = parse_kb("male\tharry\nmale\tharry\n", KbFormat::Tsv);
    EXPECT_EQ(kb.size(), 1u);
}

TEST(Parse, CommentsAndBlankLines) {
    KnowledgeBase kb = parse_kb("# header\n\nmale\tharry\n  \n# another\nfemale\tlily\n", KbFormat::Tsv);
    EXPECT_EQ(kb.size(), 2u);
}

TEST(Parse, CrLfLineEndings) {
    KnowledgeBase kb = parse_kb("male\tharry\r\nfemale\tlily\r\n", KbFormat::Tsv);
    EXPECT_TRUE(kb.contains("male", {"harry"}));
    EXPECT_TRUE(kb.contains("female", {"lily"}));
}

TEST(Parse, ArityMismatchReportsLine) {
    EXPECT_EQ(line_of("parent\ta\tb\nmale\ta\nparent\ta\n", KbFormat::Tsv), 3u);
    EXPECT_EQ(line_of("p(a,b).\np(a).\n", KbFormat::Atoms), 2u);
}

TEST(Parse, EmptyRelationName) {
    EXPECT_THROW(parse_kb("\ta\n", KbFormat::Tsv), KbError);
    EXPECT_THROW(parse_kb("(a).\n", KbFormat::Atoms), KbError);
}

TEST(Parse, MalformedLines) {
    EXPECT_THROW(parse_kb("male\n", KbFormat::Tsv), KbError);
    EXPECT_THROW(parse_kb("male\t\n", KbFormat::Tsv), KbError);
    EXPECT_THROW(parse_kb("male(harry)\n", KbFormat::Atoms), KbError);
    EXPECT_THROW(parse_kb("male(Harry).\n", KbFormat::Atoms), KbError);
    EXPECT_THROW(parse_kb("male(harry). x\n", KbFormat::Atoms), KbError);
    EXPECT_THROW(parse_kb("male().\n", KbFormat::Atoms), KbError);
    EXPECT_THROW(parse_kb("male('harry).\n", KbFormat::Atoms), KbError);
    EXPECT_THROW(parse_kb("#!relation\tp\n", KbFormat::Tsv), KbError);
    EXPECT_THROW(parse_kb("#!relation\tp\t0\n", KbFormat::Tsv), KbError);
    EXPECT_THROW(parse_kb("#!bogus\tp\n", KbFormat::Tsv), KbError);
}

TEST(Parse, AtomsFormat) {
    KnowledgeBase kb = parse_kb("% comment\nparent(james, harry).\nmale('Sirius Black').\nq(it's, 'a\\'b').\n",
                                KbFormat::Atoms);
    EXPECT_EQ(kb.size(), 3u);
    EXPECT_TRUE(kb.contains("parent", {"james", "harry"}));
    EXPECT_TRUE(kb.contains("male", {"Sirius Black"}));
    EXPECT_TRUE(kb.contains("q", {"it's", "a'b"}));
}

TEST(Parse, FormatsAgree) {
    KnowledgeBase tsv = family();
    std::string atoms;
    for (const Fact& f : tsv.facts()) {
        atoms += format_fact_atom(tsv.vocab(), f) + ".\n";
    }
    KnowledgeBase parsed = parse_kb(atoms, KbFormat::Atoms);
    EXPECT_EQ(sorted_tsv_lines(tsv.vocab(), tsv.facts()), sorted_tsv_lines(parsed.vocab(), parsed.facts()));
}

TEST(Parse, DirectivesDeclareRelationsAndConstants) {
    KnowledgeBase kb = parse_kb("#!relation\tv9\t1\n#!constant\td_1\td_2\nedge\tc_1\n", KbFormat::Tsv);
    EXPECT_EQ(kb.vocab().relation_count(), 2u);
    EXPECT_EQ(kb.vocab().constant_count(), 3u);
    EXPECT_FALSE(kb.contains("v9", {"c_1"}));
}

TEST(Contains, FamilyExamples) {
    KnowledgeBase kb = family();
    EXPECT_TRUE(kb.contains("father", {"james", "harry"}));
    EXPECT_FALSE(kb.contains("father", {"lily", "harry"}));
    EXPECT_TRUE(kb.contains("mother", {"ginny", "albus"}));
    EXPECT_FALSE(kb.contains("male", {"voldemort"}));
}

TEST(Contains, UnknownRelationIsAnError) {
    KnowledgeBase kb = family();
    EXPECT_THROW(kb.contains("uncle", {"james", "harry"}), KbError);
    EXPECT_THROW(kb.contains(Fact{99, {0, 1}}), KbError);
    EXPECT_THROW(kb.contains("male", {"james", "harry"}), KbError);
}

TEST(Stats, ReductionExample) {
    KbStats s = stats(oracle::load_tsv("star.tsv"));
    EXPECT_EQ(s.relations, 4u);
    EXPECT_EQ(s.facts, 17u);
}

TEST(Add, ValidatesFacts) {
    KnowledgeBase kb = family();
    RelationId male = *kb.vocab().find_relation("male");
    EXPECT_THROW(kb.add(Fact{male, {0, 1}}), KbError);
    EXPECT_THROW(kb.add(Fact{male, {1000}}), KbError);
    EXPECT_FALSE(kb.add(Fact{male, {*kb.vocab().find_constant("james")}}));
}

TEST(Vocabulary, InternIsBijective) {
    Vocabulary v;
    ConstantId a = v.intern_constant("a");
    ConstantId b = v.intern_constant("b");
    EXPECT_NE(a, b);
    EXPECT_EQ(v.intern_constant("a"), a);
    EXPECT_EQ(v.constant(b), "b");
    EXPECT_EQ(v.find_constant("c"), std::nullopt);
}

TEST(FactStore, TruncateRestoresIndices) {
    KnowledgeBase kb = family();
    FactStore s = kb.store();
    RelationId male = *kb.vocab().find_relation("male");
    ConstantId lily = *kb.vocab().find_constant("lily");
    s.insert(Fact{male, {lily}});
    EXPECT_EQ(s.with_arg(male, 0, lily).size(), 1u);
    s.truncate(kb.size());
    EXPECT_EQ(s.size(), 18u);
    EXPECT_TRUE(s.with_arg(male, 0, lily).empty());
    EXPECT_FALSE(s.contains(Fact{male, {lily}}));
    EXPECT_EQ(s.of_relation(male).size(), 4u);
}

TEST(ColumnConstants, DistinctPerPosition) {
    KnowledgeBase kb = family();
    ColumnConstants cols = column_constants(kb);
    RelationId father = *kb.vocab().find_relation("father");
    EXPECT_EQ(cols[father][0].size(), 2u);  // james, harry
    EXPECT_EQ(cols[father][1].size(), 3u);  // harry, sirius, albus
}

// Property: serialize then parse keeps the fact set, the signature and the constant domain.
TEST(Property, SerializeParseRoundTrip) {
    std::mt19937 rng(11);
    for (int i = 0; i < 200; ++i) {
        KnowledgeBase kb = oracle::random_kb(rng, 40, 1 + i % 5, 1 + i % 9, 3);
        kb.vocab().intern_relation("unused", 2);
        kb.vocab().intern_constant("lonely");
        std::ostringstream out;
        write_kb_tsv(out, kb);
        KnowledgeBase back = parse_kb(out.str(), KbFormat::Tsv);
        ASSERT_EQ(oracle::fact_set(kb.facts()), oracle::fact_set(back.facts()));
        ASSERT_EQ(back.vocab().relation_count(), kb.vocab().relation_count());
        ASSERT_EQ(back.vocab().constant_count(), kb.vocab().constant_count());
    }
}

// Property: exactly |facts| atoms of the signature over the domain are true.
TEST(Property, ContainsCountsExactlyTheFacts) {
    std::mt19937 rng(12);
    for (int i = 0; i < 50; ++i) {
        KnowledgeBase kb = oracle::random_kb(rng, 30, 1 + i % 4, 1 + i % 5);
        std::size_t d = kb.vocab().constant_count();
        std::size_t trues = 0;
        for (RelationId r = 0; r < kb.vocab().relation_count(); ++r) {
            std::uint32_t arity = kb.vocab().relation(r).arity;
            std::vector<ConstantId> args(arity, 0);
            while (true) {
                trues += kb.contains(Fact{r, args}) ? 1 : 0;
                std::size_t k = 0;
                while (k < arity && ++args[k] == d) {
                    args[k++] = 0;
                }
                if (k == arity) {
                    break;
                }
            }
        }
        ASSERT_EQ(trues, kb.size());
    }
}
