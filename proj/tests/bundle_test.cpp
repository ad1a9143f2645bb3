#include "essence/bundle.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

using namespace essence;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        out.push_back(line);
    }
    return out;
}

void write_manifest(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    out << j.dump();
}

}  // namespace

TEST(Bundle, LayoutAndManifest) {
    TempDir tmp;
    KnowledgeBase kb = oracle::load_tsv("family.tsv");
    SearchConfig cfg;
    ExtractionResult res = extract(kb, cfg);
    VerifyReport rep = verify(kb, res);
    write_bundle(tmp.path(), kb, res, cfg, rep, {{"source", "family.tsv"}});

    for (const char* name : {"rules.dl", "necessary.tsv", "counter.tsv", "manifest.json"}) {
        EXPECT_TRUE(std::filesystem::exists(tmp.path() / name)) << name;
    }
    auto necessary = read_lines(tmp / "necessary.tsv");
    EXPECT_TRUE(std::is_sorted(necessary.begin(), necessary.end()));
    EXPECT_EQ(necessary.size(), res.necessary.size());
    EXPECT_EQ(read_lines(tmp / "rules.dl").size(), res.rules.size());

    std::ifstream in(tmp / "manifest.json");
    nlohmann::json m = nlohmann::json::parse(in);
    EXPECT_EQ(m["format"], kBundleFormat);
    EXPECT_EQ(m["accounting"]["original"], 18);
    EXPECT_EQ(m["accounting"]["total"], res.accounting.total());
    EXPECT_EQ(m["verification"]["ok"], true);
    EXPECT_EQ(m["config"]["beam_width"], 5);
    EXPECT_EQ(m["source"], "family.tsv");
    EXPECT_EQ(m["rules"].size(), res.rules.size());
}

TEST(Bundle, ReadBackAndDecompress) {
    TempDir tmp;
    KnowledgeBase kb = oracle::load_tsv("star.tsv");
    SearchConfig cfg;
    ExtractionResult res = extract(kb, cfg);
    write_bundle(tmp.path(), kb, res, cfg, verify(kb, res));

    Bundle b = read_bundle(tmp.path());
    EXPECT_EQ(b.rules.size(), res.rules.size());
    EXPECT_EQ(b.necessary().size(), res.necessary.size());
    EXPECT_EQ(b.domain.size(), kb.vocab().constant_count());
    std::vector<Fact> facts = decompress(b);
    EXPECT_EQ(sorted_tsv_lines(b.kb.vocab(), facts), sorted_tsv_lines(kb.vocab(), kb.facts()));
}

TEST(Bundle, ReadIntoExistingVocabularyKeepsIds) {
    TempDir tmp;
    KnowledgeBase kb = oracle::load_tsv("family.tsv");
    SearchConfig cfg;
    ExtractionResult res = extract(kb, cfg);
    write_bundle(tmp.path(), kb, res, cfg, verify(kb, res));
    Bundle b = read_bundle(tmp.path(), kb.vocab());
    auto domain = kb.vocab().domain();
    EXPECT_TRUE(verify(kb.store(), b.necessary(), b.rules, b.counterexamples, domain).ok);
}

TEST(Bundle, CounterexamplesSurviveRoundTrip) {
    std::mt19937 rng(81);
    int with_counterexamples = 0;
    for (int i = 0; i < 40; ++i) {
        TempDir tmp;
        KnowledgeBase kb = oracle::random_kb(rng, 40, 1 + i % 4, 2 + i % 5);
        SearchConfig cfg;
        ExtractionResult res = extract(kb, cfg);
        write_bundle(tmp.path(), kb, res, cfg, verify(kb, res));
        Bundle b = read_bundle(tmp.path());
        with_counterexamples += b.counterexamples.empty() ? 0 : 1;
        ASSERT_EQ(sorted_tsv_lines(b.kb.vocab(), decompress(b)), sorted_tsv_lines(kb.vocab(), kb.facts()));
    }
    RecordProperty("bundles_with_counterexamples", with_counterexamples);
}

TEST(Bundle, RejectsBadInput) {
    TempDir tmp;
    EXPECT_THROW(read_bundle(tmp.path()), BundleError);

    KnowledgeBase kb = parse_kb("p\ta\n", KbFormat::Tsv);
    SearchConfig cfg;
    ExtractionResult res = extract(kb, cfg);
    write_bundle(tmp.path(), kb, res, cfg, verify(kb, res));

    std::ifstream in(tmp / "manifest.json");
    nlohmann::json m = nlohmann::json::parse(in);
    in.close();

    nlohmann::json future = m;
    future["format"] = "essence-bundle/2";
    write_manifest(tmp / "manifest.json", future);
    EXPECT_THROW(read_bundle(tmp.path()), BundleError);

    nlohmann::json minor = m;
    minor["format"] = "essence-bundle/1.3";
    minor["unknown_field"] = 7;
    write_manifest(tmp / "manifest.json", minor);
    EXPECT_NO_THROW(read_bundle(tmp.path()));

    std::ofstream(tmp / "manifest.json") << "{ not json";
    EXPECT_THROW(read_bundle(tmp.path()), BundleError);

    write_manifest(tmp / "manifest.json", m);
    std::ofstream(tmp / "rules.dl") << "p(X :- .\n";
    EXPECT_THROW(read_bundle(tmp.path()), BundleError);
}
