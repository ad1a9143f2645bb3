#pragma once

#include "essence/extractor.hpp"
#include "essence/kb.hpp"
#include "essence/rule.hpp"
#include "essence/search.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace essence {

inline constexpr const char* kBundleFormat = "essence-bundle/1";

class BundleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * A compressed KB as read back from disk. All facts and rules are expressed
 * over `kb.vocab()`; `kb` itself holds the necessary facts.
 */
struct Bundle {
    KnowledgeBase kb;
    std::vector<Rule> rules;
    std::vector<Fact> counterexamples;
    /// Constant domain of the original KB, as recorded in the manifest.
    std::vector<ConstantId> domain;
    nlohmann::json manifest;

    std::span<const Fact> necessary() const { return kb.facts(); }
};

namespace detail {

inline void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw BundleError("cannot write " + path.string());
    }
    for (const std::string& l : lines) {
        out << l << '\n';
    }
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw BundleError("cannot read " + path.string());
    }
    return in;
}

}  // namespace detail

inline nlohmann::json config_json(const SearchConfig& cfg) {
    return {{"beam_width", cfg.beam_width},
            {"max_rule_length", cfg.max_rule_length},
            {"min_delta", cfg.min_delta},
            {"target_relations", cfg.target_relations},
            {"use_constants", cfg.use_constants}};
}

/**
 * Writes `rules.dl`, `necessary.tsv`, `counter.tsv` and `manifest.json` into
 * `dir`. Facts are sorted bytewise. `extra` is merged into the manifest.
 */
inline void write_bundle(const std::filesystem::path& dir, const KnowledgeBase& kb, const ExtractionResult& res,
                         const SearchConfig& cfg, const VerifyReport& report, const nlohmann::json& extra = {}) {
    std::filesystem::create_directories(dir);
    const Vocabulary& vocab = kb.vocab();
    std::vector<std::string> rule_lines;
    nlohmann::json rules = nlohmann::json::array();
    for (std::size_t i = 0; i < res.rules.size(); ++i) {
        const Rule& r = res.rules[i];
        rule_lines.push_back(format_rule(r, vocab));
        nlohmann::json entry = {{"rule", rule_lines.back()}, {"length", r.length()}};
        if (i < res.rule_scores.size()) {
            const Score& s = res.rule_scores[i];
            entry["delta"] = s.delta;
            entry["new_positive"] = s.new_positive;
            entry["negative"] = s.negative;
            entry["cycle_penalty"] = s.cycle_penalty;
        }
        rules.push_back(entry);
    }
    detail::write_lines(dir / "rules.dl", rule_lines);
    detail::write_lines(dir / "necessary.tsv", sorted_tsv_lines(vocab, res.necessary));
    detail::write_lines(dir / "counter.tsv", sorted_tsv_lines(vocab, res.counterexamples));

    nlohmann::json relations = nlohmann::json::array();
    for (const Relation& r : vocab.relations()) {
        relations.push_back({{"name", r.name}, {"arity", r.arity}});
    }
    nlohmann::json constants = nlohmann::json::array();
    for (std::size_t i = 0; i < vocab.constant_count(); ++i) {
        constants.push_back(vocab.constant(static_cast<ConstantId>(i)));
    }
    const Accounting& a = res.accounting;
    nlohmann::json manifest = {
        {"format", kBundleFormat},
        {"accounting",
         {{"original", a.original},
          {"necessary", a.necessary},
          {"counterexamples", a.counterexamples},
          {"hypothesis", a.hypothesis},
          {"total", a.total()}}},
        {"config", config_json(cfg)},
        {"verification",
         {{"ok", report.ok},
          {"missing", report.missing.size()},
          {"extra", report.extra.size()},
          {"overlap", report.overlap.size()}}},
        {"rules", rules},
        {"cycle_cover", res.cycle_cover.size()},
        {"relations", relations},
        {"constants", constants},
    };
    if (extra.is_object()) {
        manifest.update(extra);
    }
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) {
        throw BundleError("cannot write " + (dir / "manifest.json").string());
    }
    out << manifest.dump(2) << '\n';
}

/**
 * Loads a bundle. Relations and constants are interned on top of `base`, so a
 * bundle can be read into the vocabulary of the KB it is compared with.
 */
inline Bundle read_bundle(const std::filesystem::path& dir, Vocabulary base = {}) {
    Bundle b;
    try {
        auto in = detail::open_in(dir / "manifest.json");
        b.manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw BundleError("malformed manifest: " + std::string(e.what()));
    }
    const nlohmann::json& m = b.manifest;
    if (!m.is_object() || !m.contains("format") || !m["format"].is_string()) {
        throw BundleError("manifest has no format tag");
    }
    std::string format = m["format"].get<std::string>();
    // Minor revisions (1.x) only add fields.
    const std::string_view version = std::string_view(format).substr(std::min(format.size(), std::size_t{15}));
    if (!format.starts_with("essence-bundle/") || !(version == "1" || version.starts_with("1."))) {
        throw BundleError("unsupported bundle format '" + format + "'");
    }
    try {
        for (const auto& r : m.at("relations")) {
            base.intern_relation(r.at("name").get<std::string>(), r.at("arity").get<std::uint32_t>());
        }
        for (const auto& c : m.at("constants")) {
            b.domain.push_back(base.intern_constant(c.get<std::string>()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw BundleError("malformed manifest: " + std::string(e.what()));
    }

    try {
        b.kb = KnowledgeBase(std::move(base));
        auto nin = detail::open_in(dir / "necessary.tsv");
        parse_into(b.kb, nin, KbFormat::Tsv);

        KnowledgeBase cex(b.kb.vocab());
        auto cin = detail::open_in(dir / "counter.tsv");
        parse_into(cex, cin, KbFormat::Tsv);
        b.counterexamples.assign(cex.facts().begin(), cex.facts().end());

        Vocabulary vocab = cex.vocab();
        auto rin = detail::open_in(dir / "rules.dl");
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(rin, line)) {
            ++lineno;
            auto text = detail::trim(line);
            if (text.empty() || text.starts_with('#') || text.starts_with('%')) {
                continue;
            }
            b.rules.push_back(parse_rule(text, vocab, lineno));
        }
        KnowledgeBase rebuilt(std::move(vocab));
        for (const Fact& f : b.kb.facts()) {
            rebuilt.add(f);
        }
        b.kb = std::move(rebuilt);
    } catch (const KbError& e) {
        throw BundleError(std::string("malformed bundle: ") + e.what());
    }
    return b;
}

/// The facts a bundle stands for: closure of N under H, minus C.
inline std::vector<Fact> decompress(const Bundle& b) {
    ClosureResult cl = closure(b.necessary(), b.rules, b.domain);
    FactSet cex(b.counterexamples.begin(), b.counterexamples.end());
    std::vector<Fact> out;
    for (const Fact& f : cl.facts.facts()) {
        if (!cex.contains(f)) {
            out.push_back(f);
        }
    }
    return out;
}

}  // namespace essence
