#pragma once

#include "essence/bundle.hpp"
#include "essence/extractor.hpp"
#include "essence/kb.hpp"
#include "essence/parallel.hpp"
#include "essence/rule_space.hpp"
#include "essence/search.hpp"
#include "essence/vc_reduction.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace essence::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kUsage = 2 };

namespace fs = std::filesystem;

/// Picks the KB grammar from the extension, falling back to sniffing the first data line.
inline KbFormat detect_format(const fs::path& path, const std::string& forced) {
    if (forced == "tsv") {
        return KbFormat::Tsv;
    }
    if (forced == "atoms") {
        return KbFormat::Atoms;
    }
    auto ext = path.extension().string();
    if (ext == ".tsv") {
        return KbFormat::Tsv;
    }
    if (ext == ".dl" || ext == ".pl" || ext == ".lp" || ext == ".atoms") {
        return KbFormat::Atoms;
    }
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        auto t = detail::trim(line);
        if (t.empty() || t.starts_with('#') || t.starts_with('%')) {
            continue;
        }
        return (t.find('\t') == std::string_view::npos && t.find('(') != std::string_view::npos) ? KbFormat::Atoms
                                                                                                 : KbFormat::Tsv;
    }
    return KbFormat::Tsv;
}

inline KnowledgeBase load_kb(const fs::path& path, const std::string& forced) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw KbError("cannot read " + path.string());
    }
    return parse_kb(in, detect_format(path, forced));
}

inline bool looks_like_reduction(const Vocabulary& vocab) {
    auto edge = vocab.find_relation("edge");
    return edge && vocab.relation(*edge).arity == 1 && vocab.find_relation("v1").has_value();
}

inline std::string format_ratio(std::size_t total, std::size_t original) {
    double ratio = original == 0 ? 1.0 : static_cast<double>(total) / static_cast<double>(original);
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << ratio;
    return os.str();
}

inline void write_output(const std::string& path, const std::vector<std::string>& lines, std::ostream& out) {
    if (path.empty()) {
        for (const std::string& l : lines) {
            out << l << '\n';
        }
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw KbError("cannot write " + path);
    }
    for (const std::string& l : lines) {
        f << l << '\n';
    }
}

/**
 * Entry point of the `essence` tool. Returns 0 on success, 1 when a
 * verification fails and 2 on usage or input errors.
 */
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Horn-rule knowledge-base compressor", "essence"};
    app.require_subcommand(1);

    std::string format;
    SearchConfig cfg;
    cfg.threads = default_thread_count();

    auto* compress = app.add_subcommand("compress", "Mine rules and write a compressed bundle");
    std::string kb_path;
    std::string out_dir;
    bool dump_graph = false;
    bool no_constants = false;
    compress->add_option("kb", kb_path, "Input KB (TSV or atoms)")->required();
    compress->add_option("--beam", cfg.beam_width, "Beam width")->check(CLI::PositiveNumber);
    compress->add_option("--max-len", cfg.max_rule_length, "Maximum rule length")->check(CLI::PositiveNumber);
    compress->add_option("--min-delta", cfg.min_delta, "Minimum size reduction for accepting a rule");
    compress->add_option("--targets", cfg.target_relations, "Only mine rules with these head relations")
        ->delimiter(',');
    compress->add_flag("--no-constants", no_constants, "Do not bind arguments to constants");
    compress->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
    compress->add_option("--out", out_dir, "Bundle directory (default: <kb>.bundle)");
    compress->add_flag("--dump-graph", dump_graph, "Also write the dependency graph as graph.tsv");
    compress->add_option("--format", format, "Input format")->check(CLI::IsMember({"tsv", "atoms"}));

    auto* decompress_cmd = app.add_subcommand("decompress", "Rebuild the facts of a bundle");
    std::string bundle_path;
    std::string out_file;
    decompress_cmd->add_option("bundle", bundle_path, "Bundle directory")->required();
    decompress_cmd->add_option("--out", out_file, "Output TSV (default: stdout)");

    auto* verify_cmd = app.add_subcommand("verify", "Check a bundle against its source KB");
    verify_cmd->add_option("kb", kb_path, "Original KB")->required();
    verify_cmd->add_option("bundle", bundle_path, "Bundle directory")->required();
    verify_cmd->add_option("--format", format, "Input format")->check(CLI::IsMember({"tsv", "atoms"}));

    auto* gen_vc = app.add_subcommand("gen-vc", "Build the compression instance of a vertex cover graph");
    std::string graph_path;
    gen_vc->add_option("graph", graph_path, "Graph file: 'n m' then m lines 'i j'")->required();
    gen_vc->add_option("--out", out_file, "Output TSV (default: stdout)");

    auto* stats_cmd = app.add_subcommand("stats", "Print relation, fact and constant counts");
    stats_cmd->add_option("kb", kb_path, "Input KB")->required();
    stats_cmd->add_option("--format", format, "Input format")->check(CLI::IsMember({"tsv", "atoms"}));

    auto* enumerate = app.add_subcommand("enumerate", "List every candidate rule up to a length with its score");
    std::size_t enum_len = 0;
    enumerate->add_option("kb", kb_path, "Input KB")->required();
    enumerate->add_option("--max-len", enum_len, "Maximum rule length")->required()->check(CLI::PositiveNumber);
    enumerate->add_flag("--no-constants", no_constants, "Do not bind arguments to constants");
    enumerate->add_option("--format", format, "Input format")->check(CLI::IsMember({"tsv", "atoms"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }

    try {
        if (compress->parsed()) {
            cfg.use_constants = !no_constants;
            cfg.validate();
            KnowledgeBase kb = load_kb(kb_path, format);
            auto t0 = std::chrono::steady_clock::now();
            ExtractionResult res = extract(kb, cfg);
            VerifyReport report = verify(kb, res);
            auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const Accounting& a = res.accounting;

            nlohmann::json extra = nlohmann::json::object();
            extra["source"] = fs::path(kb_path).filename().string();
            std::vector<std::uint32_t> cover;
            if (looks_like_reduction(kb.vocab())) {
                cover = vc::cover_from_rules(res.rules, kb.vocab());
                extra["vertex_cover"] = cover;
            }
            fs::path dir = out_dir.empty() ? fs::path(kb_path + ".bundle") : fs::path(out_dir);
            write_bundle(dir, kb, res, cfg, report, extra);
            if (dump_graph) {
                std::ofstream g(dir / "graph.tsv", std::ios::binary);
                res.graph.dump(g, kb);
            }

            out << a.original << " → " << a.necessary << " + " << a.counterexamples << " + " << a.hypothesis
                << " (ratio " << format_ratio(a.total(), a.original) << ")\n";
            for (const Rule& r : res.rules) {
                out << "  " << format_rule(r, kb.vocab()) << '\n';
            }
            if (looks_like_reduction(kb.vocab())) {
                out << "vertex cover from rules: {";
                for (std::size_t i = 0; i < cover.size(); ++i) {
                    out << (i ? ", " : "") << vc::vertex_relation(cover[i]);
                }
                out << "}\n";
            }
            out << "verification: " << (report.ok ? "ok" : "FAILED") << " (" << std::fixed << std::setprecision(3)
                << secs << " s)\n";
            out << "bundle: " << dir.string() << '\n';
            return report.ok ? kOk : kVerifyFailed;
        }

        if (decompress_cmd->parsed()) {
            Bundle b = read_bundle(bundle_path);
            std::vector<Fact> facts = decompress(b);
            write_output(out_file, sorted_tsv_lines(b.kb.vocab(), facts), out);
            return kOk;
        }

        if (verify_cmd->parsed()) {
            KnowledgeBase kb = load_kb(kb_path, format);
            auto domain = kb.vocab().domain();
            Bundle b = read_bundle(bundle_path, kb.vocab());
            // The bundle vocabulary extends the KB one, so fact ids line up.
            VerifyReport rep = verify(kb.store(), b.necessary(), b.rules, b.counterexamples, domain);
            if (rep.ok) {
                out << "ok: " << kb.size() << " facts and " << b.counterexamples.size()
                    << " counterexamples reproduced exactly\n";
                return kOk;
            }
            out << "FAILED: " << rep.missing.size() << " missing, " << rep.extra.size() << " extra, "
                << rep.overlap.size() << " counterexamples inside the KB\n";
            for (const Fact& f : rep.missing) {
                out << "  missing\t" << format_fact_tsv(b.kb.vocab(), f) << '\n';
            }
            for (const Fact& f : rep.extra) {
                out << "  extra\t" << format_fact_tsv(b.kb.vocab(), f) << '\n';
            }
            for (const Fact& f : rep.overlap) {
                out << "  overlap\t" << format_fact_tsv(b.kb.vocab(), f) << '\n';
            }
            return kVerifyFailed;
        }

        if (gen_vc->parsed()) {
            std::ifstream in(graph_path);
            if (!in) {
                throw KbError("cannot read " + graph_path);
            }
            KnowledgeBase kb = vc::graph_to_kb(vc::parse_graph(in));
            if (out_file.empty()) {
                write_kb_tsv(out, kb);
            } else {
                std::ofstream f(out_file, std::ios::binary);
                if (!f) {
                    throw KbError("cannot write " + out_file);
                }
                write_kb_tsv(f, kb);
            }
            return kOk;
        }

        if (stats_cmd->parsed()) {
            KbStats s = stats(load_kb(kb_path, format));
            out << "relations\t" << s.relations << '\n';
            out << "facts\t" << s.facts << '\n';
            out << "constants\t" << s.constants << '\n';
            for (const auto& [name, count] : s.per_relation) {
                out << "relation\t" << name << '\t' << count << '\n';
            }
            return kOk;
        }

        if (enumerate->parsed()) {
            KnowledgeBase kb = load_kb(kb_path, format);
            auto columns = column_constants(kb);
            std::unordered_set<FactId> none;
            std::vector<std::pair<std::string, std::string>> rows;
            for (RelationId head = 0; head < kb.vocab().relation_count(); ++head) {
                enumerate_search_space(kb.vocab(), head, enum_len, no_constants ? nullptr : &columns,
                                       [&](const Rule& r) {
                                           Evidence ev = ground(r, kb);
                                           Score s = score(ev, none, r);
                                           std::ostringstream line;
                                           line << s.delta << '\t' << r.length() << '\t' << s.new_positive << '\t'
                                                << s.negative << '\t' << format_rule(r, kb.vocab());
                                           rows.emplace_back(fingerprint(r, kb.vocab()).canonical, line.str());
                                       });
            }
            std::sort(rows.begin(), rows.end());
            out << "delta\tlength\tpositive\tnegative\trule\n";
            for (const auto& [fp, line] : rows) {
                out << line << '\n';
            }
            return kOk;
        }
    } catch (const KbError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const BundleError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace essence::cli
