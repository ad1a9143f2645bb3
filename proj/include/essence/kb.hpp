#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace essence {

using ConstantId = std::uint32_t;
using RelationId = std::uint32_t;
using FactId = std::uint32_t;

/**
 * Raised for malformed input, arity conflicts and lookups of unknown relations.
 * `line()` is 0 when the error is not tied to an input line.
 */
class KbError : public std::runtime_error {
public:
    explicit KbError(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(line == 0 ? msg : "line " + std::to_string(line) + ": " + msg), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct Relation {
    std::string name;
    std::uint32_t arity = 0;
};

/// Ground atom: relation applied to constants.
struct Fact {
    RelationId relation = 0;
    std::vector<ConstantId> args;

    friend bool operator==(const Fact&, const Fact&) = default;
    friend auto operator<=>(const Fact&, const Fact&) = default;
};

struct FactHash {
    std::size_t operator()(const Fact& f) const noexcept {
        std::size_t h = std::hash<std::uint32_t>{}(f.relation) * 0x9e3779b97f4a7c15ULL;
        for (ConstantId c : f.args) {
            h ^= std::hash<std::uint32_t>{}(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }
};

using FactSet = std::unordered_set<Fact, FactHash>;

/**
 * Relation signature plus the constant intern table. Constant ids are dense and
 * handed out in first-seen order; every interned constant belongs to the domain
 * over which unsafe head variables and counterexamples range.
 */
class Vocabulary {
public:
    RelationId intern_relation(std::string_view name, std::uint32_t arity, std::size_t line = 0) {
        if (name.empty()) {
            throw KbError("empty relation name", line);
        }
        if (arity == 0) {
            throw KbError("relation '" + std::string(name) + "' has arity 0", line);
        }
        auto it = relation_ids_.find(std::string(name));
        if (it != relation_ids_.end()) {
            const Relation& rel = relations_[it->second];
            if (rel.arity != arity) {
                throw KbError("arity mismatch for '" + rel.name + "': expected " + std::to_string(rel.arity) +
                                  ", got " + std::to_string(arity),
                              line);
            }
            return it->second;
        }
        auto id = static_cast<RelationId>(relations_.size());
        relations_.push_back(Relation{std::string(name), arity});
        relation_ids_.emplace(std::string(name), id);
        return id;
    }

    ConstantId intern_constant(std::string_view name) {
        auto it = constant_ids_.find(std::string(name));
        if (it != constant_ids_.end()) {
            return it->second;
        }
        auto id = static_cast<ConstantId>(constants_.size());
        constants_.emplace_back(name);
        constant_ids_.emplace(std::string(name), id);
        return id;
    }

    std::optional<RelationId> find_relation(std::string_view name) const {
        auto it = relation_ids_.find(std::string(name));
        if (it == relation_ids_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    std::optional<ConstantId> find_constant(std::string_view name) const {
        auto it = constant_ids_.find(std::string(name));
        if (it == constant_ids_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    const Relation& relation(RelationId id) const { return relations_.at(id); }
    const std::string& constant(ConstantId id) const { return constants_.at(id); }
    std::span<const Relation> relations() const { return relations_; }
    std::size_t relation_count() const { return relations_.size(); }
    std::size_t constant_count() const { return constants_.size(); }

    /// All interned constants, in id order.
    std::vector<ConstantId> domain() const {
        std::vector<ConstantId> out(constants_.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = static_cast<ConstantId>(i);
        }
        return out;
    }

private:
    std::vector<Relation> relations_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::vector<std::string> constants_;
    std::unordered_map<std::string, ConstantId> constant_ids_;
};

/**
 * Append-only deduplicated fact table with a per-relation list and a
 * (relation, argument position, constant) index. Both preserve insertion
 * order, so iteration order is load order. `truncate` rolls back to an
 * earlier size, which the search uses to evaluate tentative consequences.
 */
class FactStore {
public:
    /// Returns the id of the fact and whether it was newly inserted.
    std::pair<FactId, bool> insert(Fact fact) {
        auto it = ids_.find(fact);
        if (it != ids_.end()) {
            return {it->second, false};
        }
        auto id = static_cast<FactId>(facts_.size());
        if (fact.relation >= by_relation_.size()) {
            by_relation_.resize(fact.relation + 1);
        }
        by_relation_[fact.relation].push_back(id);
        for (std::uint32_t pos = 0; pos < fact.args.size(); ++pos) {
            by_arg_[key(fact.relation, pos, fact.args[pos])].push_back(id);
        }
        ids_.emplace(fact, id);
        facts_.push_back(std::move(fact));
        return {id, true};
    }

    std::optional<FactId> find(const Fact& fact) const {
        auto it = ids_.find(fact);
        if (it == ids_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    bool contains(const Fact& fact) const { return ids_.contains(fact); }

    const Fact& operator[](FactId id) const { return facts_[id]; }
    std::size_t size() const { return facts_.size(); }
    bool empty() const { return facts_.empty(); }
    std::span<const Fact> facts() const { return facts_; }

    std::span<const FactId> of_relation(RelationId rel) const {
        if (rel >= by_relation_.size()) {
            return {};
        }
        return by_relation_[rel];
    }

    std::span<const FactId> with_arg(RelationId rel, std::uint32_t pos, ConstantId c) const {
        auto it = by_arg_.find(key(rel, pos, c));
        if (it == by_arg_.end()) {
            return {};
        }
        return it->second;
    }

    void truncate(std::size_t n) {
        while (facts_.size() > n) {
            const Fact& f = facts_.back();
            by_relation_[f.relation].pop_back();
            for (std::uint32_t pos = 0; pos < f.args.size(); ++pos) {
                auto it = by_arg_.find(key(f.relation, pos, f.args[pos]));
                it->second.pop_back();
                if (it->second.empty()) {
                    by_arg_.erase(it);
                }
            }
            ids_.erase(f);
            facts_.pop_back();
        }
    }

private:
    static std::uint64_t key(RelationId rel, std::uint32_t pos, ConstantId c) {
        return (static_cast<std::uint64_t>(rel) << 40) | (static_cast<std::uint64_t>(pos & 0xff) << 32) | c;
    }

    std::vector<Fact> facts_;
    std::unordered_map<Fact, FactId, FactHash> ids_;
    std::vector<std::vector<FactId>> by_relation_;
    std::unordered_map<std::uint64_t, std::vector<FactId>> by_arg_;
};

/**
 * A relational KB under the closed-world assumption: anything well-formed that
 * is not stored is false.
 */
class KnowledgeBase {
public:
    KnowledgeBase() = default;
    explicit KnowledgeBase(Vocabulary vocab) : vocab_(std::move(vocab)) {}

    Vocabulary& vocab() { return vocab_; }
    const Vocabulary& vocab() const { return vocab_; }
    const FactStore& store() const { return store_; }
    std::span<const Fact> facts() const { return store_.facts(); }
    std::size_t size() const { return store_.size(); }
    bool empty() const { return store_.empty(); }

    /// Returns true if the fact was not present before.
    bool add(Fact fact) {
        const Relation& rel = vocab_.relation(fact.relation);
        if (fact.args.size() != rel.arity) {
            throw KbError("fact of '" + rel.name + "' has " + std::to_string(fact.args.size()) +
                          " arguments, expected " + std::to_string(rel.arity));
        }
        for (ConstantId c : fact.args) {
            if (c >= vocab_.constant_count()) {
                throw KbError("constant id " + std::to_string(c) + " is not interned");
            }
        }
        return store_.insert(std::move(fact)).second;
    }

    bool add(std::string_view relation, std::span<const std::string> args, std::size_t line = 0) {
        Fact f;
        f.relation = vocab_.intern_relation(relation, static_cast<std::uint32_t>(args.size()), line);
        f.args.reserve(args.size());
        for (const std::string& a : args) {
            f.args.push_back(vocab_.intern_constant(a));
        }
        return store_.insert(std::move(f)).second;
    }

    bool add(std::string_view relation, std::initializer_list<std::string> args) {
        std::vector<std::string> v(args);
        return add(relation, std::span<const std::string>(v));
    }

    /// CWA membership. Unknown relations are an error, not `false`.
    bool contains(const Fact& atom) const {
        if (atom.relation >= vocab_.relation_count()) {
            throw KbError("unknown relation id " + std::to_string(atom.relation));
        }
        return store_.contains(atom);
    }

    bool contains(std::string_view relation, std::span<const std::string> args) const {
        auto rel = vocab_.find_relation(relation);
        if (!rel) {
            throw KbError("unknown relation '" + std::string(relation) + "'");
        }
        if (vocab_.relation(*rel).arity != args.size()) {
            throw KbError("arity mismatch for '" + std::string(relation) + "'");
        }
        Fact f{*rel, {}};
        for (const std::string& a : args) {
            auto c = vocab_.find_constant(a);
            if (!c) {
                return false;
            }
            f.args.push_back(*c);
        }
        return store_.contains(f);
    }

    bool contains(std::string_view relation, std::initializer_list<std::string> args) const {
        std::vector<std::string> v(args);
        return contains(relation, std::span<const std::string>(v));
    }

private:
    Vocabulary vocab_;
    FactStore store_;
};

struct KbStats {
    std::size_t relations = 0;
    std::size_t facts = 0;
    std::size_t constants = 0;
    /// (relation name, fact count) in relation id order.
    std::vector<std::pair<std::string, std::size_t>> per_relation;
};

inline KbStats stats(const KnowledgeBase& kb) {
    KbStats s;
    s.relations = kb.vocab().relation_count();
    s.facts = kb.size();
    s.constants = kb.vocab().constant_count();
    for (RelationId r = 0; r < s.relations; ++r) {
        s.per_relation.emplace_back(kb.vocab().relation(r).name, kb.store().of_relation(r).size());
    }
    return s;
}

enum class KbFormat { Tsv, Atoms };

namespace detail {

inline std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto p = s.find(sep, start);
        if (p == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, p - start));
        start = p + 1;
    }
}

inline bool is_bare_identifier(std::string_view s) {
    if (s.empty() || s[0] < 'a' || s[0] > 'z') {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char ch) {
        return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_' ||
               ch == '\'';
    });
}

/// Handles the `#!relation` and `#!constant` directives shared by both formats.
/// Returns false if the line is an ordinary comment.
inline bool apply_directive(KnowledgeBase& kb, std::string_view line, std::size_t lineno) {
    if (!line.starts_with("#!")) {
        return false;
    }
    auto fields = split(line.substr(2), '\t');
    if (fields[0] == "relation") {
        if (fields.size() != 3) {
            throw KbError("malformed #!relation directive", lineno);
        }
        std::uint32_t arity = 0;
        try {
            arity = static_cast<std::uint32_t>(std::stoul(fields[2]));
        } catch (const std::exception&) {
            throw KbError("malformed arity in #!relation directive", lineno);
        }
        kb.vocab().intern_relation(fields[1], arity, lineno);
        return true;
    }
    if (fields[0] == "constant") {
        if (fields.size() < 2) {
            throw KbError("malformed #!constant directive", lineno);
        }
        for (std::size_t i = 1; i < fields.size(); ++i) {
            kb.vocab().intern_constant(fields[i]);
        }
        return true;
    }
    throw KbError("unknown directive '" + fields[0] + "'", lineno);
}

}  // namespace detail

/// Quotes a constant for the atom/rule grammar when it is not a bare identifier.
inline std::string quote_constant(std::string_view name) {
    if (detail::is_bare_identifier(name)) {
        return std::string(name);
    }
    std::string out = "'";
    for (char ch : name) {
        if (ch == '\'' || ch == '\\') {
            out += '\\';
        }
        out += ch;
    }
    out += '\'';
    return out;
}

/**
 * Small cursor over the atom grammar `name(arg, ..., arg)`. Shared with the
 * rule parser, which additionally accepts variables.
 */
class AtomLexer {
public:
    AtomLexer(std::string_view text, std::size_t line) : text_(text), line_(line) {}

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) {
            ++pos_;
        }
    }

    bool at_end() {
        skip_ws();
        return pos_ >= text_.size();
    }

    bool peek(char ch) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == ch;
    }

    bool accept(char ch) {
        if (peek(ch)) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool accept(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_).starts_with(tok)) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(char ch) {
        if (!accept(ch)) {
            fail(std::string("expected '") + ch + "'");
        }
    }

    /// A bare lowercase identifier or a single-quoted string.
    std::string name() {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '\'') {
            ++pos_;
            std::string out;
            while (pos_ < text_.size() && text_[pos_] != '\'') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                    ++pos_;
                }
                out += text_[pos_++];
            }
            if (pos_ >= text_.size()) {
                fail("unterminated quoted name");
            }
            ++pos_;
            if (out.empty()) {
                fail("empty quoted name");
            }
            return out;
        }
        std::size_t start = pos_;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
            ++pos_;
        }
        std::string out(text_.substr(start, pos_ - start));
        if (!detail::is_bare_identifier(out)) {
            fail(out.empty() ? "expected a name" : "invalid name '" + out + "'");
        }
        return out;
    }

    /// An uppercase-initial variable name.
    std::optional<std::string> variable() {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] < 'A' || text_[pos_] > 'Z') {
            return std::nullopt;
        }
        std::size_t start = pos_;
        while (pos_ < text_.size() && ((text_[pos_] >= 'a' && text_[pos_] <= 'z') ||
                                       (text_[pos_] >= 'A' && text_[pos_] <= 'Z') ||
                                       (text_[pos_] >= '0' && text_[pos_] <= '9'))) {
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw KbError(msg + " at column " + std::to_string(pos_ + 1), line_);
    }

private:
    static bool is_ident_char(char ch) {
        return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_' ||
               ch == '\'';
    }

    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

/**
 * Reads a KB. TSV: `relation<TAB>arg...` per line. Atoms: `relation(arg,...).`
 * per line. In both, `#` starts a comment line; `#!relation<TAB>name<TAB>arity`
 * and `#!constant<TAB>name...` declare relations without facts and constants
 * that occur in no fact. Arity is fixed by first occurrence. Appends to `kb`.
 */
inline void parse_into(KnowledgeBase& kb, std::istream& in, KbFormat format) {
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') {
            raw.pop_back();
        }
        std::string_view line = raw;
        if (format == KbFormat::Atoms) {
            line = detail::trim(line);
        }
        if (detail::trim(line).empty()) {
            continue;
        }
        if (line.starts_with('#') || (format == KbFormat::Atoms && line.starts_with('%'))) {
            detail::apply_directive(kb, line, lineno);
            continue;
        }
        if (format == KbFormat::Tsv) {
            auto fields = detail::split(line, '\t');
            if (fields[0].empty()) {
                throw KbError("empty relation name", lineno);
            }
            if (fields.size() < 2) {
                throw KbError("fact without arguments", lineno);
            }
            for (std::size_t i = 1; i < fields.size(); ++i) {
                if (fields[i].empty()) {
                    throw KbError("empty argument " + std::to_string(i), lineno);
                }
            }
            kb.add(fields[0], std::span<const std::string>(fields).subspan(1), lineno);
        } else {
            AtomLexer lex(line, lineno);
            if (lex.peek('(')) {
                throw KbError("empty relation name", lineno);
            }
            std::string rel = lex.name();
            lex.expect('(');
            std::vector<std::string> args;
            do {
                args.push_back(lex.name());
            } while (lex.accept(','));
            lex.expect(')');
            lex.expect('.');
            if (!lex.at_end()) {
                lex.fail("trailing input");
            }
            kb.add(rel, std::span<const std::string>(args), lineno);
        }
    }
}

inline KnowledgeBase parse_kb(std::istream& in, KbFormat format) {
    KnowledgeBase kb;
    parse_into(kb, in, format);
    return kb;
}

inline KnowledgeBase parse_kb(std::string_view text, KbFormat format) {
    std::istringstream in{std::string(text)};
    return parse_kb(in, format);
}

inline std::string format_fact_tsv(const Vocabulary& vocab, const Fact& f) {
    std::string out = vocab.relation(f.relation).name;
    for (ConstantId c : f.args) {
        out += '\t';
        out += vocab.constant(c);
    }
    return out;
}

inline std::string format_fact_atom(const Vocabulary& vocab, const Fact& f) {
    std::string out = quote_constant(vocab.relation(f.relation).name);
    out += '(';
    for (std::size_t i = 0; i < f.args.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += quote_constant(vocab.constant(f.args[i]));
    }
    out += ')';
    return out;
}

/// TSV lines for `facts`, sorted bytewise.
inline std::vector<std::string> sorted_tsv_lines(const Vocabulary& vocab, std::span<const Fact> facts) {
    std::vector<std::string> lines;
    lines.reserve(facts.size());
    for (const Fact& f : facts) {
        lines.push_back(format_fact_tsv(vocab, f));
    }
    std::sort(lines.begin(), lines.end());
    return lines;
}

/**
 * Writes the whole KB as TSV. Relations and constants are declared up front so
 * that ids, empty relations and fact-less constants survive a re-parse.
 */
inline void write_kb_tsv(std::ostream& out, const KnowledgeBase& kb, bool declare = true) {
    if (declare) {
        for (const Relation& r : kb.vocab().relations()) {
            out << "#!relation\t" << r.name << '\t' << r.arity << '\n';
        }
        for (std::size_t i = 0; i < kb.vocab().constant_count(); ++i) {
            out << "#!constant\t" << kb.vocab().constant(static_cast<ConstantId>(i)) << '\n';
        }
    }
    for (const Fact& f : kb.facts()) {
        out << format_fact_tsv(kb.vocab(), f) << '\n';
    }
}

/// Per (relation, argument position): distinct constants seen there, in load order.
using ColumnConstants = std::vector<std::vector<std::vector<ConstantId>>>;

inline ColumnConstants column_constants(const KnowledgeBase& kb) {
    const Vocabulary& vocab = kb.vocab();
    ColumnConstants out(vocab.relation_count());
    for (RelationId r = 0; r < vocab.relation_count(); ++r) {
        out[r].resize(vocab.relation(r).arity);
    }
    std::vector<std::unordered_set<ConstantId>> seen;
    for (RelationId r = 0; r < vocab.relation_count(); ++r) {
        seen.assign(vocab.relation(r).arity, {});
        for (FactId id : kb.store().of_relation(r)) {
            const Fact& f = kb.store()[id];
            for (std::uint32_t pos = 0; pos < f.args.size(); ++pos) {
                if (seen[pos].insert(f.args[pos]).second) {
                    out[r][pos].push_back(f.args[pos]);
                }
            }
        }
    }
    return out;
}

}  // namespace essence
