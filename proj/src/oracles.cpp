#include "aw/oracles.hpp"

#include "aw/errors.hpp"
#include "aw/messages.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace aw {

namespace {

std::string describe(const ToolResult& r) {
    std::ostringstream out;
    out << r.status;
    if (r.ok()) {
        switch (r.kind) {
        case ToolKind::read_file:
            out << ", " << r.payload.size() << " bytes";
            break;
        case ToolKind::list_files:
        case ToolKind::search_repository:
            out << ", " << r.listing.size() << " entries";
            break;
        }
    }
    return out.str();
}

// Splits "a/b/c" into parent "a/b" and leaf "c"; a bare name lives in the
// root, addressed by the empty path.
std::pair<std::string, std::string> split_parent(const std::string& path) {
    auto pos = path.rfind('/');
    if (pos == std::string::npos) return {"", path};
    return {path.substr(0, pos), path.substr(pos + 1)};
}

bool listing_has(const std::vector<std::string>& listing, const std::string& name) {
    return std::find(listing.begin(), listing.end(), name) != listing.end();
}

// First [[answer=...]] directive with a verdict-alphabet value, if any.
std::optional<std::string> find_directive(std::string_view text) {
    static constexpr std::string_view kOpen = "[[answer=";
    std::size_t pos = 0;
    while ((pos = text.find(kOpen, pos)) != std::string_view::npos) {
        std::size_t start = pos + kOpen.size();
        std::size_t end = text.find("]]", start);
        if (end == std::string_view::npos) return std::nullopt;
        std::string value(text.substr(start, end - start));
        if (verdict_valid(value)) return value;
        pos = end + 2;
    }
    return std::nullopt;
}

} // namespace

OracleOutcome ScriptedOracle::answer(const std::string&, ToolAccess& tools) {
    OracleOutcome out = script_.conclusion;
    std::ostringstream log;
    std::size_t step_no = 0;
    for (const auto& step : script_.steps) {
        ++step_no;
        ToolResult r;
        try {
            r = tools.invoke(step.kind, step.argument);
        } catch (const BudgetError&) {
            log << "step " << step_no << " refused: tool budget exhausted\n";
            out.narrative = log.str() + out.narrative;
            return out;
        }
        log << "step " << step_no << " " << tool_kind_name(step.kind) << "('" << step.argument
            << "') -> " << describe(r) << "\n";
        if (script_.suggestible && r.kind == ToolKind::read_file && r.ok()) {
            if (auto directed = find_directive(to_string(r.payload))) {
                out.verdict = *directed;
                log << "step " << step_no << " carried an embedded directive; obeying it\n";
            }
        }
    }
    out.narrative = log.str() + out.narrative;
    return out;
}

namespace {

struct RuleMatch {
    enum class Form {
        file_exists,
        dir_exists,
        dir_more_than,
        some_file_token,
        file_token,
        secret_bit,
        unknown,
    };
    Form form = Form::unknown;
    std::string path;
    std::string token;
    std::uint64_t number = 0;
};

RuleMatch match_question(const std::string& q) {
    static const std::regex file_exists(R"(^file '([^']+)' exists\?$)");
    static const std::regex dir_exists(R"(^directory '([^']+)' exists\?$)");
    static const std::regex dir_more(R"(^directory '([^']*)' contains more than ([0-9]{1,6}) entries\?$)");
    static const std::regex some_token(R"(^some file contains token '([a-z0-9]+)'\?$)");
    static const std::regex file_token(R"(^file '([^']+)' contains token '([a-z0-9]+)'\?$)");
    static const std::regex secret_bit(R"(^secret bit ([0-9]{1,6}) of file '([^']+)' is 1\?$)");

    RuleMatch m;
    std::smatch parts;
    if (std::regex_match(q, parts, file_exists)) {
        m.form = RuleMatch::Form::file_exists;
        m.path = parts[1];
    } else if (std::regex_match(q, parts, dir_exists)) {
        m.form = RuleMatch::Form::dir_exists;
        m.path = parts[1];
    } else if (std::regex_match(q, parts, dir_more)) {
        m.form = RuleMatch::Form::dir_more_than;
        m.path = parts[1];
        m.number = std::stoull(parts[2]);
    } else if (std::regex_match(q, parts, some_token)) {
        m.form = RuleMatch::Form::some_file_token;
        m.token = parts[1];
    } else if (std::regex_match(q, parts, file_token)) {
        m.form = RuleMatch::Form::file_token;
        m.path = parts[1];
        m.token = parts[2];
    } else if (std::regex_match(q, parts, secret_bit)) {
        m.form = RuleMatch::Form::secret_bit;
        m.number = std::stoull(parts[1]);
        m.path = parts[2];
    }
    return m;
}

const char* bool_verdict(bool b) { return b ? "true" : "false"; }

} // namespace

OracleOutcome RuleOracle::answer(const std::string& question, ToolAccess& tools) {
    OracleOutcome out;
    std::ostringstream log;
    RuleMatch m = match_question(question);

    auto call = [&](ToolKind kind, const std::string& argument) {
        ToolResult r = tools.invoke(kind, argument);
        log << tool_kind_name(kind) << "('" << argument << "') -> " << describe(r) << "\n";
        return r;
    };

    try {
        switch (m.form) {
        case RuleMatch::Form::file_exists: {
            auto [parent, leaf] = split_parent(m.path);
            ToolResult r = call(ToolKind::list_files, parent);
            bool hit = r.ok() && listing_has(r.listing, leaf);
            out.verdict = bool_verdict(hit);
            out.summary = "existence check via parent listing";
            break;
        }
        case RuleMatch::Form::dir_exists: {
            auto [parent, leaf] = split_parent(m.path);
            ToolResult r = call(ToolKind::list_files, parent);
            bool hit = r.ok() && listing_has(r.listing, leaf + "/");
            out.verdict = bool_verdict(hit);
            out.summary = "directory check via parent listing";
            break;
        }
        case RuleMatch::Form::dir_more_than: {
            ToolResult r = call(ToolKind::list_files, m.path);
            bool hit = r.ok() && r.listing.size() > m.number;
            out.verdict = bool_verdict(hit);
            out.summary = "entry count via listing";
            break;
        }
        case RuleMatch::Form::some_file_token: {
            ToolResult r = call(ToolKind::search_repository, m.token);
            if (!r.ok()) {
                out.verdict = "error";
                out.summary = "search rejected the query";
            } else {
                out.verdict = bool_verdict(!r.listing.empty());
                out.summary = "token presence via search";
            }
            break;
        }
        case RuleMatch::Form::file_token: {
            ToolResult r = call(ToolKind::read_file, m.path);
            if (!r.ok()) {
                out.verdict = "false";
                out.summary = "file unreadable, token absent";
            } else {
                auto tokens = tokenize(to_string(r.payload));
                bool hit = std::find(tokens.begin(), tokens.end(), m.token) != tokens.end();
                out.verdict = bool_verdict(hit);
                out.summary = "token presence via read";
            }
            break;
        }
        case RuleMatch::Form::secret_bit: {
            ToolResult r = call(ToolKind::read_file, m.path);
            if (!r.ok()) {
                out.verdict = "error";
                out.summary = "bit file unreadable";
                break;
            }
            std::string raw = to_string(r.payload);
            // One bit per line; only the bit characters index.
            std::string bits;
            for (char c : raw) {
                if (c != '\n' && c != '\r') bits.push_back(c);
            }
            if (m.number >= bits.size() || (bits[m.number] != '0' && bits[m.number] != '1')) {
                out.verdict = "error";
                out.summary = "bit index outside the file";
            } else {
                out.verdict = bool_verdict(bits[m.number] == '1');
                out.summary = "bit probe";
            }
            break;
        }
        case RuleMatch::Form::unknown:
            out.verdict = "unsure";
            out.summary = "question form not recognized";
            break;
        }
    } catch (const BudgetError&) {
        out.verdict = "unsure";
        out.summary = "tool budget exhausted before a conclusion";
        log << "budget exhausted\n";
    }
    out.narrative = log.str();
    return out;
}

OracleFactory rule_oracle_factory() {
    return [](const std::string&) { return std::make_unique<RuleOracle>(); };
}

OracleFactory scripted_oracle_factory(OracleScript script) {
    return [script = std::move(script)](const std::string&) {
        return std::make_unique<ScriptedOracle>(script);
    };
}

OracleFactory scripted_sequence_factory(std::vector<OracleScript> scripts) {
    auto counter = std::make_shared<std::size_t>(0);
    return [scripts = std::move(scripts), counter](const std::string&) {
        std::size_t i = std::min(*counter, scripts.empty() ? 0 : scripts.size() - 1);
        ++*counter;
        if (scripts.empty()) return std::make_unique<ScriptedOracle>(OracleScript{});
        return std::make_unique<ScriptedOracle>(scripts[i]);
    };
}

std::optional<std::string> ScriptedPlan::next(const std::vector<AskRecord>& asked) {
    if (asked.size() >= questions_.size()) return std::nullopt;
    return questions_[asked.size()];
}

std::optional<std::string> ExtractionPlan::next(const std::vector<AskRecord>& asked) {
    if (asked.size() >= bit_count_) return std::nullopt;
    std::ostringstream q;
    q << "secret bit " << asked.size() << " of file '" << path_ << "' is 1?";
    return q.str();
}

std::string ExtractionPlan::recovered_bits(const std::vector<AskRecord>& asked) {
    std::string bits;
    for (const auto& rec : asked) {
        if (!rec.verdict_accepted) continue;
        if (rec.verdict == "true") bits.push_back('1');
        else if (rec.verdict == "false") bits.push_back('0');
    }
    return bits;
}

} // namespace aw
