#pragma once

#include "aw/corpus.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace aw {

// Metered tool capability handed to an oracle for the span of one question.
// invoke() throws BudgetError once the per-question call allowance is spent;
// the oracle is expected to conclude with whatever it has learned by then.
class ToolAccess {
public:
    virtual ~ToolAccess() = default;
    virtual ToolResult invoke(ToolKind kind, const std::string& argument) = 0;
    virtual std::uint64_t calls_remaining() const = 0;
};

// Raw oracle output. The verdict field is free text here; the session's
// output filter coerces anything outside the closed alphabet to "error"
// before it can leave the session.
struct OracleOutcome {
    std::string verdict = "unsure";
    std::string narrative;
    std::string summary;
};

// One question, one instance. Sessions construct a fresh oracle per question
// so no reasoning state survives from one answer to the next.
class ReasoningOracle {
public:
    virtual ~ReasoningOracle() = default;
    virtual OracleOutcome answer(const std::string& question, ToolAccess& tools) = 0;
};

using OracleFactory = std::function<std::unique_ptr<ReasoningOracle>(const std::string& question)>;

// Deterministic playback: run the listed tool calls in order, then return the
// fixed conclusion. A suggestible script additionally obeys [[answer=...]]
// directives found in fetched file bytes, which models a reasoning engine
// that can be steered by planted instructions.
struct ScriptStep {
    ToolKind kind = ToolKind::read_file;
    std::string argument;
};

struct OracleScript {
    std::vector<ScriptStep> steps;
    OracleOutcome conclusion;
    bool suggestible = false;
};

class ScriptedOracle final : public ReasoningOracle {
public:
    explicit ScriptedOracle(OracleScript script) : script_(std::move(script)) {}
    OracleOutcome answer(const std::string& question, ToolAccess& tools) override;

private:
    OracleScript script_;
};

// Answers a small closed grammar of structural questions about the corpus.
// Recognized forms (single quotes required, tokens lowercase alphanumeric):
//   file '<path>' exists?
//   directory '<path>' exists?
//   directory '<path>' contains more than <N> entries?
//   some file contains token '<token>'?
//   file '<path>' contains token '<token>'?
//   secret bit <i> of file '<path>' is 1?
// Anything else earns "unsure". Operational failures (unreadable bit file,
// out-of-range index, rejected query) earn "error".
class RuleOracle final : public ReasoningOracle {
public:
    OracleOutcome answer(const std::string& question, ToolAccess& tools) override;
};

OracleFactory rule_oracle_factory();
// Every question gets the same script.
OracleFactory scripted_oracle_factory(OracleScript script);
// Question i gets scripts[i]; past the end the last script repeats.
OracleFactory scripted_sequence_factory(std::vector<OracleScript> scripts);

// Verifier-side record of one asked question, in ask order.
struct AskRecord {
    std::string question;
    std::string verdict;        // as received; empty when the session aborted mid-ask
    bool attestation_ok = false;
    bool verdict_accepted = false; // false when the attestation failed and the verdict was discarded
};

// Supplies the next question given everything asked so far; nullopt ends the
// audit.
class QuestionPlan {
public:
    virtual ~QuestionPlan() = default;
    virtual std::optional<std::string> next(const std::vector<AskRecord>& asked) = 0;
};

class ScriptedPlan final : public QuestionPlan {
public:
    explicit ScriptedPlan(std::vector<std::string> questions) : questions_(std::move(questions)) {}
    std::optional<std::string> next(const std::vector<AskRecord>& asked) override;

private:
    std::vector<std::string> questions_;
};

// Reads a planted secret out through the verdict channel, one bit question at
// a time. Demonstrates that the leakage bound is tight: k_max questions can
// never move more than k_max * log2(|alphabet|) bits.
class ExtractionPlan final : public QuestionPlan {
public:
    ExtractionPlan(std::string path, std::uint64_t bit_count)
        : path_(std::move(path)), bit_count_(bit_count) {}
    std::optional<std::string> next(const std::vector<AskRecord>& asked) override;

    // Bits recovered so far: one per accepted true/false answer, in order.
    static std::string recovered_bits(const std::vector<AskRecord>& asked);

private:
    std::string path_;
    std::uint64_t bit_count_ = 0;
};

} // namespace aw
