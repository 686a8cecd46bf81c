// Acceptance gate. Every release-blocking behavior gets one criterion with a
// hard time budget; each run prints one PASS or FAIL line and the process
// exits nonzero if anything failed. Criteria are self-contained: each builds
// its own fixtures and sessions from scratch.
//
// Usage: acceptance [criterion-number...]   (no arguments runs all nine)

#include "aw/auditor.hpp"
#include "aw/bytes.hpp"
#include "aw/corpus.hpp"
#include "aw/crypto.hpp"
#include "aw/errors.hpp"
#include "aw/harness.hpp"
#include "aw/messages.hpp"
#include "aw/oracles.hpp"
#include "aw/prover.hpp"
#include "aw/transcript.hpp"
#include "aw/verifier.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

namespace fs = std::filesystem;
using namespace aw;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) {
        dir = fs::temp_directory_path() / ("aw-acceptance-" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

std::string fmt(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    return buf;
}

// ---- criterion 1: leakage accounting is exact ------------------------------

std::string criterion_leakage() {
    if (leakage_bound(40, 4) != 80.0)
        return "leakage_bound(40, 4) returned " + fmt(leakage_bound(40, 4)) + ", expected 80";

    Scratch s("c1");
    write_fixture_corpus(s.dir, 5, 64);
    RigOptions opt;
    opt.seed = 5;
    opt.k_max = 40;
    SessionRig rig(s.dir, rule_oracle_factory(), opt);
    ExtractionPlan plan("secret.bin", 40);
    rig.drive(plan);

    if (rig.verifier().asked().size() != 40)
        return "session asked " + std::to_string(rig.verifier().asked().size()) +
               " questions, expected the full 40";
    if (rig.verifier().leakage_consumed() != 80.0)
        return "verifier metered " + fmt(rig.verifier().leakage_consumed()) +
               " bits over 40 verdicts, expected exactly 80";
    if (rig.auditor().leakage_bits_emitted() != 80.0)
        return "auditor metered " + fmt(rig.auditor().leakage_bits_emitted()) +
               " bits emitted, expected exactly 80";
    return {};
}

// ---- criterion 2: budgets refuse the first request past the line -----------

std::string criterion_budgets() {
    Scratch s("c2");
    write_fixture_corpus(s.dir, 3, 64);

    // Question budget: the 41st ask must die client-side, before any bytes
    // reach the wire.
    RigOptions opt;
    opt.seed = 3;
    SessionRig rig(s.dir, rule_oracle_factory(), opt);
    rig.connect();
    if (rig.prover().ticket().k_max != 40 || rig.prover().ticket().n_queries != 50)
        return "ticket budgets are not the configured (40, 50)";
    for (int i = 0; i < 40; ++i)
        rig.verifier().ask("file 'app.py' exists?");
    const std::uint64_t wire_before = rig.verifier().wire_messages_sent();
    bool refused = false;
    try {
        rig.verifier().ask("file 'readme.txt' exists?");
    } catch (const BudgetError&) {
        refused = true;
    }
    if (!refused)
        return "question 41 went through instead of raising BudgetError";
    if (rig.verifier().wire_messages_sent() != wire_before)
        return "the refused question 41 still produced wire traffic";

    // Tool budget: an oracle that wants 51 reads gets exactly 50, and the 51st
    // request is refused inside the same question.
    OracleScript greedy;
    for (int i = 0; i < 51; ++i)
        greedy.steps.push_back({ToolKind::read_file, i % 2 ? "readme.txt" : "app.py"});
    greedy.conclusion.verdict = "unsure";
    greedy.conclusion.summary = "stopped by the tool budget";
    RigOptions opt2;
    opt2.seed = 3;
    SessionRig rig2(s.dir, scripted_oracle_factory(greedy), opt2);
    rig2.connect();
    const AskRecord& rec = rig2.verifier().ask("does the code ever give up?");
    if (rec.verdict != "unsure")
        return "tool-starved question answered '" + rec.verdict + "', expected 'unsure'";
    if (rig2.auditor().last_question_tool_calls() != 50)
        return "auditor issued " + std::to_string(rig2.auditor().last_question_tool_calls()) +
               " tool calls, expected exactly 50";
    if (rig2.prover().tools_since_question() != 50)
        return "prover served " + std::to_string(rig2.prover().tools_since_question()) +
               " tool calls, expected exactly 50";
    const std::string& narrative = rig2.auditor().question_log().front().narrative;
    if (narrative.find("step 51 refused: tool budget exhausted") == std::string::npos)
        return "narrative does not record the refusal of tool call 51";
    return {};
}

// ---- criterion 3: extraction is capped at the question budget --------------

std::string criterion_extraction() {
    ExtractionOutcome big = oracle_extraction_demo(256, 40, 11);
    if (big.bits_targeted != 256)
        return "demo targeted " + std::to_string(big.bits_targeted) + " bits, expected 256";
    if (big.bits_recovered > 40)
        return "adversary recovered " + std::to_string(big.bits_recovered) +
               " of 256 bits past the 40-question budget";
    if (!big.recovered_match)
        return "recovered prefix does not match the planted bits";

    ExtractionOutcome small = oracle_extraction_demo(16, 40, 11);
    if (small.bits_recovered != 16 || !small.recovered_match)
        return "16-bit target recovered " + std::to_string(small.bits_recovered) +
               " bits, expected exactly 16";
    if (small.questions_spent != 16)
        return "16-bit target spent " + std::to_string(small.questions_spent) +
               " questions, expected 16";
    return {};
}

// ---- criterion 4: single-byte mutations are rejected and localized ---------

// Deterministic byte flipper: position and replacement come from the seeded
// stream, and the replacement never equals the original byte.
class Mutator {
public:
    explicit Mutator(std::uint64_t seed) : rng_(seed) {}

    std::pair<std::size_t, std::string> flip(const std::string& text) {
        for (;;) {
            std::array<std::uint8_t, 5> raw{};
            rng_.fill(raw);
            std::size_t pos = ((std::size_t(raw[0]) << 24) | (std::size_t(raw[1]) << 16) |
                               (std::size_t(raw[2]) << 8) | std::size_t(raw[3])) %
                              text.size();
            char replacement = char(raw[4]);
            if (text[pos] == replacement)
                continue;
            std::string mutated = text;
            mutated[pos] = replacement;
            return {pos, mutated};
        }
    }

private:
    SeededRandom rng_;
};

constexpr int kMutationsPerClass = 200;

// One single-line JSON artifact class. verifies() returns whether the bytes
// still pass the artifact's own verifier; ParseError counts as rejection.
std::string run_wire_class(const char* label, const std::string& original,
                           const std::function<bool(const std::string&)>& verifies, Mutator& mut,
                           int& total_rejected) {
    if (!verifies(original))
        return std::string(label) + ": pristine artifact failed its own verifier";
    for (int i = 0; i < kMutationsPerClass; ++i) {
        auto [pos, mutated] = mut.flip(original);
        bool rejected = false;
        try {
            rejected = !verifies(mutated);
        } catch (const ParseError&) {
            rejected = true;
        }
        if (!rejected)
            return std::string(label) + ": mutation at byte " + std::to_string(pos) +
                   " was accepted";
        ++total_rejected;
    }
    return {};
}

// The transcript class additionally checks localization: a flip on entry line
// k must surface at 1-based entry index k+1 (or at the final-head check when
// the flip comments the last entry out of existence), and a flip on the final
// record line must surface at index 0 or in the final-record signatures.
// Flips that reparse to the byte-identical transcript (whitespace swaps the
// line reader tolerates) are re-encodings, not mutations, and are redrawn.
std::string run_transcript_class(const std::string& text, const Digest256& corpus_digest,
                                 const std::string& ticket_wire, const PublicKey& prover_public,
                                 const PublicKey& auditor_public, Mutator& mut,
                                 int& total_rejected) {
    TranscriptFile base = transcript_import(text);
    VerificationReport ok = chain_verify(corpus_digest, ticket_wire, base.entries,
                                         base.final_record.head, prover_public, auditor_public);
    if (!ok.valid || !final_record_verify(base.final_record, prover_public, auditor_public))
        return "transcript: pristine export failed verification";
    const std::uint64_t entry_count = base.entries.size();

    int counted = 0;
    int verify_path_rejections = 0;
    while (counted < kMutationsPerClass) {
        auto [pos, mutated] = mut.flip(text);
        const auto line = std::uint64_t(std::count(text.begin(), text.begin() + ptrdiff_t(pos), '\n'));
        bool rejected = false;
        bool located = false;
        std::string where;
        try {
            TranscriptFile tf = transcript_import(mutated);
            if (transcript_export(tf.entries, tf.final_record) == text)
                continue;
            VerificationReport vr = chain_verify(corpus_digest, ticket_wire, tf.entries,
                                                 tf.final_record.head, prover_public,
                                                 auditor_public);
            bool final_ok = final_record_verify(tf.final_record, prover_public, auditor_public);
            rejected = !vr.valid || !final_ok;
            if (line < entry_count) {
                located = !vr.valid &&
                          (vr.first_bad_index == line + 1 ||
                           (tf.entries.size() != entry_count && vr.first_bad_index == 0));
            } else {
                located = (!vr.valid && vr.first_bad_index == 0) || (vr.valid && !final_ok);
            }
            if (!vr.valid)
                where = vr.cause + " at index " + std::to_string(vr.first_bad_index);
            else
                where = final_ok ? "accepted" : "final-record signature";
            if (rejected)
                ++verify_path_rejections;
        } catch (const ParseError&) {
            rejected = true;
            located = true;
        }
        if (!rejected)
            return "transcript: mutation at byte " + std::to_string(pos) + " (line " +
                   std::to_string(line) + ") was accepted";
        if (!located)
            return "transcript: mutation on line " + std::to_string(line) + " misreported as " +
                   where;
        ++counted;
        ++total_rejected;
    }
    // The flips that stay inside the hex alphabet are the ones that reach the
    // chain verifier; if none did, the localization checks above never fired.
    if (verify_path_rejections == 0)
        return "transcript: every mutation died at the parse layer, localization untested";
    return {};
}

std::string criterion_mutations() {
    Scratch s("c4");
    write_fixture_corpus(s.dir, 9, 64);
    RigOptions opt;
    opt.seed = 9;
    SessionRig rig(s.dir, rule_oracle_factory(), opt);
    ScriptedPlan plan({"file 'app.py' exists?", "some file contains token 'flask'?",
                       "file 'nope.txt' exists?"});
    rig.drive(plan);
    if (!rig.verifier().satisfied())
        return "fixture session did not complete cleanly";

    const PublicKey& prover_public = rig.keys().prover.public_key;
    const PublicKey& auditor_public = rig.auditor().public_key();
    const PublicKey& hw_public = rig.keys().hw_root.public_key;
    const Digest256& measurement = rig.keys().measurement;
    const Digest256& corpus_digest = rig.prover().manifest().corpus_digest;

    const std::string ticket_wire = rig.prover().ticket().wire();
    const std::string quote_wire = rig.verifier().token()->quote.wire();
    const std::string token_wire = rig.verifier().token()->wire();
    const PublicAttestation& att = rig.verifier().attestations().front();
    const std::string receipt_wire = att.receipt.wire();
    const std::string attestation_wire = att.wire();
    const std::string transcript_text = rig.prover().transcript_export_text();

    Mutator mut(2026);
    int total_rejected = 0;
    std::string problem;

    problem = run_wire_class(
        "ticket", ticket_wire,
        [&](const std::string& m) { return verify_ticket(SessionTicket::from_wire(m), prover_public); },
        mut, total_rejected);
    if (!problem.empty()) return problem;

    problem = run_wire_class(
        "quote", quote_wire,
        [&](const std::string& m) {
            return verify_quote(hw_public, EnclaveQuote::from_wire(m), measurement);
        },
        mut, total_rejected);
    if (!problem.empty()) return problem;

    problem = run_wire_class(
        "token", token_wire,
        [&](const std::string& m) {
            return verify_token(AuditorToken::from_wire(m), prover_public, hw_public, measurement);
        },
        mut, total_rejected);
    if (!problem.empty()) return problem;

    problem = run_wire_class(
        "receipt", receipt_wire,
        [&](const std::string& m) {
            return verify_verdict_receipt(VerdictReceipt::from_wire(m), prover_public);
        },
        mut, total_rejected);
    if (!problem.empty()) return problem;

    problem = run_wire_class(
        "attestation", attestation_wire,
        [&](const std::string& m) {
            return verify_public_attestation(PublicAttestation::from_wire(m), prover_public,
                                             hw_public, measurement);
        },
        mut, total_rejected);
    if (!problem.empty()) return problem;

    problem = run_transcript_class(transcript_text, corpus_digest, ticket_wire, prover_public,
                                   auditor_public, mut, total_rejected);
    if (!problem.empty()) return problem;

    if (total_rejected < 1000)
        return "only " + std::to_string(total_rejected) + " mutations were exercised";
    return {};
}

// ---- criterion 5: tamper scenarios abort with the pinned causes ------------

std::string criterion_abort_causes() {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ScenarioOutcome t = run_scenario("toctou_mutation", seed);
        if (t.abort_cause != "file_digest_mismatch" || !t.expectation_met)
            return "toctou_mutation seed " + std::to_string(seed) + " aborted with '" +
                   t.abort_cause + "'";
        ScenarioOutcome h = run_scenario("hidden_search", seed);
        if (h.abort_cause != "search_omission" || !h.expectation_met)
            return "hidden_search seed " + std::to_string(seed) + " aborted with '" +
                   h.abort_cause + "'";
    }
    return {};
}

// ---- criterion 6: injected file digests survive into the signed transcript -

std::string criterion_injection() {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ScenarioOutcome o = run_scenario("injection_marker", seed);
        if (!o.completed || !o.expectation_met)
            return "injection_marker seed " + std::to_string(seed) +
                   " did not leave the planted file recoverable: " + o.detail;
    }
    return {};
}

// ---- criterion 7: single-deviation walk finds no safety violation ----------

std::string criterion_explorer() {
    ExploreStats walk = explore_states(12);
    if (walk.paths < 2 || walk.states_visited == 0)
        return "walk degenerated: " + std::to_string(walk.paths) + " paths, " +
               std::to_string(walk.states_visited) + " states";
    if (walk.violations != 0)
        return std::to_string(walk.violations) +
               " violation(s): " + (walk.violation_notes.empty() ? "" : walk.violation_notes.front());
    ExploreStats self_test = explore_states(12, true);
    if (self_test.violations < 1)
        return "self-test failed to flag a planted observation corruption";
    return {};
}

// ---- criterion 8: honest audit completes and artifacts verify --------------

std::string criterion_honest_audit() {
    ScenarioOutcome honest = run_scenario("honest", 1);
    if (!honest.completed || !honest.expectation_met)
        return "honest scenario did not match ground truth: " + honest.detail;

    Scratch s("c8");
    RunConfig cfg;
    cfg.corpus_root = s.dir / "corpus";
    cfg.outdir = s.dir / "out";
    cfg.seed = 1;
    cfg.questions = {"file 'app.py' exists?",
                     "directory 'config' exists?",
                     "some file contains token 'flask'?",
                     "file 'src/util.py' contains token 'clamp'?",
                     "directory 'src' contains more than 3 entries?",
                     "file 'nope.txt' exists?"};
    write_fixture_corpus(cfg.corpus_root, cfg.seed);

    RunOutcome run = run_audit(cfg);
    if (!run.completed || !run.satisfied)
        return "audit run did not finish satisfied (abort: '" + run.abort_cause + "')";
    const char* expected[] = {"Q1 true pass",  "Q2 true pass",  "Q3 true pass",
                              "Q4 true pass",  "Q5 false pass", "Q6 false pass"};
    for (const char* line : expected)
        if (run.report.find(line) == std::string::npos)
            return std::string("report lacks the ground-truth line '") + line + "'";

    VerifyOutcome plain = verify_artifacts(cfg.outdir, std::nullopt);
    if (!plain.ok)
        return "public artifact set failed offline verification";
    VerifyOutcome opened = verify_artifacts(cfg.outdir, cfg.outdir / "prover" / "secret.key");
    if (!opened.ok)
        return "sealed proof did not open under the escrowed prover key";

    // A well-formed key from an unrelated party must not open the proof.
    const fs::path wrong_key = s.dir / "wrong.key";
    std::ofstream(wrong_key) << hex_encode(derive_keys(4242).prover.secret_key) << "\n";
    VerifyOutcome wrong = verify_artifacts(cfg.outdir, wrong_key);
    if (wrong.ok)
        return "sealed proof opened under a foreign key";
    bool said_so = false;
    for (const std::string& note : wrong.notes)
        said_so = said_so || note.find("does not open under the supplied key") != std::string::npos;
    if (!said_so)
        return "foreign-key rejection did not name the sealed-proof layer";
    return {};
}

// ---- criterion 9: verifier-facing wires carry no corpus bytes --------------

std::unordered_set<std::string> corpus_windows(const fs::path& root) {
    std::unordered_set<std::string> windows;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file())
            continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        for (std::size_t i = 0; i + 8 <= bytes.size(); ++i)
            windows.insert(bytes.substr(i, 8));
    }
    return windows;
}

std::optional<std::string> first_window_hit(const std::unordered_set<std::string>& windows,
                                            const std::string& line) {
    if (line.size() < 8)
        return std::nullopt;
    for (std::size_t i = 0; i + 8 <= line.size(); ++i) {
        std::string w = line.substr(i, 8);
        if (windows.count(w))
            return w;
    }
    return std::nullopt;
}

std::string criterion_no_exfiltration() {
    for (std::uint64_t seed : {1, 5, 9, 13}) {
        Scratch s("c9-" + std::to_string(seed));
        write_fixture_corpus(s.dir, seed);
        const std::unordered_set<std::string> windows = corpus_windows(s.dir);

        for (const std::string& name : scenario_names()) {
            ScenarioOutcome out = run_scenario(name, seed);
            // Every rig-backed scenario reaches establishment, so an empty
            // capture means the tap is broken, not that nothing was sent.
            if (out.verifier_inbound.empty() && name != "oracle_extraction")
                return "scenario '" + name + "' captured no verifier-inbound wires";
            for (const std::string& line : out.verifier_inbound)
                if (auto w = first_window_hit(windows, line))
                    return "scenario '" + name + "' seed " + std::to_string(seed) +
                           " leaked corpus window \"" + *w + "\"";
        }

        // The extraction scenario reports statistics only, so drive the same
        // adversarial plan here and scan its raw inbound wires too.
        RigOptions opt;
        opt.seed = seed;
        opt.k_max = 40;
        opt.n_queries = 8;
        SessionRig rig(s.dir, rule_oracle_factory(), opt);
        ExtractionPlan plan("secret.bin", 256);
        rig.drive(plan);
        if (rig.verifier().inbound_log().size() < 40)
            return "extraction run captured only " +
                   std::to_string(rig.verifier().inbound_log().size()) + " inbound wires";
        for (const std::string& line : rig.verifier().inbound_log())
            if (auto w = first_window_hit(windows, line))
                return "extraction run seed " + std::to_string(seed) + " leaked corpus window \"" +
                       *w + "\"";
    }
    return {};
}

// ---- runner -----------------------------------------------------------------

struct Criterion {
    int number;
    const char* label;
    double limit_seconds; // 0 means no stated budget
    std::function<std::string()> run;
};

} // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i)
        wanted.insert(std::atoi(argv[i]));

    const std::vector<Criterion> criteria = {
        {1, "leakage accounting is exact", 1.0, criterion_leakage},
        {2, "budgets refuse the first request past the line", 5.0, criterion_budgets},
        {3, "extraction is capped at the question budget", 10.0, criterion_extraction},
        {4, "single-byte mutations are rejected and localized", 60.0, criterion_mutations},
        {5, "tamper scenarios abort with the pinned causes", 60.0, criterion_abort_causes},
        {6, "injected file digests survive into the signed transcript", 0.0, criterion_injection},
        {7, "single-deviation walk finds no safety violation", 300.0, criterion_explorer},
        {8, "honest audit completes and artifacts verify", 30.0, criterion_honest_audit},
        {9, "verifier-facing wires carry no corpus bytes", 0.0, criterion_no_exfiltration},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!wanted.empty() && !wanted.count(c.number))
            continue;
        const auto start = std::chrono::steady_clock::now();
        std::string problem;
        try {
            problem = c.run();
        } catch (const std::exception& e) {
            problem = std::string("unexpected exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (problem.empty() && c.limit_seconds > 0 && secs > c.limit_seconds)
            problem = "finished correct but took " + fmt(secs) + " s against a " +
                      fmt(c.limit_seconds) + " s budget";
        std::printf("%s  criterion %d  %-58s %7.2f s\n", problem.empty() ? "PASS" : "FAIL",
                    c.number, c.label, secs);
        if (!problem.empty()) {
            std::printf("      %s\n", problem.c_str());
            ++failures;
        }
    }
    std::printf("%d criterion failure(s)\n", failures);
    return failures == 0 ? 0 : 1;
}
