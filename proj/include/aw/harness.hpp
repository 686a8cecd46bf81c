#pragma once

#include "aw/auditor.hpp"
#include "aw/prover.hpp"
#include "aw/verifier.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace aw {

// Key material shared by one deterministic run: the corpus owner's long-term
// key, the hardware root, and the enclave build identity.
struct PartyKeys {
    KeyPair prover;
    KeyPair hw_root;
    Digest256 measurement;
};

PartyKeys derive_keys(std::uint64_t seed);
Digest256 build_measurement();

// Writes the small review corpus the scenarios run against. secret_bits
// controls the size of the planted bit file (one bit character per line).
void write_fixture_corpus(const std::filesystem::path& root, std::uint64_t seed,
                          std::uint64_t secret_bits = 256);

// Doctors prover replies in flight: (request line, honest reply line) -> the
// line the auditor actually receives. Models a network-level adversary; the
// prover's own evidence locker keeps the honest copy.
using ReplyTap = std::function<std::string(const std::string&, std::string)>;

struct RigOptions {
    std::uint64_t seed = 1;
    std::uint64_t k_max = 40;
    std::uint64_t n_queries = 50;
    bool obfuscate_paths = false;
    bool integrity_checks = true;
    bool budget_gate = true;
    std::shared_ptr<ToolBackend> backend; // defaults to the real corpus backend
    ReplyTap reply_tap;
};

// All three parties wired over in-process links.
class SessionRig {
public:
    SessionRig(const std::filesystem::path& corpus_root, OracleFactory oracles,
               RigOptions opt = {});

    // Handshake plus verifier establishment. AbortError surfaces unchanged.
    void connect();
    // connect() if needed, then run the plan to completion or abort.
    void drive(QuestionPlan& plan);

    ProverSession& prover() { return *prover_; }
    AuditorSession& auditor() { return *auditor_; }
    VerifierSession& verifier() { return *verifier_; }
    PeerLink& prover_link() { return *prover_link_; }
    PeerLink& auditor_link() { return *auditor_link_; }
    const PartyKeys& keys() const { return keys_; }

private:
    PartyKeys keys_;
    FixedClock clock_;
    SeededRandom rng_prover_;
    SeededRandom rng_auditor_;
    SeededRandom rng_verifier_;
    std::shared_ptr<ToolBackend> backend_;
    ReplyTap tap_;
    std::unique_ptr<ProverSession> prover_;
    std::unique_ptr<AuditorSession> auditor_;
    std::unique_ptr<VerifierSession> verifier_;
    std::unique_ptr<LocalLink> prover_link_;
    std::unique_ptr<LocalLink> auditor_link_;
    bool connected_ = false;
};

// One rehearsed run with a known expected behavior.
struct ScenarioOutcome {
    std::string name;
    bool completed = false;       // the protocol reached a clean finish
    bool expectation_met = false; // the rehearsed behavior actually happened
    std::string abort_cause;      // empty when none
    std::string report;           // verifier report text
    std::string detail;           // one line for the harness user
    // Every raw reply line the verifier received, so callers can audit what
    // actually crossed the verifier-facing interface.
    std::vector<std::string> verifier_inbound;
};

std::vector<std::string> scenario_names();
ScenarioOutcome run_scenario(const std::string& name, std::uint64_t seed);

// Exhaustive walk over single prover-side deviations. Each serving-phase
// prover reply is a branch point; at each one the walk tries an in-flight
// fork and a replay of an earlier same-type reply, then checks that no path
// leaves the verifier satisfied while the dual views disagree.
struct ExploreStats {
    std::uint64_t paths = 0;
    std::uint64_t states_visited = 0;
    std::uint64_t violations = 0;
    std::vector<std::string> violation_notes;
};

ExploreStats explore_states(std::uint64_t max_depth, bool self_test = false);

// Config for a full artifact-producing run.
struct RunConfig {
    std::filesystem::path corpus_root;
    std::filesystem::path outdir;
    std::uint64_t k_max = 40;
    std::uint64_t n_queries = 50;
    std::uint64_t seed = 1;
    bool obfuscate_paths = false;
    std::string transport = "local"; // "local" or "tcp"
    std::uint64_t narrative_cap = 65536;
    std::vector<std::string> questions;
};

// Line-oriented key=value text; "question" may repeat. ParameterError on
// unknown keys or unparseable values.
RunConfig parse_run_config(const std::string& text);

struct RunOutcome {
    bool completed = false;
    bool satisfied = false;
    std::string abort_cause;
    std::string report;
};

// Runs a full audit over the configured corpus and writes the artifact set
// (ticket, manifest, transcript, attestations, locker, report, sealed proofs,
// prover key escrow) under config.outdir.
RunOutcome run_audit(const RunConfig& config);

struct VerifyOutcome {
    bool ok = false;
    std::vector<std::string> notes; // one line per layer checked
};

// Offline re-check of a run_audit output directory. With the prover key file
// the sealed proof is opened and cross-checked against the public transcript.
VerifyOutcome verify_artifacts(const std::filesystem::path& dir,
                               const std::optional<std::filesystem::path>& prover_key_file);

struct ExtractionOutcome {
    std::uint64_t bits_targeted = 0;
    std::uint64_t bits_recovered = 0;
    std::uint64_t questions_spent = 0;
    bool recovered_match = false; // recovered prefix equals the planted bits
    double leakage_consumed = 0.0;
    double leakage_bound_total = 0.0;
};

// Adversarial verifier that burns its whole question budget pulling planted
// secret bits through yes/no questions. Demonstrates the budget is also the
// ceiling: recovery never exceeds k_max bits.
ExtractionOutcome oracle_extraction_demo(std::uint64_t secret_bits, std::uint64_t k_max,
                                         std::uint64_t seed);

} // namespace aw
