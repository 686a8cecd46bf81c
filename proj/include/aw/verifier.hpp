#pragma once

#include "aw/channel.hpp"
#include "aw/messages.hpp"
#include "aw/oracles.hpp"
#include "aw/transcript.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aw {

// Worst-case bits a session of k_max answered questions can reveal, with each
// answer drawn from a closed alphabet. ParameterError unless the alphabet has
// at least two symbols.
double leakage_bound(std::uint64_t k_max, std::uint64_t alphabet_size);

struct VerifierConfig {
    PublicKey prover_public{};
    PublicKey hw_root_public{};
    Digest256 expected_measurement;
    std::uint64_t alphabet_size = 4; // the four verdict tokens
};

// The question asker. Holds keys of its own, binds to one audit session via
// the prover-issued token, asks signed questions, checks every attestation,
// and accounts for the bits each answer reveals.
class VerifierSession {
public:
    VerifierSession(VerifierConfig config, RandomSource& rng);

    const PublicKey& public_key() const { return keys_.public_key; }

    // token_request to the prover, then establish to the auditor.
    // EstablishError when either leg fails its checks.
    void establish(PeerLink& prover, PeerLink& auditor);

    // Asks one question. BudgetError before any wire traffic once k_max
    // questions are spent; AttestationError when the answer arrives but its
    // certificate fails (the answer still counts against the budget);
    // AbortError when the session dies under the question.
    const AskRecord& ask(const std::string& question);

    // Closes the audit and collects the final artifacts. Throws
    // AttestationError when the dual-signed record or counts do not verify.
    void finish();

    // Drives a whole plan: stops on budget exhaustion or abort, skips past
    // rejected attestations, closes the session when the plan runs dry.
    void run_plan(QuestionPlan& plan);

    // One line per answered question, "Q<i> <verdict> <pass|fail> <text>",
    // then "aborted <cause>" when the session died, then the leakage line.
    std::string report() const;

    // Every question asked got an accepted answer and the session closed clean.
    bool satisfied() const;

    bool established() const { return established_; }
    bool finished() const { return finished_; }
    bool aborted() const { return aborted_; }
    const std::string& abort_cause() const { return abort_cause_; }
    std::uint64_t k_max() const { return k_max_; }
    const std::optional<AuditorToken>& token() const { return token_; }
    const std::vector<AskRecord>& asked() const { return asked_; }
    const std::vector<PublicAttestation>& attestations() const { return attestations_; }
    const std::optional<FinalHeadRecord>& final_record() const { return final_record_; }
    const std::optional<PrivateProof>& proof() const { return proof_; }

    double leakage_consumed() const;
    double leakage_bound_total() const { return leakage_bound(k_max_, config_.alphabet_size); }

    std::uint64_t wire_messages_sent() const { return wire_messages_sent_; }
    // Raw reply lines received from either peer, in arrival order.
    const std::vector<std::string>& inbound_log() const { return inbound_log_; }

private:
    Json exchange(PeerLink& link, const Json& msg);

    VerifierConfig config_;
    KeyPair keys_;

    PeerLink* prover_link_ = nullptr;
    PeerLink* auditor_link_ = nullptr;

    bool established_ = false;
    bool finished_ = false;
    bool aborted_ = false;
    std::string abort_cause_;

    std::uint64_t k_max_ = 0;
    std::optional<AuditorToken> token_;
    std::vector<AskRecord> asked_;
    std::uint64_t verdicts_received_ = 0;
    std::vector<PublicAttestation> attestations_;
    std::optional<FinalHeadRecord> final_record_;
    std::optional<PrivateProof> proof_;

    std::uint64_t wire_messages_sent_ = 0;
    std::vector<std::string> inbound_log_;
};

} // namespace aw
