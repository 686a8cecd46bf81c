#pragma once

#include "aw/channel.hpp"
#include "aw/corpus.hpp"
#include "aw/messages.hpp"
#include "aw/oracles.hpp"
#include "aw/transcript.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace aw {

enum class AuditorStatus { booted, serving, finalizing, complete, aborted };

std::string auditor_status_name(AuditorStatus s);

// Trims surrounding whitespace and coerces anything outside the closed
// verdict alphabet to "error". The only path by which oracle output reaches
// the verifier.
std::string filter_output(const std::string& raw_verdict);

struct AuditorConfig {
    Digest256 measurement;      // this build's enclave identity
    PublicKey prover_public{};  // pinned corpus owner
    std::string address = "local";
    std::uint64_t narrative_cap = 65536; // bytes kept per question narrative
    // Both switches exist for the harness only. integrity_checks=false makes
    // the auditor skip head, receipt, and content cross-checks (the explorer's
    // negative control); budget_gate=false drops the per-question tool gate so
    // the prover's defense-in-depth can be exercised at all.
    bool integrity_checks = true;
    bool budget_gate = true;
};

// The emulated-enclave examiner. Boots with a fresh ephemeral key, attests
// via hardware-root-signed quotes, walks the prover handshake, answers
// verifier questions through a metered oracle, co-maintains the hash chain,
// and seals the full story to the prover key at teardown.
class AuditorSession {
public:
    AuditorSession(AuditorConfig config, const KeyPair& hw_keys, RandomSource& rng,
                   OracleFactory oracle_factory);

    const EnclaveQuote& boot_quote() const { return boot_quote_; }
    const PublicKey& public_key() const { return keys_.public_key; }
    AuditorStatus status() const { return status_; }
    const std::string& abort_cause() const { return abort_cause_; }

    // hello -> ticket -> session quote -> manifest. Serving on success;
    // AbortError with the pinned cause otherwise.
    void attach_prover(PeerLink& link);

    const SessionTicket& ticket() const { return *ticket_; }
    const CorpusManifest& manifest() const { return manifest_; }
    bool has_chain() const { return chain_.has_value(); }
    const ChainState& chain() const { return *chain_; }

    // One verifier request line in, one reply line out. Never throws; aborts
    // surface as {"type":"abort"} replies after the session is torn down.
    std::string handle_verifier_message(const std::string& line);

    std::uint64_t questions_answered() const { return questions_asked_; }
    std::uint64_t last_question_tool_calls() const { return tools_this_question_; }
    double leakage_bits_emitted() const { return leakage_bits_; }
    const std::vector<PublicAttestation>& attestations() const { return attestations_; }
    const std::vector<QuestionRecord>& question_log() const { return question_log_; }
    const std::optional<FinalHeadRecord>& final_record() const { return final_record_; }

private:
    class Capability;
    friend class Capability;

    Json dispatch(const Json& msg);
    Json handle_establish(const Json& msg);
    Json handle_question(const Json& msg);
    Json handle_end(const Json& msg);

    // Sends one enveloped message to the prover and returns the parsed reply.
    // A {"type":"abort"} reply tears the session down; {"type":"error"} is a
    // protocol fault and throws.
    Json prover_request(const Json& msg);

    // One half-step of a chained exchange: stamp head and head signature, send,
    // and verify the prover's counter-signature over the same head. The entry
    // is appended separately so result checks can sit between the two.
    struct ChainedReply {
        Json reply;
        Digest256 pre_head{};
        Signature prover_sig{};
        Signature auditor_sig{};
    };
    ChainedReply send_chained(const char* type, const char* expected_reply, const Json& body);
    void append_and_compare(EntryKind kind, const Json& body, const std::string& result_wire,
                            const ChainedReply& cr);

    ToolResult issue_tool_call(ToolKind kind, const std::string& argument);
    void content_checks(const ToolCall& call, const ToolResult& result, const Json& body);
    Json answer_one(const std::string& question, std::uint64_t c_q,
                    const Signature& verifier_sig);
    void finalize_with_prover();
    [[noreturn]] void abort_session(const std::string& cause, bool notify_prover);

    AuditorConfig config_;
    KeyPair keys_;
    KeyPair hw_keys_; // emulation: quote signing lives with the session
    PublicKey hw_public_{};
    EnclaveQuote boot_quote_;
    OracleFactory oracle_factory_;

    AuditorStatus status_ = AuditorStatus::booted;
    std::string abort_cause_;

    PeerLink* prover_link_ = nullptr;
    std::optional<SessionTicket> ticket_;
    std::string session_quote_wire_;
    CorpusManifest manifest_;
    std::optional<ChainState> chain_;
    std::optional<PublicKey> verifier_public_;

    std::uint64_t questions_asked_ = 0;
    std::uint64_t tools_this_question_ = 0;
    double leakage_bits_ = 0.0;

    // Every search this session served: normalized query tokens and the paths
    // returned. Read results are screened against it for omissions.
    std::vector<std::pair<std::vector<std::string>, std::set<std::string>>> searches_;

    std::vector<PublicAttestation> attestations_;
    std::vector<QuestionRecord> question_log_;
    std::optional<FinalHeadRecord> final_record_;
    std::optional<PrivateProof> proof_;
};

} // namespace aw
