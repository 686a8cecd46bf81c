#pragma once

#include "aw/corpus.hpp"
#include "aw/messages.hpp"
#include "aw/transcript.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace aw {

enum class ProverStatus { handshaking, serving, finalizing, complete, aborted };

std::string prover_status_name(ProverStatus s);

// Append-only record of every wire byte the prover sent or received, kept so
// a completed or aborted session can be audited after the fact.
struct LockerEntry {
    std::uint64_t index = 0; // contiguous, 1-based
    std::string direction;   // "sent" | "received"
    std::string timestamp;
    Digest256 digest;        // digest of bytes
    std::string bytes;
};

class EvidenceLocker {
public:
    void record(std::string direction, const std::string& bytes, const Clock& clock);
    const std::vector<LockerEntry>& entries() const { return entries_; }

    // One line per entry: "<index> <direction> <timestamp> <digest> <hex bytes>".
    std::string export_text() const;
    // ParseError on malformed lines, broken index order, or a digest that
    // does not match the recorded bytes.
    static EvidenceLocker import_text(const std::string& text);

private:
    std::vector<LockerEntry> entries_;
};

struct ProverConfig {
    std::filesystem::path corpus_root;
    std::uint64_t k_max = 40;
    std::uint64_t n_queries = 50;
    PublicKey hw_root_public{};
    Digest256 expected_measurement;
    bool obfuscate_paths = false;
};

// The corpus owner's side of an audit session. Pure responder: every inbound
// line maps to exactly one reply line via handle_message. Owns the manifest
// pre-commitment, the session ticket, its half of the hash chain, receipt and
// token issuance, and the evidence locker.
class ProverSession {
public:
    ProverSession(const KeyPair& keys, ProverConfig config, std::shared_ptr<ToolBackend> backend,
                  RandomSource& rng, const Clock& clock);

    const SessionTicket& ticket() const { return ticket_; }
    const CorpusManifest& manifest() const { return manifest_; }
    const std::string& manifest_text() const { return manifest_text_; }
    const PublicKey& public_key() const { return keys_.public_key; }

    ProverStatus status() const { return status_; }
    const std::string& abort_cause() const { return abort_cause_; }

    // Never throws; protocol violations come back as {"type":"error"} replies
    // and pinned abort causes as {"type":"abort"} replies.
    std::string handle_message(const std::string& line);

    const EvidenceLocker& locker() const { return locker_; }
    bool has_chain() const { return chain_.has_value(); }
    const ChainState& chain() const { return *chain_; }
    std::uint64_t question_count() const { return question_count_; }
    std::uint64_t tools_since_question() const { return tools_since_question_; }
    const std::optional<AuditorToken>& issued_token() const { return token_; }
    const std::optional<FinalHeadRecord>& final_record() const { return final_record_; }
    const std::optional<PrivateProof>& stored_proof() const { return stored_proof_; }

    // Requires the final record (the session reached finalizing or complete).
    std::string transcript_export_text() const;

private:
    Json dispatch(const Json& msg);
    Json handle_hello(const Json& msg);
    Json handle_session_quote(const Json& msg);
    Json handle_token_request(const Json& msg);
    Json handle_tool_call(const Json& msg);
    Json handle_question_notice(const Json& msg);
    Json handle_verdict_notice(const Json& msg);
    Json handle_end_notice(const Json& msg);
    Json handle_private_proof(const Json& msg);

    // Envelope head must equal our head and carry a valid auditor signature
    // over it; anything else is a fork. Throws AbortError("chain_divergence").
    void check_envelope_head(const Json& msg);
    [[noreturn]] void abort_now(const std::string& cause);

    KeyPair keys_;
    ProverConfig config_;
    std::shared_ptr<ToolBackend> backend_;
    const Clock* clock_;

    CorpusManifest manifest_;
    std::string manifest_text_;
    SessionTicket ticket_;

    ProverStatus status_ = ProverStatus::handshaking;
    std::string abort_cause_;

    std::optional<PublicKey> auditor_public_;
    std::optional<EnclaveQuote> session_quote_;
    std::optional<AuditorToken> token_;
    std::optional<ChainState> chain_;
    std::optional<FinalHeadRecord> final_record_;
    std::optional<PrivateProof> stored_proof_;

    std::uint64_t question_count_ = 0;
    std::uint64_t tools_since_question_ = 0;

    EvidenceLocker locker_;
};

} // namespace aw
