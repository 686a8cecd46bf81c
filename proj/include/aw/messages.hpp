#pragma once

#include "aw/crypto.hpp"
#include "aw/json_util.hpp"
#include "aw/transcript.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aw {

inline constexpr std::string_view kSchemaVersion = "aw/1";

// The closed verdict alphabet. Everything else is coerced to "error" by the
// auditor's output filter before it can reach the verifier.
bool verdict_valid(std::string_view verdict);

// Session parameters signed by the prover: one-time nonce, wall-clock
// timestamp, and the two budgets (question cap, per-question tool-call cap).
struct SessionTicket {
    std::array<std::uint8_t, 32> nonce{};
    std::string timestamp;
    std::uint64_t k_max = 0;
    std::uint64_t n_queries = 0;
    PublicKey prover_public{};
    Signature signature;

    std::string wire() const;
    static SessionTicket from_wire(const std::string& text);
    Json to_json() const;
    static SessionTicket from_json(const Json& j);

    bool operator==(const SessionTicket& o) const;
};

SessionTicket issue_ticket(const KeyPair& prover_keys, std::uint64_t k_max,
                           std::uint64_t n_queries, RandomSource& rng, const Clock& clock);
bool verify_ticket(const SessionTicket& ticket, const PublicKey& prover_public);

// Emulated attestation quote: the hardware root signs the enclave measurement,
// the auditor's ephemeral key, the embedded ticket (session form only) and the
// endpoint address. Boot form carries no ticket.
struct EnclaveQuote {
    Digest256 measurement;
    PublicKey auditor_public{};
    std::optional<SessionTicket> ticket;
    std::string address;
    Signature hw_signature;

    bool is_session() const { return ticket.has_value(); }

    std::string wire() const;
    static EnclaveQuote from_wire(const std::string& text);
    Json to_json() const;
    static EnclaveQuote from_json(const Json& j);
};

EnclaveQuote issue_quote(const KeyPair& hw_keys, const Digest256& measurement,
                         const PublicKey& auditor_public,
                         const std::optional<SessionTicket>& ticket, const std::string& address);
bool verify_quote(const PublicKey& hw_root_public, const EnclaveQuote& quote,
                  const Digest256& expected_measurement);

// Prover-signed permission for one verifier to talk to one attested auditor.
struct AuditorToken {
    EnclaveQuote quote;
    PublicKey verifier_public{};
    PublicKey prover_public{};
    Signature signature;

    std::string wire() const;
    static AuditorToken from_wire(const std::string& text);
    Json to_json() const;
    static AuditorToken from_json(const Json& j);
};

// IssueError unless session_quote is session-form with a ticket that verifies
// under the issuing prover's key.
AuditorToken issue_token(const KeyPair& prover_keys, const EnclaveQuote& session_quote,
                         const PublicKey& verifier_public);
// Full nesting re-check: token signature, quote against the hardware root and
// expected measurement, embedded ticket under the same prover key.
bool verify_token(const AuditorToken& token, const PublicKey& prover_public,
                  const PublicKey& hw_root_public, const Digest256& expected_measurement);

// The prover's countersignature on one answered question: transcript head at
// verdict time, the verdict, the token, and the question counter.
struct VerdictReceipt {
    Digest256 head;
    std::string verdict;
    AuditorToken token;
    std::uint64_t question_count = 0;
    Signature signature;

    std::string wire() const;
    static VerdictReceipt from_wire(const std::string& text);
    Json to_json() const;
    static VerdictReceipt from_json(const Json& j);
};

VerdictReceipt issue_verdict_receipt(const KeyPair& prover_keys, const Digest256& head,
                                     const std::string& verdict, const AuditorToken& token,
                                     std::uint64_t question_count);
bool verify_verdict_receipt(const VerdictReceipt& receipt, const PublicKey& prover_public);

// Per-question certificate: the auditor signs the receipt together with the
// question it answers. Carries no corpus data.
struct PublicAttestation {
    VerdictReceipt receipt;
    std::string question_text;
    Signature signature;

    std::string wire() const;
    static PublicAttestation from_wire(const std::string& text);
    Json to_json() const;
    static PublicAttestation from_json(const Json& j);
};

PublicAttestation issue_public_attestation(const KeyPair& auditor_keys,
                                           const VerdictReceipt& receipt,
                                           const std::string& question_text);
// Checks every layer: attestation signature under the PK_A inside the quote,
// receipt under the prover key, token, quote, ticket, measurement.
bool verify_public_attestation(const PublicAttestation& attestation,
                               const PublicKey& prover_public, const PublicKey& hw_root_public,
                               const Digest256& expected_measurement);

struct QuestionRecord {
    std::string question_text;
    std::string verdict;
    std::string narrative; // oracle free text, stays inside the sealed log
    std::string summary;
};

// The full session record the auditor accumulates: per-question records plus
// the complete chain entry list.
struct AuditLog {
    std::vector<QuestionRecord> questions;
    std::vector<ChainEntry> entries;
    Digest256 genesis;
    Digest256 final_head;

    std::string wire() const;
    static AuditLog from_wire(const std::string& text);
};

// Hash replay from genesis over entries reaches final_head.
bool audit_log_consistent(const AuditLog& log);

Json chain_entry_to_json(const ChainEntry& entry);
ChainEntry chain_entry_from_json(const Json& j);

// The audit log sealed to the prover key, bound to the digest of the final
// attestation set so it cannot be re-bound to a different public story.
struct PrivateProof {
    SealedBox sealed;
    Digest256 binding;

    std::string wire() const;
    static PrivateProof from_wire(const std::string& text);
};

// Session-layer signing payloads. Each message that carries a signature over
// protocol state signs one of these canonical encodings, so the formats are
// pinned here next to the artifact payloads they complement.
Bytes manifest_sig_payload(const std::string& manifest_text);            // prover
Bytes question_sig_payload(const std::string& question, std::uint64_t c_q); // verifier
Bytes verdict_sig_payload(const Digest256& head, const std::string& verdict,
                          std::uint64_t c_q);                            // auditor
Bytes end_sig_payload(std::uint64_t c_q);                                // verifier

Digest256 attestation_set_digest(const std::vector<PublicAttestation>& attestations);

PrivateProof seal_private_proof(const KeyPair& auditor_keys, const PublicKey& prover_public,
                                const AuditLog& log, const Digest256& attestation_set_digest);
// DecryptError on wrong key or wrong binding; ParseError if the sealed bytes
// are not a consistent AuditLog.
AuditLog open_private_proof(const KeyPair& prover_keys, const PrivateProof& proof,
                            const Digest256& attestation_set_digest);

} // namespace aw
