#pragma once

#include "aw/crypto.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aw {

// Tool exchanges, question arrivals and verdict exchanges all enter the
// chain, so the final head fingerprints the entire audit session.
enum class EntryKind { tool, question, verdict };

std::string entry_kind_name(EntryKind k);

struct ChainEntry {
    std::uint64_t index = 0;   // 1-based
    EntryKind kind = EntryKind::tool;
    std::string call_wire;      // q_i, exact bytes hashed
    std::string result_wire;    // a_i, exact bytes hashed
    Digest256 head_after;       // H_i
    Signature prover_head_sig;  // over H_{i-1}
    Signature auditor_head_sig; // over H_{i-1}
};

// H_i = digest(canonical_encode[(prev, H_{i-1}), (q, call), (a, result)])
Digest256 chain_step(const Digest256& prev, const std::string& call_wire,
                     const std::string& result_wire);

class ChainState {
public:
    ChainState() = default;
    ChainState(const Digest256& corpus_digest, const std::string& ticket_wire,
               const PublicKey& prover_public, const PublicKey& auditor_public);

    const Digest256& genesis() const { return genesis_; }
    const Digest256& head() const { return head_; }
    std::uint64_t length() const { return entries_.size(); }
    const std::vector<ChainEntry>& entries() const { return entries_; }
    const PublicKey& prover_public() const { return prover_public_; }
    const PublicKey& auditor_public() const { return auditor_public_; }

    // Both signatures must verify over the current head (the H_{i-1} they
    // sign per the protocol); otherwise ChainDivergence. Append-only.
    const ChainEntry& append(EntryKind kind, std::string call_wire, std::string result_wire,
                             const Signature& prover_sig, const Signature& auditor_sig);

private:
    Digest256 genesis_;
    Digest256 head_;
    std::vector<ChainEntry> entries_;
    PublicKey prover_public_{};
    PublicKey auditor_public_{};
};

ChainState chain_init(const Digest256& corpus_digest, const std::string& ticket_wire,
                      const PublicKey& prover_public, const PublicKey& auditor_public);

struct VerificationReport {
    bool valid = true;
    std::uint64_t first_bad_index = 0; // 1-based entry index; 0 = final head
    std::string cause;                 // hash-mismatch | bad-prover-sig | bad-auditor-sig | head-mismatch

    static VerificationReport ok() { return {}; }
    static VerificationReport fail(std::uint64_t index, std::string cause) {
        return {false, index, std::move(cause)};
    }
};

// Replays all entries from genesis; valid iff every per-entry signature pair
// verifies, every stored head matches the recomputation, and the replayed
// head equals claimed_head.
VerificationReport chain_verify(const Digest256& corpus_digest, const std::string& ticket_wire,
                                const std::vector<ChainEntry>& entries,
                                const Digest256& claimed_head, const PublicKey& prover_public,
                                const PublicKey& auditor_public);

// H_{P,i} = H_{A,i}; false triggers session abort in callers.
bool heads_consistent(const Digest256& prover_head, const Digest256& auditor_head);

// Final dual-signed head record, exchanged in the end-of-audit handshake.
struct FinalHeadRecord {
    Digest256 head;
    Signature prover_sig;
    Signature auditor_sig;
};

// Domain-separated payload the final record signatures cover.
Bytes final_head_payload(const Digest256& head);

bool final_record_verify(const FinalHeadRecord& record, const PublicKey& prover_public,
                         const PublicKey& auditor_public);

// Newline-delimited export: one record per entry (hex canonical encoding of
// the q/a pair, hex head, hex signatures), then "#final <head> <sigP> <sigA>".
std::string transcript_export(const std::vector<ChainEntry>& entries,
                              const FinalHeadRecord& final_record);

struct TranscriptFile {
    std::vector<ChainEntry> entries;
    FinalHeadRecord final_record;
};

TranscriptFile transcript_import(const std::string& text);

} // namespace aw
