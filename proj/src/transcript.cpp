#include "aw/transcript.hpp"

#include "aw/bytes.hpp"
#include "aw/errors.hpp"

#include <sstream>
#include <utility>

namespace aw {

std::string entry_kind_name(EntryKind k) {
    switch (k) {
    case EntryKind::tool: return "tool";
    case EntryKind::question: return "question";
    case EntryKind::verdict: return "verdict";
    }
    return "tool";
}

namespace {

// The kind is never hashed; it is recovered from the body's type field so
// imported transcripts label entries the same way live sessions do.
EntryKind kind_from_call_wire(const std::string& call_wire) {
    if (call_wire.find("\"type\":\"question_body\"") != std::string::npos)
        return EntryKind::question;
    if (call_wire.find("\"type\":\"verdict_body\"") != std::string::npos)
        return EntryKind::verdict;
    return EntryKind::tool;
}

} // namespace

Digest256 chain_step(const Digest256& prev, const std::string& call_wire,
                     const std::string& result_wire) {
    return digest(canonical_encode({
        {"prev", Bytes(prev.bytes.begin(), prev.bytes.end())},
        {"q", call_wire},
        {"a", result_wire},
    }));
}

ChainState::ChainState(const Digest256& corpus_digest, const std::string& ticket_wire,
                       const PublicKey& prover_public, const PublicKey& auditor_public)
    : prover_public_(prover_public), auditor_public_(auditor_public) {
    genesis_ = digest(canonical_encode({
        {"corpus", Bytes(corpus_digest.bytes.begin(), corpus_digest.bytes.end())},
        {"ticket", ticket_wire},
    }));
    head_ = genesis_;
}

const ChainEntry& ChainState::append(EntryKind kind, std::string call_wire,
                                     std::string result_wire, const Signature& prover_sig,
                                     const Signature& auditor_sig) {
    if (!verify(prover_public_, head_.span(), prover_sig))
        throw ChainDivergence("prover signature does not cover the current head");
    if (!verify(auditor_public_, head_.span(), auditor_sig))
        throw ChainDivergence("auditor signature does not cover the current head");
    ChainEntry entry;
    entry.index = entries_.size() + 1;
    entry.kind = kind;
    entry.call_wire = std::move(call_wire);
    entry.result_wire = std::move(result_wire);
    entry.head_after = chain_step(head_, entry.call_wire, entry.result_wire);
    entry.prover_head_sig = prover_sig;
    entry.auditor_head_sig = auditor_sig;
    entries_.push_back(std::move(entry));
    head_ = entries_.back().head_after;
    return entries_.back();
}

ChainState chain_init(const Digest256& corpus_digest, const std::string& ticket_wire,
                      const PublicKey& prover_public, const PublicKey& auditor_public) {
    return ChainState(corpus_digest, ticket_wire, prover_public, auditor_public);
}

VerificationReport chain_verify(const Digest256& corpus_digest, const std::string& ticket_wire,
                                const std::vector<ChainEntry>& entries,
                                const Digest256& claimed_head, const PublicKey& prover_public,
                                const PublicKey& auditor_public) {
    ChainState replay(corpus_digest, ticket_wire, prover_public, auditor_public);
    for (const ChainEntry& entry : entries) {
        const Digest256 prev = replay.head();
        if (!verify(prover_public, prev.span(), entry.prover_head_sig))
            return VerificationReport::fail(entry.index, "bad-prover-sig");
        if (!verify(auditor_public, prev.span(), entry.auditor_head_sig))
            return VerificationReport::fail(entry.index, "bad-auditor-sig");
        const Digest256 expect = chain_step(prev, entry.call_wire, entry.result_wire);
        if (!(expect == entry.head_after))
            return VerificationReport::fail(entry.index, "hash-mismatch");
        replay.append(entry.kind, entry.call_wire, entry.result_wire, entry.prover_head_sig,
                      entry.auditor_head_sig);
    }
    if (!(replay.head() == claimed_head))
        return VerificationReport::fail(0, "head-mismatch");
    return VerificationReport::ok();
}

bool heads_consistent(const Digest256& prover_head, const Digest256& auditor_head) {
    return prover_head == auditor_head;
}

Bytes final_head_payload(const Digest256& head) {
    return canonical_encode({
        {"v", "aw/1"},
        {"final_head", Bytes(head.bytes.begin(), head.bytes.end())},
    });
}

bool final_record_verify(const FinalHeadRecord& record, const PublicKey& prover_public,
                         const PublicKey& auditor_public) {
    const Bytes payload = final_head_payload(record.head);
    return verify(prover_public, payload, record.prover_sig) &&
           verify(auditor_public, payload, record.auditor_sig);
}

std::string transcript_export(const std::vector<ChainEntry>& entries,
                              const FinalHeadRecord& final_record) {
    std::ostringstream out;
    for (const ChainEntry& entry : entries) {
        const Bytes enc = canonical_encode({
            {"q", entry.call_wire},
            {"a", entry.result_wire},
        });
        out << hex_encode(enc) << ' ' << entry.head_after.hex() << ' '
            << entry.prover_head_sig.hex() << ' ' << entry.auditor_head_sig.hex() << '\n';
    }
    out << "#final " << final_record.head.hex() << ' ' << final_record.prover_sig.hex() << ' '
        << final_record.auditor_sig.hex() << '\n';
    return out.str();
}

TranscriptFile transcript_import(const std::string& text) {
    TranscriptFile file;
    bool saw_final = false;
    std::istringstream in(text);
    std::string line;
    std::uint64_t index = 0;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::istringstream fields(line);
        if (line.rfind("#final ", 0) == 0) {
            if (saw_final)
                throw ParseError("transcript: duplicate #final record");
            std::string marker, head_hex, sig_p_hex, sig_a_hex;
            if (!(fields >> marker >> head_hex >> sig_p_hex >> sig_a_hex))
                throw ParseError("transcript: malformed #final record");
            std::string extra;
            if (fields >> extra)
                throw ParseError("transcript: trailing field on #final record");
            const auto head = Digest256::from_hex(head_hex);
            const auto sig_p = Signature::from_hex(sig_p_hex);
            const auto sig_a = Signature::from_hex(sig_a_hex);
            if (!head || !sig_p || !sig_a)
                throw ParseError("transcript: #final fields are not lowercase hex");
            file.final_record.head = *head;
            file.final_record.prover_sig = *sig_p;
            file.final_record.auditor_sig = *sig_a;
            saw_final = true;
            continue;
        }
        if (line[0] == '#')
            continue; // comments tolerated; only #final is meaningful
        if (saw_final)
            throw ParseError("transcript: entry after #final record");
        std::string enc_hex, head_hex, sig_p_hex, sig_a_hex;
        if (!(fields >> enc_hex >> head_hex >> sig_p_hex >> sig_a_hex))
            throw ParseError("transcript: malformed entry record");
        std::string extra;
        if (fields >> extra)
            throw ParseError("transcript: trailing field on entry record");
        const auto enc = hex_decode(enc_hex);
        if (!enc)
            throw ParseError("transcript: entry encoding is not lowercase hex");
        const auto fields_dec = canonical_decode(*enc);
        if (!fields_dec || fields_dec->size() != 2 || (*fields_dec)[0].tag != "q" ||
            (*fields_dec)[1].tag != "a")
            throw ParseError("transcript: entry encoding does not decode to a q/a pair");
        const auto head = Digest256::from_hex(head_hex);
        const auto sig_p = Signature::from_hex(sig_p_hex);
        const auto sig_a = Signature::from_hex(sig_a_hex);
        if (!head || !sig_p || !sig_a)
            throw ParseError("transcript: entry fields are not lowercase hex");
        ChainEntry entry;
        entry.index = ++index;
        entry.call_wire = to_string((*fields_dec)[0].value);
        entry.result_wire = to_string((*fields_dec)[1].value);
        entry.kind = kind_from_call_wire(entry.call_wire);
        entry.head_after = *head;
        entry.prover_head_sig = *sig_p;
        entry.auditor_head_sig = *sig_a;
        file.entries.push_back(std::move(entry));
    }
    if (!saw_final)
        throw ParseError("transcript: missing #final record");
    return file;
}

} // namespace aw
