#include "aw/messages.hpp"

#include "aw/errors.hpp"

#include <algorithm>
#include <string>

namespace aw {

namespace {

template <std::size_t N>
Bytes bytes_of(const std::array<std::uint8_t, N>& a) {
    return Bytes(a.begin(), a.end());
}

EntryKind entry_kind_from_name(const std::string& name) {
    if (name == "tool")
        return EntryKind::tool;
    if (name == "question")
        return EntryKind::question;
    if (name == "verdict")
        return EntryKind::verdict;
    throw ParseError("unknown chain entry kind: " + name);
}

} // namespace

bool verdict_valid(std::string_view verdict) {
    return verdict == "true" || verdict == "false" || verdict == "unsure" || verdict == "error";
}

// ---- SessionTicket ---------------------------------------------------------

static Bytes ticket_signing_payload(const SessionTicket& t) {
    return canonical_encode({
        {"v", kSchemaVersion},
        {"nonce", bytes_of(t.nonce)},
        {"timestamp", t.timestamp},
        {"k_max", be64(t.k_max)},
        {"n_queries", be64(t.n_queries)},
        {"prover_public", bytes_of(t.prover_public)},
    });
}

Json SessionTicket::to_json() const {
    Json j;
    j["v"] = kSchemaVersion;
    j["type"] = "ticket";
    j["nonce"] = hex_encode(nonce);
    j["timestamp"] = timestamp;
    j["k_max"] = k_max;
    j["n_queries"] = n_queries;
    j["prover_public"] = hex_encode(prover_public);
    j["signature"] = signature.hex();
    return j;
}

SessionTicket SessionTicket::from_json(const Json& j) {
    expect_object(j, 8, "ticket");
    expect_artifact(j, "ticket");
    SessionTicket t;
    const Bytes nonce = get_hex(j, "nonce");
    if (nonce.size() != 32)
        throw ParseError("ticket: nonce is not 32 bytes");
    std::copy(nonce.begin(), nonce.end(), t.nonce.begin());
    t.timestamp = get_string(j, "timestamp");
    t.k_max = get_u64(j, "k_max");
    t.n_queries = get_u64(j, "n_queries");
    if (t.k_max < 1 || t.n_queries < 1)
        throw ParseError("ticket: budgets must be positive");
    t.prover_public = get_public_key(j, "prover_public");
    t.signature = get_signature(j, "signature");
    t.signature.signer_role = Role::prover;
    return t;
}

std::string SessionTicket::wire() const { return dump_wire(to_json()); }

SessionTicket SessionTicket::from_wire(const std::string& text) {
    return from_json(json_parse(text));
}

bool SessionTicket::operator==(const SessionTicket& o) const {
    return nonce == o.nonce && timestamp == o.timestamp && k_max == o.k_max &&
           n_queries == o.n_queries && prover_public == o.prover_public &&
           signature == o.signature;
}

SessionTicket issue_ticket(const KeyPair& prover_keys, std::uint64_t k_max,
                           std::uint64_t n_queries, RandomSource& rng, const Clock& clock) {
    if (k_max < 1 || n_queries < 1)
        throw ParameterError("ticket budgets must be positive");
    SessionTicket t;
    rng.fill(t.nonce);
    t.timestamp = clock.now_iso8601_utc();
    t.k_max = k_max;
    t.n_queries = n_queries;
    t.prover_public = prover_keys.public_key;
    t.signature = sign(prover_keys, ticket_signing_payload(t));
    return t;
}

bool verify_ticket(const SessionTicket& ticket, const PublicKey& prover_public) {
    if (ticket.k_max < 1 || ticket.n_queries < 1)
        return false;
    if (ticket.prover_public != prover_public)
        return false;
    return verify(prover_public, ticket_signing_payload(ticket), ticket.signature);
}

// ---- EnclaveQuote ----------------------------------------------------------

static Bytes quote_signing_payload(const EnclaveQuote& q) {
    std::vector<EncodedField> fields;
    fields.emplace_back("v", kSchemaVersion);
    fields.emplace_back("measurement", bytes_of(q.measurement.bytes));
    fields.emplace_back("auditor_public", bytes_of(q.auditor_public));
    if (q.ticket)
        fields.emplace_back("ticket", q.ticket->wire());
    fields.emplace_back("address", q.address);
    return canonical_encode(fields);
}

Json EnclaveQuote::to_json() const {
    Json j;
    j["v"] = kSchemaVersion;
    j["type"] = "quote";
    j["measurement"] = measurement.hex();
    j["auditor_public"] = hex_encode(auditor_public);
    if (ticket)
        j["ticket"] = ticket->to_json();
    j["address"] = address;
    j["hw_signature"] = hw_signature.hex();
    return j;
}

EnclaveQuote EnclaveQuote::from_json(const Json& j) {
    const bool has_ticket = j.is_object() && j.contains("ticket");
    expect_object(j, has_ticket ? 7 : 6, "quote");
    expect_artifact(j, "quote");
    EnclaveQuote q;
    q.measurement = get_digest(j, "measurement");
    q.auditor_public = get_public_key(j, "auditor_public");
    if (has_ticket)
        q.ticket = SessionTicket::from_json(get_object(j, "ticket"));
    q.address = get_string(j, "address");
    q.hw_signature = get_signature(j, "hw_signature");
    q.hw_signature.signer_role = Role::hardware_root;
    return q;
}

std::string EnclaveQuote::wire() const { return dump_wire(to_json()); }

EnclaveQuote EnclaveQuote::from_wire(const std::string& text) {
    return from_json(json_parse(text));
}

EnclaveQuote issue_quote(const KeyPair& hw_keys, const Digest256& measurement,
                         const PublicKey& auditor_public,
                         const std::optional<SessionTicket>& ticket, const std::string& address) {
    EnclaveQuote q;
    q.measurement = measurement;
    q.auditor_public = auditor_public;
    q.ticket = ticket;
    q.address = address;
    q.hw_signature = sign(hw_keys, quote_signing_payload(q));
    return q;
}

bool verify_quote(const PublicKey& hw_root_public, const EnclaveQuote& quote,
                  const Digest256& expected_measurement) {
    if (!(quote.measurement == expected_measurement))
        return false;
    return verify(hw_root_public, quote_signing_payload(quote), quote.hw_signature);
}

// ---- AuditorToken ----------------------------------------------------------

static Bytes token_signing_payload(const AuditorToken& t) {
    return canonical_encode({
        {"v", kSchemaVersion},
        {"quote", t.quote.wire()},
        {"verifier_public", bytes_of(t.verifier_public)},
        {"prover_public", bytes_of(t.prover_public)},
    });
}

Json AuditorToken::to_json() const {
    Json j;
    j["v"] = kSchemaVersion;
    j["type"] = "token";
    j["quote"] = quote.to_json();
    j["verifier_public"] = hex_encode(verifier_public);
    j["prover_public"] = hex_encode(prover_public);
    j["signature"] = signature.hex();
    return j;
}

AuditorToken AuditorToken::from_json(const Json& j) {
    expect_object(j, 6, "token");
    expect_artifact(j, "token");
    AuditorToken t;
    t.quote = EnclaveQuote::from_json(get_object(j, "quote"));
    if (!t.quote.is_session())
        throw ParseError("token: embedded quote lacks a ticket");
    t.verifier_public = get_public_key(j, "verifier_public");
    t.prover_public = get_public_key(j, "prover_public");
    t.signature = get_signature(j, "signature");
    t.signature.signer_role = Role::prover;
    return t;
}

std::string AuditorToken::wire() const { return dump_wire(to_json()); }

AuditorToken AuditorToken::from_wire(const std::string& text) {
    return from_json(json_parse(text));
}

AuditorToken issue_token(const KeyPair& prover_keys, const EnclaveQuote& session_quote,
                         const PublicKey& verifier_public) {
    if (!session_quote.is_session())
        throw IssueError("token requires a session quote with an embedded ticket");
    if (!verify_ticket(*session_quote.ticket, prover_keys.public_key))
        throw IssueError("token: embedded ticket does not verify under the issuing key");
    AuditorToken t;
    t.quote = session_quote;
    t.verifier_public = verifier_public;
    t.prover_public = prover_keys.public_key;
    t.signature = sign(prover_keys, token_signing_payload(t));
    return t;
}

bool verify_token(const AuditorToken& token, const PublicKey& prover_public,
                  const PublicKey& hw_root_public, const Digest256& expected_measurement) {
    if (token.prover_public != prover_public)
        return false;
    if (!verify(prover_public, token_signing_payload(token), token.signature))
        return false;
    if (!token.quote.is_session())
        return false;
    if (!verify_quote(hw_root_public, token.quote, expected_measurement))
        return false;
    return verify_ticket(*token.quote.ticket, prover_public);
}

// ---- VerdictReceipt --------------------------------------------------------

static Bytes receipt_signing_payload(const VerdictReceipt& r) {
    return canonical_encode({
        {"v", kSchemaVersion},
        {"head", bytes_of(r.head.bytes)},
        {"verdict", r.verdict},
        {"token", r.token.wire()},
        {"question_count", be64(r.question_count)},
    });
}

Json VerdictReceipt::to_json() const {
    Json j;
    j["v"] = kSchemaVersion;
    j["type"] = "receipt";
    j["head"] = head.hex();
    j["verdict"] = verdict;
    j["token"] = token.to_json();
    j["question_count"] = question_count;
    j["signature"] = signature.hex();
    return j;
}

VerdictReceipt VerdictReceipt::from_json(const Json& j) {
    expect_object(j, 7, "receipt");
    expect_artifact(j, "receipt");
    VerdictReceipt r;
    r.head = get_digest(j, "head");
    r.verdict = get_string(j, "verdict");
    if (!verdict_valid(r.verdict))
        throw ParseError("receipt: verdict outside the four-token alphabet");
    r.token = AuditorToken::from_json(get_object(j, "token"));
    r.question_count = get_u64(j, "question_count");
    if (r.question_count > r.token.quote.ticket->k_max)
        throw ParseError("receipt: question count exceeds the ticket budget");
    r.signature = get_signature(j, "signature");
    r.signature.signer_role = Role::prover;
    return r;
}

std::string VerdictReceipt::wire() const { return dump_wire(to_json()); }

VerdictReceipt VerdictReceipt::from_wire(const std::string& text) {
    return from_json(json_parse(text));
}

VerdictReceipt issue_verdict_receipt(const KeyPair& prover_keys, const Digest256& head,
                                     const std::string& verdict, const AuditorToken& token,
                                     std::uint64_t question_count) {
    if (!verdict_valid(verdict))
        throw ParameterError("verdict outside the four-token alphabet: " + verdict);
    if (!token.quote.is_session())
        throw ParameterError("receipt requires a session-form token");
    if (question_count > token.quote.ticket->k_max)
        throw ParameterError("question count exceeds the ticket budget");
    VerdictReceipt r;
    r.head = head;
    r.verdict = verdict;
    r.token = token;
    r.question_count = question_count;
    r.signature = sign(prover_keys, receipt_signing_payload(r));
    return r;
}

bool verify_verdict_receipt(const VerdictReceipt& receipt, const PublicKey& prover_public) {
    if (!verdict_valid(receipt.verdict))
        return false;
    if (!receipt.token.quote.is_session())
        return false;
    if (receipt.question_count > receipt.token.quote.ticket->k_max)
        return false;
    return verify(prover_public, receipt_signing_payload(receipt), receipt.signature);
}

// ---- PublicAttestation -----------------------------------------------------

static Bytes attestation_signing_payload(const PublicAttestation& a) {
    return canonical_encode({
        {"v", kSchemaVersion},
        {"receipt", a.receipt.wire()},
        {"question_text", a.question_text},
    });
}

Json PublicAttestation::to_json() const {
    Json j;
    j["v"] = kSchemaVersion;
    j["type"] = "attestation";
    j["receipt"] = receipt.to_json();
    j["question_text"] = question_text;
    j["signature"] = signature.hex();
    return j;
}

PublicAttestation PublicAttestation::from_json(const Json& j) {
    expect_object(j, 5, "attestation");
    expect_artifact(j, "attestation");
    PublicAttestation a;
    a.receipt = VerdictReceipt::from_json(get_object(j, "receipt"));
    a.question_text = get_string(j, "question_text");
    a.signature = get_signature(j, "signature");
    a.signature.signer_role = Role::auditor;
    return a;
}

std::string PublicAttestation::wire() const { return dump_wire(to_json()); }

PublicAttestation PublicAttestation::from_wire(const std::string& text) {
    return from_json(json_parse(text));
}

PublicAttestation issue_public_attestation(const KeyPair& auditor_keys,
                                           const VerdictReceipt& receipt,
                                           const std::string& question_text) {
    PublicAttestation a;
    a.receipt = receipt;
    a.question_text = question_text;
    a.signature = sign(auditor_keys, attestation_signing_payload(a));
    return a;
}

bool verify_public_attestation(const PublicAttestation& attestation,
                               const PublicKey& prover_public, const PublicKey& hw_root_public,
                               const Digest256& expected_measurement) {
    if (!verify_verdict_receipt(attestation.receipt, prover_public))
        return false;
    if (!verify_token(attestation.receipt.token, prover_public, hw_root_public,
                      expected_measurement))
        return false;
    const PublicKey& auditor_public = attestation.receipt.token.quote.auditor_public;
    return verify(auditor_public, attestation_signing_payload(attestation),
                  attestation.signature);
}

// ---- AuditLog --------------------------------------------------------------

Json chain_entry_to_json(const ChainEntry& entry) {
    Json j;
    j["index"] = entry.index;
    j["kind"] = entry_kind_name(entry.kind);
    j["call"] = entry.call_wire;
    j["result"] = entry.result_wire;
    j["head_after"] = entry.head_after.hex();
    j["prover_sig"] = entry.prover_head_sig.hex();
    j["auditor_sig"] = entry.auditor_head_sig.hex();
    return j;
}

ChainEntry chain_entry_from_json(const Json& j) {
    expect_object(j, 7, "chain entry");
    ChainEntry e;
    e.index = get_u64(j, "index");
    e.kind = entry_kind_from_name(get_string(j, "kind"));
    e.call_wire = get_string(j, "call");
    e.result_wire = get_string(j, "result");
    e.head_after = get_digest(j, "head_after");
    e.prover_head_sig = get_signature(j, "prover_sig");
    e.auditor_head_sig = get_signature(j, "auditor_sig");
    return e;
}

std::string AuditLog::wire() const {
    Json j;
    j["v"] = kSchemaVersion;
    j["type"] = "audit_log";
    j["genesis"] = genesis.hex();
    j["final_head"] = final_head.hex();
    Json qs = Json::array();
    for (const QuestionRecord& q : questions) {
        Json r;
        r["question_text"] = q.question_text;
        r["verdict"] = q.verdict;
        r["narrative"] = q.narrative;
        r["summary"] = q.summary;
        qs.push_back(std::move(r));
    }
    j["questions"] = std::move(qs);
    Json es = Json::array();
    for (const ChainEntry& e : entries)
        es.push_back(chain_entry_to_json(e));
    j["entries"] = std::move(es);
    return dump_wire(j);
}

AuditLog AuditLog::from_wire(const std::string& text) {
    const Json j = json_parse(text);
    expect_object(j, 6, "audit log");
    expect_artifact(j, "audit_log");
    AuditLog log;
    log.genesis = get_digest(j, "genesis");
    log.final_head = get_digest(j, "final_head");
    for (const Json& r : get_array(j, "questions")) {
        expect_object(r, 4, "audit log question record");
        QuestionRecord q;
        q.question_text = get_string(r, "question_text");
        q.verdict = get_string(r, "verdict");
        if (!verdict_valid(q.verdict))
            throw ParseError("audit log: verdict outside the four-token alphabet");
        q.narrative = get_string(r, "narrative");
        q.summary = get_string(r, "summary");
        log.questions.push_back(std::move(q));
    }
    for (const Json& e : get_array(j, "entries"))
        log.entries.push_back(chain_entry_from_json(e));
    return log;
}

bool audit_log_consistent(const AuditLog& log) {
    Digest256 head = log.genesis;
    std::uint64_t index = 0;
    for (const ChainEntry& entry : log.entries) {
        if (entry.index != ++index)
            return false;
        const Digest256 expect = chain_step(head, entry.call_wire, entry.result_wire);
        if (!(expect == entry.head_after))
            return false;
        head = entry.head_after;
    }
    return head == log.final_head;
}

// ---- PrivateProof ----------------------------------------------------------

std::string PrivateProof::wire() const {
    Json box;
    box["ephemeral"] = hex_encode(sealed.ephemeral_key);
    box["nonce"] = hex_encode(sealed.nonce);
    box["ciphertext"] = hex_encode(sealed.ciphertext);
    box["associated"] = sealed.associated_digest.hex();
    Json j;
    j["v"] = kSchemaVersion;
    j["type"] = "private_proof";
    j["binding"] = binding.hex();
    j["sealed"] = std::move(box);
    return dump_wire(j);
}

PrivateProof PrivateProof::from_wire(const std::string& text) {
    const Json j = json_parse(text);
    expect_object(j, 4, "private proof");
    expect_artifact(j, "private_proof");
    PrivateProof p;
    p.binding = get_digest(j, "binding");
    const Json& box = get_object(j, "sealed");
    expect_object(box, 4, "sealed box");
    const Bytes ephemeral = get_hex(box, "ephemeral");
    if (ephemeral.size() != 32)
        throw ParseError("sealed box: ephemeral key is not 32 bytes");
    std::copy(ephemeral.begin(), ephemeral.end(), p.sealed.ephemeral_key.begin());
    const Bytes nonce = get_hex(box, "nonce");
    if (nonce.size() != 24)
        throw ParseError("sealed box: nonce is not 24 bytes");
    std::copy(nonce.begin(), nonce.end(), p.sealed.nonce.begin());
    p.sealed.ciphertext = get_hex(box, "ciphertext");
    p.sealed.associated_digest = get_digest(box, "associated");
    if (!(p.sealed.associated_digest == p.binding))
        throw ParseError("private proof: sealed associated digest disagrees with binding");
    return p;
}

Bytes manifest_sig_payload(const std::string& manifest_text) {
    return canonical_encode({
        {"v", kSchemaVersion},
        {"manifest", manifest_text},
    });
}

Bytes question_sig_payload(const std::string& question, std::uint64_t c_q) {
    return canonical_encode({
        {"v", kSchemaVersion},
        {"question", question},
        {"c_q", be64(c_q)},
    });
}

Bytes verdict_sig_payload(const Digest256& head, const std::string& verdict, std::uint64_t c_q) {
    return canonical_encode({
        {"v", kSchemaVersion},
        {"head", bytes_of(head.bytes)},
        {"verdict", verdict},
        {"c_q", be64(c_q)},
    });
}

Bytes end_sig_payload(std::uint64_t c_q) {
    return canonical_encode({
        {"v", kSchemaVersion},
        {"end", "end"},
        {"c_q", be64(c_q)},
    });
}

Digest256 attestation_set_digest(const std::vector<PublicAttestation>& attestations) {
    std::vector<EncodedField> fields;
    fields.reserve(attestations.size());
    for (std::size_t i = 0; i < attestations.size(); ++i)
        fields.emplace_back(std::to_string(i), attestations[i].wire());
    return digest(canonical_encode(fields));
}

PrivateProof seal_private_proof(const KeyPair& /*auditor_keys: interface parity,
                                  sender identity comes from the session channel*/,
                                const PublicKey& prover_public, const AuditLog& log,
                                const Digest256& attestation_set_digest) {
    if (!audit_log_consistent(log))
        throw ParameterError("audit log final head does not replay from its entries");
    const std::string payload = log.wire();
    PrivateProof p;
    p.sealed = seal(prover_public, to_bytes(payload), attestation_set_digest);
    p.binding = attestation_set_digest;
    return p;
}

AuditLog open_private_proof(const KeyPair& prover_keys, const PrivateProof& proof,
                            const Digest256& attestation_set_digest) {
    const Bytes plain = unseal(prover_keys, proof.sealed, attestation_set_digest);
    AuditLog log = AuditLog::from_wire(to_string(plain));
    if (!audit_log_consistent(log))
        throw ParseError("sealed audit log is internally inconsistent");
    return log;
}

} // namespace aw
