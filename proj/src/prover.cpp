#include "aw/prover.hpp"

#include "aw/errors.hpp"

#include <sstream>

namespace aw {

namespace {

std::string ack_wire() {
    Json j;
    j["type"] = "ack";
    j["v"] = kSchemaVersion;
    return dump_wire(j);
}

Json error_reply(const std::string& what) {
    Json j;
    j["type"] = "error";
    j["v"] = kSchemaVersion;
    j["what"] = what;
    return j;
}

Json abort_reply(const std::string& cause) {
    Json j;
    j["type"] = "abort";
    j["v"] = kSchemaVersion;
    j["cause"] = cause;
    return j;
}

bool is_serving_type(const std::string& type) {
    return type == "tool_call" || type == "question_notice" || type == "verdict_notice" ||
           type == "end_notice";
}

} // namespace

std::string prover_status_name(ProverStatus s) {
    switch (s) {
    case ProverStatus::handshaking: return "handshaking";
    case ProverStatus::serving: return "serving";
    case ProverStatus::finalizing: return "finalizing";
    case ProverStatus::complete: return "complete";
    case ProverStatus::aborted: return "aborted";
    }
    return "unknown";
}

// ---- EvidenceLocker --------------------------------------------------------

void EvidenceLocker::record(std::string direction, const std::string& bytes, const Clock& clock) {
    LockerEntry e;
    e.index = entries_.size() + 1;
    e.direction = std::move(direction);
    e.timestamp = clock.now_iso8601_utc();
    e.digest = digest(bytes);
    e.bytes = bytes;
    entries_.push_back(std::move(e));
}

std::string EvidenceLocker::export_text() const {
    std::ostringstream out;
    for (const auto& e : entries_) {
        out << e.index << ' ' << e.direction << ' ' << e.timestamp << ' ' << e.digest.hex() << ' '
            << hex_encode(to_bytes(e.bytes)) << '\n';
    }
    return out.str();
}

EvidenceLocker EvidenceLocker::import_text(const std::string& text) {
    EvidenceLocker locker;
    std::istringstream in(text);
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) throw ParseError("locker: empty line " + std::to_string(line_no));
        std::istringstream fields(line);
        LockerEntry e;
        std::string digest_hex, bytes_hex, extra;
        if (!(fields >> e.index >> e.direction >> e.timestamp >> digest_hex >> bytes_hex) ||
            (fields >> extra)) {
            throw ParseError("locker: malformed line " + std::to_string(line_no));
        }
        if (e.index != locker.entries_.size() + 1)
            throw ParseError("locker: index gap at line " + std::to_string(line_no));
        if (e.direction != "sent" && e.direction != "received")
            throw ParseError("locker: bad direction at line " + std::to_string(line_no));
        auto dig = Digest256::from_hex(digest_hex);
        auto bytes = hex_decode(bytes_hex);
        if (!dig || !bytes) throw ParseError("locker: bad hex at line " + std::to_string(line_no));
        e.digest = *dig;
        e.bytes = to_string(*bytes);
        if (!(digest(e.bytes) == e.digest))
            throw ParseError("locker: digest mismatch at line " + std::to_string(line_no));
        locker.entries_.push_back(std::move(e));
    }
    return locker;
}

// ---- ProverSession ---------------------------------------------------------

ProverSession::ProverSession(const KeyPair& keys, ProverConfig config,
                             std::shared_ptr<ToolBackend> backend, RandomSource& rng,
                             const Clock& clock)
    : keys_(keys), config_(std::move(config)), backend_(std::move(backend)), clock_(&clock) {
    BuildManifestOptions opts;
    opts.obfuscate_paths = config_.obfuscate_paths;
    manifest_ = build_manifest(config_.corpus_root, opts);
    manifest_text_ = manifest_.to_file();
    ticket_ = issue_ticket(keys_, config_.k_max, config_.n_queries, rng, clock);
}

std::string ProverSession::handle_message(const std::string& line) {
    locker_.record("received", line, *clock_);
    Json reply;
    try {
        reply = dispatch(json_parse(line));
    } catch (const AbortError& e) {
        reply = abort_reply(e.cause);
    } catch (const ParseError& e) {
        reply = error_reply(e.what());
    } catch (const std::exception& e) {
        reply = error_reply(std::string("internal: ") + e.what());
    }
    std::string out = dump_wire(reply);
    locker_.record("sent", out, *clock_);
    return out;
}

Json ProverSession::dispatch(const Json& msg) {
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
        throw ParseError("message has no type");
    std::string type = msg["type"].get<std::string>();
    if (!msg.contains("v") || !msg["v"].is_string() ||
        msg["v"].get<std::string>() != kSchemaVersion)
        throw ParseError("message has no schema version");

    if (type == "abort") {
        expect_object(msg, 3, "abort");
        if (status_ != ProverStatus::complete) {
            status_ = ProverStatus::aborted;
            abort_cause_ = get_string(msg, "cause");
        }
        return json_parse(ack_wire());
    }
    if (status_ == ProverStatus::aborted) return abort_reply(abort_cause_);
    if (is_serving_type(type)) {
        if (status_ == ProverStatus::handshaking) throw ParseError("no active session");
        // A finished session stays finished; late serving traffic gets the
        // pinned refusal without reopening anything.
        if (status_ != ProverStatus::serving) return abort_reply("session_closed");
    }

    if (type == "hello_auditor") return handle_hello(msg);
    if (type == "session_quote") return handle_session_quote(msg);
    if (type == "token_request") return handle_token_request(msg);
    if (type == "tool_call") return handle_tool_call(msg);
    if (type == "question_notice") return handle_question_notice(msg);
    if (type == "verdict_notice") return handle_verdict_notice(msg);
    if (type == "end_notice") return handle_end_notice(msg);
    if (type == "private_proof") return handle_private_proof(msg);
    throw ParseError("unknown message type: " + type);
}

void ProverSession::abort_now(const std::string& cause) {
    status_ = ProverStatus::aborted;
    abort_cause_ = cause;
    throw AbortError(cause);
}

void ProverSession::check_envelope_head(const Json& msg) {
    std::string head_hex = get_string(msg, "head");
    Signature sig = get_signature(msg, "head_sig");
    if (head_hex != chain_->head().hex()) abort_now("chain_divergence");
    if (!verify(*auditor_public_, chain_->head().span(), sig)) abort_now("chain_divergence");
}

Json ProverSession::handle_hello(const Json& msg) {
    expect_object(msg, 3, "hello_auditor");
    if (status_ != ProverStatus::handshaking || auditor_public_)
        throw ParseError("hello outside handshake");
    EnclaveQuote quote = EnclaveQuote::from_json(get_object(msg, "quote"));
    if (quote.is_session()) throw ParseError("hello must carry a boot-form quote");
    if (!(quote.measurement == config_.expected_measurement)) abort_now("measurement_mismatch");
    if (!verify_quote(config_.hw_root_public, quote, config_.expected_measurement))
        abort_now("quote_invalid");
    auditor_public_ = quote.auditor_public;

    Json reply;
    reply["type"] = "ticket_offer";
    reply["v"] = kSchemaVersion;
    reply["ticket"] = ticket_.to_json();
    return reply;
}

Json ProverSession::handle_session_quote(const Json& msg) {
    expect_object(msg, 3, "session_quote");
    if (status_ != ProverStatus::handshaking || !auditor_public_)
        throw ParseError("session quote outside handshake");
    EnclaveQuote quote = EnclaveQuote::from_json(get_object(msg, "quote"));
    if (!quote.is_session()) throw ParseError("session quote lacks a ticket");
    if (quote.auditor_public != *auditor_public_) abort_now("quote_invalid");
    if (!(quote.measurement == config_.expected_measurement)) abort_now("measurement_mismatch");
    // A stale or foreign ticket means this quote belongs to some other
    // session; serving against it would replay old permissions.
    if (!(*quote.ticket == ticket_)) abort_now("ticket_mismatch");
    if (!verify_quote(config_.hw_root_public, quote, config_.expected_measurement))
        abort_now("quote_invalid");

    session_quote_ = quote;
    chain_.emplace(manifest_.corpus_digest, ticket_.wire(), keys_.public_key, *auditor_public_);
    status_ = ProverStatus::serving;

    Json reply;
    reply["type"] = "manifest_offer";
    reply["v"] = kSchemaVersion;
    reply["manifest"] = manifest_text_;
    reply["sig"] = sign(keys_, manifest_sig_payload(manifest_text_)).hex();
    return reply;
}

Json ProverSession::handle_token_request(const Json& msg) {
    expect_object(msg, 3, "token_request");
    if (status_ != ProverStatus::serving) throw ParseError("token request outside serving");
    PublicKey verifier_public = get_public_key(msg, "verifier_public");
    // One verifier per session. Re-requesting the same binding is idempotent.
    if (token_ && token_->verifier_public != verifier_public)
        throw ParseError("a different verifier is already bound to this session");
    if (!token_) token_ = issue_token(keys_, *session_quote_, verifier_public);

    Json reply;
    reply["type"] = "token_offer";
    reply["v"] = kSchemaVersion;
    reply["token"] = token_->to_json();
    return reply;
}

Json ProverSession::handle_tool_call(const Json& msg) {
    expect_object(msg, 5, "tool_call");
    check_envelope_head(msg);
    Signature auditor_sig = get_signature(msg, "head_sig");

    const Json& body = get_object(msg, "body");
    expect_object(body, 5, "tool_call_body");
    expect_artifact(body, "tool_call_body");
    auto kind = tool_kind_from_name(get_string(body, "kind"));
    if (!kind) throw ParseError("unknown tool kind");
    ToolCall call;
    call.kind = *kind;
    call.argument = get_string(body, "argument");
    call.sequence_number = get_u64(body, "seq");

    // Defense in depth: the auditor gates this budget too, so crossing it
    // here means the counterpart is not the auditor we attested.
    ++tools_since_question_;
    if (tools_since_question_ > config_.n_queries) abort_now("budget_exceeded");

    ToolResult r = backend_->execute(call);

    Json result_body;
    result_body["type"] = "tool_result_body";
    result_body["v"] = kSchemaVersion;
    result_body["kind"] = tool_kind_name(call.kind);
    result_body["status"] = r.status;
    if (r.ok() && call.kind == ToolKind::read_file) {
        result_body["payload"] = hex_encode(r.payload);
        result_body["digest"] = r.file_digest ? r.file_digest->hex() : digest(r.payload).hex();
    } else if (r.ok()) {
        result_body["listing"] = r.listing;
    }

    Signature prover_sig = sign(keys_, chain_->head().span());
    chain_->append(EntryKind::tool, dump_wire(body), dump_wire(result_body), prover_sig,
                   auditor_sig);

    Json reply;
    reply["type"] = "tool_result";
    reply["v"] = kSchemaVersion;
    reply["body"] = result_body;
    reply["head_sig"] = prover_sig.hex();
    reply["head_after"] = chain_->head().hex();
    return reply;
}

Json ProverSession::handle_question_notice(const Json& msg) {
    expect_object(msg, 5, "question_notice");
    check_envelope_head(msg);
    Signature auditor_sig = get_signature(msg, "head_sig");

    const Json& body = get_object(msg, "body");
    expect_object(body, 5, "question_body");
    expect_artifact(body, "question_body");
    get_string(body, "question");
    get_signature(body, "sig"); // verifier's; shape-checked here, verified by the auditor
    std::uint64_t c_q = get_u64(body, "c_q");
    if (c_q != question_count_ + 1) throw ParseError("question counter out of order");
    if (c_q > config_.k_max) abort_now("budget_exceeded");

    question_count_ = c_q;
    tools_since_question_ = 0;

    Signature prover_sig = sign(keys_, chain_->head().span());
    chain_->append(EntryKind::question, dump_wire(body), ack_wire(), prover_sig, auditor_sig);

    Json reply;
    reply["type"] = "question_ack";
    reply["v"] = kSchemaVersion;
    reply["head_sig"] = prover_sig.hex();
    reply["head_after"] = chain_->head().hex();
    return reply;
}

Json ProverSession::handle_verdict_notice(const Json& msg) {
    expect_object(msg, 5, "verdict_notice");
    check_envelope_head(msg);
    Signature auditor_sig = get_signature(msg, "head_sig");

    const Json& body = get_object(msg, "body");
    expect_object(body, 6, "verdict_body");
    expect_artifact(body, "verdict_body");
    std::string verdict = get_string(body, "verdict");
    if (!verdict_valid(verdict)) throw ParseError("verdict outside the closed alphabet");
    Digest256 claimed_head = get_digest(body, "head");
    if (!(claimed_head == chain_->head())) abort_now("chain_divergence");
    std::uint64_t c_q = get_u64(body, "c_q");
    Signature body_sig = get_signature(body, "sig");
    if (!verify(*auditor_public_, verdict_sig_payload(claimed_head, verdict, c_q), body_sig))
        throw ParseError("verdict notice signature does not verify");
    if (c_q != question_count_) throw ParseError("verdict counter out of order");
    if (c_q > config_.k_max) abort_now("budget_exceeded");
    if (!token_) throw ParseError("no verifier token issued for this session");

    VerdictReceipt receipt = issue_verdict_receipt(keys_, chain_->head(), verdict, *token_, c_q);

    Signature prover_sig = sign(keys_, chain_->head().span());
    chain_->append(EntryKind::verdict, dump_wire(body), receipt.wire(), prover_sig, auditor_sig);

    Json reply;
    reply["type"] = "verdict_receipt";
    reply["v"] = kSchemaVersion;
    reply["receipt"] = receipt.to_json();
    reply["head_sig"] = prover_sig.hex();
    reply["head_after"] = chain_->head().hex();
    return reply;
}

Json ProverSession::handle_end_notice(const Json& msg) {
    expect_object(msg, 4, "end_notice");
    Digest256 head = get_digest(msg, "head");
    Signature auditor_final = get_signature(msg, "final_sig");
    if (!(head == chain_->head())) abort_now("chain_divergence");
    if (!verify(*auditor_public_, final_head_payload(head), auditor_final))
        throw ParseError("final head signature does not verify");

    FinalHeadRecord record;
    record.head = head;
    record.prover_sig = sign(keys_, final_head_payload(head));
    record.auditor_sig = auditor_final;
    final_record_ = record;
    status_ = ProverStatus::finalizing;

    Json reply;
    reply["type"] = "final_record";
    reply["v"] = kSchemaVersion;
    reply["head"] = head.hex();
    reply["prover_sig"] = record.prover_sig.hex();
    reply["auditor_sig"] = record.auditor_sig.hex();
    return reply;
}

Json ProverSession::handle_private_proof(const Json& msg) {
    expect_object(msg, 3, "private_proof");
    if (status_ != ProverStatus::finalizing) throw ParseError("private proof outside finalize");
    PrivateProof proof = PrivateProof::from_wire(dump_wire(get_object(msg, "proof")));

    // The locker only keeps proofs it can open and that tell this session's
    // story; anything else is somebody rewriting history.
    AuditLog opened;
    try {
        opened = open_private_proof(keys_, proof, proof.binding);
    } catch (const DecryptError&) {
        throw ParseError("private proof does not open under the session key");
    }
    const auto& own = chain_->entries();
    bool matches = opened.final_head == final_record_->head &&
                   opened.genesis == chain_->genesis() && opened.entries.size() == own.size();
    for (std::size_t i = 0; matches && i < own.size(); ++i) {
        matches = opened.entries[i].call_wire == own[i].call_wire &&
                  opened.entries[i].result_wire == own[i].result_wire &&
                  opened.entries[i].head_after == own[i].head_after;
    }
    if (!matches) throw ParseError("private proof disagrees with the session chain");

    stored_proof_ = proof;
    status_ = ProverStatus::complete;
    return json_parse(ack_wire());
}

std::string ProverSession::transcript_export_text() const {
    if (!final_record_) throw ParameterError("transcript export requires a finalized session");
    return transcript_export(chain_->entries(), *final_record_);
}

} // namespace aw
