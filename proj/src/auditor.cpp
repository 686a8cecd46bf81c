#include "aw/auditor.hpp"

#include "aw/errors.hpp"

#include <algorithm>

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

std::string truncated(std::string text, std::uint64_t cap) {
    if (text.size() <= cap) return text;
    text.resize(cap);
    text += " [truncated]";
    return text;
}

} // namespace

std::string auditor_status_name(AuditorStatus s) {
    switch (s) {
    case AuditorStatus::booted: return "booted";
    case AuditorStatus::serving: return "serving";
    case AuditorStatus::finalizing: return "finalizing";
    case AuditorStatus::complete: return "complete";
    case AuditorStatus::aborted: return "aborted";
    }
    return "unknown";
}

std::string filter_output(const std::string& raw_verdict) {
    auto begin = raw_verdict.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "error";
    auto end = raw_verdict.find_last_not_of(" \t\r\n");
    std::string token = raw_verdict.substr(begin, end - begin + 1);
    return verdict_valid(token) ? token : "error";
}

// Metered capability handed to the oracle; forwards into the owning session.
class AuditorSession::Capability final : public ToolAccess {
public:
    explicit Capability(AuditorSession& s) : s_(&s) {}
    ToolResult invoke(ToolKind kind, const std::string& argument) override {
        return s_->issue_tool_call(kind, argument);
    }
    std::uint64_t calls_remaining() const override {
        std::uint64_t cap = s_->ticket_->n_queries;
        return cap > s_->tools_this_question_ ? cap - s_->tools_this_question_ : 0;
    }

private:
    AuditorSession* s_;
};

AuditorSession::AuditorSession(AuditorConfig config, const KeyPair& hw_keys, RandomSource& rng,
                               OracleFactory oracle_factory)
    : config_(std::move(config)), hw_keys_(hw_keys), hw_public_(hw_keys.public_key),
      oracle_factory_(std::move(oracle_factory)) {
    auto seed = rng.bytes32();
    keys_ = keypair_generate(Role::auditor, seed);
    boot_quote_ =
        issue_quote(hw_keys_, config_.measurement, keys_.public_key, std::nullopt, config_.address);
}

void AuditorSession::abort_session(const std::string& cause, bool notify_prover) {
    if (status_ != AuditorStatus::aborted) {
        status_ = AuditorStatus::aborted;
        abort_cause_ = cause;
        if (notify_prover && prover_link_) {
            try {
                prover_link_->request(dump_wire(abort_reply(cause)));
            } catch (const std::exception&) {
                // The notification is best effort; the local teardown stands.
            }
        }
    }
    throw AbortError(cause);
}

Json AuditorSession::prover_request(const Json& msg) {
    Json reply = json_parse(prover_link_->request(dump_wire(msg)));
    if (!reply.is_object() || !reply.contains("type") || !reply["type"].is_string())
        throw ParseError("prover reply has no type");
    std::string type = reply["type"].get<std::string>();
    if (type == "abort") {
        std::string cause = get_string(reply, "cause");
        // The prover already tore its side down; no point notifying it back.
        abort_session(cause, false);
    }
    if (type == "error") throw ParseError("prover refused: " + get_string(reply, "what"));
    return reply;
}

void AuditorSession::attach_prover(PeerLink& link) {
    if (status_ != AuditorStatus::booted) throw ParameterError("attach_prover: session already ran");
    prover_link_ = &link;

    Json hello;
    hello["type"] = "hello_auditor";
    hello["v"] = kSchemaVersion;
    hello["quote"] = boot_quote_.to_json();
    Json offer = prover_request(hello);
    if (offer["type"] != "ticket_offer") throw ParseError("expected ticket_offer");
    SessionTicket ticket = SessionTicket::from_json(get_object(offer, "ticket"));
    if (!verify_ticket(ticket, config_.prover_public)) abort_session("ticket_mismatch", true);
    ticket_ = ticket;

    EnclaveQuote session_quote = issue_quote(hw_keys_, config_.measurement, keys_.public_key,
                                             ticket_, config_.address);
    session_quote_wire_ = session_quote.wire();
    Json sq;
    sq["type"] = "session_quote";
    sq["v"] = kSchemaVersion;
    sq["quote"] = session_quote.to_json();
    Json offer2 = prover_request(sq);
    if (offer2["type"] != "manifest_offer") throw ParseError("expected manifest_offer");
    std::string manifest_text = get_string(offer2, "manifest");
    Signature manifest_sig = get_signature(offer2, "sig");
    if (!verify(config_.prover_public, manifest_sig_payload(manifest_text), manifest_sig))
        abort_session("manifest_invalid", true);
    try {
        manifest_ = CorpusManifest::from_file(manifest_text);
    } catch (const ManifestError&) {
        abort_session("manifest_invalid", true);
    }

    chain_.emplace(manifest_.corpus_digest, ticket_->wire(), config_.prover_public,
                   keys_.public_key);
    status_ = AuditorStatus::serving;
}

std::string AuditorSession::handle_verifier_message(const std::string& line) {
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
    return dump_wire(reply);
}

Json AuditorSession::dispatch(const Json& msg) {
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
        throw ParseError("message has no type");
    std::string type = msg["type"].get<std::string>();
    if (!msg.contains("v") || !msg["v"].is_string() ||
        msg["v"].get<std::string>() != kSchemaVersion)
        throw ParseError("message has no schema version");

    if (status_ == AuditorStatus::aborted) return abort_reply(abort_cause_);

    if (type == "establish") return handle_establish(msg);
    if (type == "question") return handle_question(msg);
    if (type == "end_of_audit") return handle_end(msg);
    throw ParseError("unknown message type: " + type);
}

Json AuditorSession::handle_establish(const Json& msg) {
    expect_object(msg, 3, "establish");
    if (status_ != AuditorStatus::serving) throw ParseError("establish outside serving");
    AuditorToken token = AuditorToken::from_json(get_object(msg, "token"));
    if (verifier_public_ && token.verifier_public != *verifier_public_)
        throw ParseError("a different verifier is already established");
    // The embedded quote must be this very session's quote, byte for byte.
    if (token.quote.wire() != session_quote_wire_)
        throw ParseError("token quote is not this session's quote");
    if (!verify_token(token, config_.prover_public, hw_public_, config_.measurement))
        throw ParseError("token does not verify");
    verifier_public_ = token.verifier_public;

    Json reply;
    reply["type"] = "establish_ok";
    reply["v"] = kSchemaVersion;
    return reply;
}

AuditorSession::ChainedReply AuditorSession::send_chained(const char* type,
                                                          const char* expected_reply,
                                                          const Json& body) {
    ChainedReply cr;
    cr.pre_head = chain_->head();
    cr.auditor_sig = sign(keys_, cr.pre_head.span());

    Json env;
    env["type"] = type;
    env["v"] = kSchemaVersion;
    env["body"] = body;
    env["head"] = cr.pre_head.hex();
    env["head_sig"] = cr.auditor_sig.hex();

    cr.reply = prover_request(env);
    if (cr.reply["type"] != expected_reply)
        throw ParseError(std::string("expected ") + expected_reply);
    cr.prover_sig = get_signature(cr.reply, "head_sig");
    if (config_.integrity_checks &&
        !verify(config_.prover_public, cr.pre_head.span(), cr.prover_sig))
        abort_session("chain_divergence", true);
    return cr;
}

void AuditorSession::append_and_compare(EntryKind kind, const Json& body,
                                        const std::string& result_wire, const ChainedReply& cr) {
    try {
        chain_->append(kind, dump_wire(body), result_wire, cr.prover_sig, cr.auditor_sig);
    } catch (const ChainDivergence&) {
        abort_session("chain_divergence", true);
    }
    if (config_.integrity_checks && get_string(cr.reply, "head_after") != chain_->head().hex())
        abort_session("chain_divergence", true);
}

ToolResult AuditorSession::issue_tool_call(ToolKind kind, const std::string& argument) {
    if (status_ != AuditorStatus::serving) throw AbortError("session_closed");
    if (config_.budget_gate && tools_this_question_ >= ticket_->n_queries)
        throw BudgetError("per-question tool budget exhausted");
    ++tools_this_question_;

    Json body;
    body["type"] = "tool_call_body";
    body["v"] = kSchemaVersion;
    body["kind"] = tool_kind_name(kind);
    body["argument"] = argument;
    body["seq"] = tools_this_question_;

    ChainedReply cr = send_chained("tool_call", "tool_result", body);
    const Json& rbody = get_object(cr.reply, "body");
    expect_artifact(rbody, "tool_result_body");
    if (get_string(rbody, "kind") != tool_kind_name(kind))
        throw ParseError("tool result kind does not echo the call");

    ToolResult result;
    result.kind = kind;
    result.status = get_string(rbody, "status");
    if (result.ok() && kind == ToolKind::read_file) {
        expect_object(rbody, 6, "tool_result_body");
        result.payload = get_hex(rbody, "payload");
        result.file_digest = get_digest(rbody, "digest");
    } else if (result.ok()) {
        expect_object(rbody, 5, "tool_result_body");
        const Json& listing = get_array(rbody, "listing");
        for (const auto& item : listing) {
            if (!item.is_string()) throw ParseError("listing entries must be strings");
            result.listing.push_back(item.get<std::string>());
        }
    } else {
        expect_object(rbody, 4, "tool_result_body");
    }

    ToolCall call;
    call.kind = kind;
    call.argument = argument;
    call.sequence_number = tools_this_question_;
    if (config_.integrity_checks) content_checks(call, result, rbody);
    if (kind == ToolKind::search_repository && result.ok()) {
        searches_.emplace_back(tokenize(argument),
                               std::set<std::string>(result.listing.begin(),
                                                     result.listing.end()));
    }

    append_and_compare(EntryKind::tool, body, dump_wire(rbody), cr);
    return result;
}

void AuditorSession::content_checks(const ToolCall& call, const ToolResult& result, const Json&) {
    if (call.kind != ToolKind::read_file || !result.ok()) return;

    // Check one: the carried digest must actually cover the bytes served.
    if (!(digest(result.payload) == *result.file_digest)) abort_session("file_digest_mismatch", true);

    // Check two: the bytes must be the ones committed before the audit began.
    std::string key = manifest_.paths_obfuscated ? obfuscated_path(call.argument) : call.argument;
    const ManifestEntry* entry = manifest_.find(key);
    if (!entry) abort_session("unmanifested_file", true);
    if (!(entry->file_digest == *result.file_digest) || entry->byte_length != result.payload.size())
        abort_session("file_digest_mismatch", true);

    // Check three: a file matching an earlier search that the search did not
    // return means results were withheld.
    auto tokens = tokenize(to_string(result.payload));
    std::set<std::string> token_set(tokens.begin(), tokens.end());
    for (const auto& [query_tokens, reported] : searches_) {
        if (reported.count(call.argument)) continue;
        for (const auto& t : query_tokens) {
            if (token_set.count(t)) abort_session("search_omission", true);
        }
    }
}

Json AuditorSession::handle_question(const Json& msg) {
    expect_object(msg, 5, "question");
    if (status_ != AuditorStatus::serving) throw ParseError("question outside serving");
    if (!verifier_public_) throw ParseError("no verifier established");
    std::string question = get_string(msg, "question");
    std::uint64_t c_q = get_u64(msg, "c_q");
    Signature sig = get_signature(msg, "sig");
    if (!verify(*verifier_public_, question_sig_payload(question, c_q), sig))
        throw ParseError("question signature does not verify");
    if (c_q != questions_asked_ + 1) throw ParseError("question counter out of order");

    if (questions_asked_ >= ticket_->k_max) {
        // Refused questions are not answered: nothing chained, nothing
        // attested, no leakage spent.
        Json reply;
        reply["type"] = "verdict";
        reply["v"] = kSchemaVersion;
        reply["verdict"] = "error";
        reply["cause"] = "k_max_exhausted";
        return reply;
    }
    return answer_one(question, c_q, sig);
}

Json AuditorSession::answer_one(const std::string& question, std::uint64_t c_q,
                                const Signature& verifier_sig) {
    questions_asked_ = c_q;
    tools_this_question_ = 0;

    Json qbody;
    qbody["type"] = "question_body";
    qbody["v"] = kSchemaVersion;
    qbody["question"] = question;
    qbody["c_q"] = c_q;
    qbody["sig"] = verifier_sig.hex();
    ChainedReply cr = send_chained("question_notice", "question_ack", qbody);
    append_and_compare(EntryKind::question, qbody, ack_wire(), cr);

    // Fresh oracle per question: no reasoning state crosses questions.
    auto oracle = oracle_factory_(question);
    Capability cap(*this);
    OracleOutcome outcome;
    try {
        outcome = oracle->answer(question, cap);
    } catch (const AbortError&) {
        throw;
    } catch (const BudgetError& e) {
        // An oracle that lets the refusal escape still gets a session-shaped
        // conclusion.
        outcome = {"error", std::string("tool budget exhausted: ") + e.what(), "budget exhausted"};
    } catch (const std::exception& e) {
        outcome = {"error", std::string("oracle failure: ") + e.what(), "oracle failure"};
    }
    std::string verdict = filter_output(outcome.verdict);

    Digest256 head_v = chain_->head();
    Json vbody;
    vbody["type"] = "verdict_body";
    vbody["v"] = kSchemaVersion;
    vbody["verdict"] = verdict;
    vbody["head"] = head_v.hex();
    vbody["c_q"] = c_q;
    vbody["sig"] = sign(keys_, verdict_sig_payload(head_v, verdict, c_q)).hex();
    ChainedReply cr2 = send_chained("verdict_notice", "verdict_receipt", vbody);

    VerdictReceipt receipt = VerdictReceipt::from_json(get_object(cr2.reply, "receipt"));
    if (config_.integrity_checks) {
        bool ok = verify_verdict_receipt(receipt, config_.prover_public) &&
                  receipt.head == head_v && receipt.verdict == verdict &&
                  receipt.question_count == c_q &&
                  receipt.token.verifier_public == *verifier_public_ &&
                  receipt.token.quote.auditor_public == keys_.public_key;
        if (!ok) abort_session("receipt_invalid", true);
    }
    append_and_compare(EntryKind::verdict, vbody, receipt.wire(), cr2);

    PublicAttestation attestation = issue_public_attestation(keys_, receipt, question);
    attestations_.push_back(attestation);
    leakage_bits_ += 2.0; // log2 of the four-token verdict alphabet
    question_log_.push_back({question, verdict, truncated(outcome.narrative, config_.narrative_cap),
                             truncated(outcome.summary, 256)});

    Json reply;
    reply["type"] = "verdict";
    reply["v"] = kSchemaVersion;
    reply["verdict"] = verdict;
    reply["attestation"] = attestation.to_json();
    return reply;
}

Json AuditorSession::handle_end(const Json& msg) {
    expect_object(msg, 4, "end_of_audit");
    if (status_ != AuditorStatus::serving) throw ParseError("end outside serving");
    if (!verifier_public_) throw ParseError("no verifier established");
    std::uint64_t c_q = get_u64(msg, "c_q");
    Signature sig = get_signature(msg, "sig");
    if (!verify(*verifier_public_, end_sig_payload(c_q), sig))
        throw ParseError("end signature does not verify");
    if (c_q != questions_asked_) throw ParseError("end counter out of order");

    finalize_with_prover();

    Json reply;
    reply["type"] = "final_artifacts";
    reply["v"] = kSchemaVersion;
    reply["head"] = final_record_->head.hex();
    reply["prover_sig"] = final_record_->prover_sig.hex();
    reply["auditor_sig"] = final_record_->auditor_sig.hex();
    reply["proof"] = json_parse(proof_->wire());
    reply["attestation_count"] = attestations_.size();
    return reply;
}

void AuditorSession::finalize_with_prover() {
    Digest256 head_f = chain_->head();
    Signature mine = sign(keys_, final_head_payload(head_f));

    Json end;
    end["type"] = "end_notice";
    end["v"] = kSchemaVersion;
    end["head"] = head_f.hex();
    end["final_sig"] = mine.hex();
    Json reply = prover_request(end);
    if (reply["type"] != "final_record") throw ParseError("expected final_record");

    FinalHeadRecord record;
    record.head = get_digest(reply, "head");
    record.prover_sig = get_signature(reply, "prover_sig");
    record.auditor_sig = get_signature(reply, "auditor_sig");
    if (config_.integrity_checks) {
        if (!(record.head == head_f) || !(record.auditor_sig == mine) ||
            !final_record_verify(record, config_.prover_public, keys_.public_key))
            abort_session("chain_divergence", true);
    }
    final_record_ = record;
    status_ = AuditorStatus::finalizing;

    AuditLog log;
    log.questions = question_log_;
    log.entries = chain_->entries();
    log.genesis = chain_->genesis();
    log.final_head = head_f;
    proof_ = seal_private_proof(keys_, config_.prover_public, log,
                                attestation_set_digest(attestations_));

    Json pp;
    pp["type"] = "private_proof";
    pp["v"] = kSchemaVersion;
    pp["proof"] = json_parse(proof_->wire());
    Json ack = prover_request(pp);
    if (ack["type"] != "ack") throw ParseError("prover rejected the private proof");

    // The session key dies with the session; only the public half survives
    // inside the quotes and attestations already issued.
    keypair_erase(keys_);
    status_ = AuditorStatus::complete;
}

} // namespace aw
