#include "aw/verifier.hpp"

#include "aw/errors.hpp"

#include <cmath>
#include <sstream>

namespace aw {

double leakage_bound(std::uint64_t k_max, std::uint64_t alphabet_size) {
    if (alphabet_size < 2) throw ParameterError("answer alphabet needs at least two symbols");
    return static_cast<double>(k_max) * std::log2(static_cast<double>(alphabet_size));
}

VerifierSession::VerifierSession(VerifierConfig config, RandomSource& rng)
    : config_(std::move(config)) {
    auto seed = rng.bytes32();
    keys_ = keypair_generate(Role::verifier, seed);
}

Json VerifierSession::exchange(PeerLink& link, const Json& msg) {
    ++wire_messages_sent_;
    std::string reply_line = link.request(dump_wire(msg));
    inbound_log_.push_back(reply_line);
    Json reply = json_parse(reply_line);
    if (!reply.is_object() || !reply.contains("type") || !reply["type"].is_string())
        throw ParseError("peer reply has no type");
    return reply;
}

void VerifierSession::establish(PeerLink& prover, PeerLink& auditor) {
    if (established_) throw EstablishError("already established");
    prover_link_ = &prover;
    auditor_link_ = &auditor;

    Json req;
    req["type"] = "token_request";
    req["v"] = kSchemaVersion;
    req["verifier_public"] = hex_encode(keys_.public_key);
    Json offer = exchange(prover, req);
    if (offer["type"] != "token_offer") throw EstablishError("prover did not offer a token");
    AuditorToken token = AuditorToken::from_json(get_object(offer, "token"));
    if (!token.quote.is_session()) throw EstablishError("token quote carries no session ticket");
    if (!(token.verifier_public == keys_.public_key))
        throw EstablishError("token names a different verifier");
    if (!verify_token(token, config_.prover_public, config_.hw_root_public,
                      config_.expected_measurement))
        throw EstablishError("token does not verify");
    token_ = token;
    k_max_ = token.quote.ticket->k_max;

    Json est;
    est["type"] = "establish";
    est["v"] = kSchemaVersion;
    est["token"] = token.to_json();
    Json reply = exchange(auditor, est);
    if (reply["type"] != "establish_ok") throw EstablishError("auditor rejected the token");
    established_ = true;
}

const AskRecord& VerifierSession::ask(const std::string& question) {
    if (!established_) throw EstablishError("no session established");
    if (aborted_) throw AbortError(abort_cause_);
    // The budget gate sits in front of the wire: an over-budget question never
    // leaves this process.
    if (asked_.size() >= k_max_) throw BudgetError("question budget k_max exhausted");

    std::uint64_t c_q = asked_.size() + 1;
    Json msg;
    msg["type"] = "question";
    msg["v"] = kSchemaVersion;
    msg["question"] = question;
    msg["c_q"] = c_q;
    msg["sig"] = sign(keys_, question_sig_payload(question, c_q)).hex();

    Json reply = exchange(*auditor_link_, msg);
    std::string type = reply["type"].get<std::string>();
    if (type == "abort") {
        aborted_ = true;
        abort_cause_ = get_string(reply, "cause");
        asked_.push_back({question, "", false, false});
        throw AbortError(abort_cause_);
    }
    if (type == "error") throw ParseError("auditor refused: " + get_string(reply, "what"));
    if (type != "verdict") throw ParseError("expected a verdict reply");
    if (reply.contains("cause")) {
        expect_object(reply, 4, "verdict");
        throw BudgetError("auditor refused: " + get_string(reply, "cause"));
    }
    expect_object(reply, 4, "verdict");
    std::string verdict = get_string(reply, "verdict");
    // Whatever happens to the certificate below, the answer string has been
    // seen: it counts against the leakage account.
    ++verdicts_received_;

    try {
        PublicAttestation attestation = PublicAttestation::from_json(get_object(reply, "attestation"));
        bool ok = verify_public_attestation(attestation, config_.prover_public,
                                            config_.hw_root_public,
                                            config_.expected_measurement) &&
                  attestation.question_text == question &&
                  attestation.receipt.verdict == verdict &&
                  attestation.receipt.question_count == c_q &&
                  attestation.receipt.token.wire() == token_->wire() && verdict_valid(verdict);
        if (!ok) throw AttestationError("attestation does not certify this answer");
        asked_.push_back({question, verdict, true, true});
        attestations_.push_back(std::move(attestation));
    } catch (const AttestationError&) {
        asked_.push_back({question, verdict, false, false});
        throw;
    } catch (const ParseError& e) {
        asked_.push_back({question, verdict, false, false});
        throw AttestationError(std::string("attestation malformed: ") + e.what());
    }
    return asked_.back();
}

void VerifierSession::finish() {
    if (!established_) throw EstablishError("no session established");
    if (aborted_) throw AbortError(abort_cause_);
    if (finished_) return;

    std::uint64_t c_q = asked_.size();
    Json msg;
    msg["type"] = "end_of_audit";
    msg["v"] = kSchemaVersion;
    msg["c_q"] = c_q;
    msg["sig"] = sign(keys_, end_sig_payload(c_q)).hex();

    Json reply = exchange(*auditor_link_, msg);
    std::string type = reply["type"].get<std::string>();
    if (type == "abort") {
        aborted_ = true;
        abort_cause_ = get_string(reply, "cause");
        throw AbortError(abort_cause_);
    }
    if (type != "final_artifacts") throw ParseError("expected final_artifacts");
    expect_object(reply, 7, "final_artifacts");

    FinalHeadRecord record;
    record.head = get_digest(reply, "head");
    record.prover_sig = get_signature(reply, "prover_sig");
    record.auditor_sig = get_signature(reply, "auditor_sig");
    if (!final_record_verify(record, config_.prover_public, token_->quote.auditor_public))
        throw AttestationError("final head record does not verify");
    if (get_u64(reply, "attestation_count") != verdicts_received_)
        throw AttestationError("attestation count disagrees with answers received");
    proof_ = PrivateProof::from_wire(dump_wire(get_object(reply, "proof")));
    final_record_ = record;
    finished_ = true;
}

void VerifierSession::run_plan(QuestionPlan& plan) {
    try {
        for (;;) {
            auto question = plan.next(asked_);
            if (!question) break;
            try {
                ask(*question);
            } catch (const BudgetError&) {
                break;
            } catch (const AttestationError&) {
                continue;
            }
        }
        finish();
    } catch (const AbortError&) {
        // The session died under us; cause and partial record are retained.
    }
}

std::string VerifierSession::report() const {
    std::ostringstream out;
    std::size_t i = 0;
    for (const auto& r : asked_) {
        ++i;
        if (r.verdict.empty()) continue; // the session aborted under this question
        out << "Q" << i << " " << r.verdict << " " << (r.verdict_accepted ? "pass" : "fail") << " "
            << r.question << "\n";
    }
    if (aborted_) out << "aborted " << abort_cause_ << "\n";
    out << "leakage " << leakage_consumed() << "/" << leakage_bound_total() << " bits\n";
    return out.str();
}

bool VerifierSession::satisfied() const {
    if (!finished_ || aborted_) return false;
    for (const auto& r : asked_) {
        if (!r.verdict_accepted) return false;
    }
    return true;
}

double VerifierSession::leakage_consumed() const {
    return static_cast<double>(verdicts_received_) *
           std::log2(static_cast<double>(config_.alphabet_size));
}

} // namespace aw
