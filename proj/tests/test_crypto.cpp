#include <doctest.h>

#include "aw/bytes.hpp"
#include "aw/crypto.hpp"
#include "aw/errors.hpp"

#include <map>
#include <set>
#include <string>

using namespace aw;

namespace {

struct SodiumInit {
    SodiumInit() { crypto_init(); }
} init_once;

Bytes seeded_bytes(std::uint64_t seed, std::size_t n) {
    SeededRandom rng(seed);
    Bytes out(n);
    rng.fill(out);
    return out;
}

} // namespace

TEST_CASE("digest matches standard SHA-256 vectors") {
    CHECK(digest("").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    // Recomputed with an independent tool (tests/oracle/golden_chain.py).
    CHECK(digest("abc").hex() ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(digest("x").hex() == "2d711642b726b04401627ca9fbac32f5c8530fb1903cc4db02258717921a4881");
}

TEST_CASE("digest is deterministic and 32 bytes") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Bytes x = seeded_bytes(s, 1 + s * 7 % 100);
        CHECK(digest(x) == digest(x));
        CHECK(digest(x).bytes.size() == 32);
    }
}

TEST_CASE("canonical_encode of the empty list is empty") {
    CHECK(canonical_encode({}).empty());
}

TEST_CASE("canonical_encode distinguishes field counts") {
    const Bytes one = canonical_encode({{"a", Bytes{0x01}}});
    const Bytes two = canonical_encode({{"a", Bytes{0x01}}, {"b", Bytes{}}});
    CHECK(one != two);
}

TEST_CASE("canonical_encode defeats the boundary-shift ambiguity") {
    // ("AB","C") and ("A","BC") concatenate identically; the encoding must
    // keep them apart. Expected bytes from tests/oracle/golden_chain.py.
    const Bytes x = canonical_encode({{"q", "AB"}, {"a", "C"}});
    const Bytes y = canonical_encode({{"q", "A"}, {"a", "BC"}});
    CHECK(x != y);
    CHECK(hex_encode(x) == "0171000000000000000241420161000000000000000143");
    CHECK(hex_encode(y) == "0171000000000000000141016100000000000000024243");
}

TEST_CASE("canonical_encode rejects duplicate and malformed tags") {
    CHECK_THROWS_AS(canonical_encode({{"a", "1"}, {"a", "2"}}), EncodingError);
    CHECK_THROWS_AS(canonical_encode({{"", "1"}}), EncodingError);
    CHECK_THROWS_AS(canonical_encode({{"seventeen_bytes__", "1"}}), EncodingError);
    CHECK_THROWS_AS(canonical_encode({{std::string("t\xc3\xa9"), "1"}}), EncodingError);
}

TEST_CASE("canonical_decode inverts canonical_encode") {
    const std::vector<EncodedField> fields = {
        {"prev", seeded_bytes(1, 32)}, {"q", "payload with spaces"}, {"a", Bytes{}}};
    const auto back = canonical_decode(canonical_encode(fields));
    REQUIRE(back.has_value());
    REQUIRE(back->size() == 3);
    CHECK((*back)[0].tag == "prev");
    CHECK((*back)[0].value == fields[0].value);
    CHECK((*back)[1].tag == "q");
    CHECK(to_string((*back)[1].value) == "payload with spaces");
    CHECK((*back)[2].value.empty());
}

TEST_CASE("canonical_decode rejects truncated input") {
    Bytes enc = canonical_encode({{"q", "hello"}});
    enc.pop_back();
    CHECK_FALSE(canonical_decode(enc).has_value());
    CHECK_FALSE(canonical_decode(Bytes{0xff}).has_value());
}

TEST_CASE("canonical_encode is injective over randomized field lists") {
    // An encoding may repeat only when the field list itself repeated.
    std::map<Bytes, std::string> seen;
    for (std::uint64_t s = 0; s < 500; ++s) {
        SeededRandom rng(1000 + s);
        Bytes pick(4);
        rng.fill(pick);
        const std::size_t count = pick[0] % 4;
        std::vector<EncodedField> fields;
        std::set<std::string> tags;
        std::string fingerprint;
        for (std::size_t i = 0; i < count; ++i) {
            Bytes tb(2);
            rng.fill(tb);
            std::string tag(1, static_cast<char>('a' + tb[0] % 26));
            if (tb[1] % 2)
                tag += static_cast<char>('a' + tb[1] % 26);
            if (!tags.insert(tag).second)
                continue;
            Bytes value(tb[1] % 5);
            rng.fill(value);
            fingerprint += tag + "=" + hex_encode(value) + ";";
            fields.emplace_back(tag, value);
        }
        const Bytes enc = canonical_encode(fields);
        const auto [it, inserted] = seen.emplace(enc, fingerprint);
        if (!inserted)
            CHECK(it->second == fingerprint);
        const auto back = canonical_decode(enc);
        REQUIRE(back.has_value());
        CHECK(back->size() == fields.size());
    }
}

TEST_CASE("keypair generation is deterministic under a seed") {
    const Bytes seed = seeded_bytes(7, 32);
    const KeyPair a = keypair_generate(Role::prover, seed);
    const KeyPair b = keypair_generate(Role::prover, seed);
    CHECK(a.public_key == b.public_key);
    CHECK(a.public_hex() == b.public_hex());
}

TEST_CASE("unseeded keypairs are distinct") {
    const KeyPair a = keypair_generate(Role::auditor);
    const KeyPair b = keypair_generate(Role::auditor);
    CHECK(a.public_key != b.public_key);
}

TEST_CASE("malformed seed is rejected") {
    const Bytes short_seed(31, 0x01);
    CHECK_THROWS_AS(keypair_generate(Role::prover, short_seed), KeyError);
}

TEST_CASE("sign/verify round trip, including seeded keys") {
    const KeyPair kp = keypair_generate(Role::verifier, seeded_bytes(9, 32));
    const Bytes msg = to_bytes("the message");
    const Signature sig = sign(kp, msg);
    CHECK(verify(kp.public_key, msg, sig));
}

TEST_CASE("verify rejects flipped message bits") {
    const KeyPair kp = keypair_generate(Role::prover, seeded_bytes(10, 32));
    const Bytes msg = seeded_bytes(11, 64);
    const Signature sig = sign(kp, msg);
    for (int flip = 0; flip < 10; ++flip) {
        Bytes mutated = msg;
        const Bytes where = seeded_bytes(100 + flip, 2);
        mutated[where[0] % mutated.size()] ^= static_cast<std::uint8_t>(1u << (where[1] % 8));
        CHECK_FALSE(verify(kp.public_key, mutated, sig));
    }
}

TEST_CASE("verify rejects cross-key signatures") {
    const Bytes msg = to_bytes("cross key check");
    for (int i = 0; i < 5; ++i) {
        const KeyPair a = keypair_generate(Role::prover, seeded_bytes(200 + i, 32));
        const KeyPair b = keypair_generate(Role::prover, seeded_bytes(300 + i, 32));
        CHECK_FALSE(verify(b.public_key, msg, sign(a, msg)));
    }
}

TEST_CASE("verify tolerates garbage without throwing") {
    const KeyPair kp = keypair_generate(Role::auditor, seeded_bytes(12, 32));
    Signature zero;
    CHECK_FALSE(verify(kp.public_key, to_bytes("m"), zero));
    PublicKey junk{};
    CHECK_FALSE(verify(junk, Bytes{}, zero));
}

TEST_CASE("seal/unseal round trip") {
    const KeyPair recipient = keypair_generate(Role::prover, seeded_bytes(13, 32));
    const Bytes plain = to_bytes("private audit log payload");
    const Digest256 context = digest("binding");
    const SealedBox box = seal(recipient.public_key, plain, context);
    CHECK(unseal(recipient, box, context) == plain);
}

TEST_CASE("unseal fails under the wrong secret key") {
    const KeyPair recipient = keypair_generate(Role::prover, seeded_bytes(14, 32));
    const KeyPair other = keypair_generate(Role::verifier, seeded_bytes(15, 32));
    const SealedBox box = seal(recipient.public_key, to_bytes("secret"), digest("ctx"));
    CHECK_THROWS_AS(unseal(other, box, digest("ctx")), DecryptError);
}

TEST_CASE("unseal fails under a perturbed associated digest") {
    const KeyPair recipient = keypair_generate(Role::prover, seeded_bytes(16, 32));
    const Digest256 context = digest("ctx");
    const SealedBox box = seal(recipient.public_key, to_bytes("secret"), context);
    Digest256 wrong = context;
    wrong.bytes[0] ^= 0x01;
    CHECK_THROWS_AS(unseal(recipient, box, wrong), DecryptError);
}

TEST_CASE("unseal fails when any ciphertext byte is perturbed") {
    const KeyPair recipient = keypair_generate(Role::prover, seeded_bytes(17, 32));
    const Digest256 context = digest("ctx");
    const SealedBox box = seal(recipient.public_key, to_bytes("twelve bytes"), context);
    for (std::size_t i = 0; i < box.ciphertext.size(); ++i) {
        SealedBox mutated = box;
        mutated.ciphertext[i] ^= 0x01;
        CHECK_THROWS_AS(unseal(recipient, mutated, context), DecryptError);
    }
}

TEST_CASE("hex encoding round trips and stays strict") {
    const Bytes b = seeded_bytes(18, 33);
    const auto back = hex_decode(hex_encode(b));
    REQUIRE(back.has_value());
    CHECK(*back == b);
    CHECK_FALSE(hex_decode("abc").has_value());   // odd length
    CHECK_FALSE(hex_decode("AB").has_value());    // uppercase rejected
    CHECK_FALSE(hex_decode("0g").has_value());    // non-hex
    CHECK(hex_decode("")->empty());
}

TEST_CASE("seeded randomness replays exactly and differs across seeds") {
    CHECK(seeded_bytes(42, 64) == seeded_bytes(42, 64));
    CHECK(seeded_bytes(42, 64) != seeded_bytes(43, 64));
    SeededRandom rng(42);
    Bytes first(32), second(32);
    rng.fill(first);
    rng.fill(second);
    CHECK(first != second); // stream advances between calls
}

TEST_CASE("fixed clock emits its configured instant") {
    const FixedClock clock("2026-01-02T03:04:05Z");
    CHECK(clock.now_iso8601_utc() == "2026-01-02T03:04:05Z");
    const SystemClock real;
    const std::string now = real.now_iso8601_utc();
    CHECK(now.size() == 20);
    CHECK(now.back() == 'Z');
    CHECK(now[10] == 'T');
}
