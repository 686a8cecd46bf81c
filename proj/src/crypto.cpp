#include "aw/crypto.hpp"

#include <sodium.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <set>

namespace aw {

void crypto_init() {
    if (sodium_init() < 0) {
        throw KeyError("libsodium initialization failed");
    }
}

namespace {

const char* kHexDigits = "0123456789abcdef";

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1; // uppercase and everything else is rejected
}

template <std::size_t N>
std::optional<std::array<std::uint8_t, N>> fixed_from_hex(std::string_view h) {
    auto raw = hex_decode(h);
    if (!raw || raw->size() != N) return std::nullopt;
    std::array<std::uint8_t, N> out{};
    std::memcpy(out.data(), raw->data(), N);
    return out;
}

} // namespace

std::string hex_encode(std::span<const std::uint8_t> data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

std::optional<Bytes> hex_decode(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]);
        int lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

Bytes be64(std::uint64_t v) {
    Bytes out(8);
    for (int i = 7; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
        v >>= 8;
    }
    return out;
}

std::optional<Digest256> Digest256::from_hex(std::string_view h) {
    auto arr = fixed_from_hex<32>(h);
    if (!arr) return std::nullopt;
    Digest256 d;
    d.bytes = *arr;
    return d;
}

std::optional<PublicKey> public_key_from_hex(std::string_view h) {
    return fixed_from_hex<32>(h);
}

std::optional<Signature> Signature::from_hex(std::string_view h) {
    auto arr = fixed_from_hex<64>(h);
    if (!arr) return std::nullopt;
    Signature s;
    s.bytes = *arr;
    return s;
}

std::string role_name(Role r) {
    switch (r) {
    case Role::prover: return "prover";
    case Role::auditor: return "auditor";
    case Role::verifier: return "verifier";
    case Role::hardware_root: return "hardware_root";
    }
    return "unknown";
}

Digest256 digest(std::span<const std::uint8_t> data) {
    Digest256 d;
    crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
    return d;
}

Digest256 digest(std::string_view data) {
    return digest(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Bytes canonical_encode(const std::vector<EncodedField>& fields) {
    std::set<std::string> seen;
    Bytes out;
    for (const auto& f : fields) {
        if (f.tag.empty() || f.tag.size() > 16) {
            throw EncodingError("tag must be 1..16 ASCII bytes: '" + f.tag + "'");
        }
        for (char c : f.tag) {
            if (static_cast<unsigned char>(c) > 0x7f) {
                throw EncodingError("tag must be ASCII: '" + f.tag + "'");
            }
        }
        if (!seen.insert(f.tag).second) {
            throw EncodingError("duplicate tag: '" + f.tag + "'");
        }
        out.push_back(static_cast<std::uint8_t>(f.tag.size()));
        out.insert(out.end(), f.tag.begin(), f.tag.end());
        Bytes len = be64(f.value.size());
        out.insert(out.end(), len.begin(), len.end());
        out.insert(out.end(), f.value.begin(), f.value.end());
    }
    return out;
}

std::optional<std::vector<EncodedField>> canonical_decode(std::span<const std::uint8_t> data) {
    std::vector<EncodedField> fields;
    std::size_t pos = 0;
    while (pos < data.size()) {
        std::size_t tag_len = data[pos++];
        if (tag_len == 0 || tag_len > 16 || pos + tag_len > data.size()) return std::nullopt;
        std::string tag(reinterpret_cast<const char*>(data.data() + pos), tag_len);
        pos += tag_len;
        if (pos + 8 > data.size()) return std::nullopt;
        std::uint64_t value_len = 0;
        for (int i = 0; i < 8; ++i) value_len = (value_len << 8) | data[pos + static_cast<std::size_t>(i)];
        pos += 8;
        if (value_len > data.size() - pos) return std::nullopt;
        fields.emplace_back(std::move(tag),
                            Bytes(data.begin() + static_cast<std::ptrdiff_t>(pos),
                                  data.begin() + static_cast<std::ptrdiff_t>(pos + value_len)));
        pos += value_len;
    }
    return fields;
}

KeyPair keypair_generate(Role role) {
    KeyPair kp;
    kp.role = role;
    crypto_sign_keypair(kp.public_key.data(), kp.secret_key.data());
    return kp;
}

KeyPair keypair_generate(Role role, std::span<const std::uint8_t> seed) {
    if (seed.size() != crypto_sign_SEEDBYTES) {
        throw KeyError("seed must be exactly 32 bytes");
    }
    KeyPair kp;
    kp.role = role;
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

Signature sign(const KeyPair& signer, std::span<const std::uint8_t> message) {
    Signature sig;
    sig.signer_role = signer.role;
    crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(),
                         signer.secret_key.data());
    return sig;
}

void keypair_erase(KeyPair& keys) {
    sodium_memzero(keys.secret_key.data(), keys.secret_key.size());
}

bool verify(const PublicKey& public_key, std::span<const std::uint8_t> message,
            const Signature& signature) {
    return crypto_sign_verify_detached(signature.bytes.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
}

SealedBox seal(const PublicKey& recipient_public, std::span<const std::uint8_t> plaintext,
               const Digest256& associated) {
    std::array<std::uint8_t, crypto_scalarmult_curve25519_BYTES> recipient_x{};
    if (crypto_sign_ed25519_pk_to_curve25519(recipient_x.data(), recipient_public.data()) != 0) {
        throw KeyError("recipient public key is not a valid Ed25519 key");
    }

    SealedBox box;
    box.associated_digest = associated;
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> eph_secret{};
    crypto_box_keypair(box.ephemeral_key.data(), eph_secret.data());
    randombytes_buf(box.nonce.data(), box.nonce.size());

    std::array<std::uint8_t, crypto_box_BEFORENMBYTES> shared{};
    if (crypto_box_beforenm(shared.data(), recipient_x.data(), eph_secret.data()) != 0) {
        sodium_memzero(eph_secret.data(), eph_secret.size());
        throw KeyError("key agreement failed");
    }
    sodium_memzero(eph_secret.data(), eph_secret.size());

    box.ciphertext.resize(plaintext.size() + crypto_aead_xchacha20poly1305_ietf_ABYTES);
    unsigned long long clen = 0;
    crypto_aead_xchacha20poly1305_ietf_encrypt(
        box.ciphertext.data(), &clen, plaintext.data(), plaintext.size(),
        associated.bytes.data(), associated.bytes.size(), nullptr, box.nonce.data(),
        shared.data());
    box.ciphertext.resize(clen);
    sodium_memzero(shared.data(), shared.size());
    return box;
}

Bytes unseal(const KeyPair& recipient, const SealedBox& box, const Digest256& associated) {
    std::array<std::uint8_t, crypto_scalarmult_curve25519_BYTES> recipient_x{};
    if (crypto_sign_ed25519_sk_to_curve25519(recipient_x.data(), recipient.secret_key.data()) != 0) {
        throw DecryptError("unseal failed");
    }

    std::array<std::uint8_t, crypto_box_BEFORENMBYTES> shared{};
    if (crypto_box_beforenm(shared.data(), box.ephemeral_key.data(), recipient_x.data()) != 0) {
        sodium_memzero(recipient_x.data(), recipient_x.size());
        throw DecryptError("unseal failed");
    }
    sodium_memzero(recipient_x.data(), recipient_x.size());

    if (box.ciphertext.size() < crypto_aead_xchacha20poly1305_ietf_ABYTES) {
        sodium_memzero(shared.data(), shared.size());
        throw DecryptError("unseal failed");
    }
    Bytes plain(box.ciphertext.size() - crypto_aead_xchacha20poly1305_ietf_ABYTES);
    unsigned long long plen = 0;
    int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(
        plain.data(), &plen, nullptr, box.ciphertext.data(), box.ciphertext.size(),
        associated.bytes.data(), associated.bytes.size(), box.nonce.data(), shared.data());
    sodium_memzero(shared.data(), shared.size());
    if (rc != 0) {
        throw DecryptError("unseal failed");
    }
    plain.resize(plen);
    return plain;
}

std::array<std::uint8_t, 32> RandomSource::bytes32() {
    std::array<std::uint8_t, 32> out{};
    fill(out);
    return out;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
    randombytes_buf(out.data(), out.size());
}

SeededRandom::SeededRandom(std::uint64_t seed) {
    Bytes material = canonical_encode({{"seed", be64(seed)}});
    state_ = digest(material).bytes;
}

SeededRandom::SeededRandom(std::span<const std::uint8_t> seed32) {
    if (seed32.size() != 32) throw KeyError("seed must be exactly 32 bytes");
    std::memcpy(state_.data(), seed32.data(), 32);
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
    // One deterministic stream block per call, keyed by state and counter.
    Digest256 block = digest(canonical_encode({{"rng", Bytes(state_.begin(), state_.end())},
                                               {"ctr", be64(counter_++)}}));
    std::array<std::uint8_t, randombytes_SEEDBYTES> seed{};
    std::memcpy(seed.data(), block.bytes.data(), seed.size());
    randombytes_buf_deterministic(out.data(), out.size(), seed.data());
}

std::string SystemClock::now_iso8601_utc() const {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

} // namespace aw
