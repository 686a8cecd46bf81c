#pragma once

#include "aw/bytes.hpp"
#include "aw/errors.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aw {

// SHA-256 output. Equality is byte equality.
struct Digest256 {
    std::array<std::uint8_t, 32> bytes{};

    bool operator==(const Digest256&) const = default;
    auto operator<=>(const Digest256&) const = default;

    std::string hex() const { return hex_encode(bytes); }
    static std::optional<Digest256> from_hex(std::string_view h);
    std::span<const std::uint8_t> span() const { return {bytes.data(), bytes.size()}; }
};

enum class Role { prover, auditor, verifier, hardware_root };

std::string role_name(Role r);

// Ed25519 key pair. Secret key is the 64-byte libsodium form (seed || public).
struct KeyPair {
    std::array<std::uint8_t, 32> public_key{};
    std::array<std::uint8_t, 64> secret_key{};
    Role role = Role::prover;

    std::string public_hex() const { return hex_encode(public_key); }
};

using PublicKey = std::array<std::uint8_t, 32>;

std::optional<PublicKey> public_key_from_hex(std::string_view h);

// Detached Ed25519 signature. signer_role is diagnostics only and is never
// serialized or verified.
struct Signature {
    std::array<std::uint8_t, 64> bytes{};
    Role signer_role = Role::prover;

    bool operator==(const Signature& o) const { return bytes == o.bytes; }
    std::string hex() const { return hex_encode(bytes); }
    static std::optional<Signature> from_hex(std::string_view h);
};

// Hybrid authenticated public-key encryption: ephemeral X25519 key agreement
// against the recipient's converted Ed25519 key, then XChaCha20-Poly1305 with
// the associated digest as AD.
struct SealedBox {
    std::array<std::uint8_t, 32> ephemeral_key{};
    std::array<std::uint8_t, 24> nonce{};
    Bytes ciphertext;
    Digest256 associated_digest;
};

// SHA-256. Pure and deterministic.
Digest256 digest(std::span<const std::uint8_t> data);
Digest256 digest(std::string_view data);

// One field of a canonical encoding: ASCII tag (<= 16 bytes) + value bytes.
struct EncodedField {
    std::string tag;
    Bytes value;

    EncodedField(std::string t, Bytes v) : tag(std::move(t)), value(std::move(v)) {}
    EncodedField(std::string t, std::string_view v) : tag(std::move(t)), value(to_bytes(v)) {}
};

// Injective realization of the protocol's "a || b" composites:
// per field, tag-length (1 byte) || tag || value-length (8 bytes BE) || value.
// Every hashed or signed composite in this codebase goes through here.
Bytes canonical_encode(const std::vector<EncodedField>& fields);

// Inverse of canonical_encode; nullopt on malformed input.
std::optional<std::vector<EncodedField>> canonical_decode(std::span<const std::uint8_t> data);

// Deterministic when seeded (32 bytes), cryptographically random otherwise.
KeyPair keypair_generate(Role role);
KeyPair keypair_generate(Role role, std::span<const std::uint8_t> seed);

Signature sign(const KeyPair& signer, std::span<const std::uint8_t> message);

// Zeroes the secret half in place. Emulates the enclave key vanishing at
// session teardown; the public half stays usable for verification.
void keypair_erase(KeyPair& keys);

// True iff the signature is valid for (public_key, message). Never throws;
// malformed input verifies false.
bool verify(const PublicKey& public_key, std::span<const std::uint8_t> message,
            const Signature& signature);

SealedBox seal(const PublicKey& recipient_public, std::span<const std::uint8_t> plaintext,
               const Digest256& associated);

// Plaintext on success; DecryptError on any mismatch, indistinguishable
// across failure causes.
Bytes unseal(const KeyPair& recipient, const SealedBox& box, const Digest256& associated);

// Pluggable randomness so adversary scenarios and golden transcripts replay
// bit-exactly from a seed.
class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;

    std::array<std::uint8_t, 32> bytes32();
};

class SystemRandom final : public RandomSource {
public:
    void fill(std::span<std::uint8_t> out) override;
};

class SeededRandom final : public RandomSource {
public:
    explicit SeededRandom(std::uint64_t seed);
    explicit SeededRandom(std::span<const std::uint8_t> seed32);
    void fill(std::span<std::uint8_t> out) override;

private:
    std::array<std::uint8_t, 32> state_{};
    std::uint64_t counter_ = 0;
};

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::string now_iso8601_utc() const = 0;
};

class SystemClock final : public Clock {
public:
    std::string now_iso8601_utc() const override;
};

class FixedClock final : public Clock {
public:
    explicit FixedClock(std::string stamp) : stamp_(std::move(stamp)) {}
    std::string now_iso8601_utc() const override { return stamp_; }

private:
    std::string stamp_;
};

// Must be called once before any other crypto entry point; safe to repeat.
void crypto_init();

} // namespace aw
