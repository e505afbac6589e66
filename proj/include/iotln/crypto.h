// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CRYPTO_H
#define IOTLN_CRYPTO_H

#include <iotln/ecdsa.h>
#include <iotln/hash.h>
#include <iotln/util.h>

#include <array>
#include <optional>
#include <string_view>
#include <variant>

namespace iotln {

using ecdsa::KeyPair;
using ecdsa::PublicKey;
using ecdsa::SecretKey;

// Signature scheme abstraction. The protocol roles, script interpreter and
// chain validation are all parameterized over this: golden vectors and
// end-to-end runs use the curve scheme, high-volume property suites can run
// on the hash-based mock.
class SigScheme {
public:
    virtual ~SigScheme() = default;
    virtual std::optional<KeyPair> keygen(ByteSpan seed) const = 0;
    virtual std::optional<PublicKey> derive_pubkey(const SecretKey& secret) const = 0;
    virtual Bytes sign(const Digest& digest, const SecretKey& secret) const = 0;
    virtual bool verify(ByteSpan sig, ByteSpan pubkey, const Digest& digest) const = 0;
    virtual size_t sig_size() const = 0;
};

class EcdsaScheme final : public SigScheme {
public:
    std::optional<KeyPair> keygen(ByteSpan seed) const override;
    std::optional<PublicKey> derive_pubkey(const SecretKey& secret) const override;
    Bytes sign(const Digest& digest, const SecretKey& secret) const override;
    bool verify(ByteSpan sig, ByteSpan pubkey, const Digest& digest) const override;
    size_t sig_size() const override { return 64; }
};

// Mock scheme: sig = HMAC-SHA256(secret, digest) truncated to sig_len bytes,
// public key = 0x7f || secret so verification can recompute the tag. No
// security, full determinism, microsecond cost.
class ToyScheme final : public SigScheme {
public:
    explicit ToyScheme(size_t sig_len = 8) : sig_len_(sig_len) {}
    std::optional<KeyPair> keygen(ByteSpan seed) const override;
    std::optional<PublicKey> derive_pubkey(const SecretKey& secret) const override;
    Bytes sign(const Digest& digest, const SecretKey& secret) const override;
    bool verify(ByteSpan sig, ByteSpan pubkey, const Digest& digest) const override;
    size_t sig_size() const override { return sig_len_; }

private:
    size_t sig_len_;
};

const EcdsaScheme& ecdsa_scheme();
const ToyScheme& toy_scheme();

// Labeled sub-seed derivation for per-purpose keys off one master seed.
Digest derive_seed(ByteSpan seed, std::string_view label);

// ---------------------------------------------------------------------------
// Encrypted + authenticated envelope for the IoT link.
//
// Wire layout: length (u32 big-endian, counts everything after itself)
//              || msg_type (1 byte) || ciphertext || mac (32 bytes).
// Cipher is AES-256-CTR (ciphertext length == plaintext length), MAC is
// HMAC-SHA256 over msg_type || ciphertext, checked before decryption.
// ---------------------------------------------------------------------------

struct EnvelopeKeys {
    std::array<uint8_t, 32> enc_key;
    std::array<uint8_t, 32> mac_key;

    static EnvelopeKeys from_seed(ByteSpan seed);
};

enum class EnvelopeError {
    bad_length,
    bad_mac,
};

struct SecureEnvelope {
    uint8_t msg_type = 0;
    Bytes ciphertext;
    std::array<uint8_t, 32> mac{};

    Bytes serialize() const;
};

SecureEnvelope seal_envelope(uint8_t msg_type, ByteSpan plaintext, const EnvelopeKeys& keys);

struct OpenedEnvelope {
    uint8_t msg_type = 0;
    Bytes plaintext;
};

std::variant<OpenedEnvelope, EnvelopeError> open_envelope(ByteSpan wire, const EnvelopeKeys& keys);

} // namespace iotln

#endif // IOTLN_CRYPTO_H
