// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/crypto.h>

#include <iotln/aes.h>

#include <cstring>

namespace iotln {

std::optional<KeyPair> EcdsaScheme::keygen(ByteSpan seed) const {
    return ecdsa::keygen(seed);
}

std::optional<PublicKey> EcdsaScheme::derive_pubkey(const SecretKey& secret) const {
    return ecdsa::derive_pubkey(secret);
}

Bytes EcdsaScheme::sign(const Digest& digest, const SecretKey& secret) const {
    ecdsa::SigBytes s = ecdsa::sign(digest, secret);
    return Bytes(s.begin(), s.end());
}

bool EcdsaScheme::verify(ByteSpan sig, ByteSpan pubkey, const Digest& digest) const {
    return ecdsa::verify(sig, pubkey, digest);
}

std::optional<KeyPair> ToyScheme::keygen(ByteSpan seed) const {
    if (seed.size() != 32) return std::nullopt;
    bool all_zero = true;
    for (uint8_t b : seed)
        if (b) { all_zero = false; break; }
    if (all_zero) return std::nullopt;
    KeyPair kp;
    std::memcpy(kp.secret.data(), seed.data(), 32);
    kp.public_key = *derive_pubkey(kp.secret);
    return kp;
}

std::optional<PublicKey> ToyScheme::derive_pubkey(const SecretKey& secret) const {
    PublicKey pk;
    pk[0] = 0x7f;
    std::memcpy(pk.data() + 1, secret.data(), 32);
    return pk;
}

Bytes ToyScheme::sign(const Digest& digest, const SecretKey& secret) const {
    Digest tag = hmac_sha256(ByteSpan(secret.data(), 32), span_of(digest));
    return Bytes(tag.begin(), tag.begin() + sig_len_);
}

bool ToyScheme::verify(ByteSpan sig, ByteSpan pubkey, const Digest& digest) const {
    if (sig.size() != sig_len_ || pubkey.size() != 33 || pubkey[0] != 0x7f) return false;
    SecretKey sk;
    std::memcpy(sk.data(), pubkey.data() + 1, 32);
    Digest tag = hmac_sha256(ByteSpan(sk.data(), 32), span_of(digest));
    return std::memcmp(tag.data(), sig.data(), sig_len_) == 0;
}

const EcdsaScheme& ecdsa_scheme() {
    static const EcdsaScheme s;
    return s;
}

const ToyScheme& toy_scheme() {
    static const ToyScheme s;
    return s;
}

Digest derive_seed(ByteSpan seed, std::string_view label) {
    Bytes buf(seed.begin(), seed.end());
    buf.insert(buf.end(), label.begin(), label.end());
    return sha256(buf);
}

// ---------------------------------------------------------------------------
// SecureEnvelope
// ---------------------------------------------------------------------------

EnvelopeKeys EnvelopeKeys::from_seed(ByteSpan seed) {
    EnvelopeKeys k;
    k.enc_key = derive_seed(seed, "env-enc");
    k.mac_key = derive_seed(seed, "env-mac");
    return k;
}

namespace {

Digest envelope_mac(uint8_t msg_type, ByteSpan ciphertext, const EnvelopeKeys& keys) {
    Bytes macd;
    macd.reserve(1 + ciphertext.size());
    macd.push_back(msg_type);
    append(macd, ciphertext);
    return hmac_sha256(ByteSpan(keys.mac_key.data(), 32), macd);
}

} // namespace

Bytes SecureEnvelope::serialize() const {
    Bytes out;
    put_u32be(out, uint32_t(1 + ciphertext.size() + 32));
    out.push_back(msg_type);
    append(out, ciphertext);
    out.insert(out.end(), mac.begin(), mac.end());
    return out;
}

SecureEnvelope seal_envelope(uint8_t msg_type, ByteSpan plaintext, const EnvelopeKeys& keys) {
    SecureEnvelope env;
    env.msg_type = msg_type;
    // Keys are static per device pair; the simulator's envelopes carry no IV
    // slot, so the counter stream starts from a zero block.
    env.ciphertext = Aes256Ctr(keys.enc_key).crypt({}, plaintext);
    env.mac = envelope_mac(msg_type, env.ciphertext, keys);
    return env;
}

std::variant<OpenedEnvelope, EnvelopeError> open_envelope(ByteSpan wire,
                                                          const EnvelopeKeys& keys) {
    if (wire.size() < 4 + 1 + 32) return EnvelopeError::bad_length;
    uint32_t len = uint32_t(wire[0]) << 24 | uint32_t(wire[1]) << 16 |
                   uint32_t(wire[2]) << 8 | uint32_t(wire[3]);
    if (len < 33 || wire.size() != size_t(4) + len) return EnvelopeError::bad_length;

    uint8_t msg_type = wire[4];
    ByteSpan ciphertext = wire.subspan(5, len - 33);
    ByteSpan mac = wire.subspan(4 + len - 32, 32);

    Digest expect = envelope_mac(msg_type, ciphertext, keys);
    uint8_t diff = 0;
    for (int i = 0; i < 32; i++) diff |= uint8_t(expect[i] ^ mac[i]);
    if (diff != 0) return EnvelopeError::bad_mac;

    OpenedEnvelope out;
    out.msg_type = msg_type;
    out.plaintext = Aes256Ctr(keys.enc_key).crypt({}, ciphertext);
    return out;
}

} // namespace iotln
