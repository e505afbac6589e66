// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_ECDSA_H
#define IOTLN_ECDSA_H

#include <iotln/hash.h>
#include <iotln/util.h>

#include <array>
#include <optional>

namespace iotln::ecdsa {

using SecretKey = std::array<uint8_t, 32>;
using PublicKey = std::array<uint8_t, 33>;  // SEC1 compressed
using SigBytes = std::array<uint8_t, 64>;   // r || s, both 32-byte big-endian

struct KeyPair {
    SecretKey secret;
    PublicKey public_key;
    bool operator==(const KeyPair&) const = default;
};

// Derives a key pair from 32 bytes of seed material. The seed is reduced
// mod the curve order; an all-zero seed (or one reducing to zero) is rejected.
std::optional<KeyPair> keygen(ByteSpan seed);

std::optional<PublicKey> derive_pubkey(const SecretKey& secret);

// ECDSA over secp256k1 with a deterministic nonce:
//   k = HMAC-SHA256(secret, digest || counter) mod n, counter = 0,1,...
// skipping candidates that give k = 0, r = 0 or s = 0. s is normalized to
// the low half of the order, and verify rejects high-s encodings, so each
// (digest, secret) pair has exactly one accepted signature.
SigBytes sign(const Digest& digest, const SecretKey& secret);

// Returns false for malformed signatures or public keys rather than throwing.
bool verify(ByteSpan sig, ByteSpan pubkey, const Digest& digest);

} // namespace iotln::ecdsa

#endif // IOTLN_ECDSA_H
