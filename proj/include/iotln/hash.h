// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_HASH_H
#define IOTLN_HASH_H

#include <iotln/util.h>

#include <array>
#include <cstdint>

namespace iotln {

using Digest = std::array<uint8_t, 32>;
using Hash20 = std::array<uint8_t, 20>;

Digest sha256(ByteSpan data);
Digest sha256d(ByteSpan data);            // SHA256(SHA256(x)), used for txids/sighashes
Hash20 ripemd160(ByteSpan data);
Hash20 hash160(ByteSpan data);            // RIPEMD160(SHA256(x))
Digest hmac_sha256(ByteSpan key, ByteSpan msg);

inline ByteSpan span_of(const Digest& d) { return ByteSpan(d.data(), d.size()); }
inline ByteSpan span_of(const Hash20& d) { return ByteSpan(d.data(), d.size()); }
inline Bytes to_bytes(const Digest& d) { return Bytes(d.begin(), d.end()); }
inline Bytes to_bytes(const Hash20& d) { return Bytes(d.begin(), d.end()); }

} // namespace iotln

#endif // IOTLN_HASH_H
