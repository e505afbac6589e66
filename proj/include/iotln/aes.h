// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_AES_H
#define IOTLN_AES_H

#include <iotln/util.h>

#include <array>
#include <cstdint>

namespace iotln {

// AES-256 counter mode. Only the forward cipher is needed; encrypt and
// decrypt are the same keystream XOR, so ciphertext length equals
// plaintext length (no padding).
class Aes256Ctr {
public:
    explicit Aes256Ctr(const std::array<uint8_t, 32>& key);

    // XOR data with the keystream for the given 16-byte initial counter block.
    Bytes crypt(const std::array<uint8_t, 16>& iv, ByteSpan data) const;

private:
    void encrypt_block(const uint8_t in[16], uint8_t out[16]) const;
    std::array<uint32_t, 60> round_keys_;
};

} // namespace iotln

#endif // IOTLN_AES_H
