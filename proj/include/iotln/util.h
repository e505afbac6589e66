// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_UTIL_H
#define IOTLN_UTIL_H

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iotln {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

std::string hex_str(ByteSpan b);
Bytes from_hex(const std::string& s);

inline void append(Bytes& out, ByteSpan b) { out.insert(out.end(), b.begin(), b.end()); }

inline void put_u8(Bytes& out, uint8_t v) { out.push_back(v); }

inline void put_u16be(Bytes& out, uint16_t v) {
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

inline void put_u32be(Bytes& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

inline void put_u64be(Bytes& out, uint64_t v) {
    put_u32be(out, uint32_t(v >> 32));
    put_u32be(out, uint32_t(v));
}

inline void put_u32le(Bytes& out, uint32_t v) {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 24));
}

inline void put_u64le(Bytes& out, uint64_t v) {
    put_u32le(out, uint32_t(v));
    put_u32le(out, uint32_t(v >> 32));
}

// Sequential reader over a byte buffer. Throws std::out_of_range on underrun;
// callers translate that into their own error type at the boundary.
class ByteReader {
public:
    explicit ByteReader(ByteSpan data) : data_(data) {}

    size_t remaining() const { return data_.size() - pos_; }
    bool empty() const { return remaining() == 0; }

    uint8_t u8() { need(1); return data_[pos_++]; }

    uint16_t u16be() {
        need(2);
        uint16_t v = uint16_t(data_[pos_] << 8) | data_[pos_ + 1];
        pos_ += 2;
        return v;
    }

    uint32_t u32be() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; i++) v = (v << 8) | data_[pos_ + i];
        pos_ += 4;
        return v;
    }

    uint64_t u64be() {
        uint64_t hi = u32be();
        return (hi << 32) | u32be();
    }

    uint32_t u32le() {
        need(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; i--) v = (v << 8) | data_[pos_ + i];
        pos_ += 4;
        return v;
    }

    uint64_t u64le() {
        uint64_t lo = u32le();
        return lo | (uint64_t(u32le()) << 32);
    }

    Bytes take(size_t n) {
        need(n);
        Bytes out(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }

    template <size_t N>
    std::array<uint8_t, N> take_array() {
        need(N);
        std::array<uint8_t, N> out;
        std::memcpy(out.data(), data_.data() + pos_, N);
        pos_ += N;
        return out;
    }

private:
    void need(size_t n) const {
        if (remaining() < n) throw std::out_of_range("byte reader underrun");
    }
    ByteSpan data_;
    size_t pos_ = 0;
};

constexpr int64_t COIN = 100'000'000;  // satoshi per BTC

std::string format_btc(int64_t sat);

} // namespace iotln

#endif // IOTLN_UTIL_H
