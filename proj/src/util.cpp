// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/util.h>

#include <cstdio>

namespace iotln {

std::string hex_str(ByteSpan b) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (uint8_t c : b) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xf]);
    }
    return out;
}

Bytes from_hex(const std::string& s) {
    if (s.size() % 2) throw std::invalid_argument("odd hex length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("bad hex digit");
    };
    Bytes out(s.size() / 2);
    for (size_t i = 0; i < out.size(); i++)
        out[i] = uint8_t(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
    return out;
}

std::string format_btc(int64_t sat) {
    bool neg = sat < 0;
    uint64_t v = neg ? uint64_t(-sat) : uint64_t(sat);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%s%llu.%08llu", neg ? "-" : "",
                  (unsigned long long)(v / COIN), (unsigned long long)(v % COIN));
    return buf;
}

} // namespace iotln
