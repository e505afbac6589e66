// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/ecdsa.h>

#include <cstring>
#include <stdexcept>

namespace iotln::ecdsa {

namespace {

// ---------------------------------------------------------------------------
// 256-bit arithmetic, little-endian 64-bit limbs
// ---------------------------------------------------------------------------

struct U256 {
    uint64_t w[4] = {0, 0, 0, 0};

    bool operator==(const U256& o) const {
        return w[0] == o.w[0] && w[1] == o.w[1] && w[2] == o.w[2] && w[3] == o.w[3];
    }

    bool is_zero() const { return (w[0] | w[1] | w[2] | w[3]) == 0; }

    bool bit(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }

    static U256 from_be(const uint8_t* p) {
        U256 r;
        for (int i = 0; i < 4; i++)
            for (int j = 0; j < 8; j++) r.w[3 - i] = (r.w[3 - i] << 8) | p[8 * i + j];
        return r;
    }

    void to_be(uint8_t* p) const {
        for (int i = 0; i < 4; i++)
            for (int j = 0; j < 8; j++) p[8 * i + j] = uint8_t(w[3 - i] >> (56 - 8 * j));
    }
};

int cmp(const U256& a, const U256& b) {
    for (int i = 3; i >= 0; i--) {
        if (a.w[i] < b.w[i]) return -1;
        if (a.w[i] > b.w[i]) return 1;
    }
    return 0;
}

// returns carry out
uint64_t add_raw(U256& r, const U256& a, const U256& b) {
    unsigned __int128 carry = 0;
    for (int i = 0; i < 4; i++) {
        unsigned __int128 t = (unsigned __int128)a.w[i] + b.w[i] + carry;
        r.w[i] = uint64_t(t);
        carry = t >> 64;
    }
    return uint64_t(carry);
}

// returns borrow out
uint64_t sub_raw(U256& r, const U256& a, const U256& b) {
    unsigned __int128 borrow = 0;
    for (int i = 0; i < 4; i++) {
        unsigned __int128 t = (unsigned __int128)a.w[i] - b.w[i] - borrow;
        r.w[i] = uint64_t(t);
        borrow = (t >> 127) & 1;
    }
    return uint64_t(borrow);
}

U256 shr1(const U256& a) {
    U256 r;
    for (int i = 0; i < 4; i++) {
        uint64_t next = (i < 3) ? a.w[i + 1] : 0;
        r.w[i] = (a.w[i] >> 1) | (next << 63);
    }
    return r;
}

struct U512 {
    uint64_t w[8] = {0};
};

U512 mul_full(const U256& a, const U256& b) {
    U512 r;
    for (int i = 0; i < 4; i++) {
        unsigned __int128 carry = 0;
        for (int j = 0; j < 4; j++) {
            unsigned __int128 t = (unsigned __int128)a.w[i] * b.w[j] + r.w[i + j] + carry;
            r.w[i + j] = uint64_t(t);
            carry = t >> 64;
        }
        r.w[i + 4] = uint64_t(carry);
    }
    return r;
}

// Modulus with precomputed deficiency c = 2^256 - m. For both secp256k1
// moduli c < 2^129, so folding hi*c into the low half converges in a few
// rounds when reducing a 512-bit product.
struct Modulus {
    U256 m;
    U256 c;
};

U256 reduce512(const U512& x, const Modulus& mod) {
    U256 lo, hi;
    std::memcpy(lo.w, x.w, 32);
    std::memcpy(hi.w, x.w + 4, 32);
    while (!hi.is_zero()) {
        U512 f = mul_full(hi, mod.c);
        U256 flo, fhi;
        std::memcpy(flo.w, f.w, 32);
        std::memcpy(fhi.w, f.w + 4, 32);
        uint64_t carry = add_raw(lo, lo, flo);
        U256 carry_u{{carry, 0, 0, 0}};
        add_raw(fhi, fhi, carry_u);  // fhi stays far below 2^256
        hi = fhi;
    }
    while (cmp(lo, mod.m) >= 0) sub_raw(lo, lo, mod.m);
    return lo;
}

U256 add_mod(const U256& a, const U256& b, const Modulus& mod) {
    U256 r;
    uint64_t carry = add_raw(r, a, b);
    if (carry || cmp(r, mod.m) >= 0) sub_raw(r, r, mod.m);
    return r;
}

U256 sub_mod(const U256& a, const U256& b, const Modulus& mod) {
    U256 r;
    if (sub_raw(r, a, b)) add_raw(r, r, mod.m);
    return r;
}

U256 mul_mod(const U256& a, const U256& b, const Modulus& mod) {
    return reduce512(mul_full(a, b), mod);
}

U256 pow_mod(const U256& base, const U256& exp, const Modulus& mod) {
    U256 result{{1, 0, 0, 0}};
    for (int i = 255; i >= 0; i--) {
        result = mul_mod(result, result, mod);
        if (exp.bit(i)) result = mul_mod(result, base, mod);
    }
    return result;
}

U256 inv_mod(const U256& a, const Modulus& mod) {
    // Fermat: a^(m-2); both moduli are prime.
    U256 e;
    U256 two{{2, 0, 0, 0}};
    sub_raw(e, mod.m, two);
    return pow_mod(a, e, mod);
}

U256 from_hex64(const char* hex) {
    uint8_t buf[32];
    auto nib = [](char ch) -> uint8_t {
        if (ch >= '0' && ch <= '9') return uint8_t(ch - '0');
        return uint8_t(ch - 'a' + 10);
    };
    for (int i = 0; i < 32; i++) buf[i] = uint8_t(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
    return U256::from_be(buf);
}

struct CurveConsts {
    Modulus field;
    Modulus order;
    U256 gx, gy;
    U256 half_order;  // floor(n / 2)
    U256 sqrt_exp;    // (p + 1) / 4; p = 3 (mod 4)
};

const CurveConsts& consts() {
    static const CurveConsts c = [] {
        CurveConsts k;
        k.field.m = from_hex64(
            "fffffffffffffffffffffffffffffffffffffffffffffffffffffffefffffc2f");
        k.field.c = U256{{0x00000001000003d1ULL, 0, 0, 0}};  // 2^32 + 977
        k.order.m = from_hex64(
            "fffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364141");
        U256 zero;
        sub_raw(k.order.c, zero, k.order.m);  // 2^256 - n
        k.gx = from_hex64(
            "79be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798");
        k.gy = from_hex64(
            "483ada7726a3c4655da4fbfc0e1108a8fd17b448a68554199c47d08ffb10d4b8");
        k.half_order = shr1(k.order.m);
        U256 p1;
        U256 one{{1, 0, 0, 0}};
        add_raw(p1, k.field.m, one);
        k.sqrt_exp = shr1(shr1(p1));
        return k;
    }();
    return c;
}

// ---------------------------------------------------------------------------
// Point arithmetic, Jacobian coordinates (z = 0 encodes infinity)
// ---------------------------------------------------------------------------

struct Point {
    U256 x, y, z;
    bool infinity() const { return z.is_zero(); }
};

Point dbl(const Point& p) {
    const Modulus& f = consts().field;
    if (p.infinity() || p.y.is_zero()) return Point{};
    U256 a = mul_mod(p.x, p.x, f);             // X^2
    U256 b = mul_mod(p.y, p.y, f);             // Y^2
    U256 cc = mul_mod(b, b, f);                // Y^4
    U256 xb = add_mod(p.x, b, f);
    U256 d = mul_mod(xb, xb, f);
    d = sub_mod(d, a, f);
    d = sub_mod(d, cc, f);
    d = add_mod(d, d, f);                      // D = 2((X+B)^2 - A - C)
    U256 e = add_mod(add_mod(a, a, f), a, f);  // E = 3A
    U256 x3 = mul_mod(e, e, f);
    x3 = sub_mod(x3, add_mod(d, d, f), f);
    U256 c8 = add_mod(cc, cc, f);
    c8 = add_mod(c8, c8, f);
    c8 = add_mod(c8, c8, f);                   // 8C
    U256 y3 = mul_mod(e, sub_mod(d, x3, f), f);
    y3 = sub_mod(y3, c8, f);
    U256 z3 = mul_mod(p.y, p.z, f);
    z3 = add_mod(z3, z3, f);
    return Point{x3, y3, z3};
}

Point add(const Point& p, const Point& q) {
    if (p.infinity()) return q;
    if (q.infinity()) return p;
    const Modulus& f = consts().field;
    U256 z1sq = mul_mod(p.z, p.z, f);
    U256 z2sq = mul_mod(q.z, q.z, f);
    U256 u1 = mul_mod(p.x, z2sq, f);
    U256 u2 = mul_mod(q.x, z1sq, f);
    U256 s1 = mul_mod(p.y, mul_mod(z2sq, q.z, f), f);
    U256 s2 = mul_mod(q.y, mul_mod(z1sq, p.z, f), f);
    if (u1 == u2) {
        if (!(s1 == s2)) return Point{};
        return dbl(p);
    }
    U256 h = sub_mod(u2, u1, f);
    U256 r = sub_mod(s2, s1, f);
    U256 h2 = mul_mod(h, h, f);
    U256 h3 = mul_mod(h2, h, f);
    U256 u1h2 = mul_mod(u1, h2, f);
    U256 x3 = mul_mod(r, r, f);
    x3 = sub_mod(x3, h3, f);
    x3 = sub_mod(x3, add_mod(u1h2, u1h2, f), f);
    U256 y3 = mul_mod(r, sub_mod(u1h2, x3, f), f);
    y3 = sub_mod(y3, mul_mod(s1, h3, f), f);
    U256 z3 = mul_mod(mul_mod(p.z, q.z, f), h, f);
    return Point{x3, y3, z3};
}

Point scalar_mul(const U256& k, const Point& p) {
    Point acc{};
    bool started = false;
    for (int i = 255; i >= 0; i--) {
        if (started) acc = dbl(acc);
        if (k.bit(i)) {
            acc = add(acc, p);
            started = true;
        }
    }
    return acc;
}

Point generator() {
    return Point{consts().gx, consts().gy, U256{{1, 0, 0, 0}}};
}

struct Affine {
    U256 x, y;
};

bool to_affine(const Point& p, Affine& out) {
    if (p.infinity()) return false;
    const Modulus& f = consts().field;
    U256 zi = inv_mod(p.z, f);
    U256 zi2 = mul_mod(zi, zi, f);
    out.x = mul_mod(p.x, zi2, f);
    out.y = mul_mod(p.y, mul_mod(zi2, zi, f), f);
    return true;
}

PublicKey compress(const Affine& a) {
    PublicKey out;
    out[0] = (a.y.w[0] & 1) ? 0x03 : 0x02;
    a.x.to_be(out.data() + 1);
    return out;
}

bool decompress(ByteSpan pk, Affine& out) {
    if (pk.size() != 33 || (pk[0] != 0x02 && pk[0] != 0x03)) return false;
    const Modulus& f = consts().field;
    U256 x = U256::from_be(pk.data() + 1);
    if (cmp(x, f.m) >= 0) return false;
    U256 x3 = mul_mod(mul_mod(x, x, f), x, f);
    U256 rhs = add_mod(x3, U256{{7, 0, 0, 0}}, f);
    U256 y = pow_mod(rhs, consts().sqrt_exp, f);
    if (!(mul_mod(y, y, f) == rhs)) return false;  // x^3 + 7 not a square
    bool want_odd = pk[0] == 0x03;
    if ((y.w[0] & 1) != uint64_t(want_odd)) y = sub_mod(U256{}, y, f);
    out.x = x;
    out.y = y;
    return true;
}

U256 digest_to_scalar(const Digest& d) {
    U256 z = U256::from_be(d.data());
    const Modulus& n = consts().order;
    while (cmp(z, n.m) >= 0) sub_raw(z, z, n.m);
    return z;
}

} // namespace

std::optional<KeyPair> keygen(ByteSpan seed) {
    if (seed.size() != 32) return std::nullopt;
    bool all_zero = true;
    for (uint8_t b : seed)
        if (b) { all_zero = false; break; }
    if (all_zero) return std::nullopt;
    U256 d = U256::from_be(seed.data());
    const Modulus& n = consts().order;
    while (cmp(d, n.m) >= 0) sub_raw(d, d, n.m);
    if (d.is_zero()) return std::nullopt;
    KeyPair kp;
    d.to_be(kp.secret.data());
    Affine a;
    if (!to_affine(scalar_mul(d, generator()), a)) return std::nullopt;
    kp.public_key = compress(a);
    return kp;
}

std::optional<PublicKey> derive_pubkey(const SecretKey& secret) {
    U256 d = U256::from_be(secret.data());
    const Modulus& n = consts().order;
    if (d.is_zero() || cmp(d, n.m) >= 0) return std::nullopt;
    Affine a;
    if (!to_affine(scalar_mul(d, generator()), a)) return std::nullopt;
    return compress(a);
}

SigBytes sign(const Digest& digest, const SecretKey& secret) {
    const Modulus& n = consts().order;
    U256 d = U256::from_be(secret.data());
    if (d.is_zero() || cmp(d, n.m) >= 0) throw std::invalid_argument("bad secret key");
    U256 z = digest_to_scalar(digest);

    for (uint8_t counter = 0;; counter++) {
        Bytes nonce_msg(digest.begin(), digest.end());
        nonce_msg.push_back(counter);
        Digest nonce = hmac_sha256(ByteSpan(secret.data(), 32), nonce_msg);
        U256 k = U256::from_be(nonce.data());
        while (cmp(k, n.m) >= 0) sub_raw(k, k, n.m);
        if (k.is_zero()) continue;

        Affine ra;
        if (!to_affine(scalar_mul(k, generator()), ra)) continue;
        U256 r = ra.x;
        while (cmp(r, n.m) >= 0) sub_raw(r, r, n.m);
        if (r.is_zero()) continue;

        U256 kinv = inv_mod(k, n);
        U256 s = mul_mod(kinv, add_mod(z, mul_mod(r, d, n), n), n);
        if (s.is_zero()) continue;
        if (cmp(s, consts().half_order) > 0) {
            U256 t;
            sub_raw(t, n.m, s);
            s = t;
        }

        SigBytes out;
        r.to_be(out.data());
        s.to_be(out.data() + 32);
        return out;
    }
}

bool verify(ByteSpan sig, ByteSpan pubkey, const Digest& digest) {
    if (sig.size() != 64) return false;
    const Modulus& n = consts().order;
    U256 r = U256::from_be(sig.data());
    U256 s = U256::from_be(sig.data() + 32);
    if (r.is_zero() || s.is_zero()) return false;
    if (cmp(r, n.m) >= 0 || cmp(s, n.m) >= 0) return false;
    if (cmp(s, consts().half_order) > 0) return false;  // low-s only

    Affine q;
    if (!decompress(pubkey, q)) return false;

    U256 z = digest_to_scalar(digest);
    U256 w = inv_mod(s, n);
    U256 u1 = mul_mod(z, w, n);
    U256 u2 = mul_mod(r, w, n);
    Point qj{q.x, q.y, U256{{1, 0, 0, 0}}};
    Point p = add(scalar_mul(u1, generator()), scalar_mul(u2, qj));
    Affine pa;
    if (!to_affine(p, pa)) return false;
    U256 rx = pa.x;
    while (cmp(rx, n.m) >= 0) sub_raw(rx, rx, n.m);
    return rx == r;
}

} // namespace iotln::ecdsa
