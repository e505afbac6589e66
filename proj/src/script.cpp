// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/script.h>

#include <algorithm>
#include <cstdio>

namespace iotln {

namespace {

constexpr size_t MAX_ITEM_SIZE = 520;

bool is_whitelisted(uint8_t b) {
    switch (Opcode(b)) {
        case Opcode::op_if:
        case Opcode::op_notif:
        case Opcode::op_else:
        case Opcode::op_endif:
        case Opcode::op_drop:
        case Opcode::op_dup:
        case Opcode::op_swap:
        case Opcode::op_size:
        case Opcode::op_equal:
        case Opcode::op_equalverify:
        case Opcode::op_sha256:
        case Opcode::op_hash160:
        case Opcode::op_checksig:
        case Opcode::op_checkmultisig:
        case Opcode::op_checklocktimeverify:
        case Opcode::op_checksequenceverify:
            return true;
        default:
            return uint8_t(b) >= uint8_t(Opcode::op_1) && uint8_t(b) <= uint8_t(Opcode::op_16);
    }
}

// Minimal signed little-endian number encoding (Bitcoin "ScriptNum").
Bytes encode_num(int64_t v) {
    if (v == 0) return {};
    Bytes out;
    bool neg = v < 0;
    uint64_t a = neg ? uint64_t(-v) : uint64_t(v);
    while (a) {
        out.push_back(uint8_t(a & 0xff));
        a >>= 8;
    }
    if (out.back() & 0x80)
        out.push_back(neg ? 0x80 : 0x00);
    else if (neg)
        out.back() |= 0x80;
    return out;
}

std::optional<int64_t> decode_num(ByteSpan b, size_t max_size) {
    if (b.size() > max_size) return std::nullopt;
    if (b.empty()) return 0;
    int64_t v = 0;
    for (size_t i = 0; i < b.size(); i++) v |= int64_t(uint64_t(b[i]) << (8 * i));
    if (b.back() & 0x80) {
        v &= ~(int64_t(0x80) << (8 * (b.size() - 1)));
        v = -v;
    }
    return v;
}

bool truthy(const Bytes& b) {
    for (size_t i = 0; i < b.size(); i++) {
        if (b[i] != 0) {
            // negative zero counts as false
            if (i == b.size() - 1 && b[i] == 0x80) return false;
            return true;
        }
    }
    return false;
}

} // namespace

Token Token::num(int64_t v) {
    if (v == 0) return Token{true, Opcode::op_0, {}};
    if (v >= 1 && v <= 16)
        return Token{false, Opcode(uint8_t(Opcode::op_1) + uint8_t(v - 1)), {}};
    return Token{true, Opcode::op_0, encode_num(v)};
}

Bytes Script::serialize() const {
    Bytes out;
    for (const Token& t : tokens) {
        if (t.is_push) {
            if (t.data.empty()) {
                out.push_back(uint8_t(Opcode::op_0));
            } else if (t.data.size() <= 75) {
                out.push_back(uint8_t(t.data.size()));
                append(out, t.data);
            } else if (t.data.size() <= 255) {
                out.push_back(uint8_t(Opcode::op_pushdata1));
                out.push_back(uint8_t(t.data.size()));
                append(out, t.data);
            } else {
                throw BuildError(BuildErrorCode::missing_param, "push too large");
            }
        } else {
            out.push_back(uint8_t(t.op));
        }
    }
    return out;
}

std::optional<Script> Script::parse(ByteSpan bytes) {
    Script s;
    size_t i = 0;
    while (i < bytes.size()) {
        uint8_t b = bytes[i++];
        if (b == uint8_t(Opcode::op_0)) {
            s.tokens.push_back(Token{true, Opcode::op_0, {}});
        } else if (b >= 1 && b <= 75) {
            if (i + b > bytes.size()) return std::nullopt;
            s.tokens.push_back(Token::push(bytes.subspan(i, b)));
            i += b;
        } else if (b == uint8_t(Opcode::op_pushdata1)) {
            if (i >= bytes.size()) return std::nullopt;
            uint8_t n = bytes[i++];
            if (i + n > bytes.size()) return std::nullopt;
            s.tokens.push_back(Token::push(bytes.subspan(i, n)));
            i += n;
        } else if (is_whitelisted(b)) {
            s.tokens.push_back(Token::opcode(Opcode(b)));
        } else {
            return std::nullopt;
        }
    }
    return s;
}

std::string Script::disassemble() const {
    std::string out;
    for (const Token& t : tokens) {
        if (!out.empty()) out += ' ';
        if (t.is_push) {
            if (t.data.empty())
                out += "0";
            else
                out += "<" + hex_str(t.data) + ">";
        } else if (uint8_t(t.op) >= uint8_t(Opcode::op_1) && uint8_t(t.op) <= uint8_t(Opcode::op_16)) {
            char buf[4];
            std::snprintf(buf, sizeof(buf), "%d", uint8_t(t.op) - uint8_t(Opcode::op_1) + 1);
            out += buf;
        } else {
            switch (t.op) {
                case Opcode::op_if: out += "OP_IF"; break;
                case Opcode::op_notif: out += "OP_NOTIF"; break;
                case Opcode::op_else: out += "OP_ELSE"; break;
                case Opcode::op_endif: out += "OP_ENDIF"; break;
                case Opcode::op_drop: out += "OP_DROP"; break;
                case Opcode::op_dup: out += "OP_DUP"; break;
                case Opcode::op_swap: out += "OP_SWAP"; break;
                case Opcode::op_size: out += "OP_SIZE"; break;
                case Opcode::op_equal: out += "OP_EQUAL"; break;
                case Opcode::op_equalverify: out += "OP_EQUALVERIFY"; break;
                case Opcode::op_sha256: out += "OP_SHA256"; break;
                case Opcode::op_hash160: out += "OP_HASH160"; break;
                case Opcode::op_checksig: out += "OP_CHECKSIG"; break;
                case Opcode::op_checkmultisig: out += "OP_CHECKMULTISIG"; break;
                case Opcode::op_checklocktimeverify: out += "OP_CHECKLOCKTIMEVERIFY"; break;
                case Opcode::op_checksequenceverify: out += "OP_CHECKSEQUENCEVERIFY"; break;
                default: out += "OP_UNKNOWN"; break;
            }
        }
    }
    return out;
}

const char* eval_fail_name(EvalFail f) {
    switch (f) {
        case EvalFail::none: return "none";
        case EvalFail::unknown_opcode: return "unknown_opcode";
        case EvalFail::stack_underflow: return "stack_underflow";
        case EvalFail::unbalanced_conditional: return "unbalanced_conditional";
        case EvalFail::minimal_if: return "minimal_if";
        case EvalFail::bad_multisig_dummy: return "bad_multisig_dummy";
        case EvalFail::bad_multisig_count: return "bad_multisig_count";
        case EvalFail::sig_check_failed: return "sig_check_failed";
        case EvalFail::equal_verify_failed: return "equal_verify_failed";
        case EvalFail::timelock_not_met: return "timelock_not_met";
        case EvalFail::locktime_not_met: return "locktime_not_met";
        case EvalFail::bad_number: return "bad_number";
        case EvalFail::oversized_item: return "oversized_item";
        case EvalFail::final_stack_not_clean: return "final_stack_not_clean";
        case EvalFail::false_top: return "false_top";
    }
    return "unknown";
}

EvalResult eval_spend(const Script& script, const Witness& witness, const SpendContext& ctx,
                      const SigScheme& scheme) {
    std::vector<Bytes> stack = witness.stack;
    for (const Bytes& item : stack)
        if (item.size() > MAX_ITEM_SIZE) return {false, EvalFail::oversized_item};

    std::vector<bool> cond;
    auto executing = [&]() { return std::find(cond.begin(), cond.end(), false) == cond.end(); };
    auto fail = [](EvalFail f) { return EvalResult{false, f}; };

    for (const Token& t : script.tokens) {
        bool exec = executing();

        if (t.is_push) {
            if (t.data.size() > MAX_ITEM_SIZE) return fail(EvalFail::oversized_item);
            if (exec) stack.push_back(t.data);
            continue;
        }

        uint8_t opb = uint8_t(t.op);
        if (!is_whitelisted(opb)) return fail(EvalFail::unknown_opcode);

        if (opb >= uint8_t(Opcode::op_1) && opb <= uint8_t(Opcode::op_16)) {
            if (exec) stack.push_back(Bytes{uint8_t(opb - uint8_t(Opcode::op_1) + 1)});
            continue;
        }

        switch (t.op) {
            case Opcode::op_if:
            case Opcode::op_notif: {
                bool value = false;
                if (exec) {
                    if (stack.empty()) return fail(EvalFail::stack_underflow);
                    Bytes top = stack.back();
                    stack.pop_back();
                    // MINIMALIF: branch selector must be empty or 0x01
                    if (!(top.empty() || (top.size() == 1 && top[0] == 1)))
                        return fail(EvalFail::minimal_if);
                    value = !top.empty();
                    if (t.op == Opcode::op_notif) value = !value;
                }
                cond.push_back(value);
                break;
            }
            case Opcode::op_else: {
                if (cond.empty()) return fail(EvalFail::unbalanced_conditional);
                cond.back() = !cond.back();
                break;
            }
            case Opcode::op_endif: {
                if (cond.empty()) return fail(EvalFail::unbalanced_conditional);
                cond.pop_back();
                break;
            }
            default: {
                if (!exec) break;
                switch (t.op) {
                    case Opcode::op_drop: {
                        if (stack.empty()) return fail(EvalFail::stack_underflow);
                        stack.pop_back();
                        break;
                    }
                    case Opcode::op_dup: {
                        if (stack.empty()) return fail(EvalFail::stack_underflow);
                        stack.push_back(stack.back());
                        break;
                    }
                    case Opcode::op_swap: {
                        if (stack.size() < 2) return fail(EvalFail::stack_underflow);
                        std::swap(stack[stack.size() - 1], stack[stack.size() - 2]);
                        break;
                    }
                    case Opcode::op_size: {
                        if (stack.empty()) return fail(EvalFail::stack_underflow);
                        stack.push_back(encode_num(int64_t(stack.back().size())));
                        break;
                    }
                    case Opcode::op_equal:
                    case Opcode::op_equalverify: {
                        if (stack.size() < 2) return fail(EvalFail::stack_underflow);
                        bool eq = stack[stack.size() - 1] == stack[stack.size() - 2];
                        stack.pop_back();
                        stack.pop_back();
                        if (t.op == Opcode::op_equalverify) {
                            if (!eq) return fail(EvalFail::equal_verify_failed);
                        } else {
                            stack.push_back(eq ? Bytes{1} : Bytes{});
                        }
                        break;
                    }
                    case Opcode::op_sha256: {
                        if (stack.empty()) return fail(EvalFail::stack_underflow);
                        Digest h = sha256(stack.back());
                        stack.back() = to_bytes(h);
                        break;
                    }
                    case Opcode::op_hash160: {
                        if (stack.empty()) return fail(EvalFail::stack_underflow);
                        Hash20 h = hash160(stack.back());
                        stack.back() = to_bytes(h);
                        break;
                    }
                    case Opcode::op_checksig: {
                        if (stack.size() < 2) return fail(EvalFail::stack_underflow);
                        Bytes pk = stack.back();
                        stack.pop_back();
                        Bytes sig = stack.back();
                        stack.pop_back();
                        bool ok = scheme.verify(sig, pk, ctx.sighash);
                        // NULLFAIL: a failing non-empty signature aborts
                        if (!ok && !sig.empty()) return fail(EvalFail::sig_check_failed);
                        stack.push_back(ok ? Bytes{1} : Bytes{});
                        break;
                    }
                    case Opcode::op_checkmultisig: {
                        if (stack.empty()) return fail(EvalFail::stack_underflow);
                        auto nval = decode_num(stack.back(), 4);
                        if (!nval || *nval < 0 || *nval > 20)
                            return fail(EvalFail::bad_multisig_count);
                        size_t n = size_t(*nval);
                        stack.pop_back();
                        if (stack.size() < n) return fail(EvalFail::stack_underflow);
                        std::vector<Bytes> keys(n);
                        for (size_t i = 0; i < n; i++) {
                            keys[n - 1 - i] = stack.back();
                            stack.pop_back();
                        }
                        if (stack.empty()) return fail(EvalFail::stack_underflow);
                        auto mval = decode_num(stack.back(), 4);
                        if (!mval || *mval < 0 || size_t(*mval) > n)
                            return fail(EvalFail::bad_multisig_count);
                        size_t m = size_t(*mval);
                        stack.pop_back();
                        if (stack.size() < m) return fail(EvalFail::stack_underflow);
                        std::vector<Bytes> sigs(m);
                        for (size_t i = 0; i < m; i++) {
                            sigs[m - 1 - i] = stack.back();
                            stack.pop_back();
                        }
                        // the extra consumed element must be the empty dummy
                        if (stack.empty()) return fail(EvalFail::stack_underflow);
                        if (!stack.back().empty()) return fail(EvalFail::bad_multisig_dummy);
                        stack.pop_back();

                        // signatures must match pubkeys in order
                        size_t ikey = 0, isig = 0;
                        while (isig < m && n - ikey >= m - isig) {
                            if (scheme.verify(sigs[isig], keys[ikey], ctx.sighash)) isig++;
                            ikey++;
                        }
                        bool ok = isig == m;
                        if (!ok) {
                            for (const Bytes& s : sigs)
                                if (!s.empty()) return fail(EvalFail::sig_check_failed);
                        }
                        stack.push_back(ok ? Bytes{1} : Bytes{});
                        break;
                    }
                    case Opcode::op_checksequenceverify: {
                        if (stack.empty()) return fail(EvalFail::stack_underflow);
                        auto v = decode_num(stack.back(), 5);
                        if (!v || *v < 0) return fail(EvalFail::bad_number);
                        if (int64_t(ctx.input_age) < *v) return fail(EvalFail::timelock_not_met);
                        break;  // value stays; templates follow with OP_DROP
                    }
                    case Opcode::op_checklocktimeverify: {
                        if (stack.empty()) return fail(EvalFail::stack_underflow);
                        auto v = decode_num(stack.back(), 5);
                        if (!v || *v < 0) return fail(EvalFail::bad_number);
                        if (int64_t(ctx.current_height) < *v)
                            return fail(EvalFail::locktime_not_met);
                        break;
                    }
                    default:
                        return fail(EvalFail::unknown_opcode);
                }
            }
        }
    }

    if (!cond.empty()) return {false, EvalFail::unbalanced_conditional};
    if (stack.size() != 1) return {false, EvalFail::final_stack_not_clean};
    if (!truthy(stack.back())) return {false, EvalFail::false_top};
    return {true, EvalFail::none};
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

namespace {

Bytes bytes_of(ByteSpan s) { return Bytes(s.begin(), s.end()); }

void require_key(ByteSpan pk, const char* name) {
    if (pk.size() != 33)
        throw BuildError(BuildErrorCode::missing_param, std::string("bad pubkey: ") + name);
}

} // namespace

Script funding_script(ByteSpan pk_iot, ByteSpan pk_gateway, ByteSpan pk_bridge) {
    require_key(pk_iot, "pk_iot");
    require_key(pk_gateway, "pk_gateway");
    require_key(pk_bridge, "pk_bridge");
    std::vector<Bytes> keys = {bytes_of(pk_iot), bytes_of(pk_gateway), bytes_of(pk_bridge)};
    std::sort(keys.begin(), keys.end());
    if (keys[0] == keys[1] || keys[1] == keys[2])
        throw BuildError(BuildErrorCode::duplicate_key, "duplicate funding pubkey");
    Script s;
    s.tokens = {Token::num(3), Token::push(keys[0]), Token::push(keys[1]),
                Token::push(keys[2]), Token::num(3), Token::opcode(Opcode::op_checkmultisig)};
    return s;
}

Script funding_script_2of2(ByteSpan pk1, ByteSpan pk2) {
    require_key(pk1, "pk1");
    require_key(pk2, "pk2");
    std::vector<Bytes> keys = {bytes_of(pk1), bytes_of(pk2)};
    std::sort(keys.begin(), keys.end());
    if (keys[0] == keys[1])
        throw BuildError(BuildErrorCode::duplicate_key, "duplicate funding pubkey");
    Script s;
    s.tokens = {Token::num(2), Token::push(keys[0]), Token::push(keys[1]), Token::num(2),
                Token::opcode(Opcode::op_checkmultisig)};
    return s;
}

Witness funding_witness(const std::vector<std::pair<Bytes, Bytes>>& key_sig_pairs) {
    std::vector<std::pair<Bytes, Bytes>> sorted = key_sig_pairs;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Witness w;
    w.stack.push_back({});  // CHECKMULTISIG dummy
    for (const auto& [pk, sig] : sorted) w.stack.push_back(sig);
    return w;
}

Script to_iot_script(ByteSpan iot_pk) {
    require_key(iot_pk, "iot_pk");
    Script s;
    s.tokens = {Token::push(iot_pk), Token::opcode(Opcode::op_checksig)};
    return s;
}

Script to_remote_script(ByteSpan remote_pk) {
    require_key(remote_pk, "remote_pk");
    Script s;
    s.tokens = {Token::push(remote_pk), Token::opcode(Opcode::op_checksig)};
    return s;
}

Script revocable_delayed_script(ByteSpan rev_pk, ByteSpan delayed_pk, uint32_t csv_delay) {
    require_key(rev_pk, "rev_pk");
    require_key(delayed_pk, "delayed_pk");
    Script s;
    s.tokens = {Token::opcode(Opcode::op_if),
                Token::push(rev_pk),
                Token::opcode(Opcode::op_checksig),
                Token::opcode(Opcode::op_else),
                Token::num(csv_delay),
                Token::opcode(Opcode::op_checksequenceverify),
                Token::opcode(Opcode::op_drop),
                Token::push(delayed_pk),
                Token::opcode(Opcode::op_checksig),
                Token::opcode(Opcode::op_endif)};
    return s;
}

namespace {

void require_htlc_keys(const HtlcScriptParams& p) {
    require_key(p.revocation_pk, "revocation_pk");
    require_key(p.remote_htlc_pk, "remote_htlc_pk");
    require_key(p.local_htlc_pk, "local_htlc_pk");
    require_key(p.iot_htlc_pk, "iot_htlc_pk");
}

} // namespace

Script offered_htlc_script(CommitmentSide side, const HtlcScriptParams& p) {
    if (side != CommitmentSide::gateway)
        throw BuildError(BuildErrorCode::unsupported_side,
                         "offered HTLC outputs exist only on the gateway commitment");
    require_htlc_keys(p);
    Hash20 rev_hash = hash160(p.revocation_pk);
    Hash20 pay_hash = ripemd160(span_of(p.payment_hash));
    Script s;
    s.tokens = {
        Token::opcode(Opcode::op_dup), Token::opcode(Opcode::op_hash160),
        Token::push(span_of(rev_hash)), Token::opcode(Opcode::op_equal),
        Token::opcode(Opcode::op_if),
        Token::opcode(Opcode::op_checksig),
        Token::opcode(Opcode::op_else),
        Token::push(p.remote_htlc_pk), Token::opcode(Opcode::op_swap),
        Token::opcode(Opcode::op_size), Token::num(32), Token::opcode(Opcode::op_equal),
        Token::opcode(Opcode::op_notif),
        // timeout path: 3-of-3 over remote, local and IoT HTLC keys
        Token::opcode(Opcode::op_drop), Token::num(3), Token::opcode(Opcode::op_swap),
        Token::push(p.local_htlc_pk), Token::push(p.iot_htlc_pk), Token::num(3),
        Token::opcode(Opcode::op_checkmultisig),
        Token::opcode(Opcode::op_else),
        // remote claims with the preimage
        Token::opcode(Opcode::op_hash160), Token::push(span_of(pay_hash)),
        Token::opcode(Opcode::op_equalverify), Token::opcode(Opcode::op_checksig),
        Token::opcode(Opcode::op_endif),
        Token::opcode(Opcode::op_endif)};
    return s;
}

Script received_htlc_script(CommitmentSide side, const HtlcScriptParams& p) {
    if (side != CommitmentSide::bridge)
        throw BuildError(BuildErrorCode::unsupported_side,
                         "received HTLC outputs exist only on the bridge commitment");
    require_htlc_keys(p);
    if (p.cltv_expiry == 0)
        throw BuildError(BuildErrorCode::missing_param, "received HTLC needs cltv_expiry");
    Hash20 rev_hash = hash160(p.revocation_pk);
    Hash20 pay_hash = ripemd160(span_of(p.payment_hash));
    Script s;
    s.tokens = {
        Token::opcode(Opcode::op_dup), Token::opcode(Opcode::op_hash160),
        Token::push(span_of(rev_hash)), Token::opcode(Opcode::op_equal),
        Token::opcode(Opcode::op_if),
        Token::opcode(Opcode::op_checksig),
        Token::opcode(Opcode::op_else),
        Token::push(p.remote_htlc_pk), Token::opcode(Opcode::op_swap),
        Token::opcode(Opcode::op_size), Token::num(32), Token::opcode(Opcode::op_equal),
        Token::opcode(Opcode::op_if),
        // success path: preimage check then 3-of-3 over remote, IoT, local keys
        Token::opcode(Opcode::op_hash160), Token::push(span_of(pay_hash)),
        Token::opcode(Opcode::op_equalverify), Token::num(3), Token::opcode(Opcode::op_swap),
        Token::push(p.iot_htlc_pk), Token::push(p.local_htlc_pk), Token::num(3),
        Token::opcode(Opcode::op_checkmultisig),
        Token::opcode(Opcode::op_else),
        // remote refund after the absolute timeout
        Token::opcode(Opcode::op_drop), Token::num(p.cltv_expiry),
        Token::opcode(Opcode::op_checklocktimeverify), Token::opcode(Opcode::op_drop),
        Token::opcode(Opcode::op_checksig),
        Token::opcode(Opcode::op_endif),
        Token::opcode(Opcode::op_endif)};
    return s;
}

Witness htlc_tx_witness(HtlcTxKind kind, ByteSpan remote_sig, ByteSpan local_sig,
                        ByteSpan iot_sig, const std::optional<Bytes>& preimage) {
    if (remote_sig.empty() || local_sig.empty() || iot_sig.empty())
        throw BuildError(BuildErrorCode::missing_param, "HTLC witness needs three signatures");
    Witness w;
    w.stack.push_back({});
    w.stack.push_back(bytes_of(remote_sig));
    if (kind == HtlcTxKind::timeout) {
        w.stack.push_back(bytes_of(local_sig));
        w.stack.push_back(bytes_of(iot_sig));
        w.stack.push_back({});
    } else {
        if (!preimage)
            throw BuildError(BuildErrorCode::missing_param, "success witness needs preimage");
        w.stack.push_back(bytes_of(iot_sig));
        w.stack.push_back(bytes_of(local_sig));
        w.stack.push_back(*preimage);
    }
    return w;
}

Witness revocation_witness(ByteSpan rev_sig) {
    Witness w;
    w.stack = {bytes_of(rev_sig), Bytes{1}};
    return w;
}

Witness delayed_witness(ByteSpan delayed_sig) {
    Witness w;
    w.stack = {bytes_of(delayed_sig), Bytes{}};
    return w;
}

Witness htlc_revocation_witness(ByteSpan rev_sig, ByteSpan rev_pk) {
    Witness w;
    w.stack = {bytes_of(rev_sig), bytes_of(rev_pk)};
    return w;
}

Witness single_sig_witness(ByteSpan sig) {
    Witness w;
    w.stack = {bytes_of(sig)};
    return w;
}

} // namespace iotln
