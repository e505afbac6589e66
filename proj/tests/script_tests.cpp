// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "script_oracle.h"

#include <iotln/crypto.h>
#include <iotln/script.h>

using namespace iotln;

namespace {

const oracle::Fixture& fix() {
    static const oracle::Fixture f;
    return f;
}

} // namespace

TEST_CASE("funding script shape and canonical key order") {
    const auto& f = fix();
    Script s = funding_script(f.pkb(f.iot_funding), f.pkb(f.gw_funding), f.pkb(f.br_funding));
    REQUIRE(s.tokens.size() == 6);
    CHECK(s.tokens[0] == Token::num(3));
    CHECK(s.tokens[4] == Token::num(3));
    CHECK(s.tokens[5] == Token::opcode(Opcode::op_checkmultisig));
    // keys sorted
    CHECK(s.tokens[1].data < s.tokens[2].data);
    CHECK(s.tokens[2].data < s.tokens[3].data);

    // permuted inputs give identical bytes
    Script s2 = funding_script(f.pkb(f.br_funding), f.pkb(f.iot_funding), f.pkb(f.gw_funding));
    CHECK(s.serialize() == s2.serialize());

    CHECK_THROWS_AS(funding_script(f.pkb(f.iot_funding), f.pkb(f.iot_funding), f.pkb(f.br_funding)),
                    BuildError);
}

TEST_CASE("two-party funding template kept for regression") {
    const auto& f = fix();
    Script s = funding_script_2of2(f.pkb(f.gw_funding), f.pkb(f.br_funding));
    REQUIRE(s.tokens.size() == 5);
    CHECK(s.tokens[0] == Token::num(2));
    CHECK(s.tokens[3] == Token::num(2));
    CHECK(s.tokens[4] == Token::opcode(Opcode::op_checkmultisig));
    std::string disasm = s.disassemble();
    CHECK(disasm.substr(0, 2) == "2 ");
    CHECK(disasm.find("2 OP_CHECKMULTISIG") != std::string::npos);
}

TEST_CASE("serialization round trip for all builder outputs") {
    const auto& f = fix();
    for (const auto& tc : oracle::all_template_cases(f)) {
        Bytes wire = tc.script.serialize();
        auto parsed = Script::parse(wire);
        REQUIRE_MESSAGE(parsed.has_value(), tc.name);
        CHECK_MESSAGE(*parsed == tc.script, tc.name);
        CHECK(parsed->serialize() == wire);
    }
}

TEST_CASE("parser rejects opcodes outside the whitelist") {
    CHECK(!Script::parse(Bytes{0x9a}).has_value());  // OP_BOOLAND
    CHECK(!Script::parse(Bytes{0x6a}).has_value());  // OP_RETURN
    CHECK(!Script::parse(Bytes{0x4b}).has_value());  // truncated push
}

TEST_CASE("interpreter fails scripts holding non-whitelisted opcodes") {
    const auto& f = fix();
    Script s;
    s.tokens = {Token::opcode(Opcode(0x93))};  // OP_ADD, outside whitelist
    Witness w{{Bytes{1}}};
    auto r = eval_spend(s, w, SpendContext{}, f.scheme);
    CHECK(!r.ok);
    CHECK(r.reason == EvalFail::unknown_opcode);
}

TEST_CASE("funding spend: all three ordered sigs and nothing else") {
    const auto& f = fix();
    Script s = funding_script(f.pkb(f.iot_funding), f.pkb(f.gw_funding), f.pkb(f.br_funding));
    SpendContext ctx;
    ctx.sighash = f.sighash;

    Witness good = funding_witness({{f.pkb(f.iot_funding), f.sig(f.iot_funding)},
                                    {f.pkb(f.gw_funding), f.sig(f.gw_funding)},
                                    {f.pkb(f.br_funding), f.sig(f.br_funding)}});
    CHECK(eval_spend(s, good, ctx, f.scheme).ok);

    SUBCASE("any two of three fails") {
        for (size_t drop = 1; drop < 4; drop++) {
            Witness w = good;
            w.stack[drop] = Bytes{};
            CHECK(!eval_spend(s, w, ctx, f.scheme).ok);
        }
    }

    SUBCASE("one signature over a different digest fails") {
        Digest other = sha256(Bytes{9, 9, 9});
        for (size_t pos = 1; pos < 4; pos++) {
            Witness w = good;
            // re-sign position pos over the wrong digest with every key; none
            // may make the witness acceptable
            for (const KeyPair* kp : {&f.iot_funding, &f.gw_funding, &f.br_funding}) {
                w.stack[pos] = f.scheme.sign(other, kp->secret);
                CHECK(!eval_spend(s, w, ctx, f.scheme).ok);
            }
        }
    }

    SUBCASE("swapped signature order fails") {
        Witness w = good;
        std::swap(w.stack[1], w.stack[2]);
        CHECK(!eval_spend(s, w, ctx, f.scheme).ok);
    }

    SUBCASE("non-empty multisig dummy fails") {
        Witness w = good;
        w.stack[0] = Bytes{1};
        auto r = eval_spend(s, w, ctx, f.scheme);
        CHECK(!r.ok);
        CHECK(r.reason == EvalFail::bad_multisig_dummy);
    }
}

TEST_CASE("to_IoT output accepts only the IoT signature, independent of context") {
    const auto& f = fix();
    Script s = to_iot_script(f.pkb(f.iot_payment));
    Witness w = single_sig_witness(f.sig(f.iot_payment));
    for (uint32_t height : {0u, 1u, 100000u}) {
        for (uint32_t age : {0u, 1u, 100000u}) {
            SpendContext ctx{f.sighash, height, age};
            CHECK(eval_spend(s, w, ctx, f.scheme).ok);
        }
    }
    SpendContext ctx{f.sighash, 0, 0};
    CHECK(!eval_spend(s, single_sig_witness(f.sig(f.gw_funding)), ctx, f.scheme).ok);
    CHECK(!eval_spend(s, single_sig_witness(f.sig(f.revocation)), ctx, f.scheme).ok);
}

TEST_CASE("gateway fee output: revocation branch at any height, delayed branch after csv") {
    const auto& f = fix();
    const uint32_t csv = 144;
    Script s = revocable_delayed_script(f.pkb(f.revocation), f.pkb(f.gw_delayed), csv);

    Witness rev = revocation_witness(f.sig(f.revocation));
    Witness delayed = delayed_witness(f.sig(f.gw_delayed));

    SpendContext young{f.sighash, 10, 0};
    SpendContext almost{f.sighash, 10, csv - 1};
    SpendContext mature{f.sighash, 10, csv};

    CHECK(eval_spend(s, rev, young, f.scheme).ok);
    CHECK(eval_spend(s, rev, mature, f.scheme).ok);

    auto r = eval_spend(s, delayed, young, f.scheme);
    CHECK(!r.ok);
    CHECK(r.reason == EvalFail::timelock_not_met);
    CHECK(!eval_spend(s, delayed, almost, f.scheme).ok);
    CHECK(eval_spend(s, delayed, mature, f.scheme).ok);

    // wrong key on each branch
    CHECK(!eval_spend(s, revocation_witness(f.sig(f.gw_delayed)), young, f.scheme).ok);
    CHECK(!eval_spend(s, delayed_witness(f.sig(f.revocation)), mature, f.scheme).ok);
}

TEST_CASE("htlc witness shapes follow the three-signature layout") {
    const auto& f = fix();
    Bytes rs = f.sig(f.br_htlc), ls = f.sig(f.gw_htlc), is = f.sig(f.iot_htlc);

    Witness t = htlc_tx_witness(HtlcTxKind::timeout, rs, ls, is, std::nullopt);
    REQUIRE(t.stack.size() == 5);
    CHECK(t.stack[0].empty());
    CHECK(t.stack[1] == rs);
    CHECK(t.stack[2] == ls);
    CHECK(t.stack[3] == is);
    CHECK(t.stack[4].empty());

    Witness su = htlc_tx_witness(HtlcTxKind::success, rs, ls, is, f.preimage);
    REQUIRE(su.stack.size() == 5);
    CHECK(su.stack[1] == rs);
    CHECK(su.stack[2] == is);
    CHECK(su.stack[3] == ls);
    CHECK(su.stack[4] == f.preimage);

    CHECK_THROWS_AS(htlc_tx_witness(HtlcTxKind::success, rs, ls, is, std::nullopt), BuildError);
}

TEST_CASE("offered htlc paths") {
    const auto& f = fix();
    HtlcScriptParams p;
    p.revocation_pk = f.pkb(f.revocation);
    p.remote_htlc_pk = f.pkb(f.br_htlc);
    p.local_htlc_pk = f.pkb(f.gw_htlc);
    p.iot_htlc_pk = f.pkb(f.iot_htlc);
    p.payment_hash = f.payment_hash;
    Script s = offered_htlc_script(CommitmentSide::gateway, p);
    SpendContext ctx{f.sighash, 0, 0};

    // timeout: 0 <remote> <local> <IoT> <>
    Witness t = htlc_tx_witness(HtlcTxKind::timeout, f.sig(f.br_htlc), f.sig(f.gw_htlc),
                                f.sig(f.iot_htlc), std::nullopt);
    CHECK(eval_spend(s, t, ctx, f.scheme).ok);

    // remote with preimage
    Witness pre{{f.sig(f.br_htlc), f.preimage}};
    CHECK(eval_spend(s, pre, ctx, f.scheme).ok);

    // wrong preimage
    Witness bad{{f.sig(f.br_htlc), f.bad_preimage}};
    CHECK(!eval_spend(s, bad, ctx, f.scheme).ok);

    // revocation
    Witness rev = htlc_revocation_witness(f.sig(f.revocation), f.pkb(f.revocation));
    CHECK(eval_spend(s, rev, ctx, f.scheme).ok);

    // success-style witness against an offered output fails
    Witness su = htlc_tx_witness(HtlcTxKind::success, f.sig(f.br_htlc), f.sig(f.gw_htlc),
                                 f.sig(f.iot_htlc), f.preimage);
    CHECK(!eval_spend(s, su, ctx, f.scheme).ok);

    CHECK_THROWS_AS(offered_htlc_script(CommitmentSide::bridge, p), BuildError);
}

TEST_CASE("received htlc paths") {
    const auto& f = fix();
    HtlcScriptParams p;
    p.revocation_pk = f.pkb(f.revocation);
    p.remote_htlc_pk = f.pkb(f.gw_htlc);
    p.local_htlc_pk = f.pkb(f.br_htlc);
    p.iot_htlc_pk = f.pkb(f.iot_htlc);
    p.payment_hash = f.payment_hash;
    p.cltv_expiry = 120;
    Script s = received_htlc_script(CommitmentSide::bridge, p);

    // success: 0 <remote=gateway> <IoT> <local=bridge> <preimage>
    Witness su = htlc_tx_witness(HtlcTxKind::success, f.sig(f.gw_htlc), f.sig(f.br_htlc),
                                 f.sig(f.iot_htlc), f.preimage);
    SpendContext early{f.sighash, 100, 0};
    CHECK(eval_spend(s, su, early, f.scheme).ok);

    // refund before and after expiry
    Witness refund{{f.sig(f.gw_htlc), Bytes{}}};
    auto r = eval_spend(s, refund, early, f.scheme);
    CHECK(!r.ok);
    CHECK(r.reason == EvalFail::locktime_not_met);
    SpendContext late{f.sighash, 120, 0};
    CHECK(eval_spend(s, refund, late, f.scheme).ok);

    CHECK_THROWS_AS(received_htlc_script(CommitmentSide::gateway, p), BuildError);
}

TEST_CASE("truth tables at depth 4 match the interpreter on every template") {
    const auto& f = fix();
    for (const auto& tc : oracle::all_template_cases(f)) {
        uint64_t evaluated = 0, accepted = 0;
        uint64_t div = oracle::enumerate_divergences(tc, f.scheme, 4, evaluated, accepted);
        CHECK_MESSAGE(div == 0, tc.name, " divergences=", div);
        // every template has at least one accepting stack of depth <= 4
        CHECK_MESSAGE(accepted > 0, tc.name, " accept set unreachable at this depth");
    }
}
