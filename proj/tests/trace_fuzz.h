// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

// Randomized-trace drivers for the two channel security properties:
//
//   no-sign-no-spend: across arbitrary message interleavings, drops,
//   duplications, corruptions and adversarial injections, the bridge never
//   reveals a revocation secret for a state update the IoT device did not
//   sign off on first;
//
//   punished-cheating: whenever a revoked commitment confirms while the
//   victim's watcher runs, every revocable output is swept and the to_IoT
//   output stays with the IoT key; a disabled watcher reproduces the
//   offline vulnerability instead of masking it.

#ifndef IOTLN_TESTS_TRACE_FUZZ_H
#define IOTLN_TESTS_TRACE_FUZZ_H

#include "test_net.h"

#include <random>

namespace iotln::tracefuzz {

using testnet::Delivery;
using testnet::TestNet;
using testnet::TestNetOptions;

struct Threat2Stats {
    uint64_t traces = 0;
    uint64_t violations = 0;
    uint64_t reveals = 0;
    uint64_t adversarial_injections = 0;
    uint64_t deliveries = 0;
    uint64_t monotonicity_breaks = 0;
    uint64_t phase_safety_breaks = 0;
};

// One fuzzed trace: a channel opens cleanly, then a budget of random actions
// mixes honest payment traffic with reordering, loss, duplication, corruption
// and gateway-impersonating injections on the bridge link.
inline void run_threat2_trace(const SigScheme& scheme, uint64_t seed, Threat2Stats& stats) {
    std::mt19937_64 rng(seed);
    TestNetOptions opt;
    opt.capacity = 1'000'000;
    opt.seed = seed;
    TestNet net(scheme, opt);
    if (!net.open_channel(opt.capacity)) return;  // fuzz targets normal operation
    stats.traces++;

    // (trace position, signature) of every genuine IoT TxSigned
    std::vector<std::pair<size_t, Bytes>> genuine;
    size_t step_counter = 0;
    size_t reveals_seen = net.bridge.reveal_log().size();

    ByteSpan iot_funding_pk(net.gateway.params().iot.funding.data(), 33);

    auto record_outputs = [&](const StepResult& r) {
        for (const Outbound& o : r.out)
            if (const auto* x = std::get_if<TxSigned>(&o.msg))
                genuine.push_back({step_counter, x->signature});
    };

    auto check_reveal = [&](size_t at_step) {
        while (reveals_seen < net.bridge.reveal_log().size()) {
            stats.reveals++;
            // monotonicity: secrets come out strictly in order 0,1,2,...
            if (net.bridge.reveal_log()[reveals_seen] != reveals_seen)
                stats.monotonicity_breaks++;
            // the newly accepted state must carry a genuine earlier TxSigned
            uint64_t accepted_state = net.bridge.snapshot().state_index;
            Tx commitment = net.bridge.build_own_commitment(accepted_state);
            Digest h = sighash(commitment, 0, net.bridge.params().make_funding_script(),
                               net.bridge.params().capacity);
            bool covered = false;
            for (const auto& [pos, sig] : genuine)
                if (pos < at_step && scheme.verify(sig, iot_funding_pk, h)) covered = true;
            if (!covered) stats.violations++;
            reveals_seen++;
        }
    };

    auto corrupt = [&](const Message& m) -> std::optional<Message> {
        Bytes wire = encode_message(m);
        if (wire.empty()) return std::nullopt;
        wire[rng() % wire.size()] ^= uint8_t(1 + rng() % 255);
        return decode_message(wire);
    };

    // one clean payment first: genuine signature material for replay
    // injections, and every trace exercises at least one reveal
    {
        PublicKey dest{};
        dest[0] = 0x02;
        StepResult r = net.iot.request_pay(20'000, dest);
        net.enqueue(Delivery::From::iot, r.out);
        while (!net.queue.empty()) {
            Delivery d = net.queue.front();
            net.queue.pop_front();
            step_counter++;
            StepResult sr = net.deliver(d);
            record_outputs(sr);
            check_reveal(step_counter);
        }
        if (net.gateway.last_payment()) net.settle_last_payment();
    }

    int payments_started = 0;
    const int max_steps = 100;
    for (int step = 0; step < max_steps; step++) {
        step_counter++;
        uint64_t roll = rng() % 100;

        if (roll < 12 && payments_started < 5 && net.iot.phase() == Phase::operational) {
            // honest new payment request
            PublicKey dest{};
            dest[0] = 0x02;
            int64_t amount = int64_t(rng() % 50'000) + 5'000;
            StepResult r = net.iot.request_pay(amount, dest);
            if (r.ok()) {
                payments_started++;
                net.enqueue(Delivery::From::iot, r.out);
            }
        } else if (roll < 50 && !net.queue.empty()) {
            // deliver, sometimes out of order
            size_t pick = (roll < 42) ? 0 : rng() % net.queue.size();
            Delivery d = net.queue[pick];
            net.queue.erase(net.queue.begin() + long(pick));
            Digest gw_before = net.gateway.fingerprint();
            Digest br_before = net.bridge.fingerprint();
            StepResult r = net.deliver(d);
            record_outputs(r);
            stats.deliveries++;
            if (!r.ok()) {
                // failed steps must not have mutated the recipient
                bool gw_same = net.gateway.fingerprint() == gw_before;
                bool br_same = net.bridge.fingerprint() == br_before;
                if (!(gw_same && br_same)) stats.phase_safety_breaks++;
            }
            check_reveal(step_counter);
        } else if (roll < 56 && !net.queue.empty()) {
            // drop
            size_t pick = rng() % net.queue.size();
            net.queue.erase(net.queue.begin() + long(pick));
        } else if (roll < 62 && !net.queue.empty()) {
            // duplicate
            net.queue.push_back(net.queue[rng() % net.queue.size()]);
        } else if (roll < 70 && !net.queue.empty()) {
            // corrupt in flight; undecodable corruption becomes a drop
            size_t pick = rng() % net.queue.size();
            if (auto m = corrupt(net.queue[pick].msg))
                net.queue[pick].msg = *m;
            else
                net.queue.erase(net.queue.begin() + long(pick));
        } else if (roll < 86) {
            // adversarial injection on the bridge link
            stats.adversarial_injections++;
            Message m;
            switch (rng() % 5) {
                case 0: {
                    Bytes junk_a(8, uint8_t(rng())), junk_b(8, uint8_t(rng()));
                    m = MsgCommitmentSigned{junk_a, junk_b};
                    break;
                }
                case 1:
                    // missing IoT signature entirely
                    m = MsgCommitmentSigned{Bytes{}, Bytes(8, uint8_t(rng()))};
                    break;
                case 2: {
                    // replay a stale genuine signature pair
                    if (!genuine.empty()) {
                        const Bytes& sig = genuine[rng() % genuine.size()].second;
                        m = MsgCommitmentSigned{sig, sig};
                    } else {
                        m = MsgCommitmentSigned{Bytes{}, Bytes{}};
                    }
                    break;
                }
                case 3: {
                    MsgUpdateAddHtlc h;
                    h.amount = int64_t(rng() % 100'000);
                    for (auto& b : h.payment_hash) b = uint8_t(rng());
                    h.expiry = uint32_t(rng() % 1000);
                    m = h;
                    break;
                }
                default: {
                    MsgRevokeAndAck ra;
                    for (auto& b : ra.commitment_secret) b = uint8_t(rng());
                    m = ra;
                    break;
                }
            }
            StepResult r = net.bridge.on_message(m);
            net.enqueue(Delivery::From::bridge, r.out);
            check_reveal(step_counter);
        } else if (!net.queue.empty()) {
            Delivery d = net.queue.front();
            net.queue.pop_front();
            StepResult r = net.deliver(d);
            record_outputs(r);
            stats.deliveries++;
            check_reveal(step_counter);
        }

        // settle any completed payment so later ones can fold
        if (net.gateway.last_payment() && rng() % 2) net.settle_last_payment();
    }
}

inline Threat2Stats run_threat2_suite(const SigScheme& scheme, uint64_t n, uint64_t base_seed) {
    Threat2Stats stats;
    for (uint64_t i = 0; i < n; i++) run_threat2_trace(scheme, base_seed + i, stats);
    return stats;
}

// ---------------------------------------------------------------------------
// Threat 1: randomized cheat scenarios over the full chain pipeline
// ---------------------------------------------------------------------------

struct Threat1Stats {
    uint64_t scenarios = 0;
    uint64_t cheats_with_watcher = 0;
    uint64_t cheats_without_watcher = 0;
    uint64_t fee_not_swept = 0;           // watcher on, fee output survived
    uint64_t to_iot_lost = 0;             // to_IoT output left the IoT key
    uint64_t wrong_key_spend_accepted = 0;
    uint64_t unpunished_not_confirmed = 0;  // watcher off, revoked tx missing
    uint64_t safety_oracle_breaks = 0;
    uint64_t audit_failures = 0;
};

inline void run_threat1_scenario(const SigScheme& scheme, uint64_t seed, Threat1Stats& stats) {
    std::mt19937_64 rng(seed);
    TestNetOptions opt;
    opt.capacity = 2'000'000;
    opt.seed = seed;
    TestNet net(scheme, opt);
    if (!net.open_channel(opt.capacity)) return;

    int payments = 1 + int(rng() % 6);
    std::vector<int64_t> amounts;
    for (int i = 0; i < payments; i++) {
        int64_t amount = int64_t(rng() % 200'000) + 10'000;
        if (!net.pay(amount)) return;
        amounts.push_back(amount);
    }

    bool watcher_on = (seed % 2) == 0;
    uint64_t cheat_state = rng() % net.gateway.snapshot().state_index;
    stats.scenarios++;

    // the bridge's watcher learned all revoked gateway states during the
    // payments; arm it (or leave the bridge "offline")
    Watcher watcher(scheme);
    for (const RevokedCommitmentInfo& info : net.bridge.take_watch_entries())
        watcher.add(WatchTarget{info, net.bridge.pubkeys().payment});

    // gateway assembles and broadcasts the revoked commitment
    StepResult ask = net.gateway.request_commitment_signature(cheat_state,
                                                              SignPurpose::cheat_broadcast);
    net.enqueue(Delivery::From::gateway, ask.out);
    if (!net.pump()) return;
    if (!net.gateway.pending_broadcast_iot_sig()) return;

    const ChannelParams& params = net.gateway.params();
    Tx revoked = net.gateway.build_own_commitment(cheat_state);
    revoked.witnesses.push_back(funding_witness({
        {Bytes(params.iot.funding.begin(), params.iot.funding.end()),
         *net.gateway.pending_broadcast_iot_sig()},
        {Bytes(params.gateway.funding.begin(), params.gateway.funding.end()),
         net.gateway.sign_own_commitment(revoked)},
        {Bytes(params.bridge.funding.begin(), params.bridge.funding.end()),
         net.bridge.co_sign_gateway_commitment(cheat_state)},
    }));
    if (!net.chain.broadcast(revoked).accepted) return;
    net.chain.mine_blocks(1);

    if (watcher_on) {
        stats.cheats_with_watcher++;
        for (const Tx& justice : watcher.check(net.chain)) net.chain.broadcast(justice);
        net.chain.mine_blocks(1);

        // exactly the revocable outputs (fee to_local plus HTLCs) are gone;
        // to_IoT and the bridge's own to_remote are untouched
        const ChannelSnapshot& snap = net.gateway.snapshot_at(cheat_state);
        RevokedCommitmentInfo probe_info =
            make_revoked_info(CommitmentSide::gateway, snap, params,
                              sha256(Bytes{'x'}) /*secret irrelevant for indices*/);
        for (uint32_t v : probe_info.to_local_outputs)
            if (net.chain.utxos().count(OutPoint{revoked.txid(), v})) stats.fee_not_swept++;
        for (uint32_t v : probe_info.htlc_outputs)
            if (net.chain.utxos().count(OutPoint{revoked.txid(), v})) stats.fee_not_swept++;
        for (uint32_t v = 0; v < revoked.outputs.size(); v++) {
            bool is_to_iot = revoked.outputs[v].script ==
                             to_iot_script(ByteSpan(params.iot.payment.data(), 33));
            bool unspent = net.chain.utxos().count(OutPoint{revoked.txid(), v}) > 0;
            if (is_to_iot && !unspent) stats.to_iot_lost++;
        }
    } else {
        stats.cheats_without_watcher++;
        if (!net.chain.is_confirmed(revoked.txid())) stats.unpunished_not_confirmed++;
    }

    // to_IoT claimable solely by the IoT key: probe the script directly
    uint32_t to_iot_vout = 0;  // canonical first output while the IoT holds value
    if (net.chain.utxos().count(OutPoint{revoked.txid(), to_iot_vout})) {
        Tx probe;
        probe.inputs.push_back(TxIn{OutPoint{revoked.txid(), to_iot_vout}, 0xffffffff});
        probe.outputs.push_back(
            TxOut{revoked.outputs[to_iot_vout].value,
                  to_iot_script(ByteSpan(params.iot.payment.data(), 33))});
        Digest h = sighash(probe, 0, revoked.outputs[to_iot_vout].script,
                           revoked.outputs[to_iot_vout].value);
        SpendContext ctx{h, net.chain.height() + 1, 1000000};
        const Script& script = revoked.outputs[to_iot_vout].script;

        auto accepts = [&](const SecretKey& sk) {
            return eval_spend(script, single_sig_witness(scheme.sign(h, sk)), ctx, scheme).ok;
        };
        RoleKeySet gw_keys = RoleKeySet::derive(scheme, TestNet::seed_for(seed, "gateway"),
                                                "gateway");
        RoleKeySet br_keys = RoleKeySet::derive(scheme, TestNet::seed_for(seed, "bridge"),
                                                "bridge");
        RoleKeySet iot_keys = RoleKeySet::derive(scheme, TestNet::seed_for(seed, "iot"), "iot");
        auto rev = revocation_keypair(
            RevocationChain(derive_seed(span_of(TestNet::seed_for(seed, "gateway")),
                                        "gateway/revocation"))
                .secret(cheat_state),
            scheme);
        if (accepts(gw_keys.funding.secret) || accepts(gw_keys.payment.secret) ||
            accepts(br_keys.funding.secret) || accepts(br_keys.payment.secret) ||
            accepts(rev->secret))
            stats.wrong_key_spend_accepted++;
        if (!accepts(iot_keys.payment.secret)) stats.to_iot_lost++;

        // safety oracle, recomputed from the raw payment list: the revoked
        // state's to_IoT value is the capacity minus every payment committed
        // up to that state (fees live in the fee output, not here)
        int64_t expect = opt.capacity;
        for (uint64_t i = 0; i < cheat_state && i < amounts.size(); i++) expect -= amounts[i];
        if (revoked.outputs[to_iot_vout].value != expect) stats.safety_oracle_breaks++;
    }

    if (!net.chain.audit().ok) stats.audit_failures++;
}

inline Threat1Stats run_threat1_suite(const SigScheme& scheme, uint64_t n, uint64_t base_seed) {
    Threat1Stats stats;
    for (uint64_t i = 0; i < n; i++) run_threat1_scenario(scheme, base_seed + i, stats);
    return stats;
}

} // namespace iotln::tracefuzz

#endif // IOTLN_TESTS_TRACE_FUZZ_H
