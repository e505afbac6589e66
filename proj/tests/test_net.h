// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

// In-memory three-role network with a simulated chain, used by the protocol
// tests and the trace fuzzers. Messages are raw structs here; the envelope
// path has its own coverage.

#ifndef IOTLN_TESTS_TEST_NET_H
#define IOTLN_TESTS_TEST_NET_H

#include <iotln/chain.h>
#include <iotln/channel.h>

#include <deque>
#include <string>
#include <vector>

namespace iotln::testnet {

struct Delivery {
    enum class From { iot, gateway, bridge };
    From from;
    LinkId link;
    Message msg;
};

struct TestNetOptions {
    int64_t capacity = 5 * COIN;
    uint16_t fee_rate_permille = 100;
    uint64_t seed = 1;
    int64_t gateway_close_offer = -1;
    int64_t bridge_close_offer = -1;
    int64_t max_closing_fee = -1;
};

struct TestNet {
    const SigScheme& scheme;
    SimChain chain;
    IotDevice iot;
    Utxo iot_utxo;
    Gateway gateway;
    Bridge bridge;
    std::deque<Delivery> queue;
    std::vector<std::string> trace;
    ProtocolError last_error = ProtocolError::none;

    explicit TestNet(const SigScheme& s, const TestNetOptions& opt = {})
        : scheme(s),
          chain(s),
          iot(s, seed_for(opt.seed, "iot")),
          iot_utxo([&] {
              Utxo u;
              u.value = opt.capacity + 10'000 + COIN;
              u.outpoint = chain.seed_utxo(
                  u.value, to_iot_script(ByteSpan(iot.pubkeys().payment.data(), 33)));
              return u;
          }()),
          gateway(s, seed_for(opt.seed, "gateway"),
                  [&] {
                      GatewayConfig g;
                      g.iot_pubkeys = iot.pubkeys();
                      g.fee_rate_permille = opt.fee_rate_permille;
                      g.closing_fee_offer = opt.gateway_close_offer;
                      g.max_closing_fee = opt.max_closing_fee;
                      g.iot_utxo = iot_utxo;
                      return g;
                  }()),
          bridge(s, seed_for(opt.seed, "bridge"),
                 BridgeConfig{opt.bridge_close_offer, opt.max_closing_fee}) {
        iot.set_wallet(iot_utxo);
    }

    static Digest seed_for(uint64_t seed, std::string_view role) {
        Bytes b{'t', 'n'};
        put_u64be(b, seed);
        return derive_seed(b, role);
    }

    void enqueue(Delivery::From from, const std::vector<Outbound>& out) {
        for (const Outbound& o : out) queue.push_back({from, o.link, o.msg});
    }

    StepResult deliver(const Delivery& d) {
        trace.push_back(message_name(d.msg));
        StepResult r;
        if (d.link == LinkId::iot_gateway && d.from != Delivery::From::iot) {
            r = iot.on_message(d.msg);
            enqueue(Delivery::From::iot, r.out);
        } else if (d.link == LinkId::iot_gateway) {
            r = gateway.on_iot_message(d.msg);
            enqueue(Delivery::From::gateway, r.out);
        } else if (d.from == Delivery::From::gateway) {
            r = bridge.on_message(d.msg);
            enqueue(Delivery::From::bridge, r.out);
        } else {
            r = gateway.on_bridge_message(d.msg);
            enqueue(Delivery::From::gateway, r.out);
        }
        for (const Tx& tx : r.broadcasts) chain.broadcast(tx);
        if (!r.ok()) last_error = r.error;
        return r;
    }

    bool pump() {
        while (!queue.empty()) {
            Delivery d = queue.front();
            queue.pop_front();
            StepResult r = deliver(d);
            if (!r.ok()) return false;
        }
        return true;
    }

    bool open_channel(int64_t capacity) {
        enqueue(Delivery::From::iot, iot.request_open(capacity).out);
        if (!pump()) return false;
        if (chain.mempool_size() == 0) return false;
        chain.mine_blocks(gateway.params().funding_depth);
        gateway.set_chain_height(chain.height());
        uint32_t conf = chain.confirmations(gateway.funding_tx().txid());
        enqueue(Delivery::From::gateway, gateway.on_funding_confirmations(conf).out);
        enqueue(Delivery::From::bridge, bridge.on_funding_confirmations(conf).out);
        if (!pump()) return false;
        return gateway.phase() == Phase::operational && bridge.phase() == Phase::operational;
    }

    void settle_last_payment() {
        if (!gateway.last_payment()) return;
        bridge.learn_preimage(gateway.last_payment()->preimage);
        gateway.note_htlc_settled(gateway.last_payment()->payment_hash);
    }

    bool pay(int64_t amount, bool settle = true) {
        PublicKey dest{};
        dest[0] = 0x02;
        dest[1] = 0x77;
        enqueue(Delivery::From::iot, iot.request_pay(amount, dest).out);
        if (!pump()) return false;
        if (!gateway.last_payment()) return false;
        if (settle) settle_last_payment();
        return true;
    }

    bool mutual_close_by_iot() {
        enqueue(Delivery::From::iot, iot.request_close().out);
        if (!pump()) return false;
        chain.mine_blocks(1);
        return gateway.phase() == Phase::closed;
    }
};

} // namespace iotln::testnet

#endif // IOTLN_TESTS_TEST_NET_H
