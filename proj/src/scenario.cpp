// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/scenario.h>

#include <iotln/messages.h>

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <deque>

namespace iotln {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

std::string check_keys(const ordered_json& j, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) return "unknown key: " + it.key();
    }
    return {};
}

} // namespace

std::variant<ScenarioConfig, std::string> parse_scenario_config(const std::string& json_text) {
    ordered_json j = ordered_json::parse(json_text, nullptr, false);
    if (j.is_discarded()) return std::string("invalid JSON");
    if (!j.is_object()) return std::string("config must be an object");

    if (auto err = check_keys(j, {"capacity", "payments", "fee_rate_permille", "csv_delay",
                                  "funding_depth", "profile", "cheat", "close"});
        !err.empty())
        return err;

    ScenarioConfig c;
    try {
        if (j.contains("capacity")) c.capacity = j["capacity"].get<int64_t>();
        if (j.contains("fee_rate_permille"))
            c.fee_rate_permille = j["fee_rate_permille"].get<uint16_t>();
        if (j.contains("csv_delay")) c.csv_delay = j["csv_delay"].get<uint32_t>();
        if (j.contains("funding_depth")) c.funding_depth = j["funding_depth"].get<uint32_t>();
        if (j.contains("profile")) c.profile = j["profile"].get<std::string>();

        if (j.contains("payments")) {
            if (!j["payments"].is_array()) return std::string("payments must be an array");
            for (const auto& p : j["payments"]) {
                if (auto err = check_keys(p, {"amount", "destination"}); !err.empty()) return err;
                PaymentSpec spec;
                spec.amount = p.at("amount").get<int64_t>();
                if (p.contains("destination")) {
                    Bytes d = from_hex(p["destination"].get<std::string>());
                    if (d.size() != 33) return std::string("destination must be 33 bytes of hex");
                    std::copy(d.begin(), d.end(), spec.destination.begin());
                }
                c.payments.push_back(spec);
            }
        }
        if (j.contains("cheat") && !j["cheat"].is_null()) {
            if (auto err = check_keys(j["cheat"], {"role", "state_index", "watcher_enabled"});
                !err.empty())
                return err;
            CheatConfig ch;
            ch.role = j["cheat"].value("role", "gateway");
            ch.state_index = j["cheat"].value("state_index", 0);
            ch.watcher_enabled = j["cheat"].value("watcher_enabled", true);
            if (ch.role != "gateway" && ch.role != "bridge")
                return std::string("cheat.role must be gateway or bridge");
            c.cheat = ch;
        }
        if (j.contains("close")) {
            if (auto err = check_keys(j["close"], {"initiator", "mode"}); !err.empty()) return err;
            c.close.initiator = j["close"].value("initiator", "iot");
            c.close.mode = j["close"].value("mode", "mutual");
            if (c.close.initiator != "iot" && c.close.initiator != "gateway" &&
                c.close.initiator != "bridge")
                return std::string("close.initiator must be iot, gateway or bridge");
            if (c.close.mode != "mutual" && c.close.mode != "unilateral")
                return std::string("close.mode must be mutual or unilateral");
        }
    } catch (const std::exception& e) {
        return std::string("config error: ") + e.what();
    }

    if (c.capacity <= 0) return std::string("capacity must be positive");
    if (c.fee_rate_permille > 1000) return std::string("fee_rate_permille must be <= 1000");
    if (!named_profile(c.profile)) return std::string("unknown profile: " + c.profile);
    return c;
}

// ---------------------------------------------------------------------------
// Harness: roles + chain + timed message bus
// ---------------------------------------------------------------------------

namespace {

constexpr int64_t DEFAULT_ONCHAIN_FEE = 10'000;   // 0.0001 BTC
constexpr int64_t FUNDING_CHANGE_MARGIN = COIN;   // extra wallet value beyond the channel

struct InFlight {
    enum class From { iot, gateway, bridge };
    From from;
    LinkId link;
    Message msg;
};

struct Harness {
    const SigScheme& scheme;
    SimChain chain;
    IotDevice iot;
    Utxo iot_utxo;
    Gateway gateway;
    Bridge bridge;
    Watcher bridge_watcher;   // bridge punishing the gateway
    Watcher gateway_watcher;  // gateway punishing the bridge
    EnvelopeKeys env_keys;
    LatencyProfile profile;

    std::deque<InFlight> queue;
    double now = 0;
    bool bridge_watch_enabled = true;
    bool gateway_watch_enabled = true;
    std::string error;

    Harness(const SigScheme& s, const ScenarioConfig& cfg, uint64_t seed)
        : scheme(s),
          chain(s),
          iot(s, derive_seed(seed_bytes(seed), "iot")),
          iot_utxo([&] {
              Utxo u;
              u.value = cfg.capacity + DEFAULT_ONCHAIN_FEE + FUNDING_CHANGE_MARGIN;
              u.outpoint = chain.seed_utxo(
                  u.value, to_iot_script(ByteSpan(iot.pubkeys().payment.data(), 33)));
              return u;
          }()),
          gateway(s, derive_seed(seed_bytes(seed), "gateway"),
                  [&] {
                      GatewayConfig g;
                      g.iot_pubkeys = iot.pubkeys();
                      g.onchain_fee = DEFAULT_ONCHAIN_FEE;
                      g.fee_rate_permille = cfg.fee_rate_permille;
                      g.csv_delay = cfg.csv_delay;
                      g.funding_depth = cfg.funding_depth;
                      g.iot_utxo = iot_utxo;
                      return g;
                  }()),
          bridge(s, derive_seed(seed_bytes(seed), "bridge")),
          bridge_watcher(s),
          gateway_watcher(s),
          env_keys(EnvelopeKeys::from_seed(span_of(derive_seed(seed_bytes(seed), "envelope")))),
          profile(*named_profile(cfg.profile)) {
        iot.set_wallet(iot_utxo);
    }

    static Bytes seed_bytes(uint64_t seed) {
        Bytes b{'s', 'c', 'e', 'n'};
        put_u64be(b, seed);
        return b;
    }

    void enqueue(InFlight::From from, const std::vector<Outbound>& out) {
        for (const Outbound& o : out) queue.push_back({from, o.link, o.msg});
    }

    void handle_broadcasts(const std::vector<Tx>& txs) {
        for (const Tx& tx : txs) {
            BroadcastResult r = chain.broadcast(tx);
            if (!r.accepted && error.empty())
                error = std::string("broadcast rejected: ") + reject_reason_name(r.reason);
        }
    }

    void collect_watch_entries() {
        for (const RevokedCommitmentInfo& info : bridge.take_watch_entries())
            bridge_watcher.add(WatchTarget{info, bridge.pubkeys().payment});
        for (const RevokedCommitmentInfo& info : gateway.take_watch_entries())
            gateway_watcher.add(WatchTarget{info, gateway.pubkeys().payment});
    }

    // Drains the queue, applying the latency model per delivery: an IoT-link
    // message costs one device round trip plus one cloud round trip, device-
    // generated messages add compute time before sending, and the bridge's
    // revoke_and_ack carries the LN settlement cost.
    bool pump() {
        while (!queue.empty()) {
            InFlight f = queue.front();
            queue.pop_front();

            if (f.link == LinkId::iot_gateway) {
                if (f.from == InFlight::From::iot) now += profile.iot_compute_per_msg;
                now += profile.iot_link_rtt + profile.cloud_rtt;
                // the device link really is sealed and opened per message
                Bytes wire = seal_message(f.msg, env_keys);
                auto opened = open_message(wire, env_keys);
                if (std::holds_alternative<EnvelopeError>(opened)) {
                    error = "envelope failure on IoT link";
                    return false;
                }
                f.msg = std::get<Message>(opened);
            }
            if (f.from == InFlight::From::bridge && std::get_if<MsgRevokeAndAck>(&f.msg))
                now += profile.ln_settle;

            StepResult r;
            if (f.link == LinkId::iot_gateway && f.from != InFlight::From::iot) {
                r = iot.on_message(f.msg);
                enqueue(InFlight::From::iot, r.out);
            } else if (f.link == LinkId::iot_gateway) {
                r = gateway.on_iot_message(f.msg);
                enqueue(InFlight::From::gateway, r.out);
            } else if (f.from == InFlight::From::gateway) {
                r = bridge.on_message(f.msg);
                enqueue(InFlight::From::bridge, r.out);
            } else {
                r = gateway.on_bridge_message(f.msg);
                enqueue(InFlight::From::gateway, r.out);
            }
            handle_broadcasts(r.broadcasts);
            collect_watch_entries();
            if (!r.ok() && error.empty())
                error = std::string("protocol error: ") + protocol_error_name(r.error) + " on " +
                        message_name(f.msg);
            if (!error.empty()) return false;
        }
        return true;
    }

    void mine_and_watch(uint32_t blocks) {
        for (uint32_t i = 0; i < blocks; i++) {
            chain.mine_blocks(1);
            gateway.set_chain_height(chain.height());
            if (bridge_watch_enabled) handle_broadcasts(bridge_watcher.check(chain));
            if (gateway_watch_enabled) handle_broadcasts(gateway_watcher.check(chain));
        }
    }
};

} // namespace

// ---------------------------------------------------------------------------
// run_scenario
// ---------------------------------------------------------------------------

Report run_scenario(const ScenarioConfig& config, uint64_t seed) {
    Report report;
    const SigScheme& scheme = ecdsa_scheme();
    Harness h(scheme, config, seed);
    report.analytic_payment_time_s = payment_time(h.profile);

    if (config.cheat) {
        if (config.cheat->role == "gateway") h.bridge_watch_enabled = config.cheat->watcher_enabled;
        if (config.cheat->role == "bridge") h.gateway_watch_enabled = config.cheat->watcher_enabled;
    }

    auto finish = [&]() -> Report& {
        report.final_iot_onchain =
            h.chain.value_to(to_iot_script(ByteSpan(h.iot.pubkeys().payment.data(), 33)));
        report.final_gateway_onchain =
            h.chain.value_to(to_remote_script(ByteSpan(h.gateway.pubkeys().payment.data(), 33)));
        report.final_bridge_onchain =
            h.chain.value_to(to_remote_script(ByteSpan(h.bridge.pubkeys().payment.data(), 33)));
        AuditReport audit = h.chain.audit();
        report.audit_ok = audit.ok;
        report.confirmed_txs = audit.confirmed_txs;
        report.double_spends = audit.double_spends;
        report.utxo_total = audit.utxo_total;
        report.audit_issues = audit.issues;
        report.chain_dump = h.chain.dump_json();
        report.ok = report.error.empty() && audit.ok;
        return report;
    };

    auto bail = [&](const std::string& why) -> Report& {
        report.error = !why.empty() ? why : (!h.error.empty() ? h.error : "scenario failed");
        return finish();
    };

    auto done = [&]() -> Report& {
        if (!h.error.empty()) report.error = h.error;
        return finish();
    };

    // --- open ---------------------------------------------------------------
    double t0 = h.now;
    h.handle_broadcasts({});
    h.enqueue(InFlight::From::iot, h.iot.request_open(config.capacity).out);
    if (!h.pump()) return bail({});
    if (h.chain.mempool_size() == 0) return bail("funding tx never broadcast");
    h.mine_and_watch(config.funding_depth);
    {
        uint32_t conf = h.chain.confirmations(h.gateway.funding_tx().txid());
        StepResult g = h.gateway.on_funding_confirmations(conf);
        h.enqueue(InFlight::From::gateway, g.out);
        StepResult b = h.bridge.on_funding_confirmations(conf);
        h.enqueue(InFlight::From::bridge, b.out);
        if (!h.pump()) return bail({});
    }
    if (h.gateway.phase() != Phase::operational || h.bridge.phase() != Phase::operational)
        return bail("channel failed to become operational");
    report.open_time_s = h.now - t0;
    if (config.run_until == RunUntil::open) return done();

    // --- payments -------------------------------------------------------------
    for (const PaymentSpec& p : config.payments) {
        double p0 = h.now;
        h.enqueue(InFlight::From::iot, h.iot.request_pay(p.amount, p.destination).out);
        if (!h.pump()) return bail({});
        const auto& done = h.gateway.last_payment();
        if (!done) return bail("payment did not complete");
        // single-hop settlement is immediate: the destination reveals the
        // preimage to the bridge, both endpoints mark the HTLC settled
        h.bridge.learn_preimage(done->preimage);
        h.gateway.note_htlc_settled(done->payment_hash);
        report.pay_times_s.push_back(h.now - p0);
    }
    if (config.run_until == RunUntil::pay) return done();

    // --- cheat ----------------------------------------------------------------
    if (config.cheat) {
        report.punishment.cheat_attempted = true;
        uint64_t state = config.cheat->state_index;
        if (config.cheat->role == "gateway") {
            if (state >= h.gateway.snapshot().state_index)
                return bail("cheat state_index must be below the current state");
            StepResult r = h.gateway.request_commitment_signature(state,
                                                                  SignPurpose::cheat_broadcast);
            h.enqueue(InFlight::From::gateway, r.out);
            if (!h.pump()) return bail({});
            if (!h.gateway.pending_broadcast_iot_sig()) return bail("IoT refused cheat signature");

            Tx commitment = h.gateway.build_own_commitment(state);
            Digest hsh = sighash(commitment, 0, h.gateway.params().make_funding_script(),
                                 h.gateway.params().capacity);
            (void)hsh;
            const ChannelParams& params = h.gateway.params();
            commitment.witnesses.push_back(funding_witness({
                {Bytes(params.iot.funding.begin(), params.iot.funding.end()),
                 *h.gateway.pending_broadcast_iot_sig()},
                {Bytes(params.gateway.funding.begin(), params.gateway.funding.end()),
                 h.gateway.sign_own_commitment(commitment)},
                {Bytes(params.bridge.funding.begin(), params.bridge.funding.end()),
                 h.bridge.co_sign_gateway_commitment(state)},
            }));
            BroadcastResult br = h.chain.broadcast(commitment);
            if (!br.accepted) return bail("revoked commitment rejected");
            h.mine_and_watch(1);
            report.punishment.revoked_confirmed = h.chain.is_confirmed(commitment.txid());
            h.mine_and_watch(1);  // confirm any justice tx

            const ChannelSnapshot& snap = h.gateway.snapshot_at(state);
            report.punishment.justice_confirmed =
                h.chain.value_to(revocable_delayed_script(
                    ByteSpan(snap.gateway_rev_point.data(), 33),
                    ByteSpan(params.gateway.delayed.data(), 33), params.csv_delay)) == 0 &&
                config.cheat->watcher_enabled;
            report.punishment.swept_value =
                h.chain.value_to(to_remote_script(ByteSpan(h.bridge.pubkeys().payment.data(), 33)));
            // the revoked commitment's own to_IoT outpoint must sit unspent
            auto it = h.chain.utxos().find(OutPoint{commitment.txid(), 0});
            report.punishment.to_iot_intact = it == h.chain.utxos().end() ? 0 : it->second.value;
        } else {
            if (state >= h.bridge.snapshot().state_index)
                return bail("cheat state_index must be below the current state");
            Tx commitment = h.bridge.broadcastable_commitment(state);
            BroadcastResult br = h.chain.broadcast(commitment);
            if (!br.accepted) return bail("revoked commitment rejected");
            h.mine_and_watch(1);
            report.punishment.revoked_confirmed = h.chain.is_confirmed(commitment.txid());
            h.mine_and_watch(1);
            const ChannelParams& params = h.bridge.params();
            const ChannelSnapshot& snap = h.bridge.snapshot_at(state);
            report.punishment.justice_confirmed =
                h.chain.value_to(revocable_delayed_script(
                    ByteSpan(snap.bridge_rev_point.data(), 33),
                    ByteSpan(params.bridge.delayed.data(), 33), params.csv_delay)) == 0 &&
                config.cheat->watcher_enabled;
            report.punishment.swept_value = h.chain.value_to(
                to_remote_script(ByteSpan(h.gateway.pubkeys().payment.data(), 33)));
            auto it = h.chain.utxos().find(OutPoint{commitment.txid(), 0});
            report.punishment.to_iot_intact = it == h.chain.utxos().end() ? 0 : it->second.value;
        }
    } else {
        // --- close ---------------------------------------------------------
        double c0 = h.now;
        if (config.close.initiator == "bridge") {
            // the bridge force-closes with its latest commitment; the gateway
            // notices on-chain and notifies the IoT device
            Tx commitment = h.bridge.broadcastable_commitment(h.bridge.snapshot().state_index);
            BroadcastResult br = h.chain.broadcast(commitment);
            if (!br.accepted) return bail("bridge commitment rejected");
            h.mine_and_watch(1);
            h.enqueue(InFlight::From::gateway, h.gateway.on_bridge_channel_closed().out);
            if (!h.pump()) return bail({});
        } else if (config.close.mode == "unilateral") {
            StepResult r = h.gateway.request_commitment_signature(
                h.gateway.snapshot().state_index, SignPurpose::unilateral_close);
            h.enqueue(InFlight::From::gateway, r.out);
            if (!h.pump()) return bail({});
            if (!h.gateway.pending_broadcast_iot_sig())
                return bail("IoT refused unilateral close signature");
            const ChannelParams& params = h.gateway.params();
            Tx commitment = h.gateway.build_own_commitment(h.gateway.snapshot().state_index);
            commitment.witnesses.push_back(funding_witness({
                {Bytes(params.iot.funding.begin(), params.iot.funding.end()),
                 *h.gateway.pending_broadcast_iot_sig()},
                {Bytes(params.gateway.funding.begin(), params.gateway.funding.end()),
                 h.gateway.sign_own_commitment(commitment)},
                {Bytes(params.bridge.funding.begin(), params.bridge.funding.end()),
                 h.bridge.co_sign_gateway_commitment(h.gateway.snapshot().state_index)},
            }));
            BroadcastResult br = h.chain.broadcast(commitment);
            if (!br.accepted) return bail("unilateral close rejected");
            h.mine_and_watch(1);
            h.enqueue(InFlight::From::gateway, h.gateway.on_bridge_channel_closed().out);
            if (!h.pump()) return bail({});
        } else {
            StepResult start = config.close.initiator == "gateway"
                                   ? h.gateway.start_close()
                                   : h.iot.request_close();
            if (config.close.initiator == "gateway")
                h.enqueue(InFlight::From::gateway, start.out);
            else
                h.enqueue(InFlight::From::iot, start.out);
            if (start.error != ProtocolError::none)
                return bail(std::string("close failed: ") + protocol_error_name(start.error));
            if (!h.pump()) return bail({});
            h.mine_and_watch(1);
            report.closing_fee = h.gateway.agreed_closing_fee();
        }
        report.close_time_s = h.now - c0;
    }

    return done();
}

std::string Report::to_json(bool include_chain_dump) const {
    ordered_json j;
    j["ok"] = ok;
    j["error"] = error;
    j["timings"] = ordered_json::object();
    char buf[32];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };
    j["timings"]["open_s"] = fmt(open_time_s);
    j["timings"]["payments_s"] = ordered_json::array();
    for (double t : pay_times_s) j["timings"]["payments_s"].push_back(fmt(t));
    j["timings"]["close_s"] = fmt(close_time_s);
    j["timings"]["analytic_payment_s"] = fmt(analytic_payment_time_s);
    j["final_balances"] = {{"iot", final_iot_onchain},
                           {"gateway", final_gateway_onchain},
                           {"bridge", final_bridge_onchain}};
    j["closing_fee"] = closing_fee;
    j["punishment"] = {{"cheat_attempted", punishment.cheat_attempted},
                       {"revoked_confirmed", punishment.revoked_confirmed},
                       {"justice_confirmed", punishment.justice_confirmed},
                       {"swept_value", punishment.swept_value},
                       {"to_iot_intact", punishment.to_iot_intact}};
    j["audit"] = {{"ok", audit_ok},
                  {"confirmed_txs", confirmed_txs},
                  {"double_spends", double_spends},
                  {"utxo_total", utxo_total},
                  {"issues", audit_issues}};
    if (include_chain_dump) j["chain"] = ordered_json::parse(chain_dump);
    return j.dump(2);
}

int Report::exit_code() const {
    if (!audit_ok) return 3;
    if (!ok) return 2;
    return 0;
}

// ---------------------------------------------------------------------------
// Bench / cost
// ---------------------------------------------------------------------------

std::optional<double> profile_radio_range(const std::string& profile) {
    if (profile == "wifi") return 250.0;
    if (profile == "ble") return 220.0;
    return std::nullopt;
}

std::vector<BenchRow> bench_matrix(const std::vector<double>& speeds_mph,
                                   const std::vector<std::string>& profiles) {
    std::vector<BenchRow> rows;
    for (double mph : speeds_mph) {
        for (const std::string& name : profiles) {
            auto profile = named_profile(name);
            auto range = profile_radio_range(name);
            if (!profile || !range) continue;
            BenchRow row;
            row.speed_mph = mph;
            row.profile = name;
            row.window_s = toll_window(RangeModel{*range, mph * MPH_TO_MPS});
            row.payment_time_s = payment_time(*profile);
            row.satisfied = feasible(row.window_s, row.payment_time_s);
            rows.push_back(row);
        }
    }
    return rows;
}

CostReport cost_report(int64_t passes_per_day, int64_t toll_cents, int64_t fee_percent,
                       int64_t days) {
    CostReport r;
    int64_t fee_per_pass = toll_cents * fee_percent / 100;
    r.gateway_fees_cents = passes_per_day * fee_per_pass * days;
    r.daily_total_cents = passes_per_day * (toll_cents + fee_per_pass);
    r.total_cents = r.daily_total_cents * days;
    return r;
}

std::string format_cents(int64_t cents) {
    char buf[40];
    bool neg = cents < 0;
    int64_t v = neg ? -cents : cents;
    std::snprintf(buf, sizeof(buf), "%s$%lld.%02lld", neg ? "-" : "", (long long)(v / 100),
                  (long long)(v % 100));
    return buf;
}

} // namespace iotln
