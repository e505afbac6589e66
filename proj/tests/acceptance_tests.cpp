// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

// End-to-end acceptance suite. Each case prints one PASS/FAIL line so the
// whole gate is readable at a glance in the ctest log.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "script_oracle.h"
#include "test_net.h"
#include "trace_fuzz.h"

#include <iotln/scenario.h>

#include <chrono>
#include <cmath>
#include <cstdio>

using namespace iotln;

namespace {

struct Criterion {
    explicit Criterion(const char* n) : name(n) {}
    const char* name;
    bool passed = false;
    std::string detail;

    ~Criterion() {
        std::printf("[%s] %s%s%s\n", passed ? "PASS" : "FAIL", name,
                    detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
    }
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::duration<double>>(
               std::chrono::steady_clock::now() - t0)
        .count();
}

} // namespace

TEST_CASE("toll window reproduction across speeds and radios") {
    Criterion c{"toll windows {50,60,80} mph x {wifi,ble}, all satisfied, <1s"};
    auto t0 = std::chrono::steady_clock::now();

    auto rows = bench_matrix({50, 60, 80}, {"wifi", "ble"});
    REQUIRE(rows.size() == 6);

    struct Cell {
        double mph;
        const char* profile;
        double window;
    };
    const Cell expected[] = {{50, "wifi", 11.2}, {50, "ble", 9.8},  {60, "wifi", 9.3},
                             {60, "ble", 8.2},   {80, "wifi", 7.0}, {80, "ble", 6.2}};

    bool all_ok = true;
    for (const Cell& e : expected) {
        bool found = false;
        for (const BenchRow& r : rows) {
            if (r.speed_mph != e.mph || r.profile != e.profile) continue;
            found = true;
            if (std::abs(r.window_s - e.window) > 0.1) all_ok = false;
            if (!r.satisfied) all_ok = false;
            CHECK_MESSAGE(std::abs(r.window_s - e.window) <= 0.1, e.profile, "@", e.mph, " window ",
                          r.window_s);
            CHECK_MESSAGE(r.satisfied, e.profile, "@", e.mph, " not satisfied");
        }
        CHECK(found);
        all_ok = all_ok && found;
    }

    double secs = elapsed_s(t0);
    CHECK(secs < 1.0);
    c.passed = all_ok && secs < 1.0;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "6/6 cells within 0.1s, ran in %.3fs", secs);
    c.detail = buf;
}

TEST_CASE("payment-time totals and live-bus agreement") {
    Criterion c{"payment times wifi 2.658s / ble 5.822s / none 2.100s, live bus within 5%"};

    double wifi = payment_time(*named_profile("wifi"));
    double ble = payment_time(*named_profile("ble"));
    double none = payment_time(*named_profile("none"));
    CHECK(std::abs(wifi - 2.658) <= 0.001);
    CHECK(std::abs(ble - 5.822) <= 0.001);
    CHECK(std::abs(none - 2.100) <= 0.001);

    bool live_ok = true;
    double live_wifi = 0, live_ble = 0;
    for (const char* profile : {"wifi", "ble"}) {
        ScenarioConfig cfg;
        cfg.payments.push_back(PaymentSpec{COIN, PublicKey{}});
        cfg.profile = profile;
        Report r = run_scenario(cfg, 2026);
        REQUIRE_MESSAGE(r.ok, r.error);
        REQUIRE(r.pay_times_s.size() == 1);
        double rel = std::abs(r.pay_times_s[0] - r.analytic_payment_time_s) /
                     r.analytic_payment_time_s;
        CHECK_MESSAGE(rel < 0.05, profile, " deviation ", rel);
        if (rel >= 0.05) live_ok = false;
        (profile == std::string("wifi") ? live_wifi : live_ble) = r.pay_times_s[0];
    }

    c.passed = std::abs(wifi - 2.658) <= 0.001 && std::abs(ble - 5.822) <= 0.001 &&
               std::abs(none - 2.100) <= 0.001 && live_ok;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "analytic %.3f/%.3f/%.3f, live %.3f/%.3f", wifi, ble, none,
                  live_wifi, live_ble);
    c.detail = buf;
}

TEST_CASE("toll cost reproduction") {
    Criterion c{"cost report: $9.00 monthly gateway fees, $3.30 daily total"};
    CostReport r = cost_report(2, 150, 10, 30);
    CHECK(r.gateway_fees_cents == 900);
    CHECK(r.daily_total_cents == 330);
    c.passed = r.gateway_fees_cents == 900 && r.daily_total_cents == 330;
    c.detail = format_cents(r.gateway_fees_cents) + " / " + format_cents(r.daily_total_cents) +
               " per day";
}

TEST_CASE("golden channel state after a 1 BTC payment on a 5 BTC channel") {
    Criterion c{"commitment splits 4.0 / 0.1 / 0.9 BTC with conservation audited"};

    // full pipeline on the production scheme
    testnet::TestNetOptions opt;
    opt.capacity = 5 * COIN;
    opt.fee_rate_permille = 100;
    testnet::TestNet net(ecdsa_scheme(), opt);
    REQUIRE(net.open_channel(5 * COIN));
    REQUIRE(net.pay(COIN));

    Tx commitment = net.gateway.build_own_commitment(1);
    REQUIRE(commitment.outputs.size() == 3);
    bool values_ok = commitment.outputs[0].value == 400'000'000 &&
                     commitment.outputs[1].value == 10'000'000 &&
                     commitment.outputs[2].value == 90'000'000;
    CHECK(commitment.outputs[0].value == 400'000'000);
    CHECK(commitment.outputs[1].value == 10'000'000);
    CHECK(commitment.outputs[2].value == 90'000'000);

    int64_t sum = 0;
    for (const TxOut& o : commitment.outputs) sum += o.value;
    CHECK(sum == 5 * COIN);
    CHECK(net.gateway.snapshot().total() == 5 * COIN);
    CHECK(net.gateway.snapshot() == net.bridge.snapshot());

    // and the bridge version agrees on all balances
    Tx bridge_commitment = net.bridge.build_own_commitment(1);
    int64_t bsum = 0;
    for (const TxOut& o : bridge_commitment.outputs) bsum += o.value;
    CHECK(bsum == 5 * COIN);

    c.passed = values_ok && sum == 5 * COIN && bsum == 5 * COIN &&
               net.gateway.snapshot() == net.bridge.snapshot();
    c.detail = "to_IoT " + format_btc(commitment.outputs[0].value) + ", fee " +
               format_btc(commitment.outputs[1].value) + ", HTLC " +
               format_btc(commitment.outputs[2].value);
}

TEST_CASE("no-sign-no-spend across 10000 fuzzed traces") {
    Criterion c{"10000 fuzzed traces: bridge never reveals without a prior IoT TxSigned"};
    auto t0 = std::chrono::steady_clock::now();
    tracefuzz::Threat2Stats stats = tracefuzz::run_threat2_suite(toy_scheme(), 10'000, 42);
    CHECK(stats.traces == 10'000);
    CHECK(stats.violations == 0);
    CHECK(stats.monotonicity_breaks == 0);
    CHECK(stats.phase_safety_breaks == 0);
    CHECK(stats.reveals >= 10'000);  // every trace completes at least one update
    c.passed = stats.traces == 10'000 && stats.violations == 0 &&
               stats.monotonicity_breaks == 0 && stats.phase_safety_breaks == 0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%llu reveals, %llu injections, 0 violations, %.1fs",
                  (unsigned long long)stats.reveals,
                  (unsigned long long)stats.adversarial_injections, elapsed_s(t0));
    c.detail = buf;
}

TEST_CASE("revoked-state punishment across 1000 randomized cheat scenarios") {
    Criterion c{"1000 cheat scenarios: fees swept with watcher on, to_IoT intact either way"};
    auto t0 = std::chrono::steady_clock::now();
    tracefuzz::Threat1Stats stats = tracefuzz::run_threat1_suite(toy_scheme(), 1'000, 7);
    CHECK(stats.scenarios == 1'000);
    CHECK(stats.fee_not_swept == 0);
    CHECK(stats.to_iot_lost == 0);
    CHECK(stats.wrong_key_spend_accepted == 0);
    CHECK(stats.unpunished_not_confirmed == 0);
    CHECK(stats.safety_oracle_breaks == 0);
    CHECK(stats.audit_failures == 0);
    CHECK(stats.cheats_with_watcher > 300);
    CHECK(stats.cheats_without_watcher > 300);
    c.passed = stats.scenarios == 1'000 && stats.fee_not_swept == 0 && stats.to_iot_lost == 0 &&
               stats.wrong_key_spend_accepted == 0 && stats.unpunished_not_confirmed == 0 &&
               stats.safety_oracle_breaks == 0 && stats.audit_failures == 0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%llu watched / %llu offline, %.1fs",
                  (unsigned long long)stats.cheats_with_watcher,
                  (unsigned long long)stats.cheats_without_watcher, elapsed_s(t0));
    c.detail = buf;
}

TEST_CASE("script oracle equivalence by exhaustive witness enumeration") {
    Criterion c{"every template matches its hand-built truth table at depth 6"};
    auto t0 = std::chrono::steady_clock::now();

    oracle::Fixture f;
    uint64_t total = 0, accepted = 0, divergences = 0;
    for (const auto& tc : oracle::all_template_cases(f)) {
        uint64_t e = 0, a = 0;
        divergences += oracle::enumerate_divergences(tc, f.scheme, 6, e, a);
        total += e;
        accepted += a;
        CHECK_MESSAGE(a > 0, tc.name, " accept set empty");
    }
    double secs = elapsed_s(t0);
    CHECK(divergences == 0);
    CHECK(secs < 30.0);
    c.passed = divergences == 0 && secs < 30.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%llu stacks, %llu accepted, 0 divergences, %.1fs",
                  (unsigned long long)total, (unsigned long long)accepted, secs);
    c.detail = buf;
}

TEST_CASE("chain safety: no double spends, witness-independent txids") {
    Criterion c{"all scenario runs audit clean; txid invariant under 1000 witness mutations"};

    // a spread of full scenario runs, all audited
    bool audits_ok = true;
    uint64_t confirmed = 0;
    for (uint64_t seed : {1u, 2u, 3u}) {
        ScenarioConfig cfg;
        cfg.payments.push_back(PaymentSpec{COIN, PublicKey{}});
        cfg.payments.push_back(PaymentSpec{COIN / 2, PublicKey{}});
        if (seed == 2) cfg.cheat = CheatConfig{"gateway", 1, true};
        if (seed == 3) cfg.close = CloseConfig{"gateway", "mutual"};
        Report r = run_scenario(cfg, seed);
        CHECK_MESSAGE(r.error.empty(), r.error);
        CHECK(r.audit_ok);
        CHECK(r.double_spends == 0);
        audits_ok = audits_ok && r.audit_ok && r.double_spends == 0 && r.error.empty();
        confirmed += r.confirmed_txs;
    }

    // txid invariance under randomized witness mutation
    testnet::TestNet net(toy_scheme());
    REQUIRE(net.open_channel(5 * COIN));
    REQUIRE(net.pay(COIN));
    Tx tx = net.gateway.build_own_commitment(1);
    Digest h = sighash(tx, 0, net.gateway.params().make_funding_script(), 5 * COIN);
    (void)h;
    tx.witnesses.push_back(Witness{{Bytes{}, Bytes(8, 1), Bytes(8, 2), Bytes(8, 3)}});
    Digest base = tx.txid();
    std::mt19937_64 rng(5);
    bool txid_ok = true;
    for (int i = 0; i < 1000; i++) {
        Tx mutated = tx;
        Witness& w = mutated.witnesses[0];
        size_t item = rng() % w.stack.size();
        if (w.stack[item].empty())
            w.stack[item].push_back(uint8_t(rng()));
        else
            w.stack[item][rng() % w.stack[item].size()] ^= uint8_t(1 + rng() % 255);
        if (mutated.txid() != base) txid_ok = false;
    }
    CHECK(txid_ok);

    c.passed = audits_ok && txid_ok;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%llu confirmed txs audited, 1000/1000 txids stable",
                  (unsigned long long)confirmed);
    c.detail = buf;
}
