// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_SCENARIO_H
#define IOTLN_SCENARIO_H

#include <iotln/chain.h>
#include <iotln/latency.h>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace iotln {

struct PaymentSpec {
    int64_t amount = 0;
    PublicKey destination{};
};

struct CheatConfig {
    std::string role = "gateway";  // gateway | bridge
    uint64_t state_index = 0;
    bool watcher_enabled = true;
};

struct CloseConfig {
    std::string initiator = "iot";  // iot | gateway | bridge
    std::string mode = "mutual";    // mutual | unilateral
};

enum class RunUntil { open, pay, full };

struct ScenarioConfig {
    int64_t capacity = 5 * COIN;
    std::vector<PaymentSpec> payments;
    uint16_t fee_rate_permille = 100;
    uint32_t csv_delay = 144;
    uint32_t funding_depth = 3;
    std::string profile = "wifi";
    std::optional<CheatConfig> cheat;
    CloseConfig close;
    RunUntil run_until = RunUntil::full;  // CLI knob, not part of the JSON schema
};

// Strict parse: unknown keys anywhere are rejected.
std::variant<ScenarioConfig, std::string> parse_scenario_config(const std::string& json_text);

struct PunishmentOutcome {
    bool cheat_attempted = false;
    bool revoked_confirmed = false;
    bool justice_confirmed = false;
    int64_t swept_value = 0;
    int64_t to_iot_intact = 0;  // value still on the untouched to_IoT output
};

struct Report {
    bool ok = false;
    std::string error;

    double open_time_s = 0;
    std::vector<double> pay_times_s;
    double close_time_s = 0;
    double analytic_payment_time_s = 0;

    int64_t final_iot_onchain = 0;      // unspent value paying the IoT keys
    int64_t final_gateway_onchain = 0;  // gateway payout key
    int64_t final_bridge_onchain = 0;   // bridge payout key
    int64_t closing_fee = -1;

    PunishmentOutcome punishment;

    bool audit_ok = false;
    uint64_t confirmed_txs = 0;
    uint64_t double_spends = 0;
    int64_t utxo_total = 0;
    std::vector<std::string> audit_issues;

    std::string chain_dump;  // JSON chain state for post-mortem

    std::string to_json(bool include_chain_dump = false) const;
    int exit_code() const;  // 0 ok, 2 protocol error, 3 audit failure
};

Report run_scenario(const ScenarioConfig& config, uint64_t seed);

// ---------------------------------------------------------------------------
// Bench / cost reporting
// ---------------------------------------------------------------------------

struct BenchRow {
    double speed_mph = 0;
    std::string profile;
    double window_s = 0;
    double payment_time_s = 0;
    bool satisfied = false;
};

// Radio range per profile: wifi 250 m, ble 220 m.
std::optional<double> profile_radio_range(const std::string& profile);

std::vector<BenchRow> bench_matrix(const std::vector<double>& speeds_mph,
                                   const std::vector<std::string>& profiles);

// All money in integer cents. gateway_fees = passes * toll * k% * days;
// total adds the toll itself on top of the fee.
struct CostReport {
    int64_t gateway_fees_cents = 0;
    int64_t total_cents = 0;
    int64_t daily_total_cents = 0;
};

CostReport cost_report(int64_t passes_per_day, int64_t toll_cents, int64_t fee_percent,
                       int64_t days);

std::string format_cents(int64_t cents);  // "$3.30"

} // namespace iotln

#endif // IOTLN_SCENARIO_H
