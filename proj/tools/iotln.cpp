// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

// Scenario runner and reporting front end. Subcommands drive the simulated
// channel lifecycle end to end and print table or JSON reports; exit codes
// are 0 ok, 1 config error, 2 protocol error, 3 audit failure.

#include "CLI11.hpp"

#include <iotln/scenario.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace iotln;

namespace {

constexpr const char* CONFIG_ENV = "IOTLN_CONFIG";

struct GlobalOpts {
    std::string config_path;
    uint64_t seed = 1;
    bool json = false;
};

int load_config(const GlobalOpts& g, ScenarioConfig& out, std::string& err) {
    std::string path = g.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv(CONFIG_ENV)) path = env;
    }
    if (path.empty()) return 0;  // defaults
    std::ifstream in(path);
    if (!in.good()) {
        err = "cannot open config: " + path;
        return 1;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    auto parsed = parse_scenario_config(ss.str());
    if (std::holds_alternative<std::string>(parsed)) {
        err = std::get<std::string>(parsed);
        return 1;
    }
    out = std::get<ScenarioConfig>(parsed);
    return 0;
}

void print_report(const Report& r, bool json, bool with_chain = false) {
    if (json) {
        std::printf("%s\n", r.to_json(with_chain).c_str());
        return;
    }
    std::printf("status       : %s\n", r.ok ? "ok" : ("error: " + r.error).c_str());
    std::printf("open time    : %.3f s\n", r.open_time_s);
    for (size_t i = 0; i < r.pay_times_s.size(); i++)
        std::printf("payment %zu    : %.3f s (analytic %.3f s)\n", i + 1, r.pay_times_s[i],
                    r.analytic_payment_time_s);
    if (r.close_time_s > 0) std::printf("close time   : %.3f s\n", r.close_time_s);
    if (r.closing_fee >= 0)
        std::printf("closing fee  : %s BTC\n", format_btc(r.closing_fee).c_str());
    std::printf("final on-chain balances (BTC)\n");
    std::printf("  IoT        : %s\n", format_btc(r.final_iot_onchain).c_str());
    std::printf("  gateway    : %s\n", format_btc(r.final_gateway_onchain).c_str());
    std::printf("  bridge     : %s\n", format_btc(r.final_bridge_onchain).c_str());
    if (r.punishment.cheat_attempted) {
        std::printf("punishment\n");
        std::printf("  revoked confirmed : %s\n", r.punishment.revoked_confirmed ? "yes" : "no");
        std::printf("  justice confirmed : %s\n", r.punishment.justice_confirmed ? "yes" : "no");
        std::printf("  swept value       : %s\n", format_btc(r.punishment.swept_value).c_str());
        std::printf("  to_IoT intact     : %s\n", format_btc(r.punishment.to_iot_intact).c_str());
    }
    std::printf("chain audit  : %s (%llu txs, %llu double spends)\n", r.audit_ok ? "ok" : "FAILED",
                (unsigned long long)r.confirmed_txs, (unsigned long long)r.double_spends);
    for (const std::string& issue : r.audit_issues) std::printf("  issue: %s\n", issue.c_str());
}

int run_and_report(ScenarioConfig cfg, const GlobalOpts& g, bool with_chain = false) {
    Report r = run_scenario(cfg, g.seed);
    print_report(r, g.json, with_chain);
    return r.exit_code();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-party payment channel simulator"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "scenario config JSON (env " +
                                                  std::string(CONFIG_ENV) + ")");
    app.add_option("--seed", g.seed, "deterministic run seed");
    app.add_flag("--json", g.json, "JSON output");

    // --- open ---------------------------------------------------------------
    auto* open_cmd = app.add_subcommand("open", "open a channel and stop");
    open_cmd->fallthrough();
    int64_t open_capacity = 0;
    open_cmd->add_option("--capacity", open_capacity, "channel capacity in satoshi");

    // --- pay ----------------------------------------------------------------
    auto* pay_cmd = app.add_subcommand("pay", "open a channel and send payments");
    pay_cmd->fallthrough();
    int64_t pay_amount = 0;
    int pay_count = 1;
    pay_cmd->add_option("--amount", pay_amount, "payment amount in satoshi");
    pay_cmd->add_option("--count", pay_count, "number of payments");

    // --- close ---------------------------------------------------------------
    auto* close_cmd = app.add_subcommand("close", "full lifecycle including channel close");
    close_cmd->fallthrough();
    std::string close_initiator, close_mode;
    close_cmd->add_option("--initiator", close_initiator, "iot|gateway|bridge");
    close_cmd->add_option("--mode", close_mode, "mutual|unilateral");

    // --- cheat ---------------------------------------------------------------
    auto* cheat_cmd = app.add_subcommand("cheat", "broadcast a revoked state");
    cheat_cmd->fallthrough();
    std::string cheat_role = "gateway";
    uint64_t cheat_state = 0;
    bool no_watcher = false;
    cheat_cmd->add_option("--role", cheat_role, "gateway|bridge");
    cheat_cmd->add_option("--state", cheat_state, "revoked state index");
    cheat_cmd->add_flag("--no-watcher", no_watcher, "victim watcher offline");

    // --- bench ---------------------------------------------------------------
    auto* bench_cmd = app.add_subcommand("bench", "toll-window feasibility table");
    bench_cmd->fallthrough();
    std::vector<double> speeds;
    std::vector<std::string> profiles;
    double opt_link_rtt = -1, opt_cloud_rtt = -1, opt_settle = -1, opt_compute = -1;
    double jitter = 0;
    bench_cmd->add_option("--speed", speeds, "vehicle speeds in mph");
    bench_cmd->add_option("--profile", profiles, "radio profiles (wifi, ble)");
    bench_cmd->add_option("--link-rtt", opt_link_rtt, "override device link rtt (s)");
    bench_cmd->add_option("--cloud-rtt", opt_cloud_rtt, "override cloud rtt (s)");
    bench_cmd->add_option("--settle", opt_settle, "override LN settle time (s)");
    bench_cmd->add_option("--compute", opt_compute, "override device compute per message (s)");
    bench_cmd->add_option("--jitter", jitter, "uniform link jitter magnitude (e.g. 0.1)");

    // --- cost ----------------------------------------------------------------
    auto* cost_cmd = app.add_subcommand("cost", "monthly payment cost report");
    cost_cmd->fallthrough();
    int64_t passes = 2, days = 30, fee_percent = 10;
    double toll_usd = 1.5;
    cost_cmd->add_option("--passes", passes, "toll passes per day");
    cost_cmd->add_option("--toll", toll_usd, "toll in USD");
    cost_cmd->add_option("--fee-percent", fee_percent, "gateway fee percent");
    cost_cmd->add_option("--days", days, "days per period");

    // --- audit ---------------------------------------------------------------
    auto* audit_cmd = app.add_subcommand("audit", "run the scenario and dump the chain state");
    audit_cmd->fallthrough();

    CLI11_PARSE(app, argc, argv);

    ScenarioConfig cfg;
    std::string err;
    if (load_config(g, cfg, err) != 0) {
        std::fprintf(stderr, "config error: %s\n", err.c_str());
        return 1;
    }

    if (open_cmd->parsed()) {
        if (open_capacity > 0) cfg.capacity = open_capacity;
        cfg.run_until = RunUntil::open;
        return run_and_report(cfg, g);
    }

    if (pay_cmd->parsed()) {
        if (pay_amount > 0) {
            cfg.payments.clear();
            for (int i = 0; i < pay_count; i++)
                cfg.payments.push_back(PaymentSpec{pay_amount, PublicKey{}});
        }
        if (cfg.payments.empty()) {
            std::fprintf(stderr, "config error: no payments given\n");
            return 1;
        }
        cfg.run_until = RunUntil::pay;
        return run_and_report(cfg, g);
    }

    if (close_cmd->parsed()) {
        if (!close_initiator.empty()) cfg.close.initiator = close_initiator;
        if (!close_mode.empty()) cfg.close.mode = close_mode;
        if (cfg.close.initiator != "iot" && cfg.close.initiator != "gateway" &&
            cfg.close.initiator != "bridge") {
            std::fprintf(stderr, "config error: bad close initiator\n");
            return 1;
        }
        if (cfg.close.mode != "mutual" && cfg.close.mode != "unilateral") {
            std::fprintf(stderr, "config error: bad close mode\n");
            return 1;
        }
        return run_and_report(cfg, g);
    }

    if (cheat_cmd->parsed()) {
        if (cheat_role != "gateway" && cheat_role != "bridge") {
            std::fprintf(stderr, "config error: cheat role must be gateway or bridge\n");
            return 1;
        }
        cfg.cheat = CheatConfig{cheat_role, cheat_state, !no_watcher};
        // the revoked state must be strictly below the current one
        while (cfg.payments.size() < cheat_state + 1)
            cfg.payments.push_back(PaymentSpec{COIN / 10, PublicKey{}});
        return run_and_report(cfg, g);
    }

    if (bench_cmd->parsed()) {
        if (speeds.empty()) speeds = {50, 60, 80};
        if (profiles.empty()) profiles = {"wifi", "ble"};
        for (const std::string& p : profiles) {
            if (!named_profile(p) || !profile_radio_range(p)) {
                std::fprintf(stderr, "config error: unknown profile %s\n", p.c_str());
                return 1;
            }
        }
        auto override_profile = [&](const std::string& name) {
            LatencyProfile p = *named_profile(name);
            if (opt_link_rtt >= 0) p.iot_link_rtt = opt_link_rtt;
            if (opt_cloud_rtt >= 0) p.cloud_rtt = opt_cloud_rtt;
            if (opt_settle >= 0) p.ln_settle = opt_settle;
            if (opt_compute >= 0) p.iot_compute_per_msg = opt_compute;
            if (jitter > 0) p = with_jitter(p, jitter, g.seed);
            return p;
        };
        std::vector<BenchRow> rows;
        for (double mph : speeds) {
            for (const std::string& name : profiles) {
                LatencyProfile p = override_profile(name);
                BenchRow row;
                row.speed_mph = mph;
                row.profile = name;
                row.window_s = toll_window(RangeModel{*profile_radio_range(name), mph * MPH_TO_MPS});
                row.payment_time_s = payment_time(p);
                row.satisfied = feasible(row.window_s, row.payment_time_s);
                rows.push_back(row);
            }
        }
        if (g.json) {
            std::string out = "[";
            char buf[160];
            for (size_t i = 0; i < rows.size(); i++) {
                std::snprintf(buf, sizeof(buf),
                              "%s{\"speed_mph\":%g,\"profile\":\"%s\",\"window_s\":%.1f,"
                              "\"payment_s\":%.3f,\"satisfied\":%s}",
                              i ? "," : "", rows[i].speed_mph, rows[i].profile.c_str(),
                              rows[i].window_s, rows[i].payment_time_s,
                              rows[i].satisfied ? "true" : "false");
                out += buf;
            }
            out += "]";
            std::printf("%s\n", out.c_str());
        } else {
            std::printf("%-10s %-9s %-12s %-14s %s\n", "Speed", "Profile", "Window", "Payment",
                        "Satisfied?");
            for (const BenchRow& r : rows)
                std::printf("%-10.0f %-9s %-12.1f %-14.3f %s\n", r.speed_mph, r.profile.c_str(),
                            r.window_s, r.payment_time_s, r.satisfied ? "Yes" : "No");
        }
        return 0;
    }

    if (cost_cmd->parsed()) {
        int64_t toll_cents = int64_t(toll_usd * 100 + 0.5);
        CostReport r = cost_report(passes, toll_cents, fee_percent, days);
        if (g.json) {
            std::printf(
                "{\"gateway_fees_cents\":%lld,\"daily_total_cents\":%lld,\"total_cents\":%lld}\n",
                (long long)r.gateway_fees_cents, (long long)r.daily_total_cents,
                (long long)r.total_cents);
        } else {
            std::printf("passes/day     : %lld\n", (long long)passes);
            std::printf("toll           : %s\n", format_cents(toll_cents).c_str());
            std::printf("gateway fee    : %lld%%\n", (long long)fee_percent);
            std::printf("daily total    : %s\n", format_cents(r.daily_total_cents).c_str());
            std::printf("period total   : %s over %lld days\n", format_cents(r.total_cents).c_str(),
                        (long long)days);
            std::printf("gateway fees   : %s per period\n",
                        format_cents(r.gateway_fees_cents).c_str());
        }
        return 0;
    }

    if (audit_cmd->parsed()) {
        Report r = run_scenario(cfg, g.seed);
        if (g.json) {
            std::printf("%s\n", r.to_json(true).c_str());
        } else {
            print_report(r, false);
            std::printf("%s\n", r.chain_dump.c_str());
        }
        return r.exit_code();
    }

    return 1;
}
