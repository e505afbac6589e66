// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

// Smoke-sized runs of the randomized trace suites; the acceptance binary
// runs them at full volume.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "trace_fuzz.h"

using namespace iotln;
using namespace iotln::tracefuzz;

TEST_CASE("threat 2 traces: no reveal without a prior IoT signature") {
    Threat2Stats stats = run_threat2_suite(toy_scheme(), 500, 1000);
    CHECK(stats.traces == 500);
    CHECK(stats.violations == 0);
    CHECK(stats.monotonicity_breaks == 0);
    CHECK(stats.phase_safety_breaks == 0);
    // the fuzzer actually exercised the machinery
    CHECK(stats.reveals > 100);
    CHECK(stats.adversarial_injections > 1000);
}

TEST_CASE("threat 1 scenarios: punished cheating, intact IoT funds") {
    Threat1Stats stats = run_threat1_suite(toy_scheme(), 100, 5000);
    CHECK(stats.scenarios == 100);
    CHECK(stats.cheats_with_watcher + stats.cheats_without_watcher == stats.scenarios);
    CHECK(stats.cheats_with_watcher > 20);
    CHECK(stats.cheats_without_watcher > 20);
    CHECK(stats.fee_not_swept == 0);
    CHECK(stats.to_iot_lost == 0);
    CHECK(stats.wrong_key_spend_accepted == 0);
    CHECK(stats.unpunished_not_confirmed == 0);
    CHECK(stats.safety_oracle_breaks == 0);
    CHECK(stats.audit_failures == 0);
}
