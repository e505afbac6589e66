// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/latency.h>

#include <random>

namespace iotln {

std::optional<LatencyProfile> named_profile(const std::string& name) {
    LatencyProfile p;
    p.name = name;
    if (name == "wifi") {
        p.iot_link_rtt = 0.009;
        p.cloud_rtt = 0.123;
        p.iot_compute_per_msg = 0.015;
        return p;
    }
    if (name == "ble") {
        p.iot_link_rtt = 0.8;
        p.cloud_rtt = 0.123;
        p.iot_compute_per_msg = 0.015;
        return p;
    }
    if (name == "none") {
        // gateway-local payment: no device link, no device compute
        return p;
    }
    return std::nullopt;
}

double payment_time(const LatencyProfile& p) {
    return p.ln_settle + p.exchanges * (p.iot_link_rtt + p.cloud_rtt) +
           p.iot_messages * p.iot_compute_per_msg;
}

double toll_window(const RangeModel& r) {
    if (r.radio_range_m <= 0 || r.speed_mps <= 0) return 0;
    return r.radio_range_m / r.speed_mps;
}

bool feasible(double window_s, double payment_time_s) { return window_s >= payment_time_s; }

LatencyProfile with_jitter(const LatencyProfile& p, double magnitude, uint64_t seed) {
    if (magnitude <= 0) return p;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> f(1.0 - magnitude, 1.0 + magnitude);
    LatencyProfile out = p;
    out.iot_link_rtt *= f(rng);
    out.cloud_rtt *= f(rng);
    out.ln_settle *= f(rng);
    out.iot_compute_per_msg *= f(rng);
    return out;
}

} // namespace iotln
