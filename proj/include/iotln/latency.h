// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_LATENCY_H
#define IOTLN_LATENCY_H

#include <cstdint>
#include <optional>
#include <string>

namespace iotln {

// Link round-trip and compute constants driving the payment-time model.
// A "message exchange" is one protocol message plus its acknowledgment, so
// it costs one device-link round trip plus one cloud round trip.
struct LatencyProfile {
    std::string name = "custom";
    double iot_link_rtt = 0;        // device <-> access point, seconds
    double cloud_rtt = 0;           // access point <-> cloud gateway, seconds
    double ln_settle = 2.1;         // LN payment settlement, seconds
    double iot_compute_per_msg = 0; // device-side crypto per generated message
    int exchanges = 4;              // IoT<->gateway message exchanges per payment
    int iot_messages = 2;           // device-generated messages per payment

    bool valid() const {
        return iot_link_rtt >= 0 && cloud_rtt >= 0 && ln_settle >= 0 &&
               iot_compute_per_msg >= 0 && exchanges >= 0 && iot_messages >= 0;
    }
};

// Built-in profiles: "wifi", "ble", "none".
std::optional<LatencyProfile> named_profile(const std::string& name);

struct RangeModel {
    double radio_range_m = 0;
    double speed_mps = 0;
};

constexpr double MPH_TO_MPS = 0.44704;

double payment_time(const LatencyProfile& p);

// Seconds a vehicle stays inside radio range; 0 for degenerate inputs.
double toll_window(const RangeModel& r);

bool feasible(double window_s, double payment_time_s);

// Optional jitter: scales each link term by a uniform factor in
// [1-magnitude, 1+magnitude]. Off by default everywhere.
LatencyProfile with_jitter(const LatencyProfile& p, double magnitude, uint64_t seed);

} // namespace iotln

#endif // IOTLN_LATENCY_H
