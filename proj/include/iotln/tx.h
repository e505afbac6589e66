// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_TX_H
#define IOTLN_TX_H

#include <iotln/crypto.h>
#include <iotln/script.h>

#include <optional>
#include <tuple>
#include <vector>

namespace iotln {

struct OutPoint {
    Digest txid{};
    uint32_t vout = 0;

    bool operator==(const OutPoint&) const = default;
    auto operator<=>(const OutPoint& o) const {
        if (auto c = std::lexicographical_compare_three_way(txid.begin(), txid.end(),
                                                            o.txid.begin(), o.txid.end());
            c != 0)
            return c;
        return vout <=> o.vout;
    }
};

struct TxIn {
    OutPoint prevout;
    uint32_t sequence = 0xffffffff;
    bool operator==(const TxIn&) const = default;
};

struct TxOut {
    int64_t value = 0;
    Script script;
    bool operator==(const TxOut&) const = default;
};

// SegWit-style transaction: witnesses sit beside the inputs and are excluded
// from the txid, so no witness change can ever alter an outpoint reference.
struct Tx {
    int32_t version = 2;
    std::vector<TxIn> inputs;
    std::vector<TxOut> outputs;
    std::vector<Witness> witnesses;  // parallel to inputs; may be empty pre-signing
    uint32_t locktime = 0;

    bool operator==(const Tx&) const = default;

    Bytes serialize(bool include_witness = true) const;
    static std::optional<Tx> deserialize(ByteSpan data);

    Digest txid() const;  // hash of the witness-stripped serialization
};

// BIP143-style digest: commits to the spent script and value, so a signature
// cannot be replayed against a different output.
Digest sighash(const Tx& tx, size_t input_index, const Script& spent_script,
               int64_t spent_value);

// ---------------------------------------------------------------------------
// Channel-level data
// ---------------------------------------------------------------------------

struct RolePubkeys {
    PublicKey funding{};
    PublicKey payment{};
    PublicKey delayed{};
    PublicKey htlc{};
    bool operator==(const RolePubkeys&) const = default;
};

struct ChannelParams {
    int64_t capacity = 0;
    RolePubkeys iot;
    RolePubkeys gateway;
    RolePubkeys bridge;
    uint32_t csv_delay = 144;
    uint16_t fee_rate_permille = 0;  // gateway service fee, thousandths of the amount
    int64_t onchain_fee = 0;         // per broadcast transaction (funding / closing)
    uint32_t funding_depth = 3;
    OutPoint funding_outpoint;       // known once the funding tx is built

    bool operator==(const ChannelParams&) const = default;

    Script make_funding_script() const;
};

// floor(amount * fee_rate_permille / 1000)
int64_t gateway_fee(int64_t amount, uint16_t fee_rate_permille);

struct HtlcEntry {
    int64_t amount = 0;  // forwarded value: payment amount minus the gateway fee
    Digest payment_hash{};
    uint32_t expiry_height = 0;
    bool settled = false;  // preimage reached the bridge; folds into its balance next state
    bool operator==(const HtlcEntry&) const = default;
};

// One signed channel state. Balances plus in-flight HTLCs always sum to the
// capacity: on-chain fees are charged only by funding/closing transactions.
struct ChannelSnapshot {
    uint64_t state_index = 0;
    int64_t balance_iot = 0;
    int64_t balance_gateway_fees = 0;
    int64_t balance_bridge = 0;
    std::vector<HtlcEntry> htlcs;
    PublicKey gateway_rev_point{};  // revocation pubkey baked into the gateway commitment
    PublicKey bridge_rev_point{};   // and into the bridge commitment

    bool operator==(const ChannelSnapshot&) const = default;

    static ChannelSnapshot initial(const ChannelParams& params);

    int64_t total() const;

    // Next state for a new payment: previously settled HTLCs fold into the
    // bridge balance, the IoT balance is debited the full amount, the fee is
    // credited to the gateway and the remainder rides the new HTLC.
    ChannelSnapshot with_payment(int64_t amount, uint16_t fee_rate_permille, const Digest& payment_hash,
                                 uint32_t expiry_height) const;

    void mark_settled(const Digest& payment_hash);

    bool has_unsettled_htlc() const;

    // Balances with settled HTLCs folded into the bridge side.
    struct Folded {
        int64_t iot = 0;
        int64_t gateway_fees = 0;
        int64_t bridge = 0;
    };
    Folded folded_balances() const;
};

// ---------------------------------------------------------------------------
// Transaction builders
// ---------------------------------------------------------------------------

struct Utxo {
    OutPoint outpoint;
    int64_t value = 0;
};

// Output 0 locks the capacity into the 3-of-3 script; change (if any) goes
// back to the IoT key. The on-chain fee comes out of the IoT funds.
Tx build_funding_tx(const Utxo& iot_utxo, const ChannelParams& params, ByteSpan iot_change_pk);

struct CommitmentPair {
    Tx gateway_tx;
    Tx bridge_tx;
};

// Both versions of the commitment for one state. Output order is fixed:
// to_IoT, to_local, to_remote, then HTLC outputs in snapshot order, with
// zero-value outputs omitted.
CommitmentPair build_commitment_txs(const ChannelSnapshot& snapshot, const ChannelParams& params);

Tx build_gateway_commitment(const ChannelSnapshot& snapshot, const ChannelParams& params);
Tx build_bridge_commitment(const ChannelSnapshot& snapshot, const ChannelParams& params);

// Second-stage HTLC transaction spending one HTLC output of a confirmed
// commitment. The on-chain fee is carved from the HTLC amount. Timeout
// exists only for the gateway commitment, success only for the bridge one.
Tx build_htlc_tx(HtlcTxKind kind, CommitmentSide parent_side, const Tx& parent,
                 uint32_t htlc_output_index, const ChannelSnapshot& snapshot,
                 const ChannelParams& params);

enum class FeePayer { iot, gateway };

// Mutual-close transaction: plain pay-to-pubkey outputs, negotiated fee
// deducted from the initiator's balance. Unsettled HTLCs block closing.
Tx build_closing_tx(const ChannelSnapshot& snapshot, const ChannelParams& params,
                    int64_t negotiated_fee, FeePayer fee_payer);

} // namespace iotln

#endif // IOTLN_TX_H
