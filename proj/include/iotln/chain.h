// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CHAIN_H
#define IOTLN_CHAIN_H

#include <iotln/channel.h>
#include <iotln/tx.h>

#include <map>
#include <string>
#include <vector>

namespace iotln {

enum class RejectReason : uint8_t {
    none,
    missing_input,
    double_spend,
    script_failed,
    timelock_not_met,
    bad_value,
};

const char* reject_reason_name(RejectReason r);

struct BroadcastResult {
    bool accepted = false;
    RejectReason reason = RejectReason::none;
    EvalFail script_reason = EvalFail::none;
    uint32_t failed_input = 0;
};

struct UtxoEntry {
    int64_t value = 0;
    Bytes script;  // serialized
    uint32_t created_height = 0;
    bool operator==(const UtxoEntry&) const = default;
};

struct Block {
    uint32_t height = 0;
    std::vector<Digest> txids;
};

struct AuditReport {
    bool ok = true;
    uint64_t confirmed_txs = 0;
    uint64_t double_spends = 0;
    uint64_t script_failures = 0;
    uint64_t value_violations = 0;
    int64_t utxo_total = 0;
    std::vector<std::string> issues;
};

// Deterministic single-owner blockchain: explicit mining, full script
// validation at admission, FIFO mempool confirmation.
class SimChain {
public:
    explicit SimChain(const SigScheme& scheme) : scheme_(&scheme) {}

    // Synthesizes a spendable output at the current height (wallet seeding).
    OutPoint seed_utxo(int64_t value, const Script& script);

    BroadcastResult broadcast(const Tx& tx);
    void mine_blocks(uint32_t n);
    uint32_t confirmations(const Digest& txid) const;

    uint32_t height() const { return uint32_t(blocks_.size()); }
    const std::vector<Block>& blocks() const { return blocks_; }
    const std::map<OutPoint, UtxoEntry>& utxos() const { return utxos_; }
    bool is_confirmed(const Digest& txid) const { return inclusion_.count(txid) > 0; }
    size_t mempool_size() const { return mempool_.size(); }

    // Sum of unspent value paying exactly this script.
    int64_t value_to(const Script& script) const;

    // Full replay audit: re-validates every confirmed spend against the UTXO
    // state as of its block, recounts value flow, rebuilds the UTXO set.
    AuditReport audit() const;

    std::string dump_json() const;

    const SigScheme& scheme() const { return *scheme_; }

private:
    struct ValidationCheck {
        BroadcastResult result;
        std::vector<OutPoint> spends;
    };
    ValidationCheck validate(const Tx& tx, uint32_t candidate_height,
                             const std::map<OutPoint, UtxoEntry>& view) const;

    const SigScheme* scheme_;
    std::vector<Block> blocks_;
    std::map<OutPoint, UtxoEntry> utxos_;
    std::map<OutPoint, UtxoEntry> seeds_;      // exogenous supply, kept for replay
    std::map<Digest, Tx> txs_;                 // every confirmed or pooled tx
    std::map<Digest, uint32_t> inclusion_;     // txid -> block height
    std::vector<Digest> mempool_;              // FIFO order
    std::map<OutPoint, Digest> mempool_spends_;
    uint64_t seed_counter_ = 0;
};

// ---------------------------------------------------------------------------
// Revoked-state watcher
// ---------------------------------------------------------------------------

struct WatchTarget {
    RevokedCommitmentInfo info;
    PublicKey sweep_to{};  // watcher's payout key
};

class Watcher {
public:
    explicit Watcher(const SigScheme& scheme) : scheme_(&scheme) {}

    void add(const WatchTarget& target);
    size_t size() const { return targets_.size(); }

    // Scans blocks mined since the last call; for every confirmed revoked
    // commitment builds one justice transaction sweeping the revocable
    // outputs (never the to_IoT output). Fee-free by construction.
    std::vector<Tx> check(const SimChain& chain);

private:
    const SigScheme* scheme_;
    std::map<Digest, WatchTarget> targets_;
    uint32_t scanned_height_ = 0;
};

// Builds the justice transaction for one revoked commitment found on-chain.
Tx build_justice_tx(const WatchTarget& target, const SigScheme& scheme);

} // namespace iotln

#endif // IOTLN_CHAIN_H
