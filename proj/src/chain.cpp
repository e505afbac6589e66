// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/chain.h>

#include "json.hpp"

#include <stdexcept>

namespace iotln {

const char* reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::none: return "none";
        case RejectReason::missing_input: return "missing_input";
        case RejectReason::double_spend: return "double_spend";
        case RejectReason::script_failed: return "script_failed";
        case RejectReason::timelock_not_met: return "timelock_not_met";
        case RejectReason::bad_value: return "bad_value";
    }
    return "?";
}

OutPoint SimChain::seed_utxo(int64_t value, const Script& script) {
    // synthetic coinbase-style output; txid derived from a counter
    Bytes tag{'s', 'e', 'e', 'd'};
    put_u64be(tag, seed_counter_++);
    OutPoint op{sha256d(tag), 0};
    UtxoEntry entry{value, script.serialize(), height()};
    utxos_[op] = entry;
    seeds_[op] = entry;
    return op;
}

SimChain::ValidationCheck SimChain::validate(const Tx& tx, uint32_t candidate_height,
                                             const std::map<OutPoint, UtxoEntry>& view) const {
    ValidationCheck check;
    check.result.accepted = false;

    if (tx.locktime > 0 && candidate_height < tx.locktime) {
        check.result.reason = RejectReason::timelock_not_met;
        return check;
    }
    if (tx.inputs.empty() || tx.witnesses.size() != tx.inputs.size()) {
        check.result.reason = RejectReason::script_failed;
        return check;
    }

    int64_t in_total = 0;
    for (uint32_t i = 0; i < tx.inputs.size(); i++) {
        const OutPoint& prev = tx.inputs[i].prevout;
        auto it = view.find(prev);
        if (it == view.end()) {
            check.result.reason = RejectReason::missing_input;
            check.result.failed_input = i;
            return check;
        }
        for (const OutPoint& seen : check.spends) {
            if (seen == prev) {
                check.result.reason = RejectReason::double_spend;
                check.result.failed_input = i;
                return check;
            }
        }

        const UtxoEntry& entry = it->second;
        auto script = Script::parse(entry.script);
        if (!script) {
            check.result.reason = RejectReason::script_failed;
            check.result.failed_input = i;
            return check;
        }
        SpendContext ctx;
        ctx.sighash = sighash(tx, i, *script, entry.value);
        ctx.current_height = candidate_height;
        ctx.input_age = candidate_height - entry.created_height;
        EvalResult ev = eval_spend(*script, tx.witnesses[i], ctx, *scheme_);
        if (!ev.ok) {
            check.result.reason = ev.reason == EvalFail::timelock_not_met ||
                                          ev.reason == EvalFail::locktime_not_met
                                      ? RejectReason::timelock_not_met
                                      : RejectReason::script_failed;
            check.result.script_reason = ev.reason;
            check.result.failed_input = i;
            return check;
        }
        in_total += entry.value;
        check.spends.push_back(prev);
    }

    int64_t out_total = 0;
    for (const TxOut& o : tx.outputs) {
        if (o.value < 0) {
            check.result.reason = RejectReason::bad_value;
            return check;
        }
        out_total += o.value;
    }
    if (out_total > in_total) {
        check.result.reason = RejectReason::bad_value;
        return check;
    }

    check.result.accepted = true;
    return check;
}

BroadcastResult SimChain::broadcast(const Tx& tx) {
    Digest txid = tx.txid();
    if (inclusion_.count(txid)) return BroadcastResult{true, RejectReason::none, EvalFail::none, 0};
    for (const Digest& pooled : mempool_)
        if (pooled == txid) return BroadcastResult{true, RejectReason::none, EvalFail::none, 0};

    for (const TxIn& in : tx.inputs) {
        if (mempool_spends_.count(in.prevout)) {
            BroadcastResult r;
            r.reason = RejectReason::double_spend;
            return r;
        }
    }

    ValidationCheck check = validate(tx, height() + 1, utxos_);
    if (!check.result.accepted) return check.result;

    txs_[txid] = tx;
    mempool_.push_back(txid);
    for (const OutPoint& spent : check.spends) mempool_spends_[spent] = txid;
    return check.result;
}

void SimChain::mine_blocks(uint32_t n) {
    if (n == 0) throw std::invalid_argument("mine_blocks needs n >= 1");
    for (uint32_t b = 0; b < n; b++) {
        Block block;
        block.height = height() + 1;
        // FIFO: the whole pool confirms in the next block
        for (const Digest& txid : mempool_) {
            const Tx& tx = txs_.at(txid);
            for (const TxIn& in : tx.inputs) utxos_.erase(in.prevout);
            for (uint32_t v = 0; v < tx.outputs.size(); v++) {
                utxos_[OutPoint{txid, v}] =
                    UtxoEntry{tx.outputs[v].value, tx.outputs[v].script.serialize(), block.height};
            }
            inclusion_[txid] = block.height;
            block.txids.push_back(txid);
        }
        mempool_.clear();
        mempool_spends_.clear();
        blocks_.push_back(block);
    }
}

uint32_t SimChain::confirmations(const Digest& txid) const {
    auto it = inclusion_.find(txid);
    if (it == inclusion_.end()) return 0;
    return height() - it->second + 1;
}

int64_t SimChain::value_to(const Script& script) const {
    Bytes want = script.serialize();
    int64_t total = 0;
    for (const auto& [op, entry] : utxos_)
        if (entry.script == want) total += entry.value;
    return total;
}

AuditReport SimChain::audit() const {
    AuditReport report;
    std::map<OutPoint, UtxoEntry> view = seeds_;

    for (const Block& block : blocks_) {
        for (const Digest& txid : block.txids) {
            report.confirmed_txs++;
            const Tx& tx = txs_.at(txid);

            int64_t in_total = 0;
            bool inputs_ok = true;
            for (uint32_t i = 0; i < tx.inputs.size(); i++) {
                auto it = view.find(tx.inputs[i].prevout);
                if (it == view.end()) {
                    report.double_spends++;
                    report.issues.push_back("spent or missing input in " +
                                            hex_str(span_of(txid)));
                    inputs_ok = false;
                    break;
                }
                const UtxoEntry& entry = it->second;
                auto script = Script::parse(entry.script);
                SpendContext ctx;
                ctx.sighash = sighash(tx, i, *script, entry.value);
                ctx.current_height = block.height;
                ctx.input_age = block.height - entry.created_height;
                if (!eval_spend(*script, tx.witnesses[i], ctx, *scheme_).ok) {
                    report.script_failures++;
                    report.issues.push_back("confirmed spend fails script re-validation in " +
                                            hex_str(span_of(txid)));
                }
                in_total += entry.value;
                view.erase(it);
            }
            if (!inputs_ok) continue;

            int64_t out_total = 0;
            for (uint32_t v = 0; v < tx.outputs.size(); v++) {
                out_total += tx.outputs[v].value;
                view[OutPoint{txid, v}] = UtxoEntry{tx.outputs[v].value,
                                                    tx.outputs[v].script.serialize(), block.height};
            }
            if (out_total > in_total) {
                report.value_violations++;
                report.issues.push_back("value created in " + hex_str(span_of(txid)));
            }
        }
    }

    if (view != utxos_) {
        report.issues.push_back("replayed UTXO set differs from live set");
    }
    for (const auto& [op, entry] : view) report.utxo_total += entry.value;
    report.ok = report.double_spends == 0 && report.script_failures == 0 &&
                report.value_violations == 0 && view == utxos_;
    return report;
}

std::string SimChain::dump_json() const {
    nlohmann::ordered_json j;
    j["height"] = height();
    j["blocks"] = nlohmann::ordered_json::array();
    for (const Block& b : blocks_) {
        nlohmann::ordered_json jb;
        jb["height"] = b.height;
        jb["txids"] = nlohmann::ordered_json::array();
        for (const Digest& t : b.txids) jb["txids"].push_back(hex_str(span_of(t)));
        j["blocks"].push_back(jb);
    }
    j["utxos"] = nlohmann::ordered_json::array();
    for (const auto& [op, entry] : utxos_) {
        nlohmann::ordered_json ju;
        ju["txid"] = hex_str(span_of(op.txid));
        ju["vout"] = op.vout;
        ju["value"] = entry.value;
        ju["script"] = hex_str(entry.script);
        ju["created_height"] = entry.created_height;
        j["utxos"].push_back(ju);
    }
    j["mempool"] = nlohmann::ordered_json::array();
    for (const Digest& t : mempool_) j["mempool"].push_back(hex_str(span_of(t)));
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Watcher
// ---------------------------------------------------------------------------

void Watcher::add(const WatchTarget& target) { targets_[target.info.txid] = target; }

Tx build_justice_tx(const WatchTarget& target, const SigScheme& scheme) {
    const RevokedCommitmentInfo& info = target.info;
    auto kp = revocation_keypair(info.revocation_secret, scheme);
    if (!kp) throw std::invalid_argument("bad revocation secret");

    Tx justice;
    int64_t total = 0;
    std::vector<std::pair<uint32_t, bool>> spends;  // (vout, via htlc-style witness)
    for (uint32_t v : info.to_local_outputs) spends.push_back({v, false});
    for (uint32_t v : info.htlc_outputs) spends.push_back({v, true});
    for (const auto& [vout, is_htlc] : spends) {
        justice.inputs.push_back(TxIn{OutPoint{info.txid, vout}, 0xffffffff});
        total += info.commitment.outputs[vout].value;
    }
    justice.outputs.push_back(TxOut{total, to_remote_script(ByteSpan(target.sweep_to.data(), 33))});

    for (size_t i = 0; i < spends.size(); i++) {
        const auto& [vout, is_htlc] = spends[i];
        Digest h = sighash(justice, i, info.commitment.outputs[vout].script,
                           info.commitment.outputs[vout].value);
        Bytes sig = scheme.sign(h, kp->secret);
        justice.witnesses.push_back(
            is_htlc ? htlc_revocation_witness(sig, ByteSpan(kp->public_key.data(), 33))
                    : revocation_witness(sig));
    }
    return justice;
}

std::vector<Tx> Watcher::check(const SimChain& chain) {
    std::vector<Tx> out;
    const auto& blocks = chain.blocks();
    for (uint32_t h = scanned_height_; h < blocks.size(); h++) {
        for (const Digest& txid : blocks[h].txids) {
            auto it = targets_.find(txid);
            if (it == targets_.end()) continue;
            // a revoked state can hold nothing revocable (fresh channel)
            if (it->second.info.to_local_outputs.empty() && it->second.info.htlc_outputs.empty())
                continue;
            out.push_back(build_justice_tx(it->second, *scheme_));
        }
    }
    scanned_height_ = uint32_t(blocks.size());
    return out;
}

} // namespace iotln
