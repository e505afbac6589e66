// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/tx.h>

namespace iotln {

namespace {

void put_varint(Bytes& out, uint64_t v) {
    if (v < 0xfd) {
        out.push_back(uint8_t(v));
    } else if (v <= 0xffff) {
        out.push_back(0xfd);
        out.push_back(uint8_t(v));
        out.push_back(uint8_t(v >> 8));
    } else if (v <= 0xffffffff) {
        out.push_back(0xfe);
        put_u32le(out, uint32_t(v));
    } else {
        out.push_back(0xff);
        put_u64le(out, v);
    }
}

std::optional<uint64_t> read_varint(ByteReader& r) {
    uint8_t first = r.u8();
    if (first < 0xfd) return first;
    if (first == 0xfd) {
        uint16_t v = uint16_t(r.u8());
        v |= uint16_t(r.u8()) << 8;
        return v;
    }
    if (first == 0xfe) return r.u32le();
    return r.u64le();
}

void serialize_inputs(Bytes& out, const Tx& tx) {
    put_varint(out, tx.inputs.size());
    for (const TxIn& in : tx.inputs) {
        append(out, ByteSpan(in.prevout.txid.data(), 32));
        put_u32le(out, in.prevout.vout);
        put_u32le(out, in.sequence);
    }
}

void serialize_outputs(Bytes& out, const Tx& tx) {
    put_varint(out, tx.outputs.size());
    for (const TxOut& o : tx.outputs) {
        put_u64le(out, uint64_t(o.value));
        Bytes script = o.script.serialize();
        put_varint(out, script.size());
        append(out, script);
    }
}

} // namespace

Bytes Tx::serialize(bool include_witness) const {
    Bytes out;
    put_u32le(out, uint32_t(version));
    bool with_witness = include_witness && !witnesses.empty();
    if (with_witness) {
        out.push_back(0x00);  // marker
        out.push_back(0x01);  // flag
    }
    serialize_inputs(out, *this);
    serialize_outputs(out, *this);
    if (with_witness) {
        for (size_t i = 0; i < inputs.size(); i++) {
            const Witness empty;
            const Witness& w = i < witnesses.size() ? witnesses[i] : empty;
            put_varint(out, w.stack.size());
            for (const Bytes& item : w.stack) {
                put_varint(out, item.size());
                append(out, item);
            }
        }
    }
    put_u32le(out, locktime);
    return out;
}

std::optional<Tx> Tx::deserialize(ByteSpan data) {
    try {
        ByteReader r(data);
        Tx tx;
        tx.version = int32_t(r.u32le());
        auto n_in = read_varint(r);
        if (!n_in) return std::nullopt;
        bool with_witness = false;
        if (*n_in == 0) {
            // marker/flag form
            if (r.u8() != 0x01) return std::nullopt;
            with_witness = true;
            n_in = read_varint(r);
            if (!n_in) return std::nullopt;
        }
        if (*n_in > 10000) return std::nullopt;
        for (uint64_t i = 0; i < *n_in; i++) {
            TxIn in;
            in.prevout.txid = r.take_array<32>();
            in.prevout.vout = r.u32le();
            in.sequence = r.u32le();
            tx.inputs.push_back(in);
        }
        auto n_out = read_varint(r);
        if (!n_out || *n_out > 10000) return std::nullopt;
        for (uint64_t i = 0; i < *n_out; i++) {
            TxOut o;
            o.value = int64_t(r.u64le());
            auto script_len = read_varint(r);
            if (!script_len) return std::nullopt;
            auto parsed = Script::parse(r.take(*script_len));
            if (!parsed) return std::nullopt;
            o.script = *parsed;
            tx.outputs.push_back(o);
        }
        if (with_witness) {
            for (uint64_t i = 0; i < *n_in; i++) {
                Witness w;
                auto n_items = read_varint(r);
                if (!n_items || *n_items > 1000) return std::nullopt;
                for (uint64_t j = 0; j < *n_items; j++) {
                    auto len = read_varint(r);
                    if (!len || *len > 10000) return std::nullopt;
                    w.stack.push_back(r.take(*len));
                }
                tx.witnesses.push_back(std::move(w));
            }
        }
        tx.locktime = r.u32le();
        if (!r.empty()) return std::nullopt;
        return tx;
    } catch (const std::out_of_range&) {
        return std::nullopt;
    }
}

Digest Tx::txid() const { return sha256d(serialize(false)); }

Digest sighash(const Tx& tx, size_t input_index, const Script& spent_script,
               int64_t spent_value) {
    if (input_index >= tx.inputs.size())
        throw BuildError(BuildErrorCode::index_out_of_range, "sighash input index");

    Bytes prevouts;
    for (const TxIn& in : tx.inputs) {
        append(prevouts, ByteSpan(in.prevout.txid.data(), 32));
        put_u32le(prevouts, in.prevout.vout);
    }
    Digest prevouts_hash = sha256d(prevouts);

    Bytes seqs;
    for (const TxIn& in : tx.inputs) put_u32le(seqs, in.sequence);
    Digest sequences_hash = sha256d(seqs);

    Bytes outs;
    for (const TxOut& o : tx.outputs) {
        put_u64le(outs, uint64_t(o.value));
        Bytes script = o.script.serialize();
        put_varint(outs, script.size());
        append(outs, script);
    }
    Digest outputs_hash = sha256d(outs);

    const TxIn& in = tx.inputs[input_index];
    Bytes pre;
    put_u32le(pre, uint32_t(tx.version));
    append(pre, span_of(prevouts_hash));
    append(pre, span_of(sequences_hash));
    append(pre, ByteSpan(in.prevout.txid.data(), 32));
    put_u32le(pre, in.prevout.vout);
    Bytes script = spent_script.serialize();
    put_varint(pre, script.size());
    append(pre, script);
    put_u64le(pre, uint64_t(spent_value));
    put_u32le(pre, in.sequence);
    append(pre, span_of(outputs_hash));
    put_u32le(pre, tx.locktime);
    return sha256d(pre);
}

// ---------------------------------------------------------------------------
// Channel data
// ---------------------------------------------------------------------------

Script ChannelParams::make_funding_script() const {
    return funding_script(ByteSpan(iot.funding.data(), 33), ByteSpan(gateway.funding.data(), 33),
                          ByteSpan(bridge.funding.data(), 33));
}

int64_t gateway_fee(int64_t amount, uint16_t fee_rate_permille) {
    return amount * int64_t(fee_rate_permille) / 1000;
}

ChannelSnapshot ChannelSnapshot::initial(const ChannelParams& params) {
    ChannelSnapshot s;
    s.balance_iot = params.capacity;
    return s;
}

int64_t ChannelSnapshot::total() const {
    int64_t t = balance_iot + balance_gateway_fees + balance_bridge;
    for (const HtlcEntry& h : htlcs) t += h.amount;
    return t;
}

ChannelSnapshot ChannelSnapshot::with_payment(int64_t amount, uint16_t fee_rate_permille,
                                              const Digest& payment_hash,
                                              uint32_t expiry_height) const {
    int64_t fee = gateway_fee(amount, fee_rate_permille);
    if (amount <= fee)
        throw BuildError(BuildErrorCode::insufficient_funds, "payment amount not above fee");
    if (balance_iot < amount)
        throw BuildError(BuildErrorCode::insufficient_funds, "IoT balance below payment amount");

    ChannelSnapshot next = *this;
    next.state_index = state_index + 1;
    next.htlcs.clear();
    for (const HtlcEntry& h : htlcs) {
        if (h.settled)
            next.balance_bridge += h.amount;
        else
            next.htlcs.push_back(h);
    }
    next.balance_iot -= amount;
    next.balance_gateway_fees += fee;
    next.htlcs.push_back(HtlcEntry{amount - fee, payment_hash, expiry_height, false});
    return next;
}

void ChannelSnapshot::mark_settled(const Digest& payment_hash) {
    for (HtlcEntry& h : htlcs)
        if (h.payment_hash == payment_hash) h.settled = true;
}

bool ChannelSnapshot::has_unsettled_htlc() const {
    for (const HtlcEntry& h : htlcs)
        if (!h.settled) return true;
    return false;
}

ChannelSnapshot::Folded ChannelSnapshot::folded_balances() const {
    Folded f{balance_iot, balance_gateway_fees, balance_bridge};
    for (const HtlcEntry& h : htlcs)
        if (h.settled) f.bridge += h.amount;
    return f;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

Tx build_funding_tx(const Utxo& iot_utxo, const ChannelParams& params, ByteSpan iot_change_pk) {
    int64_t change = iot_utxo.value - params.capacity - params.onchain_fee;
    if (change < 0)
        throw BuildError(BuildErrorCode::insufficient_funds,
                         "UTXO below capacity plus on-chain fee");
    Tx tx;
    tx.inputs.push_back(TxIn{iot_utxo.outpoint, 0xffffffff});
    tx.outputs.push_back(TxOut{params.capacity, params.make_funding_script()});
    if (change > 0) tx.outputs.push_back(TxOut{change, to_iot_script(iot_change_pk)});
    return tx;
}

namespace {

ByteSpan pk(const PublicKey& k) { return ByteSpan(k.data(), 33); }

void check_conservation(const ChannelSnapshot& snapshot, const ChannelParams& params) {
    if (snapshot.total() != params.capacity)
        throw BuildError(BuildErrorCode::conservation_violated,
                         "snapshot does not sum to the channel capacity");
}

Tx commitment_base(const ChannelParams& params) {
    Tx tx;
    tx.inputs.push_back(TxIn{params.funding_outpoint, 0xffffffff});
    return tx;
}

} // namespace

Tx build_gateway_commitment(const ChannelSnapshot& snapshot, const ChannelParams& params) {
    check_conservation(snapshot, params);
    Tx tx = commitment_base(params);
    if (snapshot.balance_iot > 0)
        tx.outputs.push_back(TxOut{snapshot.balance_iot, to_iot_script(pk(params.iot.payment))});
    if (snapshot.balance_gateway_fees > 0)
        tx.outputs.push_back(
            TxOut{snapshot.balance_gateway_fees,
                  revocable_delayed_script(pk(snapshot.gateway_rev_point),
                                           pk(params.gateway.delayed), params.csv_delay)});
    if (snapshot.balance_bridge > 0)
        tx.outputs.push_back(
            TxOut{snapshot.balance_bridge, to_remote_script(pk(params.bridge.payment))});
    for (const HtlcEntry& h : snapshot.htlcs) {
        HtlcScriptParams sp;
        sp.revocation_pk = Bytes(snapshot.gateway_rev_point.begin(), snapshot.gateway_rev_point.end());
        sp.remote_htlc_pk = Bytes(params.bridge.htlc.begin(), params.bridge.htlc.end());
        sp.local_htlc_pk = Bytes(params.gateway.htlc.begin(), params.gateway.htlc.end());
        sp.iot_htlc_pk = Bytes(params.iot.htlc.begin(), params.iot.htlc.end());
        sp.payment_hash = h.payment_hash;
        tx.outputs.push_back(TxOut{h.amount, offered_htlc_script(CommitmentSide::gateway, sp)});
    }
    return tx;
}

Tx build_bridge_commitment(const ChannelSnapshot& snapshot, const ChannelParams& params) {
    check_conservation(snapshot, params);
    Tx tx = commitment_base(params);
    if (snapshot.balance_iot > 0)
        tx.outputs.push_back(TxOut{snapshot.balance_iot, to_iot_script(pk(params.iot.payment))});
    if (snapshot.balance_bridge > 0)
        tx.outputs.push_back(
            TxOut{snapshot.balance_bridge,
                  revocable_delayed_script(pk(snapshot.bridge_rev_point),
                                           pk(params.bridge.delayed), params.csv_delay)});
    if (snapshot.balance_gateway_fees > 0)
        tx.outputs.push_back(
            TxOut{snapshot.balance_gateway_fees, to_remote_script(pk(params.gateway.payment))});
    for (const HtlcEntry& h : snapshot.htlcs) {
        HtlcScriptParams sp;
        sp.revocation_pk = Bytes(snapshot.bridge_rev_point.begin(), snapshot.bridge_rev_point.end());
        sp.remote_htlc_pk = Bytes(params.gateway.htlc.begin(), params.gateway.htlc.end());
        sp.local_htlc_pk = Bytes(params.bridge.htlc.begin(), params.bridge.htlc.end());
        sp.iot_htlc_pk = Bytes(params.iot.htlc.begin(), params.iot.htlc.end());
        sp.payment_hash = h.payment_hash;
        sp.cltv_expiry = h.expiry_height;
        tx.outputs.push_back(TxOut{h.amount, received_htlc_script(CommitmentSide::bridge, sp)});
    }
    return tx;
}

CommitmentPair build_commitment_txs(const ChannelSnapshot& snapshot, const ChannelParams& params) {
    return CommitmentPair{build_gateway_commitment(snapshot, params),
                          build_bridge_commitment(snapshot, params)};
}

Tx build_htlc_tx(HtlcTxKind kind, CommitmentSide parent_side, const Tx& parent,
                 uint32_t htlc_output_index, const ChannelSnapshot& snapshot,
                 const ChannelParams& params) {
    if (kind == HtlcTxKind::timeout && parent_side != CommitmentSide::gateway)
        throw BuildError(BuildErrorCode::unsupported_side,
                         "HTLC-timeout only spends the gateway commitment");
    if (kind == HtlcTxKind::success && parent_side != CommitmentSide::bridge)
        throw BuildError(BuildErrorCode::unsupported_side,
                         "HTLC-success only spends the bridge commitment");
    if (htlc_output_index >= parent.outputs.size())
        throw BuildError(BuildErrorCode::index_out_of_range, "HTLC output index");

    const TxOut& spent = parent.outputs[htlc_output_index];

    // locate the HTLC entry whose script sits at the given output
    const HtlcEntry* entry = nullptr;
    for (const HtlcEntry& h : snapshot.htlcs) {
        HtlcScriptParams sp;
        bool gateway = parent_side == CommitmentSide::gateway;
        const PublicKey& rev = gateway ? snapshot.gateway_rev_point : snapshot.bridge_rev_point;
        sp.revocation_pk = Bytes(rev.begin(), rev.end());
        sp.remote_htlc_pk = gateway ? Bytes(params.bridge.htlc.begin(), params.bridge.htlc.end())
                                    : Bytes(params.gateway.htlc.begin(), params.gateway.htlc.end());
        sp.local_htlc_pk = gateway ? Bytes(params.gateway.htlc.begin(), params.gateway.htlc.end())
                                   : Bytes(params.bridge.htlc.begin(), params.bridge.htlc.end());
        sp.iot_htlc_pk = Bytes(params.iot.htlc.begin(), params.iot.htlc.end());
        sp.payment_hash = h.payment_hash;
        sp.cltv_expiry = h.expiry_height;
        Script expect = gateway ? offered_htlc_script(CommitmentSide::gateway, sp)
                                : received_htlc_script(CommitmentSide::bridge, sp);
        if (expect == spent.script) {
            entry = &h;
            break;
        }
    }
    if (!entry)
        throw BuildError(BuildErrorCode::index_out_of_range,
                         "output is not an HTLC output of this state");

    int64_t value = spent.value - params.onchain_fee;
    if (value <= 0)
        throw BuildError(BuildErrorCode::insufficient_funds, "HTLC below on-chain fee");

    Tx tx;
    tx.inputs.push_back(TxIn{OutPoint{parent.txid(), htlc_output_index}, 0});
    tx.locktime = kind == HtlcTxKind::timeout ? entry->expiry_height : 0;
    const PublicKey& rev =
        parent_side == CommitmentSide::gateway ? snapshot.gateway_rev_point : snapshot.bridge_rev_point;
    const PublicKey& delayed =
        kind == HtlcTxKind::timeout ? params.iot.delayed : params.bridge.delayed;
    tx.outputs.push_back(
        TxOut{value, revocable_delayed_script(pk(rev), pk(delayed), params.csv_delay)});
    return tx;
}

Tx build_closing_tx(const ChannelSnapshot& snapshot, const ChannelParams& params,
                    int64_t negotiated_fee, FeePayer fee_payer) {
    check_conservation(snapshot, params);
    if (snapshot.has_unsettled_htlc())
        throw BuildError(BuildErrorCode::pending_htlcs, "channel has pending HTLCs");

    ChannelSnapshot::Folded f = snapshot.folded_balances();
    int64_t& payer = fee_payer == FeePayer::iot ? f.iot : f.gateway_fees;
    if (payer < negotiated_fee)
        throw BuildError(BuildErrorCode::insufficient_balance_for_fee,
                         "fee payer balance below negotiated fee");
    payer -= negotiated_fee;

    Tx tx;
    tx.inputs.push_back(TxIn{params.funding_outpoint, 0xffffffff});
    if (f.iot > 0) tx.outputs.push_back(TxOut{f.iot, to_iot_script(pk(params.iot.payment))});
    if (f.gateway_fees > 0)
        tx.outputs.push_back(TxOut{f.gateway_fees, to_remote_script(pk(params.gateway.payment))});
    if (f.bridge > 0)
        tx.outputs.push_back(TxOut{f.bridge, to_remote_script(pk(params.bridge.payment))});
    return tx;
}

} // namespace iotln
