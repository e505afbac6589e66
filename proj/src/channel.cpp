// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/channel.h>

#include <algorithm>
#include <cstring>

namespace iotln {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::idle: return "idle";
        case Phase::opening: return "opening";
        case Phase::await_funding_sig: return "await_funding_sig";
        case Phase::await_funding_locked: return "await_funding_locked";
        case Phase::operational: return "operational";
        case Phase::await_iot_sig: return "await_iot_sig";
        case Phase::await_revoke_ack: return "await_revoke_ack";
        case Phase::closing: return "closing";
        case Phase::closed: return "closed";
    }
    return "?";
}

const char* protocol_error_name(ProtocolError e) {
    switch (e) {
        case ProtocolError::none: return "none";
        case ProtocolError::unexpected_message: return "unexpected_message";
        case ProtocolError::bad_message: return "bad_message";
        case ProtocolError::balance_check_failed: return "balance_check_failed";
        case ProtocolError::bridge_unresponsive: return "bridge_unresponsive";
        case ProtocolError::fee_underflow: return "fee_underflow";
        case ProtocolError::insufficient_funds: return "insufficient_funds";
        case ProtocolError::missing_iot_signature: return "missing_iot_signature";
        case ProtocolError::invalid_signature: return "invalid_signature";
        case ProtocolError::negotiation_diverged: return "negotiation_diverged";
        case ProtocolError::insufficient_fee_balance: return "insufficient_fee_balance";
        case ProtocolError::pending_htlcs: return "pending_htlcs";
    }
    return "?";
}

Digest RevocationChain::secret(uint64_t index) const {
    Bytes buf(seed_.begin(), seed_.end());
    put_u64be(buf, index);
    return sha256(buf);
}

PublicKey RevocationChain::point(uint64_t index, const SigScheme& scheme) const {
    auto kp = scheme.keygen(span_of(secret(index)));
    return kp->public_key;
}

std::optional<KeyPair> revocation_keypair(const Digest& secret, const SigScheme& scheme) {
    return scheme.keygen(span_of(secret));
}

RolePubkeys RoleKeySet::pubkeys() const {
    return RolePubkeys{funding.public_key, payment.public_key, delayed.public_key,
                       htlc.public_key};
}

RoleKeySet RoleKeySet::derive(const SigScheme& scheme, const Digest& seed, std::string_view role) {
    auto mk = [&](std::string_view what) {
        std::string label(role);
        label += '/';
        label += what;
        return *scheme.keygen(span_of(derive_seed(seed, label)));
    };
    return RoleKeySet{mk("funding"), mk("payment"), mk("delayed"), mk("htlc")};
}

RevokedCommitmentInfo make_revoked_info(CommitmentSide owner, const ChannelSnapshot& snapshot,
                                        const ChannelParams& params, const Digest& secret) {
    RevokedCommitmentInfo info;
    info.owner = owner;
    info.revocation_secret = secret;
    info.commitment = owner == CommitmentSide::gateway
                          ? build_gateway_commitment(snapshot, params)
                          : build_bridge_commitment(snapshot, params);
    info.txid = info.commitment.txid();

    const PublicKey& rev_point =
        owner == CommitmentSide::gateway ? snapshot.gateway_rev_point : snapshot.bridge_rev_point;
    const PublicKey& delayed =
        owner == CommitmentSide::gateway ? params.gateway.delayed : params.bridge.delayed;
    Bytes to_local = revocable_delayed_script(ByteSpan(rev_point.data(), 33),
                                              ByteSpan(delayed.data(), 33), params.csv_delay)
                         .serialize();

    for (uint32_t i = 0; i < info.commitment.outputs.size(); i++) {
        Bytes script = info.commitment.outputs[i].script.serialize();
        if (script == to_local) {
            info.to_local_outputs.push_back(i);
            continue;
        }
        for (const HtlcEntry& h : snapshot.htlcs) {
            HtlcScriptParams sp;
            sp.revocation_pk = Bytes(rev_point.begin(), rev_point.end());
            bool gw = owner == CommitmentSide::gateway;
            const PublicKey& remote = gw ? params.bridge.htlc : params.gateway.htlc;
            const PublicKey& local = gw ? params.gateway.htlc : params.bridge.htlc;
            sp.remote_htlc_pk = Bytes(remote.begin(), remote.end());
            sp.local_htlc_pk = Bytes(local.begin(), local.end());
            sp.iot_htlc_pk = Bytes(params.iot.htlc.begin(), params.iot.htlc.end());
            sp.payment_hash = h.payment_hash;
            sp.cltv_expiry = h.expiry_height;
            Script expect = gw ? offered_htlc_script(CommitmentSide::gateway, sp)
                               : received_htlc_script(CommitmentSide::bridge, sp);
            if (expect.serialize() == script) {
                info.htlc_outputs.push_back(i);
                break;
            }
        }
    }
    return info;
}

std::vector<int64_t> recover_gross_candidates(int64_t net, uint16_t fee_rate_permille) {
    std::vector<int64_t> out;
    if (fee_rate_permille >= 1000 || net <= 0) return out;
    // net(g) = g - floor(g*k/1000) is nondecreasing with steps of 0 or 1, so
    // the solutions form one contiguous interval (length up to
    // 1000/(1000-k)) around the algebraic estimate.
    auto net_of = [&](int64_t g) { return g - gateway_fee(g, fee_rate_permille); };
    int64_t g = net * 1000 / (1000 - fee_rate_permille);
    int guard = 0;
    while (net_of(g) > net && g > 1 && ++guard < 5000) g--;
    while (net_of(g) < net && ++guard < 5000) g++;
    if (net_of(g) != net) return out;
    while (g > 1 && net_of(g - 1) == net) g--;
    while (net_of(g) == net) out.push_back(g++);
    return out;
}

namespace {

ByteSpan pk(const PublicKey& k) { return ByteSpan(k.data(), 33); }

Bytes snapshot_bytes(const ChannelSnapshot& s) {
    Bytes b;
    put_u64be(b, s.state_index);
    put_u64be(b, uint64_t(s.balance_iot));
    put_u64be(b, uint64_t(s.balance_gateway_fees));
    put_u64be(b, uint64_t(s.balance_bridge));
    for (const HtlcEntry& h : s.htlcs) {
        put_u64be(b, uint64_t(h.amount));
        b.insert(b.end(), h.payment_hash.begin(), h.payment_hash.end());
        put_u32be(b, h.expiry_height);
        b.push_back(h.settled ? 1 : 0);
    }
    b.insert(b.end(), s.gateway_rev_point.begin(), s.gateway_rev_point.end());
    b.insert(b.end(), s.bridge_rev_point.begin(), s.bridge_rev_point.end());
    return b;
}

} // namespace

// ===========================================================================
// IoT device
// ===========================================================================

IotDevice::IotDevice(const SigScheme& scheme, const Digest& master_seed)
    : scheme_(&scheme),
      keys_(RoleKeySet::derive(scheme, master_seed, "iot")),
      pubkeys_(keys_.pubkeys()) {}

StepResult IotDevice::fail(ProtocolError e) const {
    StepResult r;
    r.error = e;
    return r;
}

std::optional<int64_t> IotDevice::to_iot_value(const Tx& tx) const {
    if (!open_params_) return std::nullopt;
    Bytes expect = to_iot_script(pk(pubkeys_.payment)).serialize();
    int64_t total = 0;
    for (const TxOut& o : tx.outputs)
        if (o.script.serialize() == expect) total += o.value;
    return total;
}

StepResult IotDevice::request_open(int64_t capacity) {
    if (phase_ != Phase::idle || capacity <= 0) return fail(ProtocolError::unexpected_message);
    phase_ = Phase::opening;
    requested_capacity_ = capacity;
    StepResult r;
    r.out.push_back({LinkId::iot_gateway, OpenChannelRequest{capacity}});
    return r;
}

StepResult IotDevice::request_pay(int64_t amount, const PublicKey& destination) {
    if (phase_ != Phase::operational || pending_amount_)
        return fail(ProtocolError::unexpected_message);
    if (amount <= 0 || amount > expected_balance_) return fail(ProtocolError::insufficient_funds);
    pending_amount_ = amount;
    StepResult r;
    r.out.push_back({LinkId::iot_gateway, SendPayment{amount, destination}});
    return r;
}

StepResult IotDevice::request_close() {
    if (phase_ != Phase::operational) return fail(ProtocolError::unexpected_message);
    close_initiated_here_ = true;
    StepResult r;
    r.out.push_back({LinkId::iot_gateway, ChannelClosingRequest{}});
    return r;
}

StepResult IotDevice::on_message(const Message& m) {
    StepResult r;

    if (const auto* req = std::get_if<FundingSignatureRequest>(&m)) {
        if (phase_ != Phase::opening || !wallet_) return fail(ProtocolError::unexpected_message);
        const ChannelOpenParams& p = req->open_params;
        if (p.params.capacity != requested_capacity_ || !(p.params.iot == pubkeys_))
            return fail(ProtocolError::bad_message);

        // rebuild the funding tx from our own wallet output; signing anything
        // else would let the gateway redirect the deposit
        Tx funding;
        try {
            funding = build_funding_tx(*wallet_, p.params, ByteSpan(pubkeys_.payment.data(), 33));
        } catch (const BuildError&) {
            return fail(ProtocolError::bad_message);
        }
        if (!(p.params.funding_outpoint == OutPoint{funding.txid(), 0}))
            return fail(ProtocolError::bad_message);
        Digest wallet_digest =
            sighash(funding, 0, to_iot_script(ByteSpan(pubkeys_.payment.data(), 33)), wallet_->value);

        // sign the bridge's initial commitment, rebuilt locally
        ChannelSnapshot initial = ChannelSnapshot::initial(p.params);
        initial.gateway_rev_point = p.gateway_rev_point;
        initial.bridge_rev_point = p.bridge_rev_point;
        Tx bridge_commit = build_bridge_commitment(initial, p.params);
        Digest h = sighash(bridge_commit, 0, p.params.make_funding_script(), p.params.capacity);

        open_params_ = p;
        expected_balance_ = p.params.capacity;
        phase_ = Phase::operational;
        r.out.push_back({LinkId::iot_gateway,
                         FundingSigned{scheme_->sign(h, keys_.funding.secret),
                                       scheme_->sign(wallet_digest, keys_.payment.secret)}});
        return r;
    }

    if (const auto* req = std::get_if<SignTxRequest>(&m)) {
        if (phase_ != Phase::operational || !open_params_)
            return fail(ProtocolError::unexpected_message);
        const Tx& tx = req->tx;
        if (tx.inputs.size() != 1 || !(tx.inputs[0].prevout == open_params_->params.funding_outpoint))
            return fail(ProtocolError::bad_message);
        int64_t expected = expected_balance_ - (pending_amount_ ? *pending_amount_ : 0);
        if (*to_iot_value(tx) < expected) return fail(ProtocolError::balance_check_failed);
        Digest h = sighash(tx, 0, open_params_->params.make_funding_script(),
                           open_params_->params.capacity);
        r.out.push_back({LinkId::iot_gateway, TxSigned{scheme_->sign(h, keys_.funding.secret)}});
        return r;
    }

    if (std::get_if<PaymentSuccess>(&m)) {
        if (phase_ != Phase::operational || !pending_amount_)
            return fail(ProtocolError::unexpected_message);
        expected_balance_ -= *pending_amount_;
        pending_amount_.reset();
        payments_completed_++;
        return r;
    }

    if (std::get_if<ChannelClosingRequest>(&m)) {
        // gateway-initiated close notification; the gateway pays the fee
        if (phase_ != Phase::operational) return fail(ProtocolError::unexpected_message);
        close_initiated_here_ = false;
        return r;
    }

    if (const auto* req = std::get_if<ClosingTxRequest>(&m)) {
        if (phase_ != Phase::operational || !open_params_)
            return fail(ProtocolError::unexpected_message);
        const Tx& tx = req->tx;
        if (tx.inputs.size() != 1 || !(tx.inputs[0].prevout == open_params_->params.funding_outpoint))
            return fail(ProtocolError::bad_message);
        int64_t fee_allowance =
            close_initiated_here_ ? 2 * open_params_->params.onchain_fee : 0;
        if (*to_iot_value(tx) < expected_balance_ - fee_allowance)
            return fail(ProtocolError::balance_check_failed);
        Digest h = sighash(tx, 0, open_params_->params.make_funding_script(),
                           open_params_->params.capacity);
        r.out.push_back(
            {LinkId::iot_gateway, ClosingTxSigned{scheme_->sign(h, keys_.funding.secret)}});
        return r;
    }

    if (std::get_if<ChannelClosed>(&m)) {
        if (phase_ == Phase::idle) return fail(ProtocolError::unexpected_message);
        phase_ = Phase::closed;
        return r;
    }

    return fail(ProtocolError::unexpected_message);
}

Digest IotDevice::fingerprint() const {
    Bytes b;
    b.push_back(uint8_t(phase_));
    put_u64be(b, uint64_t(expected_balance_));
    put_u64be(b, uint64_t(pending_amount_ ? *pending_amount_ : -1));
    put_u64be(b, payments_completed_);
    b.push_back(close_initiated_here_ ? 1 : 0);
    return sha256(b);
}

// ===========================================================================
// Gateway
// ===========================================================================

Gateway::Gateway(const SigScheme& scheme, const Digest& master_seed, const GatewayConfig& cfg)
    : scheme_(&scheme),
      keys_(RoleKeySet::derive(scheme, master_seed, "gateway")),
      pubkeys_(keys_.pubkeys()),
      chain_(derive_seed(span_of(master_seed), "gateway/revocation")),
      cfg_(cfg),
      master_seed_(master_seed) {
    if (cfg_.closing_fee_offer < 0) cfg_.closing_fee_offer = cfg_.onchain_fee;
    if (cfg_.max_closing_fee < 0) cfg_.max_closing_fee = 2 * cfg_.onchain_fee;
}

StepResult Gateway::fail(ProtocolError e) const {
    StepResult r;
    r.error = e;
    return r;
}

Digest Gateway::funding_sighash(const Tx& tx) const {
    return sighash(tx, 0, params_.make_funding_script(), params_.capacity);
}

PublicKey Gateway::own_point(uint64_t state) const { return chain_.point(state, *scheme_); }

const ChannelSnapshot& Gateway::snapshot_at(uint64_t state_index) const {
    if (state_index == snapshot_.state_index) return snapshot_;
    return history_.at(state_index);
}

Tx Gateway::build_own_commitment(uint64_t state_index) const {
    return build_gateway_commitment(snapshot_at(state_index), params_);
}

Bytes Gateway::sign_own_commitment(const Tx& commitment) const {
    return scheme_->sign(funding_sighash(commitment), keys_.funding.secret);
}

Bytes Gateway::sign_closing(const Tx& closing) const {
    return scheme_->sign(funding_sighash(closing), keys_.funding.secret);
}

StepResult Gateway::handle_open_request(const OpenChannelRequest& m) {
    if (phase_ != Phase::idle) return fail(ProtocolError::unexpected_message);
    if (m.capacity <= 0 || cfg_.iot_utxo.value < m.capacity + cfg_.onchain_fee)
        return fail(ProtocolError::insufficient_funds);

    params_ = ChannelParams{};
    params_.capacity = m.capacity;
    params_.iot = cfg_.iot_pubkeys;
    params_.gateway = pubkeys_;
    params_.csv_delay = cfg_.csv_delay;
    params_.fee_rate_permille = cfg_.fee_rate_permille;
    params_.onchain_fee = cfg_.onchain_fee;
    params_.funding_depth = cfg_.funding_depth;

    phase_ = Phase::opening;
    ChannelOpenParams open;
    open.params = params_;
    open.gateway_rev_point = own_point(0);
    StepResult r;
    r.out.push_back({LinkId::gateway_bridge, MsgOpenChannel{open}});
    return r;
}

StepResult Gateway::handle_send_payment(const SendPayment& m) {
    if (phase_ != Phase::operational) return fail(ProtocolError::unexpected_message);
    int64_t fee = gateway_fee(m.amount, params_.fee_rate_permille);
    if (m.amount <= fee || m.amount <= 0) return fail(ProtocolError::fee_underflow);
    if (snapshot_.balance_iot < m.amount) return fail(ProtocolError::insufficient_funds);
    uint64_t next_state = snapshot_.state_index + 1;
    if (!bridge_points_.count(next_state)) return fail(ProtocolError::unexpected_message);

    PendingPayment p;
    p.amount = m.amount;
    p.fee = fee;
    p.preimage = to_bytes(derive_seed(span_of(master_seed_),
                                      "invoice/" + std::to_string(preimage_counter_++)));
    p.payment_hash = sha256(p.preimage);
    p.destination = m.destination;
    p.expiry = chain_height_ + cfg_.htlc_expiry_delta;

    ChannelSnapshot next =
        snapshot_.with_payment(m.amount, params_.fee_rate_permille, p.payment_hash, p.expiry);
    next.gateway_rev_point = own_point(next.state_index);
    next.bridge_rev_point = bridge_points_.at(next.state_index);

    pending_payment_ = p;
    pending_snapshot_ = next;
    sign_purpose_ = SignPurpose::payment;
    phase_ = Phase::await_iot_sig;

    StepResult r;
    r.out.push_back({LinkId::gateway_bridge,
                     MsgUpdateAddHtlc{m.amount - fee, p.payment_hash, p.expiry, m.destination}});
    r.out.push_back(
        {LinkId::iot_gateway, SignTxRequest{build_bridge_commitment(next, params_)}});
    return r;
}

StepResult Gateway::on_iot_message(const Message& m) {
    StepResult r;

    if (const auto* x = std::get_if<OpenChannelRequest>(&m)) return handle_open_request(*x);

    if (const auto* x = std::get_if<FundingSigned>(&m)) {
        if (phase_ != Phase::await_funding_sig) return fail(ProtocolError::unexpected_message);
        Tx bridge_commit = build_bridge_commitment(snapshot_, params_);
        Digest h = funding_sighash(bridge_commit);
        if (!scheme_->verify(x->signature, pk(params_.iot.funding), h))
            return fail(ProtocolError::invalid_signature);
        Digest wallet_digest = sighash(funding_tx_, 0, to_iot_script(pk(params_.iot.payment)),
                                       cfg_.iot_utxo.value);
        if (!scheme_->verify(x->wallet_signature, pk(params_.iot.payment), wallet_digest))
            return fail(ProtocolError::invalid_signature);
        funding_tx_.witnesses = {single_sig_witness(x->wallet_signature)};
        funding_iot_sig_ = x->signature;
        Bytes own = scheme_->sign(h, keys_.funding.secret);
        phase_ = Phase::opening;  // awaiting funding_signed from the bridge
        r.out.push_back({LinkId::gateway_bridge,
                         MsgFundingCreated{params_.funding_outpoint, funding_iot_sig_, own}});
        return r;
    }

    if (const auto* x = std::get_if<SendPayment>(&m)) return handle_send_payment(*x);

    if (const auto* x = std::get_if<TxSigned>(&m)) {
        if (phase_ != Phase::await_iot_sig) return fail(ProtocolError::unexpected_message);
        if (sign_purpose_ == SignPurpose::payment) {
            if (!pending_snapshot_ || !pending_payment_)
                return fail(ProtocolError::unexpected_message);
            Tx bridge_commit = build_bridge_commitment(*pending_snapshot_, params_);
            Digest h = funding_sighash(bridge_commit);
            if (!scheme_->verify(x->signature, pk(params_.iot.funding), h))
                return fail(ProtocolError::invalid_signature);
            Bytes own = scheme_->sign(h, keys_.funding.secret);
            phase_ = Phase::await_revoke_ack;
            r.out.push_back({LinkId::gateway_bridge, MsgCommitmentSigned{x->signature, own}});
            return r;
        }
        // unilateral-close or revoked-state broadcast signature
        Tx commitment = build_own_commitment(sign_state_index_);
        if (!scheme_->verify(x->signature, pk(params_.iot.funding), funding_sighash(commitment)))
            return fail(ProtocolError::invalid_signature);
        broadcast_iot_sig_ = x->signature;
        broadcast_state_ = sign_state_index_;
        sign_purpose_ = SignPurpose::none;
        phase_ = Phase::operational;
        return r;
    }

    if (std::get_if<ChannelClosingRequest>(&m)) {
        if (phase_ != Phase::operational) return fail(ProtocolError::unexpected_message);
        if (snapshot_.has_unsettled_htlc()) return fail(ProtocolError::pending_htlcs);
        close_fee_payer_ = FeePayer::iot;
        phase_ = Phase::closing;
        my_close_offer_ = -1;
        negotiation_rounds_ = 0;
        r.out.push_back({LinkId::gateway_bridge, MsgShutdown{}});
        return r;
    }

    if (const auto* x = std::get_if<ClosingTxSigned>(&m)) {
        if (phase_ != Phase::closing || agreed_closing_fee_ < 0 || !bridge_closing_sig_)
            return fail(ProtocolError::unexpected_message);
        Tx closing = build_closing_tx(snapshot_, params_, agreed_closing_fee_, close_fee_payer_);
        Digest h = funding_sighash(closing);
        if (!scheme_->verify(x->signature, pk(params_.iot.funding), h))
            return fail(ProtocolError::invalid_signature);
        closing.witnesses.push_back(funding_witness({
            {Bytes(params_.iot.funding.begin(), params_.iot.funding.end()), x->signature},
            {Bytes(pubkeys_.funding.begin(), pubkeys_.funding.end()),
             scheme_->sign(h, keys_.funding.secret)},
            {Bytes(params_.bridge.funding.begin(), params_.bridge.funding.end()),
             *bridge_closing_sig_},
        }));
        phase_ = Phase::closed;
        r.broadcasts.push_back(closing);
        r.out.push_back({LinkId::iot_gateway, ChannelClosed{}});
        return r;
    }

    return fail(ProtocolError::unexpected_message);
}

StepResult Gateway::on_bridge_message(const Message& m) {
    StepResult r;

    if (const auto* x = std::get_if<MsgAcceptChannel>(&m)) {
        if (phase_ != Phase::opening) return fail(ProtocolError::unexpected_message);
        params_.bridge = x->bridge_keys;
        bridge_points_[0] = x->first_rev_point;

        funding_tx_ = build_funding_tx(cfg_.iot_utxo, params_, pk(params_.iot.payment));
        params_.funding_outpoint = OutPoint{funding_tx_.txid(), 0};

        snapshot_ = ChannelSnapshot::initial(params_);
        snapshot_.gateway_rev_point = own_point(0);
        snapshot_.bridge_rev_point = x->first_rev_point;

        phase_ = Phase::await_funding_sig;
        ChannelOpenParams open;
        open.params = params_;
        open.gateway_rev_point = own_point(0);
        open.bridge_rev_point = x->first_rev_point;
        r.out.push_back({LinkId::iot_gateway, FundingSignatureRequest{open}});
        return r;
    }

    if (const auto* x = std::get_if<MsgFundingSigned>(&m)) {
        if (phase_ != Phase::opening || funding_iot_sig_.empty())
            return fail(ProtocolError::unexpected_message);
        Tx own_commit = build_gateway_commitment(snapshot_, params_);
        if (!scheme_->verify(x->sig_bridge, pk(params_.bridge.funding),
                             funding_sighash(own_commit)))
            return fail(ProtocolError::invalid_signature);
        bridge_sig_initial_ = x->sig_bridge;
        phase_ = Phase::await_funding_locked;
        r.broadcasts.push_back(funding_tx_);
        return r;
    }

    if (const auto* x = std::get_if<MsgFundingLocked>(&m)) {
        if (phase_ != Phase::await_funding_locked && phase_ != Phase::operational)
            return fail(ProtocolError::unexpected_message);
        bridge_points_[1] = x->next_rev_point;
        remote_locked_ = true;
        if (self_locked_) phase_ = Phase::operational;
        return r;
    }

    if (const auto* x = std::get_if<MsgRevokeAndAck>(&m)) {
        if (phase_ != Phase::await_revoke_ack || !pending_snapshot_ || !pending_payment_)
            return fail(ProtocolError::unexpected_message);
        // the revealed secret must unlock the bridge's revocation point of
        // the state being revoked
        auto kp = revocation_keypair(x->commitment_secret, *scheme_);
        if (!kp || !(kp->public_key == snapshot_.bridge_rev_point))
            return fail(ProtocolError::invalid_signature);

        uint64_t old_state = snapshot_.state_index;
        watch_entries_.push_back(make_revoked_info(CommitmentSide::bridge, snapshot_, params_,
                                                   x->commitment_secret));

        history_.push_back(snapshot_);
        snapshot_ = *pending_snapshot_;
        pending_snapshot_.reset();
        bridge_points_[snapshot_.state_index + 1] = x->next_rev_point;
        last_payment_ = pending_payment_;
        pending_payment_.reset();
        sign_purpose_ = SignPurpose::none;
        phase_ = Phase::operational;

        r.out.push_back({LinkId::gateway_bridge,
                         MsgRevokeAndAck{chain_.secret(old_state),
                                         own_point(snapshot_.state_index + 1)}});
        r.out.push_back({LinkId::iot_gateway, PaymentSuccess{}});
        return r;
    }

    if (std::get_if<MsgShutdown>(&m)) {
        // the bridge acknowledged our shutdown; open the fee negotiation
        if (phase_ != Phase::closing) return fail(ProtocolError::unexpected_message);
        my_close_offer_ = cfg_.closing_fee_offer;
        Tx closing = build_closing_tx(snapshot_, params_, my_close_offer_, close_fee_payer_);
        r.out.push_back({LinkId::gateway_bridge,
                         MsgClosingSigned{my_close_offer_, sign_closing(closing)}});
        return r;
    }

    if (const auto* x = std::get_if<MsgClosingSigned>(&m)) return handle_closing_signed(*x);

    return fail(ProtocolError::unexpected_message);
}

StepResult Gateway::handle_closing_signed(const MsgClosingSigned& m) {
    StepResult r;
    if (phase_ != Phase::closing || my_close_offer_ < 0)
        return fail(ProtocolError::unexpected_message);
    if (m.fee < 0 || m.fee > cfg_.max_closing_fee || ++negotiation_rounds_ > 64)
        return fail(ProtocolError::negotiation_diverged);

    auto verify_bridge_sig = [&](int64_t fee) {
        Tx closing = build_closing_tx(snapshot_, params_, fee, close_fee_payer_);
        return scheme_->verify(m.signature, pk(params_.bridge.funding), funding_sighash(closing));
    };

    if (m.fee == my_close_offer_ || std::llabs(m.fee - my_close_offer_) <= 1) {
        // agree at the bridge's figure; its signature covers that transaction
        if (!verify_bridge_sig(m.fee)) return fail(ProtocolError::invalid_signature);
        agreed_closing_fee_ = m.fee;
        bridge_closing_sig_ = m.signature;
        Tx closing = build_closing_tx(snapshot_, params_, m.fee, close_fee_payer_);
        if (m.fee != my_close_offer_)
            r.out.push_back({LinkId::gateway_bridge, MsgClosingSigned{m.fee, sign_closing(closing)}});
        r.out.push_back({LinkId::iot_gateway, ClosingTxRequest{closing}});
        return r;
    }

    if (!verify_bridge_sig(m.fee)) return fail(ProtocolError::invalid_signature);
    int64_t counter = (my_close_offer_ + m.fee) / 2;
    my_close_offer_ = counter;
    Tx closing = build_closing_tx(snapshot_, params_, counter, close_fee_payer_);
    r.out.push_back({LinkId::gateway_bridge, MsgClosingSigned{counter, sign_closing(closing)}});
    return r;
}

StepResult Gateway::on_funding_confirmations(uint32_t confirmations) {
    StepResult r;
    if (phase_ != Phase::await_funding_locked || confirmations < params_.funding_depth) return r;
    self_locked_ = true;
    if (remote_locked_) phase_ = Phase::operational;
    r.out.push_back({LinkId::gateway_bridge, MsgFundingLocked{own_point(1)}});
    return r;
}

StepResult Gateway::on_timeout() {
    // unresponsive bridge: before broadcast nothing is at stake, afterwards
    // fall back to asking the IoT for a unilateral-close signature
    if (phase_ == Phase::opening || phase_ == Phase::await_funding_sig) {
        phase_ = Phase::idle;
        return fail(ProtocolError::bridge_unresponsive);
    }
    if (phase_ == Phase::await_funding_locked || phase_ == Phase::await_revoke_ack) {
        StepResult r = request_commitment_signature(snapshot_.state_index,
                                                    SignPurpose::unilateral_close);
        r.error = ProtocolError::bridge_unresponsive;
        return r;
    }
    return fail(ProtocolError::unexpected_message);
}

StepResult Gateway::start_close() {
    if (phase_ != Phase::operational) return fail(ProtocolError::unexpected_message);
    if (snapshot_.has_unsettled_htlc()) return fail(ProtocolError::pending_htlcs);
    if (snapshot_.folded_balances().gateway_fees < cfg_.closing_fee_offer)
        return fail(ProtocolError::insufficient_fee_balance);
    close_fee_payer_ = FeePayer::gateway;
    phase_ = Phase::closing;
    my_close_offer_ = -1;
    negotiation_rounds_ = 0;
    StepResult r;
    r.out.push_back({LinkId::iot_gateway, ChannelClosingRequest{}});
    r.out.push_back({LinkId::gateway_bridge, MsgShutdown{}});
    return r;
}

StepResult Gateway::request_commitment_signature(uint64_t state_index, SignPurpose purpose) {
    if (state_index > snapshot_.state_index) return fail(ProtocolError::unexpected_message);
    if (phase_ != Phase::operational && phase_ != Phase::await_funding_locked &&
        phase_ != Phase::await_revoke_ack)
        return fail(ProtocolError::unexpected_message);
    sign_purpose_ = purpose;
    sign_state_index_ = state_index;
    phase_ = Phase::await_iot_sig;
    StepResult r;
    r.out.push_back({LinkId::iot_gateway, SignTxRequest{build_own_commitment(state_index)}});
    return r;
}

StepResult Gateway::on_bridge_channel_closed() {
    phase_ = Phase::closed;
    StepResult r;
    r.out.push_back({LinkId::iot_gateway, ChannelClosed{}});
    return r;
}

void Gateway::note_htlc_settled(const Digest& payment_hash) {
    snapshot_.mark_settled(payment_hash);
}

std::vector<RevokedCommitmentInfo> Gateway::take_watch_entries() {
    std::vector<RevokedCommitmentInfo> out;
    out.swap(watch_entries_);
    return out;
}

Digest Gateway::fingerprint() const {
    Bytes b;
    b.push_back(uint8_t(phase_));
    append(b, snapshot_bytes(snapshot_));
    put_u64be(b, uint64_t(my_close_offer_));
    put_u64be(b, uint64_t(agreed_closing_fee_));
    b.push_back(pending_snapshot_ ? 1 : 0);
    b.push_back(pending_payment_ ? 1 : 0);
    b.push_back(uint8_t(sign_purpose_));
    return sha256(b);
}

// ===========================================================================
// Bridge
// ===========================================================================

Bridge::Bridge(const SigScheme& scheme, const Digest& master_seed, const BridgeConfig& cfg)
    : scheme_(&scheme),
      keys_(RoleKeySet::derive(scheme, master_seed, "bridge")),
      pubkeys_(keys_.pubkeys()),
      chain_(derive_seed(span_of(master_seed), "bridge/revocation")),
      cfg_(cfg) {}

StepResult Bridge::fail(ProtocolError e) const {
    StepResult r;
    r.error = e;
    return r;
}

Digest Bridge::funding_sighash(const Tx& tx) const {
    return sighash(tx, 0, params_.make_funding_script(), params_.capacity);
}

PublicKey Bridge::own_point(uint64_t state) const { return chain_.point(state, *scheme_); }

const ChannelSnapshot& Bridge::snapshot_at(uint64_t state_index) const {
    if (state_index == snapshot_.state_index) return snapshot_;
    return history_.at(state_index);
}

Tx Bridge::build_own_commitment(uint64_t state_index) const {
    return build_bridge_commitment(snapshot_at(state_index), params_);
}

Tx Bridge::broadcastable_commitment(uint64_t state_index) const {
    Tx tx = build_own_commitment(state_index);
    const auto& sigs = own_commitment_sigs_.at(state_index);
    Bytes own = scheme_->sign(funding_sighash(tx), keys_.funding.secret);
    tx.witnesses.push_back(funding_witness({
        {Bytes(params_.iot.funding.begin(), params_.iot.funding.end()), sigs.first},
        {Bytes(params_.gateway.funding.begin(), params_.gateway.funding.end()), sigs.second},
        {Bytes(pubkeys_.funding.begin(), pubkeys_.funding.end()), own},
    }));
    return tx;
}

Bytes Bridge::co_sign_gateway_commitment(uint64_t state_index) const {
    Tx tx = build_gateway_commitment(snapshot_at(state_index), params_);
    return scheme_->sign(funding_sighash(tx), keys_.funding.secret);
}

std::optional<Bytes> Bridge::preimage_for(const Digest& payment_hash) const {
    auto it = preimages_.find(payment_hash);
    if (it == preimages_.end()) return std::nullopt;
    return it->second;
}

void Bridge::learn_preimage(const Bytes& preimage) {
    Digest hash = sha256(preimage);
    preimages_[hash] = preimage;
    snapshot_.mark_settled(hash);
}

StepResult Bridge::on_message(const Message& m) {
    StepResult r;

    if (const auto* x = std::get_if<MsgOpenChannel>(&m)) {
        if (phase_ != Phase::idle) return fail(ProtocolError::unexpected_message);
        if (x->open_params.params.capacity <= 0) return fail(ProtocolError::bad_message);
        params_ = x->open_params.params;
        params_.bridge = pubkeys_;
        gateway_points_[0] = x->open_params.gateway_rev_point;
        phase_ = Phase::opening;
        r.out.push_back({LinkId::gateway_bridge, MsgAcceptChannel{pubkeys_, own_point(0)}});
        return r;
    }

    if (const auto* x = std::get_if<MsgFundingCreated>(&m)) {
        if (phase_ != Phase::opening) return fail(ProtocolError::unexpected_message);
        if (x->sig_iot.empty()) return fail(ProtocolError::missing_iot_signature);
        params_.funding_outpoint = x->outpoint;
        ChannelSnapshot initial = ChannelSnapshot::initial(params_);
        initial.gateway_rev_point = gateway_points_.at(0);
        initial.bridge_rev_point = own_point(0);

        Tx own_commit = build_bridge_commitment(initial, params_);
        Digest h = funding_sighash(own_commit);
        if (!scheme_->verify(x->sig_iot, pk(params_.iot.funding), h) ||
            !scheme_->verify(x->sig_gateway, pk(params_.gateway.funding), h))
            return fail(ProtocolError::invalid_signature);

        snapshot_ = initial;
        own_commitment_sigs_[0] = {x->sig_iot, x->sig_gateway};
        Tx gw_commit = build_gateway_commitment(initial, params_);
        phase_ = Phase::await_funding_locked;
        r.out.push_back({LinkId::gateway_bridge,
                         MsgFundingSigned{scheme_->sign(funding_sighash(gw_commit),
                                                        keys_.funding.secret)}});
        return r;
    }

    if (const auto* x = std::get_if<MsgFundingLocked>(&m)) {
        if (phase_ != Phase::await_funding_locked && phase_ != Phase::operational)
            return fail(ProtocolError::unexpected_message);
        gateway_points_[1] = x->next_rev_point;
        remote_locked_ = true;
        if (self_locked_) phase_ = Phase::operational;
        return r;
    }

    if (const auto* x = std::get_if<MsgUpdateAddHtlc>(&m)) {
        if (phase_ != Phase::operational || pending_offer_)
            return fail(ProtocolError::unexpected_message);
        if (x->amount <= 0 || x->expiry == 0) return fail(ProtocolError::bad_message);
        pending_offer_ = *x;
        return r;
    }

    if (const auto* x = std::get_if<MsgCommitmentSigned>(&m)) return handle_commitment_signed(*x);

    if (const auto* x = std::get_if<MsgRevokeAndAck>(&m)) {
        // gateway revoking its own old state after a completed update
        if (phase_ != Phase::operational || history_.empty())
            return fail(ProtocolError::unexpected_message);
        const ChannelSnapshot& old = history_.back();
        auto kp = revocation_keypair(x->commitment_secret, *scheme_);
        if (!kp || !(kp->public_key == old.gateway_rev_point))
            return fail(ProtocolError::invalid_signature);
        gateway_points_[snapshot_.state_index + 1] = x->next_rev_point;
        watch_entries_.push_back(
            make_revoked_info(CommitmentSide::gateway, old, params_, x->commitment_secret));
        return r;
    }

    if (std::get_if<MsgShutdown>(&m)) {
        if (phase_ != Phase::operational) return fail(ProtocolError::unexpected_message);
        if (snapshot_.has_unsettled_htlc()) return fail(ProtocolError::pending_htlcs);
        phase_ = Phase::closing;
        negotiation_rounds_ = 0;
        my_close_offer_ = -1;
        r.out.push_back({LinkId::gateway_bridge, MsgShutdown{}});
        return r;
    }

    if (const auto* x = std::get_if<MsgClosingSigned>(&m)) return handle_closing_signed(*x);

    return fail(ProtocolError::unexpected_message);
}

StepResult Bridge::handle_commitment_signed(const MsgCommitmentSigned& m) {
    StepResult r;
    if (phase_ != Phase::operational || !pending_offer_)
        return fail(ProtocolError::unexpected_message);
    if (m.sig_iot.empty()) return fail(ProtocolError::missing_iot_signature);

    // the update_add_htlc carried the forwarded amount; the gross amount is
    // pinned by whichever candidate the IoT actually signed
    std::optional<ChannelSnapshot> accepted;
    for (int64_t gross : recover_gross_candidates(pending_offer_->amount,
                                                  params_.fee_rate_permille)) {
        if (snapshot_.balance_iot < gross) continue;
        try {
            ChannelSnapshot next = snapshot_.with_payment(gross, params_.fee_rate_permille,
                                                          pending_offer_->payment_hash,
                                                          pending_offer_->expiry);
            next.bridge_rev_point = own_point(next.state_index);
            auto gp = gateway_points_.find(next.state_index);
            if (gp == gateway_points_.end()) continue;
            next.gateway_rev_point = gp->second;
            Digest h = funding_sighash(build_bridge_commitment(next, params_));
            if (scheme_->verify(m.sig_iot, pk(params_.iot.funding), h) &&
                scheme_->verify(m.sig_gateway, pk(params_.gateway.funding), h)) {
                accepted = next;
                break;
            }
        } catch (const BuildError&) {
            // a candidate the builders refuse cannot be the signed state
        }
    }
    if (!accepted) return fail(ProtocolError::invalid_signature);

    uint64_t old_state = snapshot_.state_index;
    history_.push_back(snapshot_);
    snapshot_ = *accepted;
    own_commitment_sigs_[snapshot_.state_index] = {m.sig_iot, m.sig_gateway};
    pending_offer_.reset();
    reveal_log_.push_back(old_state);

    r.out.push_back({LinkId::gateway_bridge,
                     MsgRevokeAndAck{chain_.secret(old_state),
                                     own_point(snapshot_.state_index + 1)}});
    return r;
}

StepResult Bridge::handle_closing_signed(const MsgClosingSigned& m) {
    StepResult r;
    if (phase_ != Phase::closing) return fail(ProtocolError::unexpected_message);
    int64_t max_fee = cfg_.max_closing_fee >= 0 ? cfg_.max_closing_fee : 2 * params_.onchain_fee;
    if (m.fee < 0 || m.fee > max_fee || ++negotiation_rounds_ > 64)
        return fail(ProtocolError::negotiation_diverged);

    // the fee payer is not a wire field; the gateway's signature identifies it
    auto check = [&](int64_t fee, FeePayer payer) {
        Tx closing = build_closing_tx(snapshot_, params_, fee, payer);
        return scheme_->verify(m.signature, pk(params_.gateway.funding), funding_sighash(closing));
    };
    if (!close_fee_payer_) {
        for (FeePayer payer : {FeePayer::iot, FeePayer::gateway})
            if (check(m.fee, payer)) {
                close_fee_payer_ = payer;
                break;
            }
        if (!close_fee_payer_) return fail(ProtocolError::invalid_signature);
    } else if (!check(m.fee, *close_fee_payer_)) {
        return fail(ProtocolError::invalid_signature);
    }

    auto sign_at = [&](int64_t fee) {
        Tx closing = build_closing_tx(snapshot_, params_, fee, *close_fee_payer_);
        return scheme_->sign(funding_sighash(closing), keys_.funding.secret);
    };

    if (my_close_offer_ >= 0 && m.fee == my_close_offer_) {
        // gateway echoed our offer: agreement, nothing further to send
        agreed_closing_fee_ = m.fee;
        phase_ = Phase::closed;
        return r;
    }

    int64_t preferred = cfg_.closing_fee_offer >= 0 ? cfg_.closing_fee_offer : m.fee;
    int64_t base = my_close_offer_ >= 0 ? my_close_offer_ : preferred;
    if (std::llabs(m.fee - base) <= 1) {
        agreed_closing_fee_ = m.fee;
        my_close_offer_ = m.fee;
        phase_ = Phase::closed;
        r.out.push_back({LinkId::gateway_bridge, MsgClosingSigned{m.fee, sign_at(m.fee)}});
        return r;
    }

    int64_t counter = my_close_offer_ >= 0 ? (my_close_offer_ + m.fee) / 2 : preferred;
    my_close_offer_ = counter;
    r.out.push_back({LinkId::gateway_bridge, MsgClosingSigned{counter, sign_at(counter)}});
    return r;
}

StepResult Bridge::on_funding_confirmations(uint32_t confirmations) {
    StepResult r;
    if (phase_ != Phase::await_funding_locked || confirmations < params_.funding_depth) return r;
    self_locked_ = true;
    if (remote_locked_) phase_ = Phase::operational;
    r.out.push_back({LinkId::gateway_bridge, MsgFundingLocked{own_point(1)}});
    return r;
}

std::vector<RevokedCommitmentInfo> Bridge::take_watch_entries() {
    std::vector<RevokedCommitmentInfo> out;
    out.swap(watch_entries_);
    return out;
}

Digest Bridge::fingerprint() const {
    Bytes b;
    b.push_back(uint8_t(phase_));
    append(b, snapshot_bytes(snapshot_));
    put_u64be(b, uint64_t(my_close_offer_));
    put_u64be(b, uint64_t(agreed_closing_fee_));
    b.push_back(pending_offer_ ? 1 : 0);
    put_u64be(b, reveal_log_.size());
    return sha256(b);
}

} // namespace iotln
