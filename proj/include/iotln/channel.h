// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CHANNEL_H
#define IOTLN_CHANNEL_H

#include <iotln/messages.h>
#include <iotln/tx.h>

#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace iotln {

enum class Phase : uint8_t {
    idle,
    opening,
    await_funding_sig,
    await_funding_locked,
    operational,
    await_iot_sig,
    await_revoke_ack,
    closing,
    closed,
};

const char* phase_name(Phase p);

enum class ProtocolError : uint8_t {
    none,
    unexpected_message,
    bad_message,
    balance_check_failed,
    bridge_unresponsive,
    fee_underflow,
    insufficient_funds,
    missing_iot_signature,
    invalid_signature,
    negotiation_diverged,
    insufficient_fee_balance,
    pending_htlcs,
};

const char* protocol_error_name(ProtocolError e);

enum class LinkId : uint8_t { iot_gateway, gateway_bridge };

struct Outbound {
    LinkId link;
    Message msg;
};

struct StepResult {
    std::vector<Outbound> out;
    std::vector<Tx> broadcasts;
    ProtocolError error = ProtocolError::none;

    bool ok() const { return error == ProtocolError::none; }
};

// Per-state revocation secrets: secret(i) = SHA256(seed || i_be64). Flat
// derivation keeps every secret independent; revealing one state never
// exposes a later one.
class RevocationChain {
public:
    RevocationChain() = default;
    explicit RevocationChain(const Digest& seed) : seed_(seed) {}

    Digest secret(uint64_t index) const;
    PublicKey point(uint64_t index, const SigScheme& scheme) const;

private:
    Digest seed_{};
};

// Derives the revocation key pair a revealed secret unlocks.
std::optional<KeyPair> revocation_keypair(const Digest& secret, const SigScheme& scheme);

struct RoleKeySet {
    KeyPair funding, payment, delayed, htlc;

    RolePubkeys pubkeys() const;
    static RoleKeySet derive(const SigScheme& scheme, const Digest& seed, std::string_view role);
};

// Everything a watcher needs to punish one revoked commitment: the exact tx,
// the revealed secret, and which outputs the revocation key unlocks.
struct RevokedCommitmentInfo {
    Digest txid{};
    Tx commitment;
    Digest revocation_secret{};
    CommitmentSide owner = CommitmentSide::gateway;
    std::vector<uint32_t> to_local_outputs;  // spendable with witness <sig> <1>
    std::vector<uint32_t> htlc_outputs;      // spendable with witness <sig> <rev_pubkey>
};

RevokedCommitmentInfo make_revoked_info(CommitmentSide owner, const ChannelSnapshot& snapshot,
                                        const ChannelParams& params, const Digest& secret);

// ---------------------------------------------------------------------------
// IoT device
//
// Holds no commitment transactions and no revocation state; it answers
// signature requests after recomputing the balance it expects from its own
// bookkeeping, and refuses anything paying it less.
// ---------------------------------------------------------------------------

class IotDevice {
public:
    IotDevice(const SigScheme& scheme, const Digest& master_seed);

    // The device's on-chain wallet output funding the channel. Must be set
    // before a channel can be opened; the device only signs a funding
    // transaction it has rebuilt from this UTXO itself.
    void set_wallet(const Utxo& utxo) { wallet_ = utxo; }

    StepResult request_open(int64_t capacity);
    StepResult request_pay(int64_t amount, const PublicKey& destination);
    StepResult request_close();
    StepResult on_message(const Message& m);

    const RolePubkeys& pubkeys() const { return pubkeys_; }
    Phase phase() const { return phase_; }
    int64_t expected_balance() const { return expected_balance_; }
    uint64_t payments_completed() const { return payments_completed_; }
    Digest fingerprint() const;

private:
    StepResult fail(ProtocolError e) const;
    std::optional<int64_t> to_iot_value(const Tx& tx) const;

    const SigScheme* scheme_;
    RoleKeySet keys_;
    RolePubkeys pubkeys_;
    Phase phase_ = Phase::idle;
    std::optional<Utxo> wallet_;
    std::optional<ChannelOpenParams> open_params_;
    int64_t requested_capacity_ = 0;
    int64_t expected_balance_ = 0;
    std::optional<int64_t> pending_amount_;
    bool close_initiated_here_ = false;
    uint64_t payments_completed_ = 0;
};

// ---------------------------------------------------------------------------
// LN gateway
// ---------------------------------------------------------------------------

struct GatewayConfig {
    RolePubkeys iot_pubkeys;  // pre-shared device registration
    Utxo iot_utxo;            // funding source owned by the IoT wallet
    int64_t onchain_fee = 10'000;
    uint16_t fee_rate_permille = 100;
    uint32_t csv_delay = 144;
    uint32_t funding_depth = 3;
    uint32_t htlc_expiry_delta = 40;
    int64_t closing_fee_offer = -1;  // -1: offer onchain_fee
    int64_t max_closing_fee = -1;    // -1: 2 * onchain_fee
};

struct PendingPayment {
    int64_t amount = 0;
    int64_t fee = 0;
    Digest payment_hash{};
    Bytes preimage;
    PublicKey destination{};
    uint32_t expiry = 0;
};

enum class SignPurpose : uint8_t { none, payment, unilateral_close, cheat_broadcast };

class Gateway {
public:
    Gateway(const SigScheme& scheme, const Digest& master_seed, const GatewayConfig& cfg);

    StepResult on_iot_message(const Message& m);
    StepResult on_bridge_message(const Message& m);
    StepResult on_funding_confirmations(uint32_t confirmations);
    StepResult on_timeout();
    StepResult start_close();  // gateway-initiated mutual close
    // Asks the IoT for a commitment signature; honest close uses the current
    // state, a cheating gateway passes an older index.
    StepResult request_commitment_signature(uint64_t state_index, SignPurpose purpose);
    StepResult on_bridge_channel_closed();

    void set_chain_height(uint32_t h) { chain_height_ = h; }
    void note_htlc_settled(const Digest& payment_hash);

    const ChannelParams& params() const { return params_; }
    const ChannelSnapshot& snapshot() const { return snapshot_; }
    const ChannelSnapshot& snapshot_at(uint64_t state_index) const;
    Phase phase() const { return phase_; }
    const Tx& funding_tx() const { return funding_tx_; }
    const RolePubkeys& pubkeys() const { return pubkeys_; }
    const std::optional<PendingPayment>& last_payment() const { return last_payment_; }
    int64_t agreed_closing_fee() const { return agreed_closing_fee_; }

    Tx build_own_commitment(uint64_t state_index) const;
    Bytes sign_own_commitment(const Tx& commitment) const;
    Bytes sign_closing(const Tx& closing) const;
    // IoT commitment signature captured by the unilateral-close/cheat flow.
    const std::optional<Bytes>& pending_broadcast_iot_sig() const { return broadcast_iot_sig_; }
    uint64_t pending_broadcast_state() const { return broadcast_state_; }

    // Revoked bridge states this gateway may punish (drained by the caller).
    std::vector<RevokedCommitmentInfo> take_watch_entries();

    Digest fingerprint() const;

private:
    StepResult fail(ProtocolError e) const;
    Digest funding_sighash(const Tx& tx) const;
    PublicKey own_point(uint64_t state) const;
    StepResult handle_open_request(const OpenChannelRequest& m);
    StepResult handle_send_payment(const SendPayment& m);
    StepResult handle_closing_signed(const MsgClosingSigned& m);

    const SigScheme* scheme_;
    RoleKeySet keys_;
    RolePubkeys pubkeys_;
    RevocationChain chain_;
    GatewayConfig cfg_;

    Phase phase_ = Phase::idle;
    ChannelParams params_;
    ChannelSnapshot snapshot_;
    std::vector<ChannelSnapshot> history_;  // by state index
    std::optional<ChannelSnapshot> pending_snapshot_;
    std::optional<PendingPayment> pending_payment_;
    std::optional<PendingPayment> last_payment_;
    std::map<uint64_t, PublicKey> bridge_points_;  // state index -> revocation point
    Tx funding_tx_;
    Bytes funding_iot_sig_;
    Bytes bridge_sig_initial_;  // bridge co-signature for our state-0 commitment
    uint64_t preimage_counter_ = 0;
    uint32_t chain_height_ = 0;
    Digest master_seed_{};
    bool self_locked_ = false;
    bool remote_locked_ = false;

    SignPurpose sign_purpose_ = SignPurpose::none;
    uint64_t sign_state_index_ = 0;
    std::optional<Bytes> broadcast_iot_sig_;
    uint64_t broadcast_state_ = 0;

    FeePayer close_fee_payer_ = FeePayer::iot;
    int64_t my_close_offer_ = -1;
    int64_t agreed_closing_fee_ = -1;
    int negotiation_rounds_ = 0;
    std::optional<Bytes> bridge_closing_sig_;

    std::vector<RevokedCommitmentInfo> watch_entries_;
};

// ---------------------------------------------------------------------------
// Bridge LN node
// ---------------------------------------------------------------------------

struct BridgeConfig {
    int64_t closing_fee_offer = -1;  // -1: accept whatever the gateway offers
    int64_t max_closing_fee = -1;
};

class Bridge {
public:
    Bridge(const SigScheme& scheme, const Digest& master_seed, const BridgeConfig& cfg = {});

    StepResult on_message(const Message& m);
    StepResult on_funding_confirmations(uint32_t confirmations);

    void learn_preimage(const Bytes& preimage);  // destination-side settlement

    const ChannelParams& params() const { return params_; }
    const ChannelSnapshot& snapshot() const { return snapshot_; }
    const ChannelSnapshot& snapshot_at(uint64_t state_index) const;
    Phase phase() const { return phase_; }
    const RolePubkeys& pubkeys() const { return pubkeys_; }

    Tx build_own_commitment(uint64_t state_index) const;
    // Fully witnessed commitment for broadcast (honest: latest; cheat: older).
    Tx broadcastable_commitment(uint64_t state_index) const;
    // The bridge's signature over the gateway's commitment for a completed
    // state; models the symmetric signature exchange the channel relies on.
    Bytes co_sign_gateway_commitment(uint64_t state_index) const;
    std::optional<Bytes> preimage_for(const Digest& payment_hash) const;

    // Ordered log of revealed secrets, for monotonicity checks.
    const std::vector<uint64_t>& reveal_log() const { return reveal_log_; }

    // Revoked gateway states this bridge may punish (drained by the caller).
    std::vector<RevokedCommitmentInfo> take_watch_entries();

    Digest fingerprint() const;

private:
    StepResult fail(ProtocolError e) const;
    Digest funding_sighash(const Tx& tx) const;
    PublicKey own_point(uint64_t state) const;
    StepResult handle_commitment_signed(const MsgCommitmentSigned& m);
    StepResult handle_closing_signed(const MsgClosingSigned& m);

    const SigScheme* scheme_;
    RoleKeySet keys_;
    RolePubkeys pubkeys_;
    RevocationChain chain_;
    BridgeConfig cfg_;

    Phase phase_ = Phase::idle;
    ChannelParams params_;
    ChannelSnapshot snapshot_;
    std::vector<ChannelSnapshot> history_;
    std::map<uint64_t, PublicKey> gateway_points_;
    std::map<uint64_t, std::pair<Bytes, Bytes>> own_commitment_sigs_;  // state -> (iot, gateway)
    std::optional<MsgUpdateAddHtlc> pending_offer_;
    std::map<Digest, Bytes> preimages_;  // payment_hash -> preimage
    std::vector<uint64_t> reveal_log_;
    bool self_locked_ = false;
    bool remote_locked_ = false;

    int64_t my_close_offer_ = -1;
    int64_t agreed_closing_fee_ = -1;
    std::optional<FeePayer> close_fee_payer_;
    int negotiation_rounds_ = 0;

    std::vector<RevokedCommitmentInfo> watch_entries_;
};

// Candidate gross payment amounts whose canonical fee split forwards `net`:
// at most two consecutive values; the partner's signature picks the real one.
std::vector<int64_t> recover_gross_candidates(int64_t net, uint16_t fee_rate_permille);

} // namespace iotln

#endif // IOTLN_CHANNEL_H
