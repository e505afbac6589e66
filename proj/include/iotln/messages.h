// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_MESSAGES_H
#define IOTLN_MESSAGES_H

#include <iotln/crypto.h>
#include <iotln/tx.h>

#include <optional>
#include <variant>

namespace iotln {

// Channel parameters as carried on the wire during establishment: the
// channel terms plus the first revocation points of both commitment owners.
// Bridge-side fields stay zeroed in open_channel until accept_channel fills
// them; the funding outpoint stays zeroed until the funding tx exists.
struct ChannelOpenParams {
    ChannelParams params;
    PublicKey gateway_rev_point{};
    PublicKey bridge_rev_point{};

    bool operator==(const ChannelOpenParams&) const = default;
};

// --- IoT <-> gateway (sealed inside SecureEnvelope on the wire) -----------

struct OpenChannelRequest {
    int64_t capacity = 0;
    bool operator==(const OpenChannelRequest&) const = default;
};

struct FundingSignatureRequest {
    ChannelOpenParams open_params;
    bool operator==(const FundingSignatureRequest&) const = default;
};

// Carries the IoT signature over the bridge's initial commitment plus the
// wallet signature authorizing the funding input, both over transactions the
// device rebuilt locally.
struct FundingSigned {
    Bytes signature;
    Bytes wallet_signature;
    bool operator==(const FundingSigned&) const = default;
};

struct SendPayment {
    int64_t amount = 0;
    PublicKey destination{};
    bool operator==(const SendPayment&) const = default;
};

struct SignTxRequest {
    Tx tx;
    bool operator==(const SignTxRequest&) const = default;
};

struct TxSigned {
    Bytes signature;
    bool operator==(const TxSigned&) const = default;
};

struct PaymentSuccess {
    bool operator==(const PaymentSuccess&) const = default;
};

struct ChannelClosingRequest {
    bool operator==(const ChannelClosingRequest&) const = default;
};

struct ClosingTxRequest {
    Tx tx;
    bool operator==(const ClosingTxRequest&) const = default;
};

struct ClosingTxSigned {
    Bytes signature;
    bool operator==(const ClosingTxSigned&) const = default;
};

struct ChannelClosed {
    bool operator==(const ChannelClosed&) const = default;
};

// --- gateway <-> bridge (sent bare) ----------------------------------------

struct MsgOpenChannel {
    ChannelOpenParams open_params;
    bool operator==(const MsgOpenChannel&) const = default;
};

struct MsgAcceptChannel {
    RolePubkeys bridge_keys;         // funding_pubkey plus the side keys
    PublicKey first_rev_point{};     // bridge commitment, state 0
    bool operator==(const MsgAcceptChannel&) const = default;
};

struct MsgFundingCreated {
    OutPoint outpoint;
    Bytes sig_iot;
    Bytes sig_gateway;
    bool operator==(const MsgFundingCreated&) const = default;
};

struct MsgFundingSigned {
    Bytes sig_bridge;
    bool operator==(const MsgFundingSigned&) const = default;
};

struct MsgFundingLocked {
    PublicKey next_rev_point{};  // sender's commitment point for state 1
    bool operator==(const MsgFundingLocked&) const = default;
};

struct MsgUpdateAddHtlc {
    int64_t amount = 0;  // forwarded amount, after the gateway fee
    Digest payment_hash{};
    uint32_t expiry = 0;
    PublicKey destination{};  // carried in clear; onion routing is out of scope
    bool operator==(const MsgUpdateAddHtlc&) const = default;
};

struct MsgCommitmentSigned {
    Bytes sig_iot;
    Bytes sig_gateway;
    bool operator==(const MsgCommitmentSigned&) const = default;
};

struct MsgRevokeAndAck {
    Digest commitment_secret{};   // secret of the now-revoked state
    PublicKey next_rev_point{};   // sender's commitment point two states ahead
    bool operator==(const MsgRevokeAndAck&) const = default;
};

struct MsgShutdown {
    bool operator==(const MsgShutdown&) const = default;
};

struct MsgClosingSigned {
    int64_t fee = 0;
    Bytes signature;
    bool operator==(const MsgClosingSigned&) const = default;
};

using Message =
    std::variant<OpenChannelRequest, FundingSignatureRequest, FundingSigned, SendPayment,
                 SignTxRequest, TxSigned, PaymentSuccess, ChannelClosingRequest,
                 ClosingTxRequest, ClosingTxSigned, ChannelClosed, MsgOpenChannel,
                 MsgAcceptChannel, MsgFundingCreated, MsgFundingSigned, MsgFundingLocked,
                 MsgUpdateAddHtlc, MsgCommitmentSigned, MsgRevokeAndAck, MsgShutdown,
                 MsgClosingSigned>;

uint8_t message_type(const Message& m);
const char* message_name(const Message& m);

// Payload only; the type byte travels separately (envelope header on the IoT
// link, leading byte on the bare link).
Bytes encode_message_payload(const Message& m);
std::optional<Message> decode_message(uint8_t msg_type, ByteSpan payload);

// Bare framing for the gateway<->bridge link: type byte || payload.
Bytes encode_message(const Message& m);
std::optional<Message> decode_message(ByteSpan wire);

// Envelope helpers for the IoT link.
Bytes seal_message(const Message& m, const EnvelopeKeys& keys);
std::variant<Message, EnvelopeError> open_message(ByteSpan wire, const EnvelopeKeys& keys);

} // namespace iotln

#endif // IOTLN_MESSAGES_H
