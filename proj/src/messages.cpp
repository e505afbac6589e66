// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/messages.h>

#include <cstring>

namespace iotln {

namespace {

// msg_type bytes: 0x01-0x0b IoT link, 0x20-0x29 gateway-bridge link
constexpr uint8_t T_OPEN_CHANNEL_REQUEST = 0x01;
constexpr uint8_t T_FUNDING_SIGNATURE_REQUEST = 0x02;
constexpr uint8_t T_FUNDING_SIGNED = 0x03;
constexpr uint8_t T_SEND_PAYMENT = 0x04;
constexpr uint8_t T_SIGN_TX_REQUEST = 0x05;
constexpr uint8_t T_TX_SIGNED = 0x06;
constexpr uint8_t T_PAYMENT_SUCCESS = 0x07;
constexpr uint8_t T_CHANNEL_CLOSING_REQUEST = 0x08;
constexpr uint8_t T_CLOSING_TX_REQUEST = 0x09;
constexpr uint8_t T_CLOSING_TX_SIGNED = 0x0a;
constexpr uint8_t T_CHANNEL_CLOSED = 0x0b;
constexpr uint8_t T_LN_OPEN_CHANNEL = 0x20;
constexpr uint8_t T_LN_ACCEPT_CHANNEL = 0x21;
constexpr uint8_t T_LN_FUNDING_CREATED = 0x22;
constexpr uint8_t T_LN_FUNDING_SIGNED = 0x23;
constexpr uint8_t T_LN_FUNDING_LOCKED = 0x24;
constexpr uint8_t T_LN_UPDATE_ADD_HTLC = 0x25;
constexpr uint8_t T_LN_COMMITMENT_SIGNED = 0x26;
constexpr uint8_t T_LN_REVOKE_AND_ACK = 0x27;
constexpr uint8_t T_LN_SHUTDOWN = 0x28;
constexpr uint8_t T_LN_CLOSING_SIGNED = 0x29;

void put_pubkey(Bytes& out, const PublicKey& pk) { out.insert(out.end(), pk.begin(), pk.end()); }

void put_digest(Bytes& out, const Digest& d) { out.insert(out.end(), d.begin(), d.end()); }

void put_var_bytes(Bytes& out, const Bytes& b) {
    put_u16be(out, uint16_t(b.size()));
    append(out, b);
}

void put_role_keys(Bytes& out, const RolePubkeys& k) {
    put_pubkey(out, k.funding);
    put_pubkey(out, k.payment);
    put_pubkey(out, k.delayed);
    put_pubkey(out, k.htlc);
}

void put_outpoint(Bytes& out, const OutPoint& o) {
    put_digest(out, o.txid);
    put_u32be(out, o.vout);
}

void put_open_params(Bytes& out, const ChannelOpenParams& p) {
    put_u64be(out, uint64_t(p.params.capacity));
    put_role_keys(out, p.params.iot);
    put_role_keys(out, p.params.gateway);
    put_role_keys(out, p.params.bridge);
    put_u32be(out, p.params.csv_delay);
    put_u16be(out, p.params.fee_rate_permille);
    put_u64be(out, uint64_t(p.params.onchain_fee));
    put_u32be(out, p.params.funding_depth);
    put_outpoint(out, p.params.funding_outpoint);
    put_pubkey(out, p.gateway_rev_point);
    put_pubkey(out, p.bridge_rev_point);
}

void put_tx(Bytes& out, const Tx& tx) {
    Bytes ser = tx.serialize();
    put_u32be(out, uint32_t(ser.size()));
    append(out, ser);
}

PublicKey read_pubkey(ByteReader& r) { return r.take_array<33>(); }

Digest read_digest(ByteReader& r) { return r.take_array<32>(); }

Bytes read_var_bytes(ByteReader& r) {
    uint16_t n = r.u16be();
    return r.take(n);
}

RolePubkeys read_role_keys(ByteReader& r) {
    RolePubkeys k;
    k.funding = read_pubkey(r);
    k.payment = read_pubkey(r);
    k.delayed = read_pubkey(r);
    k.htlc = read_pubkey(r);
    return k;
}

OutPoint read_outpoint(ByteReader& r) {
    OutPoint o;
    o.txid = read_digest(r);
    o.vout = r.u32be();
    return o;
}

ChannelOpenParams read_open_params(ByteReader& r) {
    ChannelOpenParams p;
    p.params.capacity = int64_t(r.u64be());
    p.params.iot = read_role_keys(r);
    p.params.gateway = read_role_keys(r);
    p.params.bridge = read_role_keys(r);
    p.params.csv_delay = r.u32be();
    p.params.fee_rate_permille = r.u16be();
    p.params.onchain_fee = int64_t(r.u64be());
    p.params.funding_depth = r.u32be();
    p.params.funding_outpoint = read_outpoint(r);
    p.gateway_rev_point = read_pubkey(r);
    p.bridge_rev_point = read_pubkey(r);
    return p;
}

std::optional<Tx> read_tx(ByteReader& r) {
    uint32_t n = r.u32be();
    return Tx::deserialize(r.take(n));
}

} // namespace

uint8_t message_type(const Message& m) {
    struct V {
        uint8_t operator()(const OpenChannelRequest&) { return T_OPEN_CHANNEL_REQUEST; }
        uint8_t operator()(const FundingSignatureRequest&) { return T_FUNDING_SIGNATURE_REQUEST; }
        uint8_t operator()(const FundingSigned&) { return T_FUNDING_SIGNED; }
        uint8_t operator()(const SendPayment&) { return T_SEND_PAYMENT; }
        uint8_t operator()(const SignTxRequest&) { return T_SIGN_TX_REQUEST; }
        uint8_t operator()(const TxSigned&) { return T_TX_SIGNED; }
        uint8_t operator()(const PaymentSuccess&) { return T_PAYMENT_SUCCESS; }
        uint8_t operator()(const ChannelClosingRequest&) { return T_CHANNEL_CLOSING_REQUEST; }
        uint8_t operator()(const ClosingTxRequest&) { return T_CLOSING_TX_REQUEST; }
        uint8_t operator()(const ClosingTxSigned&) { return T_CLOSING_TX_SIGNED; }
        uint8_t operator()(const ChannelClosed&) { return T_CHANNEL_CLOSED; }
        uint8_t operator()(const MsgOpenChannel&) { return T_LN_OPEN_CHANNEL; }
        uint8_t operator()(const MsgAcceptChannel&) { return T_LN_ACCEPT_CHANNEL; }
        uint8_t operator()(const MsgFundingCreated&) { return T_LN_FUNDING_CREATED; }
        uint8_t operator()(const MsgFundingSigned&) { return T_LN_FUNDING_SIGNED; }
        uint8_t operator()(const MsgFundingLocked&) { return T_LN_FUNDING_LOCKED; }
        uint8_t operator()(const MsgUpdateAddHtlc&) { return T_LN_UPDATE_ADD_HTLC; }
        uint8_t operator()(const MsgCommitmentSigned&) { return T_LN_COMMITMENT_SIGNED; }
        uint8_t operator()(const MsgRevokeAndAck&) { return T_LN_REVOKE_AND_ACK; }
        uint8_t operator()(const MsgShutdown&) { return T_LN_SHUTDOWN; }
        uint8_t operator()(const MsgClosingSigned&) { return T_LN_CLOSING_SIGNED; }
    };
    return std::visit(V{}, m);
}

const char* message_name(const Message& m) {
    struct V {
        const char* operator()(const OpenChannelRequest&) { return "OpenChannelRequest"; }
        const char* operator()(const FundingSignatureRequest&) { return "FundingSignatureRequest"; }
        const char* operator()(const FundingSigned&) { return "FundingSigned"; }
        const char* operator()(const SendPayment&) { return "SendPayment"; }
        const char* operator()(const SignTxRequest&) { return "SignTxRequest"; }
        const char* operator()(const TxSigned&) { return "TxSigned"; }
        const char* operator()(const PaymentSuccess&) { return "PaymentSuccess"; }
        const char* operator()(const ChannelClosingRequest&) { return "ChannelClosingRequest"; }
        const char* operator()(const ClosingTxRequest&) { return "ClosingTxRequest"; }
        const char* operator()(const ClosingTxSigned&) { return "ClosingTxSigned"; }
        const char* operator()(const ChannelClosed&) { return "ChannelClosed"; }
        const char* operator()(const MsgOpenChannel&) { return "open_channel"; }
        const char* operator()(const MsgAcceptChannel&) { return "accept_channel"; }
        const char* operator()(const MsgFundingCreated&) { return "funding_created"; }
        const char* operator()(const MsgFundingSigned&) { return "funding_signed"; }
        const char* operator()(const MsgFundingLocked&) { return "funding_locked"; }
        const char* operator()(const MsgUpdateAddHtlc&) { return "update_add_htlc"; }
        const char* operator()(const MsgCommitmentSigned&) { return "commitment_signed"; }
        const char* operator()(const MsgRevokeAndAck&) { return "revoke_and_ack"; }
        const char* operator()(const MsgShutdown&) { return "shutdown"; }
        const char* operator()(const MsgClosingSigned&) { return "closing_signed"; }
    };
    return std::visit(V{}, m);
}

Bytes encode_message_payload(const Message& m) {
    Bytes out;
    struct V {
        Bytes& out;
        void operator()(const OpenChannelRequest& x) { put_u64be(out, uint64_t(x.capacity)); }
        void operator()(const FundingSignatureRequest& x) { put_open_params(out, x.open_params); }
        void operator()(const FundingSigned& x) {
            put_var_bytes(out, x.signature);
            put_var_bytes(out, x.wallet_signature);
        }
        void operator()(const SendPayment& x) {
            put_u64be(out, uint64_t(x.amount));
            put_pubkey(out, x.destination);
        }
        void operator()(const SignTxRequest& x) { put_tx(out, x.tx); }
        void operator()(const TxSigned& x) { put_var_bytes(out, x.signature); }
        void operator()(const PaymentSuccess&) {}
        void operator()(const ChannelClosingRequest&) {}
        void operator()(const ClosingTxRequest& x) { put_tx(out, x.tx); }
        void operator()(const ClosingTxSigned& x) { put_var_bytes(out, x.signature); }
        void operator()(const ChannelClosed&) {}
        void operator()(const MsgOpenChannel& x) { put_open_params(out, x.open_params); }
        void operator()(const MsgAcceptChannel& x) {
            put_role_keys(out, x.bridge_keys);
            put_pubkey(out, x.first_rev_point);
        }
        void operator()(const MsgFundingCreated& x) {
            put_outpoint(out, x.outpoint);
            put_var_bytes(out, x.sig_iot);
            put_var_bytes(out, x.sig_gateway);
        }
        void operator()(const MsgFundingSigned& x) { put_var_bytes(out, x.sig_bridge); }
        void operator()(const MsgFundingLocked& x) { put_pubkey(out, x.next_rev_point); }
        void operator()(const MsgUpdateAddHtlc& x) {
            put_u64be(out, uint64_t(x.amount));
            put_digest(out, x.payment_hash);
            put_u32be(out, x.expiry);
            put_pubkey(out, x.destination);
        }
        void operator()(const MsgCommitmentSigned& x) {
            put_var_bytes(out, x.sig_iot);
            put_var_bytes(out, x.sig_gateway);
        }
        void operator()(const MsgRevokeAndAck& x) {
            put_digest(out, x.commitment_secret);
            put_pubkey(out, x.next_rev_point);
        }
        void operator()(const MsgShutdown&) {}
        void operator()(const MsgClosingSigned& x) {
            put_u64be(out, uint64_t(x.fee));
            put_var_bytes(out, x.signature);
        }
    };
    std::visit(V{out}, m);
    return out;
}

std::optional<Message> decode_message(uint8_t msg_type, ByteSpan payload) {
    try {
        ByteReader r(payload);
        std::optional<Message> m;
        switch (msg_type) {
            case T_OPEN_CHANNEL_REQUEST:
                m = OpenChannelRequest{int64_t(r.u64be())};
                break;
            case T_FUNDING_SIGNATURE_REQUEST:
                m = FundingSignatureRequest{read_open_params(r)};
                break;
            case T_FUNDING_SIGNED: {
                FundingSigned x;
                x.signature = read_var_bytes(r);
                x.wallet_signature = read_var_bytes(r);
                m = x;
                break;
            }
            case T_SEND_PAYMENT: {
                SendPayment x;
                x.amount = int64_t(r.u64be());
                x.destination = read_pubkey(r);
                m = x;
                break;
            }
            case T_SIGN_TX_REQUEST: {
                auto tx = read_tx(r);
                if (!tx) return std::nullopt;
                m = SignTxRequest{*tx};
                break;
            }
            case T_TX_SIGNED:
                m = TxSigned{read_var_bytes(r)};
                break;
            case T_PAYMENT_SUCCESS:
                m = PaymentSuccess{};
                break;
            case T_CHANNEL_CLOSING_REQUEST:
                m = ChannelClosingRequest{};
                break;
            case T_CLOSING_TX_REQUEST: {
                auto tx = read_tx(r);
                if (!tx) return std::nullopt;
                m = ClosingTxRequest{*tx};
                break;
            }
            case T_CLOSING_TX_SIGNED:
                m = ClosingTxSigned{read_var_bytes(r)};
                break;
            case T_CHANNEL_CLOSED:
                m = ChannelClosed{};
                break;
            case T_LN_OPEN_CHANNEL:
                m = MsgOpenChannel{read_open_params(r)};
                break;
            case T_LN_ACCEPT_CHANNEL: {
                MsgAcceptChannel x;
                x.bridge_keys = read_role_keys(r);
                x.first_rev_point = read_pubkey(r);
                m = x;
                break;
            }
            case T_LN_FUNDING_CREATED: {
                MsgFundingCreated x;
                x.outpoint = read_outpoint(r);
                x.sig_iot = read_var_bytes(r);
                x.sig_gateway = read_var_bytes(r);
                m = x;
                break;
            }
            case T_LN_FUNDING_SIGNED:
                m = MsgFundingSigned{read_var_bytes(r)};
                break;
            case T_LN_FUNDING_LOCKED:
                m = MsgFundingLocked{read_pubkey(r)};
                break;
            case T_LN_UPDATE_ADD_HTLC: {
                MsgUpdateAddHtlc x;
                x.amount = int64_t(r.u64be());
                x.payment_hash = read_digest(r);
                x.expiry = r.u32be();
                x.destination = read_pubkey(r);
                m = x;
                break;
            }
            case T_LN_COMMITMENT_SIGNED: {
                MsgCommitmentSigned x;
                x.sig_iot = read_var_bytes(r);
                x.sig_gateway = read_var_bytes(r);
                m = x;
                break;
            }
            case T_LN_REVOKE_AND_ACK: {
                MsgRevokeAndAck x;
                x.commitment_secret = read_digest(r);
                x.next_rev_point = read_pubkey(r);
                m = x;
                break;
            }
            case T_LN_SHUTDOWN:
                m = MsgShutdown{};
                break;
            case T_LN_CLOSING_SIGNED: {
                MsgClosingSigned x;
                x.fee = int64_t(r.u64be());
                x.signature = read_var_bytes(r);
                m = x;
                break;
            }
            default:
                return std::nullopt;  // unknown msg_type
        }
        if (!r.empty()) return std::nullopt;  // trailing bytes rejected
        return m;
    } catch (const std::out_of_range&) {
        return std::nullopt;
    }
}

Bytes encode_message(const Message& m) {
    Bytes out;
    out.push_back(message_type(m));
    Bytes payload = encode_message_payload(m);
    append(out, payload);
    return out;
}

std::optional<Message> decode_message(ByteSpan wire) {
    if (wire.empty()) return std::nullopt;
    return decode_message(wire[0], wire.subspan(1));
}

Bytes seal_message(const Message& m, const EnvelopeKeys& keys) {
    return seal_envelope(message_type(m), encode_message_payload(m), keys).serialize();
}

std::variant<Message, EnvelopeError> open_message(ByteSpan wire, const EnvelopeKeys& keys) {
    auto opened = open_envelope(wire, keys);
    if (std::holds_alternative<EnvelopeError>(opened))
        return std::get<EnvelopeError>(opened);
    const OpenedEnvelope& env = std::get<OpenedEnvelope>(opened);
    auto m = decode_message(env.msg_type, env.plaintext);
    if (!m) return EnvelopeError::bad_length;
    return *m;
}

} // namespace iotln
