// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_SCRIPT_H
#define IOTLN_SCRIPT_H

#include <iotln/crypto.h>
#include <iotln/hash.h>
#include <iotln/util.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iotln {

// Whitelisted opcode subset; byte values from the standard Bitcoin table.
enum class Opcode : uint8_t {
    op_0 = 0x00,
    op_pushdata1 = 0x4c,
    op_1 = 0x51,
    op_16 = 0x60,
    op_if = 0x63,
    op_notif = 0x64,
    op_else = 0x67,
    op_endif = 0x68,
    op_drop = 0x75,
    op_dup = 0x76,
    op_swap = 0x7c,
    op_size = 0x82,
    op_equal = 0x87,
    op_equalverify = 0x88,
    op_sha256 = 0xa8,
    op_hash160 = 0xa9,
    op_checksig = 0xac,
    op_checkmultisig = 0xae,
    op_checklocktimeverify = 0xb1,
    op_checksequenceverify = 0xb2,
};

struct Token {
    bool is_push = false;
    Opcode op = Opcode::op_0;
    Bytes data;  // push payload (empty push is OP_0)

    bool operator==(const Token&) const = default;

    static Token opcode(Opcode o) { return Token{false, o, {}}; }
    static Token push(ByteSpan b) { return Token{true, Opcode::op_0, Bytes(b.begin(), b.end())}; }
    static Token num(int64_t v);  // minimal numeric push (OP_0/OP_1..16 or ScriptNum bytes)
};

struct Script {
    std::vector<Token> tokens;

    bool operator==(const Script&) const = default;

    Bytes serialize() const;
    std::string disassemble() const;

    // Rejects truncated pushes and any opcode outside the whitelist.
    static std::optional<Script> parse(ByteSpan bytes);
};

// Witness stack, bottom to top as serialized. An empty item (the multisig
// dummy) is a real element, distinct from absence.
struct Witness {
    std::vector<Bytes> stack;

    bool operator==(const Witness&) const = default;
};

struct SpendContext {
    Digest sighash{};            // digest the input's signatures commit to
    uint32_t current_height = 0; // chain height at evaluation
    uint32_t input_age = 0;      // blocks mined on top of the spent output
};

enum class EvalFail : uint8_t {
    none,
    unknown_opcode,
    stack_underflow,
    unbalanced_conditional,
    minimal_if,
    bad_multisig_dummy,
    bad_multisig_count,
    sig_check_failed,
    equal_verify_failed,
    timelock_not_met,
    locktime_not_met,
    bad_number,
    oversized_item,
    final_stack_not_clean,
    false_top,
};

const char* eval_fail_name(EvalFail f);

struct EvalResult {
    bool ok = false;
    EvalFail reason = EvalFail::none;
};

// Executes the witness stack against the script. All failures come back as
// a reason code; nothing throws.
EvalResult eval_spend(const Script& script, const Witness& witness, const SpendContext& ctx,
                      const SigScheme& scheme);

// ---------------------------------------------------------------------------
// Builder errors
// ---------------------------------------------------------------------------

enum class BuildErrorCode {
    duplicate_key,
    missing_param,
    unsupported_side,
    insufficient_funds,
    conservation_violated,
    pending_htlcs,
    insufficient_balance_for_fee,
    index_out_of_range,
};

class BuildError : public std::runtime_error {
public:
    BuildError(BuildErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    BuildErrorCode code() const { return code_; }

private:
    BuildErrorCode code_;
};

// ---------------------------------------------------------------------------
// Script templates
// ---------------------------------------------------------------------------

enum class CommitmentSide { gateway, bridge };

// 3 <pkA> <pkB> <pkC> 3 OP_CHECKMULTISIG with keys in lexicographic order,
// so both endpoints derive identical bytes without negotiation.
Script funding_script(ByteSpan pk_iot, ByteSpan pk_gateway, ByteSpan pk_bridge);

// Original two-party template, kept for regression against the baseline.
Script funding_script_2of2(ByteSpan pk1, ByteSpan pk2);

// Sorts signatures to match the funding script's key order and prepends the
// multisig dummy element.
Witness funding_witness(const std::vector<std::pair<Bytes, Bytes>>& key_sig_pairs);

// <pk> OP_CHECKSIG — the IoT balance output; no timelock, no revocation.
Script to_iot_script(ByteSpan iot_pk);

// <pk> OP_CHECKSIG — counterparty balance, immediately spendable.
Script to_remote_script(ByteSpan remote_pk);

// IF <rev_pk> CHECKSIG ELSE <csv> CSV DROP <delayed_pk> CHECKSIG ENDIF.
// Used for the gateway fee output, the bridge to_local output and the
// outputs of HTLC-timeout/success transactions.
Script revocable_delayed_script(ByteSpan rev_pk, ByteSpan delayed_pk, uint32_t csv_delay);

struct HtlcScriptParams {
    Bytes revocation_pk;
    Bytes remote_htlc_pk;
    Bytes local_htlc_pk;
    Bytes iot_htlc_pk;
    Digest payment_hash{};
    uint32_t cltv_expiry = 0;  // received-HTLC refund branch only
};

// Offered HTLC on the gateway commitment; timeout branch is a 3-of-3 over
// (remote, local, IoT) HTLC keys. Building for the bridge side fails:
// the bridge commitment carries no offered HTLCs.
Script offered_htlc_script(CommitmentSide side, const HtlcScriptParams& p);

// Received HTLC on the bridge commitment; success branch is the 3-of-3 over
// (remote, IoT, local) HTLC keys. Building for the gateway side fails.
Script received_htlc_script(CommitmentSide side, const HtlcScriptParams& p);

enum class HtlcTxKind { timeout, success };

// Witness for the HTLC transaction input:
//   timeout: 0 <remotehtlcsig> <localhtlcsig> <IoThtlcsig> <>
//   success: 0 <remotehtlcsig> <IoThtlcsig> <localhtlcsig> <payment_preimage>
Witness htlc_tx_witness(HtlcTxKind kind, ByteSpan remote_sig, ByteSpan local_sig,
                        ByteSpan iot_sig, const std::optional<Bytes>& preimage);

// Witnesses for the revocable-delayed template.
Witness revocation_witness(ByteSpan rev_sig);
Witness delayed_witness(ByteSpan delayed_sig);

// Revocation-branch witness for HTLC outputs: <rev_sig> <rev_pubkey>.
Witness htlc_revocation_witness(ByteSpan rev_sig, ByteSpan rev_pk);

// Single-signature witness for to_IoT / to_remote outputs.
Witness single_sig_witness(ByteSpan sig);

} // namespace iotln

#endif // IOTLN_SCRIPT_H
