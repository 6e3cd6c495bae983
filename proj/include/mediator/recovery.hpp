#pragma once

#include <array>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mediator/config.hpp"
#include "mediator/text.hpp"
#include "mediator/types.hpp"

namespace mediator {

enum class RecoveryPhase { inactive, suggested, active, cooling_down };
enum class RecoveryEvent { user_activate, detector_suggest, user_decline, user_deactivate, timer_expire };

inline constexpr std::array<RecoveryPhase, 4> kAllRecoveryPhases = {
    RecoveryPhase::inactive, RecoveryPhase::suggested, RecoveryPhase::active, RecoveryPhase::cooling_down};
inline constexpr std::array<RecoveryEvent, 5> kAllRecoveryEvents = {
    RecoveryEvent::user_activate, RecoveryEvent::detector_suggest, RecoveryEvent::user_decline,
    RecoveryEvent::user_deactivate, RecoveryEvent::timer_expire};

std::string_view to_string(RecoveryPhase phase);
std::string_view to_string(RecoveryEvent event);

constexpr Millis kCoolingDownMillis = 30 * kMillisPerMinute;
constexpr Millis kSuggestionLifetimeMillis = 10 * kMillisPerMinute;

struct RecoveryState {
    RecoveryPhase phase = RecoveryPhase::inactive;
    std::optional<Millis> activated_at;  // set iff active or cooling_down
    std::set<std::string> allowlist;
    std::optional<Millis> timer;         // expiry while cooling_down or suggested

    bool operator==(const RecoveryState&) const = default;
};

struct TransitionResult {
    RecoveryState state;
    bool changed = false;  // false for the explicit no-op pairs
};

// inactive    --user_activate-->    active
// inactive    --detector_suggest--> suggested
// suggested   --user_activate-->    active
// suggested   --user_decline-->     inactive
// suggested   --timer_expire-->     inactive   (an unanswered suggestion lapses)
// active      --user_deactivate-->  cooling_down (30 min timer)
// cooling_down--timer_expire-->     inactive
// Every other pair leaves the state untouched.
TransitionResult transition(const RecoveryState& state, RecoveryEvent event, Millis now);

// Timers fire when `now` reaches them.
bool timer_due(const RecoveryState& state, Millis now);

enum class InboundKind { reply, mention, dm };

struct InboundItem {
    std::string item_id;
    std::string sender_id;
    InboundKind kind = InboundKind::reply;
    std::string text;
    std::optional<double> toxicity;  // filled by the estimator when absent
    Millis timestamp = 0;
};

std::string_view to_string(InboundKind kind);
InboundItem inbound_item_from_json(const nlohmann::json& j);
nlohmann::json to_json(const InboundItem& item);

enum class InboundVerdict { deliver, hide, queue_supportive_review };

std::string_view to_string(InboundVerdict verdict);

// Allowlisted senders are always delivered; otherwise toxicity at or above
// config.toxicity_hide hides the item and anything below is held for review.
// Throws UsageError unless the phase is active. `toxicity` must be in [0,1].
InboundVerdict filter_inbound(const RecoveryState& state, const std::string& sender_id,
                              double toxicity, const UserConfig& config);

class ToxicityEstimator {
public:
    virtual ~ToxicityEstimator() = default;
    virtual double score(std::string_view text) const = 0;
};

// Noisy-or over lexicon hits: 1 - prod(1 - w). Terms without a weight count 0.5.
class LexiconToxicityEstimator final : public ToxicityEstimator {
public:
    explicit LexiconToxicityEstimator(text::Lexicon lexicon) : lexicon_(std::move(lexicon)) {}
    double score(std::string_view text) const override;

private:
    text::Lexicon lexicon_;
};

// Suggests recovery after 10 items with toxicity >= 0.5 inside 10 minutes.
class BrigadeDetector {
public:
    static constexpr std::size_t kThresholdCount = 10;
    static constexpr double kToxicityFloor = 0.5;
    static constexpr Millis kWindowMillis = 10 * kMillisPerMinute;

    // Returns true when the window holds at least kThresholdCount toxic items.
    bool observe(double toxicity, Millis at);
    // Mean toxicity of the items in the window.
    double pressure() const;
    std::size_t window_size() const { return window_.size(); }
    void reset() { window_.clear(); }

private:
    std::deque<std::pair<Millis, double>> window_;
};

// ---------------------------------------------------------------------------
// Evidence chain

struct EvidenceRecord {
    std::uint64_t seq = 0;  // 1-based
    Millis captured_at = 0;
    nlohmann::json item;
    std::string prev_hash;
    std::string hash;
};

inline const std::string kGenesisHash(64, '0');

std::string evidence_digest(std::uint64_t seq, Millis captured_at, const nlohmann::json& item,
                            const std::string& prev_hash);

// The persisted line for a record. Verification requires each stored line to
// equal this form byte for byte.
std::string serialize_evidence(const EvidenceRecord& record);

// Append-only hash chain. File-backed chains re-verify the file before each
// append and refuse to extend a corrupted chain.
class EvidenceChain {
public:
    EvidenceChain() = default;                       // in memory
    explicit EvidenceChain(std::string path);        // loads and verifies

    const EvidenceRecord& capture(nlohmann::json item, Millis captured_at);

    const std::vector<EvidenceRecord>& records() const { return records_; }
    const std::string& path() const { return path_; }

    // Verifies the in-memory records. Throws ChainError at the first bad index.
    void verify() const;

    // Verifies persisted lines. Returns the index of the first bad record.
    static std::optional<std::size_t> first_invalid(const std::vector<std::string>& lines);
    static std::vector<std::string> read_lines(const std::string& path);

private:
    std::string path_;
    std::vector<EvidenceRecord> records_;
};

nlohmann::json to_json(const RecoveryState& s);

}  // namespace mediator
