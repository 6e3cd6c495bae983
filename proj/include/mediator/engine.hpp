#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "mediator/audit.hpp"
#include "mediator/config.hpp"
#include "mediator/context_monitor.hpp"
#include "mediator/coordinator.hpp"
#include "mediator/curator.hpp"
#include "mediator/integrity.hpp"
#include "mediator/net.hpp"
#include "mediator/recovery.hpp"
#include "mediator/rewriter.hpp"
#include "mediator/withdrawal.hpp"

namespace mediator {

// Everything loaded from disk for one config. Immutable once built; a config
// change that touches resource paths swaps in a fresh instance.
struct EngineResources {
    std::shared_ptr<const FactDatabase> facts;
    std::shared_ptr<const AiDetector> ai;
    std::shared_ptr<const BiasEstimator> bias;  // null when the lexicons are missing
    std::shared_ptr<const Rewriter> rewriter;
    std::shared_ptr<const ToxicityEstimator> toxicity;
    std::shared_ptr<const PromptBook> prompts;
    std::vector<std::string> warnings;

    // Throws LoadError when the fact database or rewrite lexicons are missing.
    static std::shared_ptr<const EngineResources> load(const UserConfig& config);
};

// Candidate utilities offered by each pattern. Exposed for tests.
namespace utility {
inline constexpr double kNoOp = 0.5;
inline constexpr double kPassiveCue = 0.6;
inline constexpr double kRewrite = 0.5;
inline constexpr double kCurationNoOp = 0.3;
inline constexpr double kCurationApply = 0.8;
inline constexpr double kPause = 0.5;
inline constexpr double kRecoverySuggestion = 0.5;
inline constexpr double kSupportHub = 0.8;
}  // namespace utility

// Content risk fed to integrity candidates.
double integrity_risk(const IntegrityScore& score);

// Unanswered micro-interventions count as avoided after this long.
constexpr Millis kAvoidedAfterMillis = 10 * kMillisPerSecond;

struct TickOutcome {
    std::uint64_t seq = 0;
    Resolution resolution;
    std::string status = "resolved";
    std::string error;
};

struct EventBatchResult {
    std::size_t accepted = 0;
    std::vector<std::string> diagnostics;  // one per rejected event
    std::optional<TickOutcome> tick;       // absent when nothing was accepted
    std::optional<MicroIntervention> micro_intervention;
    SessionSignals signals;
    double continuation_risk = 0.0;
};

struct FeedResult {
    CuratedFeed feed;
    bool curation_applied = false;
    std::map<std::string, IntegrityScore> integrity;  // by post_id
    TickOutcome tick;
};

struct DraftResult {
    DraftAnalysis analysis;
    RewriteOffer offer;
    TickOutcome tick;
};

struct InboundResult {
    std::optional<InboundVerdict> verdict;  // set while recovery is active
    double toxicity = 0.0;
    bool recovery_suggested = false;
    TickOutcome tick;
};

struct RecoveryCommandResult {
    RecoveryState state;
    bool changed = false;
    TickOutcome tick;
};

struct StorageOptions {
    std::string dir;  // empty: everything stays in memory
};

// The mediation engine for one user. Every mutating call is written to the
// input log before it is processed and yields one audit record (responses
// yield a patch), so the full run can be re-executed from the input log.
// Calls are serialized; assess() only reads immutable resources.
class Mediator {
public:
    Mediator(UserConfig config, StorageOptions storage = {}, net::Gateway* gateway = nullptr);
    Mediator(UserConfig config, std::shared_ptr<const EngineResources> resources,
             StorageOptions storage = {}, net::Gateway* gateway = nullptr);
    ~Mediator();

    Mediator(const Mediator&) = delete;
    Mediator& operator=(const Mediator&) = delete;

    IntegrityScore assess(const PostContent& post) const;

    EventBatchResult ingest_events(const std::string& session_id, const std::vector<SessionEvent>& batch);
    FeedResult curate_page(const std::string& session_id, const std::vector<PostContent>& page, Millis now);
    DraftResult submit_draft(const std::string& session_id, const std::string& body, Millis now);
    InboundResult receive_inbound(const std::string& session_id, const InboundItem& item);
    RecoveryCommandResult recovery_command(RecoveryEvent command, Millis now);
    AuditRecord record_response(std::uint64_t seq, UserResponse response, Millis now);
    // Validates, then swaps atomically. Throws ValidationError on bad input.
    TickOutcome update_config(const UserConfig& config, Millis now);

    UserConfig config() const;
    RecoveryState recovery_state() const;
    CadenceState cadence() const;
    std::vector<InboundItem> review_queue() const;
    std::vector<EvidenceRecord> evidence() const;
    std::optional<SessionSignals> signals(const std::string& session_id, Millis now) const;
    std::vector<std::string> resource_warnings() const;

    const AuditStore& audit() const { return *audit_; }
    const std::string& input_log_path() const { return input_path_; }
    std::vector<nlohmann::json> inputs() const;  // the in-memory input log
    bool halted() const;

    // Re-executes one logged input. Used by replay and restart recovery.
    void apply_input(const nlohmann::json& input);

private:
    struct PendingPause {
        std::uint64_t seq = 0;
        Millis shown_at = 0;
    };

    void log_input(const nlohmann::json& input);
    void check_running() const;
    std::shared_ptr<const EngineResources> resources_snapshot() const;
    IntegrityComponents components(const EngineResources& res) const;

    // Fires due recovery timers and marks stale micro-interventions avoided.
    // Returns counters for the tick's effects map.
    std::map<std::string, std::int64_t> advance_clock(Millis now);
    std::optional<CandidateGroup> recovery_presence_group();
    TickOutcome run_tick(Tick tick, std::map<std::string, std::int64_t> effects, nlohmann::json extra_context);
    TickOutcome finish_tick(const Tick& tick, TickOutcome resolved, std::map<std::string, std::int64_t> effects,
                            nlohmann::json extra_context);
    std::uint64_t emit(AuditRecord record);
    void capture_evidence(const nlohmann::json& item, Millis at);

    EventBatchResult do_ingest(const std::string& session_id, const std::vector<SessionEvent>& batch);
    FeedResult do_curate(const std::string& session_id, const std::vector<PostContent>& page, Millis now);
    DraftResult do_draft(const std::string& session_id, const std::string& body, Millis now,
                         bool provider_configured, const std::optional<std::string>& provider_text);
    InboundResult do_inbound(const std::string& session_id, const InboundItem& item);
    RecoveryCommandResult do_recovery(RecoveryEvent command, Millis now);
    AuditRecord do_response(std::uint64_t seq, UserResponse response, Millis now);
    TickOutcome do_config(const UserConfig& config, Millis now);

    void recover_from_storage();

    mutable std::mutex mu_;
    mutable std::shared_mutex resources_mu_;
    std::shared_ptr<const EngineResources> resources_;

    UserConfig config_;
    std::string config_digest_;
    net::Gateway* gateway_;
    std::unique_ptr<net::Gateway> owned_gateway_;

    ContextMonitor monitor_;
    CadenceState cadence_;
    std::optional<PendingPause> pending_pause_;
    std::size_t prompt_counter_ = 0;
    RecoveryState recovery_;
    std::optional<std::uint64_t> pending_suggestion_;
    bool support_hub_pending_ = false;
    BrigadeDetector brigade_;
    std::vector<InboundItem> review_queue_;
    std::map<std::uint64_t, UserResponse> responses_;

    std::unique_ptr<AuditStore> audit_;
    std::unique_ptr<EvidenceChain> evidence_;
    std::uint64_t produced_ = 0;           // audit records produced by this engine
    std::size_t evidence_produced_ = 0;
    bool recovering_ = false;
    bool halted_ = false;

    std::string input_path_;
    std::vector<nlohmann::json> inputs_;
};

// Re-runs `inputs` (an input log) under `config` with no network access and
// compares the produced records against `stored`, field for field except
// wall-clock fields. Throws ReplayDivergence naming the first differing seq.
std::vector<AuditRecord> replay(const std::vector<nlohmann::json>& inputs, const UserConfig& config,
                                const std::vector<AuditRecord>& stored);

// Input-log lines; the first line of a log is {"type":"init","config":...}.
std::vector<nlohmann::json> read_input_log(const std::string& path);
std::optional<UserConfig> initial_config(const std::vector<nlohmann::json>& inputs);

// Wire formats shared by the service and the CLI.
nlohmann::json to_json(const TickOutcome& tick);
nlohmann::json to_json(const EventBatchResult& result);
nlohmann::json to_json(const FeedResult& result);
nlohmann::json to_json(const DraftResult& result);
nlohmann::json to_json(const InboundResult& result);
nlohmann::json to_json(const RecoveryCommandResult& result);
PostContent post_from_json(const nlohmann::json& j, const std::string& path = "post");
nlohmann::json to_json(const PostContent& post);

}  // namespace mediator
