#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mediator/audit.hpp"
#include "mediator/config.hpp"
#include "mediator/engine.hpp"

namespace mediator::sim {

// Midnight UTC on a Monday; simulated days start here.
constexpr Millis kSimEpoch = 1767571200000;
constexpr Millis kStepMillis = 10 * kMillisPerSecond;

struct SimProfile {
    std::string name;
    int start_minute_of_day = 0;  // local time
    int scrolls_per_step = 1;
    double scroll_px = 300.0;
    double scroll_jitter_px = 50.0;
    int impressions_per_step = 2;
    // Of every `cycle` impressions, the first `dominant` use dominant_topic.
    std::string dominant_topic = "news";
    int cycle = 2;
    int dominant = 1;
    std::optional<std::string> goal;
    int draft_every_minutes = 0;  // 0: never drafts
    bool rude_drafts = false;
    bool pile_on = false;
    int pile_on_start_minute = 4;
    int pile_on_items = 14;
    int benign_inbound_every_minutes = 5;
    int recovery_duration_minutes = 20;
    int ads_per_page = 1;

    // doomscroller, goal_directed, late_night. Throws UsageError otherwise.
    static SimProfile preset(const std::string& name);
};

std::vector<std::string> profile_names();

// The simulator's default config: built-in defaults plus a gambling ad block
// and a two-friend recovery allowlist.
UserConfig default_sim_config();

// Seeded uniform draw in [0,1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);

// Acceptance probability after `shown` earlier interjections.
double acceptance_probability(std::size_t shown);

constexpr int kReportSchemaVersion = 1;

struct SimReport {
    std::string profile;
    std::uint64_t seed = 0;
    int minutes = 0;

    std::uint64_t ticks = 0;
    std::uint64_t rejected_ticks = 0;
    std::uint64_t interventions_shown = 0;
    std::uint64_t accepted = 0;
    std::uint64_t dismissed = 0;
    std::uint64_t overridden = 0;
    std::uint64_t unanswered = 0;
    std::uint64_t pauses_shown = 0;
    std::uint64_t rewrites_offered = 0;
    std::uint64_t posts_assessed = 0;
    std::uint64_t posts_hidden = 0;
    std::array<std::uint64_t, 5> integrity_histogram{};  // s_fact quarters, last bucket s_fact = 1
    std::uint64_t recovery_suggestions = 0;
    std::uint64_t recovery_activations = 0;
    std::uint64_t inbound_hidden = 0;
    std::uint64_t inbound_queued = 0;
    std::uint64_t evidence_records = 0;
    std::vector<double> cooldown_trajectory;  // cooldown in force at each pause shown

    double mean_cooldown() const;
    bool operator==(const SimReport&) const = default;
};

struct SimRun {
    SimReport report;              // counted from what the simulated user saw
    double final_repetition_index = 0.0;
    double peak_continuation_risk = 0.0;
};

// Drives `engine` through one session. Deterministic in (profile, seed,
// minutes, engine config).
SimRun run_simulation(const SimProfile& profile, std::uint64_t seed, int minutes, Mediator& engine);

// The same counters recomputed from stored audit records.
SimReport report_from_audit(const std::vector<AuditRecord>& records, const std::string& profile,
                            std::uint64_t seed, int minutes);

// Names of counters that differ between the two reports.
std::vector<std::string> reconcile(const SimReport& simulated, const SimReport& audited);

std::string to_csv(const SimReport& report);
std::string summary(const SimReport& report);

}  // namespace mediator::sim
