#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "mediator/config.hpp"
#include "mediator/types.hpp"

namespace mediator {

namespace events {
struct SessionStart {
    std::optional<std::string> goal;  // stated goal topic, if any
};
struct SessionEnd {};
struct Scroll {
    double delta_px = 0.0;
};
struct PostImpression {
    std::string post_id;
    std::string topic;
    std::int64_t dwell_ms = 0;
};
struct PostOpen {
    std::string post_id;
};
struct Reaction {
    std::string post_id;
};
}  // namespace events

using EventPayload = std::variant<events::SessionStart, events::SessionEnd, events::Scroll,
                                  events::PostImpression, events::PostOpen, events::Reaction>;

struct SessionEvent {
    std::string session_id;
    Millis timestamp = 0;
    EventPayload payload;
};

std::string_view event_kind_name(const EventPayload& payload);

// `session_id` may be omitted when `default_session` is given.
SessionEvent session_event_from_json(const nlohmann::json& j, const std::string& default_session = {});
nlohmann::json to_json(const SessionEvent& e);

struct SessionSignals {
    double scroll_velocity = 0.0;   // px/s, exponentially weighted
    double repetition_index = 0.0;  // max topic share over the impression window
    double session_minutes = 0.0;
    bool late_night = false;        // local 00:00-05:59
    double goal_divergence = 0.0;   // share of window impressions off the goal topic
};

nlohmann::json to_json(const SessionSignals& s);

constexpr double kVelocityHalfLifeSeconds = 10.0;
constexpr std::size_t kImpressionWindow = 20;

// Per-session state. Events must arrive with nondecreasing timestamps.
class SessionState {
public:
    SessionState(std::string session_id, Millis started_at, std::optional<std::string> goal);

    const std::string& session_id() const { return session_id_; }
    Millis started_at() const { return started_at_; }
    Millis last_timestamp() const { return last_timestamp_; }
    bool ended() const { return ended_; }
    const std::optional<std::string>& goal() const { return goal_; }
    const std::deque<std::string>& recent_topics() const { return topics_; }

    // Throws UsageError on a timestamp regression, an event after the session
    // ended, or a second session_start. State is unchanged on error.
    void apply(const SessionEvent& event);

    SessionSignals derive_signals(Millis now, const UserConfig& config) const;

private:
    std::string session_id_;
    Millis started_at_;
    Millis last_timestamp_;
    bool ended_ = false;
    std::optional<std::string> goal_;

    // Decayed sum of |scroll delta|, valid at scroll_mass_at_.
    double scroll_mass_ = 0.0;
    Millis scroll_mass_at_;
    std::deque<std::string> topics_;
};

// Owns every live session. One owner per session; apply events in order.
class ContextMonitor {
public:
    // session_start creates the session; any other event needs an existing one.
    void ingest_event(const SessionEvent& event);

    bool has_session(const std::string& session_id) const;
    const SessionState& session(const std::string& session_id) const;

    SessionSignals derive_signals(const std::string& session_id, Millis now,
                                  const UserConfig& config) const;

private:
    std::map<std::string, SessionState> sessions_;
};

// True when the local time of `at` falls in 00:00-05:59.
bool is_late_night(Millis at, int timezone_offset_minutes);

}  // namespace mediator
