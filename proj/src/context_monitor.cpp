#include "mediator/context_monitor.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const double kDecayPerMs = std::log(2.0) / (kVelocityHalfLifeSeconds * 1000.0);
const double kDecayPerSecond = std::log(2.0) / kVelocityHalfLifeSeconds;

Millis floor_mod(Millis a, Millis m) {
    const Millis r = a % m;
    return r < 0 ? r + m : r;
}

}  // namespace

std::string_view event_kind_name(const EventPayload& payload) {
    return std::visit(overloaded{
                          [](const events::SessionStart&) { return std::string_view("session_start"); },
                          [](const events::SessionEnd&) { return std::string_view("session_end"); },
                          [](const events::Scroll&) { return std::string_view("scroll"); },
                          [](const events::PostImpression&) { return std::string_view("post_impression"); },
                          [](const events::PostOpen&) { return std::string_view("post_open"); },
                          [](const events::Reaction&) { return std::string_view("reaction"); },
                      },
                      payload);
}

SessionEvent session_event_from_json(const json& j, const std::string& default_session) {
    detail::ObjectReader r(j, "event");
    SessionEvent e;
    e.session_id = default_session.empty() ? r.string("session_id")
                                           : r.string_or("session_id", default_session);
    if (e.session_id.empty()) throw ValidationError("event.session_id", "must not be empty");
    e.timestamp = r.integer("timestamp");
    const std::string kind = r.string("kind");
    if (kind == "session_start") {
        e.payload = events::SessionStart{r.optional_string("goal")};
    } else if (kind == "session_end") {
        e.payload = events::SessionEnd{};
    } else if (kind == "scroll") {
        const double d = r.number("delta_px");
        if (!std::isfinite(d)) throw ValidationError("event.delta_px", "must be finite");
        e.payload = events::Scroll{d};
    } else if (kind == "post_impression") {
        events::PostImpression p;
        p.post_id = r.string("post_id");
        p.topic = r.string("topic");
        p.dwell_ms = r.integer_or("dwell_ms", 0);
        if (p.dwell_ms < 0) throw ValidationError("event.dwell_ms", "must be >= 0");
        e.payload = std::move(p);
    } else if (kind == "post_open") {
        e.payload = events::PostOpen{r.string("post_id")};
    } else if (kind == "reaction") {
        e.payload = events::Reaction{r.string("post_id")};
    } else {
        throw ValidationError("event.kind", "unknown event kind '" + kind + "'");
    }
    r.finish();
    return e;
}

json to_json(const SessionEvent& e) {
    json j{{"session_id", e.session_id},
           {"timestamp", e.timestamp},
           {"kind", std::string(event_kind_name(e.payload))}};
    std::visit(overloaded{
                   [&](const events::SessionStart& s) {
                       if (s.goal) j["goal"] = *s.goal;
                   },
                   [](const events::SessionEnd&) {},
                   [&](const events::Scroll& s) { j["delta_px"] = s.delta_px; },
                   [&](const events::PostImpression& p) {
                       j["post_id"] = p.post_id;
                       j["topic"] = p.topic;
                       j["dwell_ms"] = p.dwell_ms;
                   },
                   [&](const events::PostOpen& p) { j["post_id"] = p.post_id; },
                   [&](const events::Reaction& p) { j["post_id"] = p.post_id; },
               },
               e.payload);
    return j;
}

json to_json(const SessionSignals& s) {
    return json{{"scroll_velocity", s.scroll_velocity},
                {"repetition_index", s.repetition_index},
                {"session_minutes", s.session_minutes},
                {"late_night", s.late_night},
                {"goal_divergence", s.goal_divergence}};
}

bool is_late_night(Millis at, int timezone_offset_minutes) {
    constexpr Millis kDay = 24 * 60 * kMillisPerMinute;
    const Millis local = at + static_cast<Millis>(timezone_offset_minutes) * kMillisPerMinute;
    const Millis hour = floor_mod(local, kDay) / (60 * kMillisPerMinute);
    return hour < 6;
}

SessionState::SessionState(std::string session_id, Millis started_at, std::optional<std::string> goal)
    : session_id_(std::move(session_id)),
      started_at_(started_at),
      last_timestamp_(started_at),
      goal_(std::move(goal)),
      scroll_mass_at_(started_at) {}

void SessionState::apply(const SessionEvent& event) {
    if (event.session_id != session_id_) {
        throw UsageError("event for session '" + event.session_id + "' applied to '" + session_id_ + "'");
    }
    if (ended_) throw UsageError("session '" + session_id_ + "' already ended");
    if (event.timestamp < last_timestamp_) {
        throw UsageError("timestamp regression in session '" + session_id_ + "': " +
                         std::to_string(event.timestamp) + " < " + std::to_string(last_timestamp_));
    }
    if (std::holds_alternative<events::SessionStart>(event.payload)) {
        throw UsageError("session '" + session_id_ + "' already started");
    }

    last_timestamp_ = event.timestamp;
    std::visit(overloaded{
                   [](const events::SessionStart&) {},
                   [&](const events::SessionEnd&) { ended_ = true; },
                   [&](const events::Scroll& s) {
                       const double dt = static_cast<double>(event.timestamp - scroll_mass_at_);
                       scroll_mass_ = scroll_mass_ * std::exp(-kDecayPerMs * dt) + std::fabs(s.delta_px);
                       scroll_mass_at_ = event.timestamp;
                   },
                   [&](const events::PostImpression& p) {
                       topics_.push_back(p.topic);
                       if (topics_.size() > kImpressionWindow) topics_.pop_front();
                   },
                   [](const events::PostOpen&) {},
                   [](const events::Reaction&) {},
               },
               event.payload);
}

SessionSignals SessionState::derive_signals(Millis now, const UserConfig& config) const {
    SessionSignals s;
    // A decayed displacement sum times the decay rate is the exponentially
    // weighted scroll rate: a steady R px/s converges to R.
    const Millis at = std::max(now, scroll_mass_at_);
    s.scroll_velocity =
        kDecayPerSecond * scroll_mass_ * std::exp(-kDecayPerMs * static_cast<double>(at - scroll_mass_at_));

    if (!topics_.empty()) {
        std::map<std::string_view, std::size_t> counts;
        std::size_t best = 0;
        std::size_t off_goal = 0;
        for (const auto& t : topics_) {
            best = std::max(best, ++counts[t]);
            if (goal_ && t != *goal_) ++off_goal;
        }
        const double n = static_cast<double>(topics_.size());
        s.repetition_index = static_cast<double>(best) / n;
        s.goal_divergence = goal_ ? static_cast<double>(off_goal) / n : 0.0;
    }

    s.session_minutes = static_cast<double>(now - started_at_) / 60000.0;
    s.late_night = is_late_night(now, config.timezone_offset_minutes);
    return s;
}

void ContextMonitor::ingest_event(const SessionEvent& event) {
    if (const auto* start = std::get_if<events::SessionStart>(&event.payload)) {
        if (sessions_.count(event.session_id)) {
            throw UsageError("session '" + event.session_id + "' already started");
        }
        sessions_.emplace(event.session_id, SessionState(event.session_id, event.timestamp, start->goal));
        return;
    }
    auto it = sessions_.find(event.session_id);
    if (it == sessions_.end()) {
        throw UsageError("unknown session '" + event.session_id + "' (no session_start seen)");
    }
    it->second.apply(event);
}

bool ContextMonitor::has_session(const std::string& session_id) const {
    return sessions_.count(session_id) > 0;
}

const SessionState& ContextMonitor::session(const std::string& session_id) const {
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw UsageError("unknown session '" + session_id + "'");
    return it->second;
}

SessionSignals ContextMonitor::derive_signals(const std::string& session_id, Millis now,
                                              const UserConfig& config) const {
    return session(session_id).derive_signals(now, config);
}

}  // namespace mediator
