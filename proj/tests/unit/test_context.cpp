#include "doctest.h"

#include <cmath>

#include "mediator/context_monitor.hpp"
#include "mediator/errors.hpp"
#include "oracles.hpp"

using namespace mediator;

namespace {

constexpr Millis kT0 = 1'700'000'000'000;  // 22:13 UTC

SessionEvent start(Millis t, std::optional<std::string> goal = std::nullopt, std::string id = "s") {
    return {std::move(id), t, events::SessionStart{std::move(goal)}};
}
SessionEvent scroll(Millis t, double px, std::string id = "s") { return {std::move(id), t, events::Scroll{px}}; }
SessionEvent impression(Millis t, std::string topic, std::string id = "s") {
    return {std::move(id), t, events::PostImpression{"p", std::move(topic), 500}};
}

// Sum of each scroll displacement decayed to `now`, times the decay rate.
double velocity_oracle(const std::vector<std::pair<Millis, double>>& scrolls, Millis now) {
    const double rate = std::log(2.0) / 10.0;
    double v = 0.0;
    for (const auto& [t, px] : scrolls) v += rate * std::fabs(px) * std::exp(-rate * static_cast<double>(now - t) / 1000.0);
    return v;
}

}  // namespace

TEST_CASE("event ordering rules") {
    ContextMonitor m;
    SUBCASE("start then scroll") {
        m.ingest_event(start(kT0));
        CHECK_NOTHROW(m.ingest_event(scroll(kT0 + 10, 100)));
    }
    SUBCASE("scroll before start") {
        CHECK_THROWS_AS(m.ingest_event(scroll(kT0, 100)), UsageError);
        CHECK_FALSE(m.has_session("s"));
    }
    SUBCASE("equal timestamps are accepted") {
        m.ingest_event(start(kT0));
        m.ingest_event(impression(kT0 + 5, "a"));
        CHECK_NOTHROW(m.ingest_event(impression(kT0 + 5, "b")));
        CHECK(m.session("s").recent_topics().size() == 2);
    }
    SUBCASE("timestamp regression is rejected and leaves state intact") {
        m.ingest_event(start(kT0));
        m.ingest_event(impression(kT0 + 100, "a"));
        CHECK_THROWS_AS(m.ingest_event(impression(kT0 + 99, "b")), UsageError);
        CHECK(m.session("s").recent_topics().size() == 1);
        CHECK(m.session("s").last_timestamp() == kT0 + 100);
    }
    SUBCASE("events after session_end") {
        m.ingest_event(start(kT0));
        m.ingest_event({"s", kT0 + 1, events::SessionEnd{}});
        CHECK_THROWS_AS(m.ingest_event(scroll(kT0 + 2, 1)), UsageError);
    }
    SUBCASE("unknown session lookups") {
        CHECK_THROWS(m.derive_signals("nope", kT0, UserConfig{}));
    }
}

TEST_CASE("empty window signals") {
    ContextMonitor m;
    m.ingest_event(start(kT0, std::string("science")));
    const SessionSignals s = m.derive_signals("s", kT0, UserConfig{});
    CHECK(s.repetition_index == 0.0);
    CHECK(s.goal_divergence == 0.0);
    CHECK(s.scroll_velocity == 0.0);
    CHECK(s.session_minutes == 0.0);
}

TEST_CASE("repetition index examples") {
    ContextMonitor m;
    m.ingest_event(start(kT0));
    for (int i = 0; i < 20; ++i) m.ingest_event(impression(kT0 + i, "memes"));
    CHECK(m.derive_signals("s", kT0 + 20, UserConfig{}).repetition_index == 1.0);

    ContextMonitor half;
    half.ingest_event(start(kT0));
    for (int i = 0; i < 20; ++i) half.ingest_event(impression(kT0 + i, i % 2 == 0 ? "memes" : "t" + std::to_string(i)));
    CHECK(half.derive_signals("s", kT0 + 20, UserConfig{}).repetition_index == 0.5);
}

TEST_CASE("the 21st impression evicts the first") {
    ContextMonitor m;
    m.ingest_event(start(kT0));
    m.ingest_event(impression(kT0, "first"));
    for (int i = 1; i < 20; ++i) m.ingest_event(impression(kT0 + i, "other" + std::to_string(i)));
    CHECK(m.session("s").recent_topics().front() == "first");
    m.ingest_event(impression(kT0 + 20, "last"));
    CHECK(m.session("s").recent_topics().size() == kImpressionWindow);
    CHECK(m.session("s").recent_topics().front() == "other1");
    CHECK(m.session("s").recent_topics().back() == "last");
}

TEST_CASE("goal divergence counts off-goal window impressions") {
    ContextMonitor m;
    m.ingest_event(start(kT0, std::string("science")));
    for (int i = 0; i < 8; ++i) m.ingest_event(impression(kT0 + i, i < 6 ? "memes" : "science"));
    CHECK(m.derive_signals("s", kT0 + 10, UserConfig{}).goal_divergence == 6.0 / 8.0);
}

TEST_CASE("session minutes are exact") {
    gen::Rng rng(17);
    ContextMonitor m;
    m.ingest_event(start(kT0));
    for (int i = 0; i < 200; ++i) {
        const Millis now = kT0 + rng.integer(0, 10'000'000);
        CHECK(m.derive_signals("s", now, UserConfig{}).session_minutes == static_cast<double>(now - kT0) / 60000.0);
    }
}

TEST_CASE("late night uses the configured offset") {
    const Millis midnight_utc = 1'700'006'400'000;  // 2023-11-15 00:00 UTC
    CHECK(is_late_night(midnight_utc, 0));
    CHECK(is_late_night(midnight_utc + 6 * 3'600'000 - 1, 0));
    CHECK_FALSE(is_late_night(midnight_utc + 6 * 3'600'000, 0));
    CHECK_FALSE(is_late_night(midnight_utc - 1, 0));
    CHECK_FALSE(is_late_night(midnight_utc, -60));
    CHECK(is_late_night(midnight_utc, 300));

    UserConfig c;
    c.timezone_offset_minutes = 120;
    ContextMonitor m;
    m.ingest_event(start(midnight_utc - 3'600'000));
    CHECK(m.derive_signals("s", midnight_utc - 3'600'000, c).late_night);
    CHECK_FALSE(m.derive_signals("s", midnight_utc - 3'600'000, UserConfig{}).late_night);
}

TEST_CASE("scroll velocity matches the decayed-sum oracle") {
    gen::Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        ContextMonitor m;
        m.ingest_event(start(kT0));
        std::vector<std::pair<Millis, double>> scrolls;
        Millis t = kT0;
        for (int i = 0; i < 30; ++i) {
            t += rng.integer(0, 4000);
            const double px = rng.range(-2000, 2000);
            m.ingest_event(scroll(t, px));
            scrolls.emplace_back(t, px);
        }
        const Millis now = t + rng.integer(0, 30000);
        const double v = m.derive_signals("s", now, UserConfig{}).scroll_velocity;
        CHECK(v == doctest::Approx(velocity_oracle(scrolls, now)).epsilon(1e-9));
    }
}

TEST_CASE("signals are a pure function of the event log") {
    gen::Rng rng(29);
    std::vector<SessionEvent> log = {start(kT0, std::string("news"))};
    Millis t = kT0;
    for (int i = 0; i < 100; ++i) {
        t += rng.integer(0, 3000);
        log.push_back(rng.chance(0.5) ? scroll(t, rng.range(0, 800)) : impression(t, rng.pick<std::string>({"news", "memes", "sports"})));
    }
    ContextMonitor a;
    ContextMonitor b;
    for (const auto& e : log) a.ingest_event(e);
    for (const auto& e : log) b.ingest_event(e);
    CHECK(to_json(a.derive_signals("s", t + 5, UserConfig{})) == to_json(b.derive_signals("s", t + 5, UserConfig{})));
}

TEST_CASE("sessions are independent") {
    ContextMonitor m;
    m.ingest_event(start(kT0, std::nullopt, "a"));
    m.ingest_event(start(kT0 + 1000, std::nullopt, "b"));
    m.ingest_event(impression(kT0 + 10, "memes", "a"));
    CHECK(m.session("b").recent_topics().empty());
    CHECK_NOTHROW(m.ingest_event(impression(kT0 + 2000, "x", "b")));
    CHECK_NOTHROW(m.ingest_event(impression(kT0 + 20, "x", "a")));
}

TEST_CASE("event JSON round trip") {
    const SessionEvent e = impression(kT0, "memes");
    const SessionEvent back = session_event_from_json(to_json(e));
    CHECK(to_json(back) == to_json(e));
    CHECK(event_kind_name(back.payload) == "post_impression");
    CHECK_THROWS_AS(session_event_from_json(nlohmann::json{{"kind", "teleport"}, {"timestamp", 1}}, "s"),
                    ValidationError);
}
