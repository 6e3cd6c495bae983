#include "doctest.h"

#include <filesystem>
#include <queue>

#include "fixtures.hpp"
#include "mediator/errors.hpp"
#include "mediator/recovery.hpp"
#include "oracles.hpp"

using namespace mediator;

namespace {

RecoveryState in_phase(RecoveryPhase phase, Millis now) {
    RecoveryState s;
    s.phase = phase;
    if (phase == RecoveryPhase::active || phase == RecoveryPhase::cooling_down) s.activated_at = now - 1000;
    if (phase == RecoveryPhase::cooling_down || phase == RecoveryPhase::suggested) s.timer = now;
    return s;
}

RecoveryState active_with(std::set<std::string> allowlist) {
    RecoveryState s = in_phase(RecoveryPhase::active, 10'000);
    s.allowlist = std::move(allowlist);
    return s;
}

std::vector<std::string> three_record_chain(const std::string& path) {
    EvidenceChain chain(path);
    chain.capture(nlohmann::json{{"item_id", "r1"}, {"text", "you are pathetic"}}, 1000);
    chain.capture(nlohmann::json{{"item_id", "r2"}, {"text", "log off forever"}}, 2000);
    chain.capture(nlohmann::json{{"item_id", "r3"}, {"text", "nobody likes you"}}, 3000);
    return EvidenceChain::read_lines(path);
}

}  // namespace

TEST_CASE("transition examples") {
    const Millis now = 50'000;
    CHECK(transition(in_phase(RecoveryPhase::inactive, now), RecoveryEvent::user_activate, now).state.phase ==
          RecoveryPhase::active);
    const auto noop = transition(in_phase(RecoveryPhase::inactive, now), RecoveryEvent::timer_expire, now);
    CHECK(noop.state.phase == RecoveryPhase::inactive);
    CHECK_FALSE(noop.changed);
    CHECK(transition(in_phase(RecoveryPhase::suggested, now), RecoveryEvent::user_decline, now).state.phase ==
          RecoveryPhase::inactive);
    const auto off = transition(in_phase(RecoveryPhase::active, now), RecoveryEvent::user_deactivate, now);
    CHECK(off.state.phase == RecoveryPhase::cooling_down);
    REQUIRE(off.state.timer.has_value());
    CHECK(*off.state.timer == now + kCoolingDownMillis);
}

TEST_CASE("transition table is exhaustive") {
    const Millis now = 123'456;
    const auto& table = oracle::recovery_table();
    for (auto phase : kAllRecoveryPhases) {
        for (auto event : kAllRecoveryEvents) {
            const RecoveryState before = in_phase(phase, now);
            const TransitionResult r = transition(before, event, now);
            const auto it = table.find({std::string(to_string(phase)), std::string(to_string(event))});
            const std::string expected = it == table.end() ? std::string(to_string(phase)) : it->second;
            CAPTURE(to_string(phase));
            CAPTURE(to_string(event));
            CHECK(to_string(r.state.phase) == expected);
            CHECK(r.changed == (it != table.end()));
            if (it == table.end()) CHECK(r.state == before);
            const bool engaged = r.state.phase == RecoveryPhase::active || r.state.phase == RecoveryPhase::cooling_down;
            CHECK(r.state.activated_at.has_value() == engaged);
        }
    }
}

TEST_CASE("every phase can return to inactive") {
    const Millis now = 1'000'000;
    for (auto phase : kAllRecoveryPhases) {
        std::set<RecoveryPhase> seen = {phase};
        std::queue<RecoveryState> frontier;
        frontier.push(in_phase(phase, now));
        bool reached = phase == RecoveryPhase::inactive;
        while (!frontier.empty() && !reached) {
            const RecoveryState s = frontier.front();
            frontier.pop();
            for (auto e : {RecoveryEvent::user_deactivate, RecoveryEvent::timer_expire, RecoveryEvent::user_decline}) {
                const Millis at = s.timer.value_or(now);
                const RecoveryState next = transition(s, e, at).state;
                if (next.phase == RecoveryPhase::inactive) reached = true;
                if (seen.insert(next.phase).second) frontier.push(next);
            }
        }
        CAPTURE(to_string(phase));
        CHECK(reached);
    }
}

TEST_CASE("activation needs a user event") {
    gen::Rng rng(61);
    const std::vector<RecoveryEvent> automatic = {RecoveryEvent::detector_suggest, RecoveryEvent::timer_expire};
    for (int trial = 0; trial < 500; ++trial) {
        RecoveryState s;
        Millis now = 0;
        for (int k = 0; k < 20; ++k) {
            now += rng.integer(0, 20 * 60'000);
            s = transition(s, rng.pick(automatic), now).state;
            CHECK(s.phase != RecoveryPhase::active);
            CHECK(s.phase != RecoveryPhase::cooling_down);
        }
    }
}

TEST_CASE("timers fire when reached") {
    RecoveryState s = transition(in_phase(RecoveryPhase::active, 0), RecoveryEvent::user_deactivate, 0).state;
    CHECK_FALSE(timer_due(s, kCoolingDownMillis - 1));
    CHECK(timer_due(s, kCoolingDownMillis));
    const RecoveryState sug = transition(RecoveryState{}, RecoveryEvent::detector_suggest, 0).state;
    CHECK(sug.phase == RecoveryPhase::suggested);
    CHECK(timer_due(sug, kSuggestionLifetimeMillis));
}

TEST_CASE("filter_inbound examples") {
    const UserConfig c;
    CHECK(filter_inbound(active_with({"friend"}), "friend", 0.95, c) == InboundVerdict::deliver);
    CHECK(filter_inbound(active_with({"friend"}), "stranger", 0.9, c) == InboundVerdict::hide);
    CHECK(filter_inbound(active_with({"friend"}), "stranger", 0.1, c) == InboundVerdict::queue_supportive_review);
    CHECK(filter_inbound(active_with({}), "stranger", c.toxicity_hide, c) == InboundVerdict::hide);
    CHECK_THROWS_AS(filter_inbound(RecoveryState{}, "stranger", 0.9, c), UsageError);
    CHECK_THROWS_AS(filter_inbound(in_phase(RecoveryPhase::cooling_down, 5), "x", 0.9, c), UsageError);
}

TEST_CASE("no toxic non-allowlisted item is delivered while active") {
    gen::Rng rng(67);
    for (int i = 0; i < 2000; ++i) {
        UserConfig c;
        c.toxicity_hide = rng.scalar();
        const std::string sender = "u" + std::to_string(rng.integer(0, 5));
        const double tox = rng.scalar();
        const RecoveryState s = active_with({"u0", "u1"});
        const InboundVerdict v = filter_inbound(s, sender, tox, c);
        if (!s.allowlist.count(sender) && tox >= c.toxicity_hide) CHECK(v == InboundVerdict::hide);
        if (s.allowlist.count(sender)) CHECK(v == InboundVerdict::deliver);
    }
}

TEST_CASE("lexicon toxicity is a noisy-or") {
    const LexiconToxicityEstimator est(text::Lexicon::from_terms({"idiot\t0.6", "loser\t0.5", "trash"}));
    CHECK(est.score("have a nice day") == 0.0);
    CHECK(est.score("you idiot") == doctest::Approx(0.6));
    CHECK(est.score("idiot loser") == doctest::Approx(1.0 - 0.4 * 0.5));
    CHECK(est.score("trash") == doctest::Approx(0.5));
}

TEST_CASE("brigade detector") {
    BrigadeDetector d;
    const Millis m = 60'000;
    for (int i = 0; i < 9; ++i) CHECK_FALSE(d.observe(0.7, i * m / 2));
    CHECK_FALSE(d.observe(0.49, 5 * m));
    CHECK(d.observe(0.5, 5 * m));
    CHECK(d.pressure() > 0.5);

    BrigadeDetector spread;
    for (int i = 0; i < 30; ++i) CHECK_FALSE(spread.observe(0.9, i * 2 * m));
    CHECK(spread.window_size() <= 5);
}

TEST_CASE("evidence chain genesis and verification") {
    EvidenceChain chain;
    const EvidenceRecord& first = chain.capture(nlohmann::json{{"text", "x"}}, 10);
    CHECK(first.seq == 1);
    CHECK(first.prev_hash == kGenesisHash);
    CHECK(first.hash == evidence_digest(1, 10, nlohmann::json{{"text", "x"}}, kGenesisHash));
    const EvidenceRecord& second = chain.capture(nlohmann::json{{"text", "y"}}, 20);
    CHECK(second.prev_hash == chain.records()[0].hash);
    CHECK_NOTHROW(chain.verify());
}

TEST_CASE("tampering is located by index") {
    fixture::TempDir dir("evidence");
    const auto lines = three_record_chain(dir.file("e.jsonl"));
    REQUIRE(lines.size() == 3);
    CHECK_FALSE(EvidenceChain::first_invalid(lines).has_value());

    auto tampered = lines;
    const auto pos = tampered[2].find("nobody");
    REQUIRE(pos != std::string::npos);
    tampered[2].replace(pos, 6, "nobod7");
    CHECK(EvidenceChain::first_invalid(tampered) == std::optional<std::size_t>(2));

    tampered = lines;
    tampered[1].replace(tampered[1].find("forever"), 7, "for now");
    CHECK(EvidenceChain::first_invalid(tampered) == std::optional<std::size_t>(1));

    std::string text;
    for (const auto& l : tampered) text += l + "\n";
    fixture::write_text(dir.file("e.jsonl"), text);
    try {
        EvidenceChain reopened(dir.file("e.jsonl"));
        FAIL("tampered chain loaded");
    } catch (const ChainError& e) {
        CHECK(e.index() == 1);
    }
}

TEST_CASE("a corrupted file refuses further appends") {
    fixture::TempDir dir("evidence");
    EvidenceChain chain(dir.file("e.jsonl"));
    chain.capture(nlohmann::json{{"text", "a"}}, 1);
    chain.capture(nlohmann::json{{"text", "b"}}, 2);
    auto lines = EvidenceChain::read_lines(dir.file("e.jsonl"));
    lines[0].replace(lines[0].find("\"a\""), 3, "\"c\"");
    fixture::write_text(dir.file("e.jsonl"), lines[0] + "\n" + lines[1] + "\n");
    CHECK_THROWS_AS(chain.capture(nlohmann::json{{"text", "d"}}, 3), ChainError);
    CHECK(EvidenceChain::read_lines(dir.file("e.jsonl")).size() == 2);
}

TEST_CASE("any single-bit flip in a persisted record is detected") {
    fixture::TempDir dir("evidence");
    const auto lines = three_record_chain(dir.file("e.jsonl"));
    gen::Rng rng(71);
    for (int i = 0; i < 600; ++i) {
        auto mutated = lines;
        const auto rec = static_cast<std::size_t>(rng.integer(0, 2));
        auto& line = mutated[rec];
        const auto byte = static_cast<std::size_t>(rng.integer(0, static_cast<int>(line.size()) - 1));
        line[byte] = static_cast<char>(line[byte] ^ (1 << rng.integer(0, 7)));
        CHECK(EvidenceChain::first_invalid(mutated) == std::optional<std::size_t>(rec));
    }
}
