#include "doctest.h"

#include "fixtures.hpp"
#include "mediator/engine.hpp"
#include "mediator/errors.hpp"
#include "mediator/sim.hpp"

using namespace mediator;
using fixture::post;

namespace {

constexpr Millis kT0 = 1'767'607'200'000;  // 10:00 UTC

UserConfig base_config() {
    UserConfig c;
    c.recovery_allowlist = {"friend"};
    return c;
}

std::vector<SessionEvent> opening(const std::string& session, Millis t) {
    return {{session, t, events::SessionStart{std::string("science")}},
            {session, t + 100, events::Scroll{250}},
            {session, t + 200, events::PostImpression{"p1", "science", 1200}}};
}

InboundItem inbound(std::string id, std::string sender, double toxicity, Millis t) {
    InboundItem item;
    item.item_id = std::move(id);
    item.sender_id = std::move(sender);
    item.text = "reply";
    item.toxicity = toxicity;
    item.timestamp = t;
    return item;
}

}  // namespace

TEST_CASE("every mutating call yields exactly one audit record") {
    Mediator m(base_config());
    const auto batch = m.ingest_events("s", opening("s", kT0));
    CHECK(batch.accepted == 3);
    REQUIRE(batch.tick.has_value());
    CHECK(batch.tick->seq == 1);
    CHECK(m.curate_page("s", {post("p1", "science")}, kT0 + 1000).tick.seq == 2);
    CHECK(m.submit_draft("s", "Lovely weather today.", kT0 + 2000).tick.seq == 3);
    CHECK(m.receive_inbound("s", inbound("i1", "x", 0.1, kT0 + 3000)).tick.seq == 4);
    CHECK(m.recovery_command(RecoveryEvent::user_activate, kT0 + 4000).tick.seq == 5);
    CHECK(m.update_config(base_config(), kT0 + 5000).seq == 6);
    CHECK(m.audit().size() == 6);
    for (const auto& r : m.audit().all()) CHECK(r.config_digest == config_digest(base_config()));
}

TEST_CASE("rejected events are diagnosed without a tick") {
    Mediator m(base_config());
    const auto r = m.ingest_events("s", {{"s", kT0, events::Scroll{10}}});
    CHECK(r.accepted == 0);
    CHECK(r.diagnostics.size() == 1);
    CHECK_FALSE(r.tick.has_value());
    CHECK(m.audit().size() == 0);

    m.ingest_events("s", opening("s", kT0));
    const auto mixed = m.ingest_events("s", {{"s", kT0 + 50, events::Scroll{10}}, {"s", kT0 + 900, events::Scroll{10}}});
    CHECK(mixed.accepted == 1);
    CHECK(mixed.diagnostics.size() == 1);
}

TEST_CASE("curated pages hide zero-intensity categories and count effects") {
    UserConfig c = base_config();
    c.intensities["politics"] = 0.0;
    Mediator m(c);
    m.ingest_events("s", opening("s", kT0));
    const auto r = m.curate_page("s", {post("a", "politics"), post("b", "science"), post("c", "politics")}, kT0 + 500);
    CHECK(r.curation_applied);
    CHECK(r.feed.hidden.size() == 2);
    CHECK(r.integrity.size() == 3);
    const auto rec = m.audit().find(r.tick.seq);
    REQUIRE(rec.has_value());
    CHECK(rec->effects.at("posts_hidden") == 2);
    CHECK(rec->effects.at("posts_assessed") == 3);
    CHECK_THROWS_AS(m.curate_page("s", {post("a", "x"), post("a", "y")}, kT0 + 600), ValidationError);
}

TEST_CASE("drafts offer rewrites only when they beat a passive cue") {
    Mediator m(base_config());
    const auto clean = m.submit_draft("s", "Lovely weather today.", kT0);
    CHECK(clean.offer.suggestions.empty());
    CHECK_FALSE(clean.tick.resolution.interjection.has_value());

    const auto rude = m.submit_draft("s", "YOU ARE ALL PATHETIC LOSERS AND ALWAYS WRONG", kT0 + 1000);
    CHECK(rude.analysis.risk > 0.6667);
    REQUIRE(rude.tick.resolution.interjection.has_value());
    CHECK(rude.tick.resolution.interjection->action.kind == InterventionKind::rewrite_suggestion);
    CHECK(rude.offer.original == "YOU ARE ALL PATHETIC LOSERS AND ALWAYS WRONG");
}

TEST_CASE("recovery filters inbound items and captures evidence") {
    Mediator m(base_config());
    m.recovery_command(RecoveryEvent::user_activate, kT0);
    CHECK(m.recovery_state().phase == RecoveryPhase::active);
    CHECK(m.receive_inbound("s", inbound("i1", "friend", 0.95, kT0 + 10)).verdict == InboundVerdict::deliver);
    CHECK(m.receive_inbound("s", inbound("i2", "troll", 0.9, kT0 + 20)).verdict == InboundVerdict::hide);
    CHECK(m.receive_inbound("s", inbound("i3", "fan", 0.1, kT0 + 30)).verdict ==
          InboundVerdict::queue_supportive_review);
    REQUIRE(m.evidence().size() == 1);
    CHECK(m.evidence()[0].item.at("item_id") == "i2");
    REQUIRE(m.review_queue().size() == 1);
    CHECK(m.review_queue()[0].item_id == "i3");

    m.recovery_command(RecoveryEvent::user_deactivate, kT0 + 40);
    CHECK(m.recovery_state().phase == RecoveryPhase::cooling_down);
    CHECK_FALSE(m.receive_inbound("s", inbound("i4", "troll", 0.9, kT0 + 50)).verdict.has_value());
    m.receive_inbound("s", inbound("i5", "x", 0.0, kT0 + 50 + kCoolingDownMillis));
    CHECK(m.recovery_state().phase == RecoveryPhase::inactive);
}

TEST_CASE("a pile-on suggests recovery but never activates it") {
    Mediator m(base_config());
    bool suggested = false;
    for (int i = 0; i < 12; ++i) {
        const auto r = m.receive_inbound("s", inbound("t" + std::to_string(i), "troll", 0.9, kT0 + i * 10'000));
        suggested = suggested || r.recovery_suggested;
        CHECK(m.recovery_state().phase != RecoveryPhase::active);
    }
    CHECK(suggested);
    CHECK(m.recovery_state().phase == RecoveryPhase::suggested);
    m.recovery_command(RecoveryEvent::user_activate, kT0 + 200'000);
    CHECK(m.recovery_state().phase == RecoveryPhase::active);
}

TEST_CASE("responses are write-once and rejected before the record exists") {
    Mediator m(base_config());
    const auto r = m.submit_draft("s", "YOU ARE ALL PATHETIC LOSERS AND ALWAYS WRONG", kT0);
    CHECK(m.record_response(r.tick.seq, UserResponse::overridden, kT0 + 100).user_response == UserResponse::overridden);
    CHECK_THROWS_AS(m.record_response(r.tick.seq, UserResponse::accepted, kT0 + 200), UsageError);
    CHECK_THROWS_AS(m.record_response(99, UserResponse::accepted, kT0 + 200), UsageError);
    CHECK(m.audit().find(r.tick.seq)->user_response == UserResponse::overridden);
}

TEST_CASE("config updates validate before swapping") {
    Mediator m(base_config());
    UserConfig bad = base_config();
    bad.tau = 1.5;
    CHECK_THROWS_AS(m.update_config(bad, kT0), ValidationError);
    CHECK(m.config() == validate_config(base_config()));
    CHECK(m.audit().size() == 0);

    UserConfig next = base_config();
    next.tau = 0.4;
    const auto t = m.update_config(next, kT0);
    CHECK(m.config().tau == 0.4);
    CHECK(m.audit().find(t.seq)->config_digest == config_digest(validate_config(next)));
}

TEST_CASE("a restarted engine resumes from storage") {
    fixture::TempDir dir("engine");
    std::size_t records = 0;
    {
        Mediator m(base_config(), StorageOptions{dir.str()});
        m.ingest_events("s", opening("s", kT0));
        m.recovery_command(RecoveryEvent::user_activate, kT0 + 1000);
        m.receive_inbound("s", inbound("i1", "troll", 0.9, kT0 + 2000));
        records = m.audit().size();
    }
    Mediator again(base_config(), StorageOptions{dir.str()});
    CHECK(again.audit().size() == records);
    CHECK(again.recovery_state().phase == RecoveryPhase::active);
    CHECK(again.evidence().size() == 1);
    CHECK(again.receive_inbound("s", inbound("i2", "troll", 0.9, kT0 + 3000)).tick.seq == records + 1);
    CHECK(again.evidence().size() == 2);
}

TEST_CASE("replay reproduces a stored run and flags divergence") {
    CHECK(replay({}, UserConfig{}, {}).empty());

    Mediator m(sim::default_sim_config());
    sim::run_simulation(sim::SimProfile::preset("late_night"), 7, 10, m);
    const auto stored = m.audit().all();
    REQUIRE_FALSE(stored.empty());
    const auto produced = replay(m.inputs(), sim::default_sim_config(), stored);
    CHECK(produced.size() == stored.size());

    UserConfig other = sim::default_sim_config();
    other.tau = 0.55;
    try {
        replay(m.inputs(), other, stored);
        FAIL("replay under another config succeeded");
    } catch (const ReplayDivergence& e) {
        CHECK(e.seq() == 1);
    }

    auto truncated = stored;
    truncated.back().explanation += "!";
    CHECK_THROWS_AS(replay(m.inputs(), sim::default_sim_config(), truncated), ReplayDivergence);
}

TEST_CASE("an offline engine opens no sockets") {
    net::OfflineGateway offline;
    net::InstrumentedGateway gw(offline);
    Mediator m(sim::default_sim_config(), StorageOptions{}, &gw);
    sim::run_simulation(sim::SimProfile::preset("doomscroller"), 3, 10, m);
    CHECK(gw.total_operations() == 0);
}

TEST_CASE("post JSON decoding") {
    const PostContent p = post_from_json(nlohmann::json{{"post_id", "p"}, {"author_id", "a"}, {"body", "b"},
                                                        {"category", "news"}, {"timestamp", 5}});
    CHECK(p.post_id == "p");
    CHECK(to_json(post_from_json(to_json(p))) == to_json(p));
    CHECK_THROWS_AS(post_from_json(nlohmann::json{{"author_id", "a"}}), ValidationError);
}
