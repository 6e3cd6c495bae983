#include "doctest.h"

#include "mediator/coordinator.hpp"
#include "oracles.hpp"

using namespace mediator;

namespace {

CandidateAction cand(std::uint32_t id, InterventionKind kind, double u, double r) {
    CandidateAction a;
    a.action_id = id;
    a.kind = kind;
    a.utility = u;
    a.agency_penalty = agency_penalty_for(kind);
    a.risk = r;
    return a;
}

CandidateGroup group(Pattern p, std::vector<CandidateAction> extra, std::string subject = "s") {
    CandidateGroup g{p, std::move(subject), {cand(0, InterventionKind::no_op, 0.0, 0.0)}};
    for (auto& a : extra) g.candidates.push_back(a);
    return g;
}

Tick tick_of(std::vector<CandidateGroup> groups) {
    Tick t;
    t.session_id = "s";
    t.timestamp = 1000;
    t.groups = std::move(groups);
    return t;
}

const InterventionKind kKinds[] = {InterventionKind::no_op,          InterventionKind::passive_cue,
                                   InterventionKind::soft_prompt,    InterventionKind::rewrite_suggestion,
                                   InterventionKind::reorder_demote,  InterventionKind::interstitial_pause,
                                   InterventionKind::hide_filter,    InterventionKind::block_lock};
const Pattern kPatterns[] = {Pattern::rewriter, Pattern::integrity, Pattern::curator, Pattern::withdrawal,
                             Pattern::recovery};

Tick random_tick(gen::Rng& rng) {
    std::vector<CandidateGroup> groups;
    const int n = rng.integer(1, 6);
    for (int g = 0; g < n; ++g) {
        std::vector<CandidateAction> extra;
        const int m = rng.integer(0, 3);
        for (int k = 0; k < m; ++k) {
            extra.push_back(cand(static_cast<std::uint32_t>(k + 1), kKinds[rng.integer(1, 7)], rng.scalar(), rng.scalar()));
        }
        groups.push_back(group(kPatterns[rng.integer(0, 4)], extra, "g" + std::to_string(g)));
    }
    return tick_of(groups);
}

}  // namespace

TEST_CASE("passive-only tick delivers cues without interjection") {
    const Tick t = tick_of({group(Pattern::integrity, {cand(1, InterventionKind::passive_cue, 0.9, 0.0)}, "p1"),
                            group(Pattern::integrity, {cand(1, InterventionKind::reorder_demote, 0.9, 0.0)}, "p2")});
    const Resolution r = resolve_tick(t, UserConfig{});
    CHECK_FALSE(r.interjection.has_value());
    REQUIRE(r.passive_cues.size() == 2);
    CHECK(r.passive_cues[0].subject == "p1");
    CHECK(r.passive_cues[1].action.kind == InterventionKind::reorder_demote);
}

TEST_CASE("recovery preempts a withdrawal pause") {
    const Tick t = tick_of({group(Pattern::withdrawal, {cand(1, InterventionKind::interstitial_pause, 1.0, 0.0)}),
                            group(Pattern::recovery, {cand(1, InterventionKind::soft_prompt, 0.9, 0.0)})});
    const Resolution r = resolve_tick(t, UserConfig{});
    REQUIRE(r.interjection.has_value());
    CHECK(r.interjection->pattern == Pattern::recovery);
    CHECK(r.decisions[0].decision.chosen.kind == InterventionKind::interstitial_pause);
    CHECK(r.decisions[0].suppressed);
    CHECK_FALSE(r.decisions[1].suppressed);
}

TEST_CASE("engaged recovery blocks lower tiers even without its own interjection") {
    const Tick t = tick_of({group(Pattern::withdrawal, {cand(1, InterventionKind::interstitial_pause, 1.0, 0.0)}),
                            group(Pattern::recovery, {cand(1, InterventionKind::hide_filter, 0.9, 0.0)})});
    const Resolution r = resolve_tick(t, UserConfig{});
    CHECK_FALSE(r.interjection.has_value());
    CHECK(r.decisions[0].suppressed);
}

TEST_CASE("all no_op tick is vacuous") {
    const Tick t = tick_of({group(Pattern::withdrawal, {}), group(Pattern::rewriter, {}), group(Pattern::recovery, {})});
    const Resolution r = resolve_tick(t, UserConfig{});
    CHECK_FALSE(r.interjection.has_value());
    CHECK(r.passive_cues.empty());
    CHECK(r.decisions.size() == 3);
    CHECK_FALSE(r.explanation.empty());
}

TEST_CASE("malformed ticks are rejected") {
    Tick empty = tick_of({CandidateGroup{Pattern::curator, "x", {}}});
    CHECK_THROWS_AS(resolve_tick(empty, UserConfig{}), MalformedTick);
    Tick no_noop = tick_of({CandidateGroup{Pattern::curator, "x", {cand(1, InterventionKind::hide_filter, 0.5, 0.5)}}});
    CHECK_THROWS_AS(resolve_tick(no_noop, UserConfig{}), MalformedTick);
    Tick dup = tick_of({group(Pattern::curator, {cand(0, InterventionKind::hide_filter, 0.5, 0.5)})});
    CHECK_THROWS_AS(resolve_tick(dup, UserConfig{}), MalformedTick);
    Tick range = tick_of({group(Pattern::curator, {cand(1, InterventionKind::hide_filter, 1.5, 0.5)})});
    CHECK_THROWS_AS(resolve_tick(range, UserConfig{}), MalformedTick);
}

TEST_CASE("resolution invariants over random ticks") {
    gen::Rng rng(83);
    for (int i = 0; i < 2000; ++i) {
        const Tick t = random_tick(rng);
        const Resolution r = resolve_tick(t, UserConfig{});
        CHECK(to_json(r) == to_json(resolve_tick(t, UserConfig{})));
        REQUIRE(r.decisions.size() == t.groups.size());

        std::size_t shown = 0;
        int best_tier = 99;
        bool recovery_engaged = false;
        for (std::size_t g = 0; g < t.groups.size(); ++g) {
            const auto& pd = r.decisions[g];
            if (is_interjection(pd.decision.chosen.kind)) best_tier = std::min(best_tier, pd.tier);
            if (t.groups[g].pattern == Pattern::recovery) {
                for (const auto& a : t.groups[g].candidates) recovery_engaged |= a.kind != InterventionKind::no_op;
            }
            if (is_interjection(pd.decision.chosen.kind) && !pd.suppressed) ++shown;
        }
        CHECK(shown == (r.interjection ? 1u : 0u));
        if (r.interjection) {
            CHECK(tier_of(r.interjection->pattern) == best_tier);
            if (recovery_engaged) CHECK(r.interjection->pattern == Pattern::recovery);
        } else if (best_tier < 99) {
            CHECK(recovery_engaged);
        }
        for (const auto& c : r.passive_cues) {
            CHECK_FALSE(is_interjection(c.action.kind));
            CHECK(c.action.kind != InterventionKind::no_op);
        }
    }
}
