#include "mediator/sim.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mediator/errors.hpp"

namespace mediator::sim {

namespace {

struct PostTemplate {
    const char* category;
    const char* body;
};

constexpr PostTemplate kPosts[] = {
    {"news", "The city council voted to ban plastic bags."},
    {"news", "Unemployment fell to 4 percent last quarter."},
    {"news", "I think the new bridge cost twice the original budget."},
    {"science", "Climate change is driven by human activity. Global temperatures have risen over the last century."},
    {"science", "5G towers spread the virus. Wake up people!"},
    {"science", "Solar power is now cheaper than coal in many countries."},
    {"health", "Vaccines cause autism in children. Do your research!"},
    {"health", "Smoking causes lung cancer. Regular exercise reduces the risk of heart disease."},
    {"health", "Garlic cures the common cold."},
    {"health", "Garlic cures the common cold. Regular exercise reduces the risk of heart disease. Smoking causes lung cancer. Vaccines cause autism in children."},
    {"science", "5G towers spread the virus. Solar power is now cheaper than coal in many countries. Climate change is driven by human activity."},
    {"memes", "when the wifi drops for one second"},
    {"memes", "me pretending to work on monday"},
    {"memes", "lol"},
    {"politics", "Millions of fake ballots were counted in the election."},
    {"politics", "The election results were confirmed by the state board."},
    {"sports", "What a game!! The local team won the championship last night."},
    {"sports", "The marathon was won in record time."},
    {"entertainment", "The film won three awards at the festival."},
    {"personal", "My cat knocked over the plant again."},
};

constexpr const char* kAdCategories[] = {"gambling", "shoes", "travel"};

constexpr const char* kTopics[] = {"entertainment", "health", "memes", "news", "personal", "politics", "science", "sports"};

constexpr const char* kRudeDrafts[] = {
    "YOU ALWAYS RUIN EVERYTHING",
    "You never listen, you damn idiot",
    "this is the dumbest take, you idiot",
    "YOU ARE ALL PATHETIC LOSERS AND ALWAYS WRONG",
    "what a load of crap, you always twist everything",
};

constexpr const char* kPoliteDrafts[] = {
    "Thanks for the link, reading it now.",
    "Interesting study, does anyone have the full paper?",
};

constexpr const char* kToxicReplies[] = {
    "you are a pathetic idiot",
    "nobody likes you, delete your account",
    "shut up you worthless loser",
    "what a moron",
    "go away clown, nobody likes you",
};

constexpr const char* kBenignReplies[] = {
    "Great post, thanks for sharing!",
    "Congrats, that sounds lovely.",
};

template <typename T, std::size_t N>
const T& pick(const T (&arr)[N], std::mt19937_64& rng) {
    return arr[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(N)) % N];
}

}  // namespace

SimProfile SimProfile::preset(const std::string& name) {
    SimProfile p;
    p.name = name;
    if (name == "doomscroller") {
        p.start_minute_of_day = 20 * 60;
        p.scrolls_per_step = 8;
        p.scroll_px = 4400.0;
        p.scroll_jitter_px = 400.0;
        p.impressions_per_step = 5;
        p.dominant_topic = "memes";
        p.cycle = 5;
        p.dominant = 4;
        p.goal = "news";
        p.draft_every_minutes = 6;
        p.rude_drafts = true;
    } else if (name == "goal_directed") {
        p.start_minute_of_day = 10 * 60;
        p.scrolls_per_step = 1;
        p.scroll_px = 300.0;
        p.scroll_jitter_px = 60.0;
        p.impressions_per_step = 2;
        p.dominant_topic = "science";
        p.cycle = 10;
        p.dominant = 9;
        p.goal = "science";
        p.draft_every_minutes = 20;
        p.ads_per_page = 0;
    } else if (name == "late_night") {
        p.start_minute_of_day = 30;
        p.scrolls_per_step = 6;
        p.scroll_px = 4000.0;
        p.scroll_jitter_px = 300.0;
        p.impressions_per_step = 4;
        p.dominant_topic = "politics";
        p.cycle = 2;
        p.dominant = 1;
        p.draft_every_minutes = 15;
        p.rude_drafts = true;
        p.pile_on = true;
    } else {
        throw UsageError("unknown profile '" + name + "' (expected doomscroller, goal_directed, or late_night)");
    }
    return p;
}

std::vector<std::string> profile_names() { return {"doomscroller", "goal_directed", "late_night"}; }

UserConfig default_sim_config() {
    UserConfig c;
    c.curation.ad_blocklist = {"gambling"};
    c.curation.friends = {"friend_1", "friend_2"};
    c.recovery_allowlist = {"friend_1", "friend_2"};
    return c;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double acceptance_probability(std::size_t shown) { return 0.6 * std::exp(-0.2 * static_cast<double>(shown)); }

double SimReport::mean_cooldown() const {
    if (cooldown_trajectory.empty()) return 0.0;
    double s = 0.0;
    for (double c : cooldown_trajectory) s += c;
    return s / static_cast<double>(cooldown_trajectory.size());
}

// ---------------------------------------------------------------------------

namespace {

class Driver {
public:
    Driver(const SimProfile& profile, std::uint64_t seed, int minutes, Mediator& engine)
        : p_(profile),
          seed_(seed),
          minutes_(minutes),
          engine_(engine),
          events_rng_(seed),
          user_rng_(seed ^ 0x9E3779B97F4A7C15ULL),
          session_(profile.name + "-" + std::to_string(seed)) {
        run_.report.profile = profile.name;
        run_.report.seed = seed;
        run_.report.minutes = minutes;
        t0_ = kSimEpoch + static_cast<Millis>(p_.start_minute_of_day) * kMillisPerMinute -
              static_cast<Millis>(engine.config().timezone_offset_minutes) * kMillisPerMinute;
    }

    SimRun run() {
        const int steps = minutes_ * 6;
        for (int step = 0; step < steps; ++step) {
            const Millis t = t0_ + static_cast<Millis>(step) * kStepMillis;
            events(step, t);
            if (step % 6 == 0) feed(step, t + 9000);
            if (p_.draft_every_minutes > 0 && step % (p_.draft_every_minutes * 6) == 3) draft(t + 9500);
            inbound(step, t + 8500);
            recovery_schedule(t + 9900);
        }
        const Millis end = t0_ + static_cast<Millis>(steps) * kStepMillis;
        SessionEvent close{session_, end, events::SessionEnd{}};
        count(engine_.ingest_events(session_, {close}));
        return run_;
    }

private:
    void events(int step, Millis t) {
        std::vector<SessionEvent> batch;
        if (step == 0) batch.push_back({session_, t, events::SessionStart{p_.goal}});
        Millis at = t;
        for (int i = 0; i < p_.scrolls_per_step; ++i) {
            at = t + 100 + static_cast<Millis>(i) * 900;
            const double delta = p_.scroll_px + (2.0 * uniform01(events_rng_) - 1.0) * p_.scroll_jitter_px;
            batch.push_back({session_, at, events::Scroll{std::round(delta)}});
        }
        for (int i = 0; i < p_.impressions_per_step; ++i) {
            at = std::max(at, t + 200 + static_cast<Millis>(i) * 1500);
            const bool dominant = static_cast<int>(impressions_ % static_cast<std::size_t>(p_.cycle)) < p_.dominant;
            std::string topic = dominant ? p_.dominant_topic : pick(kTopics, events_rng_);
            if (!dominant && topic == p_.dominant_topic) topic = "personal";
            ++impressions_;
            batch.push_back({session_, at,
                             events::PostImpression{"imp-" + std::to_string(impressions_), topic, 1500}});
        }
        EventBatchResult r = engine_.ingest_events(session_, batch);
        run_.final_repetition_index = r.signals.repetition_index;
        run_.peak_continuation_risk = std::max(run_.peak_continuation_risk, r.continuation_risk);
        count(r);
        if (r.tick) respond(*r.tick, at);
    }

    void feed(int step, Millis t) {
        std::vector<PostContent> page;
        const int organic = 8 - p_.ads_per_page;
        for (int i = 0; i < organic; ++i) {
            const PostTemplate& tpl = pick(kPosts, events_rng_);
            PostContent post;
            post.post_id = "s" + std::to_string(step) + "-" + std::to_string(i);
            post.author_id = "author_" + std::to_string(static_cast<int>(uniform01(events_rng_) * 12));
            post.body = tpl.body;
            post.category = tpl.category;
            post.timestamp = t;
            page.push_back(std::move(post));
        }
        for (int i = 0; i < p_.ads_per_page; ++i) {
            PostContent ad;
            ad.post_id = "s" + std::to_string(step) + "-ad" + std::to_string(i);
            ad.author_id = "sponsor";
            ad.category = "entertainment";
            ad.body = "Limited offer, tap to learn more";
            ad.ad_category = pick(kAdCategories, events_rng_);
            ad.timestamp = t;
            page.push_back(std::move(ad));
        }
        FeedResult r = engine_.curate_page(session_, page, t);
        run_.report.posts_assessed += r.integrity.size();
        for (const auto& [id, score] : r.integrity) {
            const int bucket = score.s_fact >= 1.0 ? 4 : std::min(3, static_cast<int>(std::floor(score.s_fact * 4.0)));
            ++run_.report.integrity_histogram[static_cast<std::size_t>(bucket)];
        }
        if (r.curation_applied) run_.report.posts_hidden += r.feed.hidden.size();
        count_tick(r.tick);
        respond(r.tick, t);
    }

    void draft(Millis t) {
        const std::string body = p_.rude_drafts ? pick(kRudeDrafts, events_rng_) : pick(kPoliteDrafts, events_rng_);
        DraftResult r = engine_.submit_draft(session_, body, t);
        count_tick(r.tick);
        respond(r.tick, t);
    }

    void inbound(int step, Millis t) {
        const Millis offset = t - t0_;
        std::optional<InboundItem> item;
        if (p_.pile_on) {
            const Millis start = static_cast<Millis>(p_.pile_on_start_minute) * kMillisPerMinute;
            if (offset >= start && step % 2 == 0 && pile_sent_ < p_.pile_on_items) {
                ++pile_sent_;
                item = InboundItem{"in-" + std::to_string(step), "troll_" + std::to_string(pile_sent_ % 7),
                                   InboundKind::reply, pick(kToxicReplies, events_rng_), std::nullopt, t};
            }
        }
        const int benign_steps = p_.benign_inbound_every_minutes * 6;
        if (!item && benign_steps > 0 && step % benign_steps == benign_steps - 1) {
            const bool from_friend = uniform01(events_rng_) < 0.5;
            item = InboundItem{"in-" + std::to_string(step), from_friend ? "friend_1" : "stranger_" + std::to_string(step),
                               InboundKind::mention, pick(kBenignReplies, events_rng_), std::nullopt, t};
        }
        if (!item) return;
        InboundResult r = engine_.receive_inbound(session_, *item);
        if (r.recovery_suggested) ++run_.report.recovery_suggestions;
        if (r.verdict == InboundVerdict::hide) {
            ++run_.report.inbound_hidden;
            ++run_.report.evidence_records;
        } else if (r.verdict == InboundVerdict::queue_supportive_review) {
            ++run_.report.inbound_queued;
        }
        count_tick(r.tick);
        respond(r.tick, t);
    }

    void recovery_schedule(Millis t) {
        if (activated_at_ && t - *activated_at_ >= static_cast<Millis>(p_.recovery_duration_minutes) * kMillisPerMinute) {
            activated_at_.reset();
            RecoveryCommandResult r = engine_.recovery_command(RecoveryEvent::user_deactivate, t);
            count_tick(r.tick);
            respond(r.tick, t);
        }
    }

    void activate(Millis t) {
        RecoveryCommandResult r = engine_.recovery_command(RecoveryEvent::user_activate, t);
        if (r.changed && r.state.phase == RecoveryPhase::active) {
            ++run_.report.recovery_activations;
            activated_at_ = t;
        }
        count_tick(r.tick);
        respond(r.tick, t);
    }

    void count(const EventBatchResult& r) {
        if (r.tick) count_tick(*r.tick);
    }

    void count_tick(const TickOutcome& t) {
        SimReport& rep = run_.report;
        ++rep.ticks;
        if (t.status == "rejected") ++rep.rejected_ticks;
        if (!t.resolution.interjection) return;
        ++rep.interventions_shown;
        const ChosenAction& c = *t.resolution.interjection;
        if (c.pattern == Pattern::withdrawal) {
            ++rep.pauses_shown;
            rep.cooldown_trajectory.push_back(engine_.cadence().cooldown_minutes);
        }
        if (c.pattern == Pattern::rewriter) ++rep.rewrites_offered;
    }

    void answer(std::uint64_t seq, UserResponse response, Millis at) {
        engine_.record_response(seq, response, at);
        switch (response) {
            case UserResponse::accepted: ++run_.report.accepted; break;
            case UserResponse::dismissed: ++run_.report.dismissed; break;
            case UserResponse::overridden: ++run_.report.overridden; break;
            case UserResponse::none: break;
        }
    }

    // The simulated user reacts to whatever interjection the tick produced.
    void respond(const TickOutcome& t, Millis at) {
        if (!t.resolution.interjection) return;
        const ChosenAction& c = *t.resolution.interjection;
        const Millis when = at + 3000;
        if (c.pattern == Pattern::recovery && c.subject == "recovery_mode") {
            answer(t.seq, UserResponse::accepted, when);  // support hub acknowledged
            return;
        }
        const bool accept = uniform01(user_rng_) < acceptance_probability(shown_);
        ++shown_;
        switch (c.pattern) {
            case Pattern::withdrawal:
                if (accept) {
                    answer(t.seq, UserResponse::accepted, when);
                } else if (uniform01(user_rng_) < 0.5) {
                    answer(t.seq, UserResponse::dismissed, when);
                } else {
                    ++run_.report.unanswered;  // lets the pause time out
                }
                break;
            case Pattern::rewriter:
                answer(t.seq, accept ? UserResponse::accepted : UserResponse::overridden, when);
                break;
            case Pattern::recovery:
                if (accept) {
                    answer(t.seq, UserResponse::accepted, when);
                    activate(when + 1000);
                } else {
                    answer(t.seq, UserResponse::dismissed, when);
                }
                break;
            default:
                answer(t.seq, accept ? UserResponse::accepted : UserResponse::dismissed, when);
                break;
        }
    }

    const SimProfile& p_;
    std::uint64_t seed_;
    int minutes_;
    Mediator& engine_;
    std::mt19937_64 events_rng_;
    std::mt19937_64 user_rng_;
    std::string session_;
    Millis t0_ = 0;
    std::size_t impressions_ = 0;
    std::size_t shown_ = 0;
    int pile_sent_ = 0;
    std::optional<Millis> activated_at_;
    SimRun run_;
};

}  // namespace

SimRun run_simulation(const SimProfile& profile, std::uint64_t seed, int minutes, Mediator& engine) {
    if (minutes <= 0) throw UsageError("minutes must be positive");
    return Driver(profile, seed, minutes, engine).run();
}

SimReport report_from_audit(const std::vector<AuditRecord>& records, const std::string& profile,
                            std::uint64_t seed, int minutes) {
    SimReport rep;
    rep.profile = profile;
    rep.seed = seed;
    rep.minutes = minutes;
    auto effect = [](const AuditRecord& r, const char* key) -> std::uint64_t {
        auto it = r.effects.find(key);
        return it == r.effects.end() ? 0 : static_cast<std::uint64_t>(it->second);
    };
    for (const AuditRecord& r : records) {
        ++rep.ticks;
        if (r.status == "rejected") ++rep.rejected_ticks;
        rep.posts_assessed += effect(r, "posts_assessed");
        rep.posts_hidden += effect(r, "posts_hidden");
        for (std::size_t b = 0; b < rep.integrity_histogram.size(); ++b) {
            rep.integrity_histogram[b] += effect(r, ("integrity_b" + std::to_string(b)).c_str());
        }
        rep.recovery_suggestions += effect(r, "recovery_suggested");
        rep.recovery_activations += effect(r, "recovery_activated");
        rep.inbound_hidden += effect(r, "inbound_hide");
        rep.inbound_queued += effect(r, "inbound_queue_supportive_review");
        rep.evidence_records += effect(r, "evidence_captured");

        const nlohmann::json* inter = nullptr;
        if (r.resolution.is_object() && r.resolution.contains("interjection") &&
            !r.resolution.at("interjection").is_null()) {
            inter = &r.resolution.at("interjection");
        }
        if (inter == nullptr) continue;
        ++rep.interventions_shown;
        const std::string pattern = inter->value("pattern", "");
        if (pattern == "withdrawal") {
            ++rep.pauses_shown;
            rep.cooldown_trajectory.push_back(r.context.value("cooldown_minutes", 0.0));
        }
        if (pattern == "rewriter") ++rep.rewrites_offered;
        switch (r.user_response) {
            case UserResponse::accepted: ++rep.accepted; break;
            case UserResponse::dismissed: ++rep.dismissed; break;
            case UserResponse::overridden: ++rep.overridden; break;
            case UserResponse::none: ++rep.unanswered; break;
        }
    }
    return rep;
}

std::vector<std::string> reconcile(const SimReport& a, const SimReport& b) {
    std::vector<std::string> diffs;
#define MEDIATOR_CMP(field) \
    if (a.field != b.field) diffs.emplace_back(#field)
    MEDIATOR_CMP(ticks);
    MEDIATOR_CMP(rejected_ticks);
    MEDIATOR_CMP(interventions_shown);
    MEDIATOR_CMP(accepted);
    MEDIATOR_CMP(dismissed);
    MEDIATOR_CMP(overridden);
    MEDIATOR_CMP(unanswered);
    MEDIATOR_CMP(pauses_shown);
    MEDIATOR_CMP(rewrites_offered);
    MEDIATOR_CMP(posts_assessed);
    MEDIATOR_CMP(posts_hidden);
    MEDIATOR_CMP(integrity_histogram);
    MEDIATOR_CMP(recovery_suggestions);
    MEDIATOR_CMP(recovery_activations);
    MEDIATOR_CMP(inbound_hidden);
    MEDIATOR_CMP(inbound_queued);
    MEDIATOR_CMP(evidence_records);
    MEDIATOR_CMP(cooldown_trajectory);
#undef MEDIATOR_CMP
    return diffs;
}

std::string to_csv(const SimReport& r) {
    std::ostringstream out;
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    out << "metric,value\n";
    out << "schema_version," << kReportSchemaVersion << "\n";
    out << "profile," << r.profile << "\n";
    out << "seed," << r.seed << "\n";
    out << "minutes," << r.minutes << "\n";
    out << "ticks," << r.ticks << "\n";
    out << "rejected_ticks," << r.rejected_ticks << "\n";
    out << "interventions_shown," << r.interventions_shown << "\n";
    out << "accepted," << r.accepted << "\n";
    out << "dismissed," << r.dismissed << "\n";
    out << "overridden," << r.overridden << "\n";
    out << "unanswered," << r.unanswered << "\n";
    out << "pauses_shown," << r.pauses_shown << "\n";
    out << "rewrites_offered," << r.rewrites_offered << "\n";
    out << "posts_assessed," << r.posts_assessed << "\n";
    out << "posts_hidden," << r.posts_hidden << "\n";
    for (std::size_t b = 0; b < r.integrity_histogram.size(); ++b) {
        out << "integrity_bucket_" << b << "," << r.integrity_histogram[b] << "\n";
    }
    out << "recovery_suggestions," << r.recovery_suggestions << "\n";
    out << "recovery_activations," << r.recovery_activations << "\n";
    out << "inbound_hidden," << r.inbound_hidden << "\n";
    out << "inbound_queued," << r.inbound_queued << "\n";
    out << "evidence_records," << r.evidence_records << "\n";
    out << "mean_cooldown_minutes," << num(r.mean_cooldown()) << "\n";
    out << "cooldown_trajectory,";
    for (std::size_t i = 0; i < r.cooldown_trajectory.size(); ++i) {
        out << (i ? ";" : "") << num(r.cooldown_trajectory[i]);
    }
    out << "\n";
    return out.str();
}

std::string summary(const SimReport& r) {
    std::ostringstream out;
    out << "Simulated " << r.minutes << " min as '" << r.profile << "' (seed " << r.seed << ")\n";
    out << "  decision ticks:        " << r.ticks << " (" << r.rejected_ticks << " rejected)\n";
    out << "  interventions shown:   " << r.interventions_shown << " (accepted " << r.accepted << ", dismissed "
        << r.dismissed << ", overridden " << r.overridden << ", unanswered " << r.unanswered << ")\n";
    out << "  pauses shown:          " << r.pauses_shown;
    if (!r.cooldown_trajectory.empty()) {
        out << ", cooldown ";
        for (std::size_t i = 0; i < r.cooldown_trajectory.size(); ++i) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%g", r.cooldown_trajectory[i]);
            out << (i ? " -> " : "") << buf;
        }
        out << " min";
    }
    out << "\n";
    out << "  rewrite offers:        " << r.rewrites_offered << "\n";
    out << "  posts assessed/hidden: " << r.posts_assessed << " / " << r.posts_hidden << "\n";
    out << "  integrity (s_fact):    [0,.25) " << r.integrity_histogram[0] << "  [.25,.5) " << r.integrity_histogram[1]
        << "  [.5,.75) " << r.integrity_histogram[2] << "  [.75,1) " << r.integrity_histogram[3] << "  1.0 "
        << r.integrity_histogram[4] << "\n";
    out << "  recovery:              " << r.recovery_suggestions << " suggested, " << r.recovery_activations
        << " activated, " << r.inbound_hidden << " hidden, " << r.inbound_queued << " held for review\n";
    return out.str();
}

}  // namespace mediator::sim
