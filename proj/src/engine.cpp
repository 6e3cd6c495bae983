#include "mediator/engine.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <system_error>

#include "durable_file.hpp"
#include "json_util.hpp"
#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

namespace {

constexpr int kInputLogVersion = 1;

std::string compact(const json& j) { return j.dump(); }

int integrity_bucket(double s_fact) {
    if (s_fact >= 1.0) return 4;
    return std::clamp(static_cast<int>(std::floor(s_fact * 4.0)), 0, 3);
}

json context_snapshot(const RecoveryState& recovery, const CadenceState& cadence) {
    return json{{"recovery_phase", std::string(to_string(recovery.phase))},
                {"cooldown_minutes", cadence.cooldown_minutes},
                {"last_intervention",
                 cadence.last_intervention ? json(*cadence.last_intervention) : json(nullptr)}};
}

const PatternDecision* decision_for(const Resolution& r, Pattern p) {
    for (const auto& d : r.decisions) {
        if (d.pattern == p) return &d;
    }
    return nullptr;
}

bool interjection_from(const TickOutcome& t, Pattern p) {
    return t.resolution.interjection && t.resolution.interjection->pattern == p;
}

}  // namespace

double integrity_risk(const IntegrityScore& s) {
    const double risk = 0.6 * (1.0 - s.s_fact) + 0.3 * s.s_ai.value_or(0.0) + 0.1 * std::abs(s.s_bias.value_or(0.0));
    return std::clamp(risk, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Resources

std::shared_ptr<const EngineResources> EngineResources::load(const UserConfig& config) {
    auto res = std::make_shared<EngineResources>();
    const ResourcePaths& p = config.resources;
    res->facts = std::make_shared<const FactDatabase>(
        FactDatabase::load(resolve_resource(p, p.fact_db, "facts.jsonl")));
    res->ai = std::make_shared<const StylometricDetector>();
    try {
        res->bias = std::make_shared<const LexiconBiasEstimator>(LexiconBiasEstimator::load(
            resolve_resource(p, p.bias_left, "bias_left.txt"), resolve_resource(p, p.bias_right, "bias_right.txt")));
    } catch (const LoadError& e) {
        res->warnings.push_back(std::string("bias estimator unavailable: ") + e.what());
    }
    res->rewriter = std::make_shared<const Rewriter>(RewriteLexicons::load(config));
    try {
        res->toxicity = std::make_shared<const LexiconToxicityEstimator>(
            text::Lexicon::load(resolve_resource(p, p.toxicity, "toxicity.txt")));
    } catch (const LoadError& e) {
        res->warnings.push_back(std::string("toxicity lexicon unavailable, scoring 0: ") + e.what());
        res->toxicity = std::make_shared<const LexiconToxicityEstimator>(text::Lexicon::from_terms({}));
    }
    try {
        res->prompts = std::make_shared<const PromptBook>(
            PromptBook::load(resolve_resource(p, p.prompts, "prompts.txt")));
    } catch (const LoadError& e) {
        res->warnings.push_back(std::string("using built-in prompts: ") + e.what());
        res->prompts = std::make_shared<const PromptBook>();
    }
    return res;
}

// ---------------------------------------------------------------------------
// Construction and recovery

Mediator::Mediator(UserConfig config, StorageOptions storage, net::Gateway* gateway)
    : Mediator(config, EngineResources::load(validate_config(config)), std::move(storage), gateway) {}

Mediator::Mediator(UserConfig config, std::shared_ptr<const EngineResources> resources,
                   StorageOptions storage, net::Gateway* gateway)
    : resources_(std::move(resources)), config_(validate_config(config)), gateway_(gateway) {
    if (!resources_) throw UsageError("engine resources are required");
    config_digest_ = config_digest(config_);
    if (gateway_ == nullptr) {
        owned_gateway_ = std::make_unique<net::HttpGateway>();
        gateway_ = owned_gateway_.get();
    }
    recovery_.allowlist = config_.recovery_allowlist;

    if (storage.dir.empty()) {
        audit_ = std::make_unique<AuditStore>();
        evidence_ = std::make_unique<EvidenceChain>();
        inputs_.push_back(json{{"type", "init"}, {"v", kInputLogVersion}, {"config", config_to_json(config_)}});
        return;
    }
    const std::filesystem::path dir(storage.dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw LoadError("cannot create storage directory " + storage.dir + ": " + ec.message());
    audit_ = std::make_unique<AuditStore>((dir / "audit.jsonl").string());
    evidence_ = std::make_unique<EvidenceChain>((dir / "evidence.jsonl").string());
    input_path_ = (dir / "inputs.jsonl").string();
    recover_from_storage();

    if (config_ != validate_config(config)) {
        // The caller's config differs from the one the log ended with.
        update_config(config, audit_->size() ? audit_->find(audit_->last_seq())->timestamp : 0);
    }
}

Mediator::~Mediator() = default;

void Mediator::recover_from_storage() {
    detail::LineFile f = detail::read_line_file(input_path_);
    if (!f.partial_tail.empty()) {
        std::size_t keep = 0;
        for (const auto& line : f.lines) keep += line.size() + 1;
        try {
            detail::truncate_file(input_path_, keep);
        } catch (const std::system_error& e) {
            throw LoadError(std::string("cannot drop torn input line: ") + e.what());
        }
    }
    if (f.lines.empty()) {
        if (audit_->size() > 0) throw LoadError("audit log present but input log is empty");
        if (!evidence_->records().empty()) throw LoadError("evidence present but input log is empty");
        log_input(json{{"type", "init"}, {"v", kInputLogVersion}, {"config", config_to_json(config_)}});
        return;
    }

    std::vector<json> lines;
    lines.reserve(f.lines.size());
    for (std::size_t i = 0; i < f.lines.size(); ++i) {
        try {
            lines.push_back(json::parse(f.lines[i]));
        } catch (const json::parse_error& e) {
            throw LoadError(input_path_ + " line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    const auto init = initial_config(lines);
    if (!init) throw LoadError(input_path_ + ": first line is not an init record");
    if (*init != config_) {
        config_ = *init;
        config_digest_ = config_digest(config_);
        resources_ = EngineResources::load(config_);
        recovery_.allowlist = config_.recovery_allowlist;
    }

    recovering_ = true;
    inputs_ = lines;
    try {
        for (std::size_t i = 1; i < lines.size(); ++i) {
            try {
                apply_input(lines[i]);
            } catch (const UsageError&) {
            } catch (const ValidationError&) {
            } catch (const LoadError&) {
            }
        }
    } catch (...) {
        recovering_ = false;
        throw;
    }
    recovering_ = false;
    if (audit_->size() > produced_) {
        throw LoadError("audit log holds " + std::to_string(audit_->size()) +
                        " records but the input log explains only " + std::to_string(produced_));
    }
    if (evidence_->records().size() > evidence_produced_) {
        throw LoadError("evidence chain is ahead of the input log");
    }
}

// ---------------------------------------------------------------------------
// Plumbing

void Mediator::check_running() const {
    if (halted_) throw AuditError("audit storage failed earlier; tick processing is halted");
}

bool Mediator::halted() const {
    std::lock_guard lock(mu_);
    return halted_;
}

void Mediator::log_input(const json& input) {
    if (recovering_) return;
    if (!input_path_.empty()) {
        try {
            detail::append_line_durable(input_path_, input.dump());
        } catch (const std::system_error& e) {
            halted_ = true;
            throw AuditError(std::string("input log append failed: ") + e.what());
        }
    }
    inputs_.push_back(input);
}

std::shared_ptr<const EngineResources> Mediator::resources_snapshot() const {
    std::shared_lock lock(resources_mu_);
    return resources_;
}

IntegrityComponents Mediator::components(const EngineResources& res) const {
    IntegrityComponents c;
    c.facts = res.facts.get();
    c.ai_detector = res.ai.get();
    c.bias = res.bias.get();
    return c;
}

std::map<std::string, std::int64_t> Mediator::advance_clock(Millis now) {
    std::map<std::string, std::int64_t> effects;
    if (timer_due(recovery_, now)) {
        const RecoveryPhase was = recovery_.phase;
        recovery_ = transition(recovery_, RecoveryEvent::timer_expire, now).state;
        if (was == RecoveryPhase::suggested) {
            pending_suggestion_.reset();
            effects["recovery_suggestion_lapsed"] = 1;
        } else {
            effects["recovery_cooldown_ended"] = 1;
        }
    }
    if (pending_pause_ && now - pending_pause_->shown_at >= kAvoidedAfterMillis) {
        cadence_ = update_cadence(cadence_, CadenceResponse::avoided);
        pending_pause_.reset();
        effects["pause_avoided"] = 1;
    }
    return effects;
}

std::optional<CandidateGroup> Mediator::recovery_presence_group() {
    if (recovery_.phase != RecoveryPhase::active) return std::nullopt;
    CandidateGroup g;
    g.pattern = Pattern::recovery;
    g.subject = "recovery_mode";
    g.candidates.push_back(make_candidate(0, InterventionKind::no_op, utility::kNoOp, 0.0));
    if (support_hub_pending_ && config_.patterns.recovery) {
        g.candidates.push_back(make_candidate(1, InterventionKind::soft_prompt, utility::kSupportHub, 0.0,
                                              compact({{"view", "support_hub"}})));
    } else {
        g.candidates.push_back(make_candidate(1, InterventionKind::passive_cue, utility::kPassiveCue, 0.0,
                                              compact({{"banner", "recovery_active"}})));
    }
    return g;
}

namespace {

// Resolves a tick, turning a malformed candidate set into a rejected outcome.
TickOutcome resolve_or_reject(const Tick& tick, const UserConfig& config) {
    TickOutcome out;
    try {
        out.resolution = resolve_tick(tick, config);
    } catch (const MalformedTick& e) {
        out.status = "rejected";
        out.error = e.what();
        out.resolution = Resolution{};
        out.resolution.explanation = std::string("Tick rejected: ") + e.what();
    }
    return out;
}

json groups_json(const Tick& tick) {
    json groups = json::array();
    for (const auto& g : tick.groups) {
        json cands = json::array();
        for (const auto& c : g.candidates) {
            cands.push_back({{"action_id", c.action_id},
                             {"kind", std::string(to_string(c.kind))},
                             {"utility", std::isfinite(c.utility) ? json(c.utility) : json(nullptr)},
                             {"agency_penalty", std::isfinite(c.agency_penalty) ? json(c.agency_penalty) : json(nullptr)},
                             {"risk", std::isfinite(c.risk) ? json(c.risk) : json(nullptr)},
                             {"payload", c.payload}});
        }
        groups.push_back({{"pattern", std::string(to_string(g.pattern))}, {"subject", g.subject}, {"candidates", cands}});
    }
    return groups;
}

}  // namespace

TickOutcome Mediator::run_tick(Tick tick, std::map<std::string, std::int64_t> effects, json extra_context) {
    TickOutcome out = resolve_or_reject(tick, config_);
    return finish_tick(tick, std::move(out), std::move(effects), std::move(extra_context));
}

TickOutcome Mediator::finish_tick(const Tick& tick, TickOutcome out, std::map<std::string, std::int64_t> effects,
                                  json extra_context) {
    AuditRecord rec;
    rec.timestamp = tick.timestamp;
    rec.session_id = tick.session_id;
    rec.trigger = std::string(to_string(tick.trigger));
    rec.status = out.status;
    rec.error = out.error;
    if (out.status == "rejected") {
        rec.resolution = json{{"candidate_groups", groups_json(tick)}};
    } else {
        rec.resolution = to_json(out.resolution);
        rec.resolution.erase("explanation");
    }
    rec.explanation = out.resolution.explanation;
    rec.config_digest = config_digest_;
    if (out.resolution.interjection) effects["interjection"] = 1;
    effects["passive_cues"] = static_cast<std::int64_t>(out.resolution.passive_cues.size());
    rec.effects = std::move(effects);
    rec.context = context_snapshot(recovery_, cadence_);
    if (extra_context.is_object()) rec.context.update(extra_context);
    out.seq = emit(std::move(rec));
    return out;
}

std::uint64_t Mediator::emit(AuditRecord record) {
    const std::uint64_t seq = produced_ + 1;
    if (recovering_ && seq <= audit_->size()) {
        AuditRecord stored = *audit_->find(seq);
        stored.user_response = UserResponse::none;
        record.seq = seq;
        record.recorded_at = stored.recorded_at;
        if (auto field = first_difference(stored, record)) {
            throw AuditError("audit log diverges from the input log at seq " + std::to_string(seq) +
                            " (field " + *field + ")");
        }
        produced_ = seq;
        return seq;
    }
    try {
        audit_->append(std::move(record));
    } catch (const AuditError&) {
        halted_ = true;
        throw;
    }
    produced_ = seq;
    return seq;
}

void Mediator::capture_evidence(const json& item, Millis at) {
    const std::size_t index = evidence_produced_;
    if (recovering_ && index < evidence_->records().size()) {
        const EvidenceRecord& stored = evidence_->records()[index];
        if (stored.item != item || stored.captured_at != at) {
            throw AuditError("evidence record " + std::to_string(index + 1) + " does not match the input log");
        }
        ++evidence_produced_;
        return;
    }
    evidence_->capture(item, at);
    ++evidence_produced_;
}

// ---------------------------------------------------------------------------
// Public entry points

IntegrityScore Mediator::assess(const PostContent& post) const {
    const auto res = resources_snapshot();
    return assess_post(post, components(*res));
}

EventBatchResult Mediator::ingest_events(const std::string& session_id, const std::vector<SessionEvent>& batch) {
    std::lock_guard lock(mu_);
    check_running();
    json events = json::array();
    for (const auto& e : batch) events.push_back(to_json(e));
    log_input(json{{"type", "events"}, {"session_id", session_id}, {"events", events}});
    return do_ingest(session_id, batch);
}

FeedResult Mediator::curate_page(const std::string& session_id, const std::vector<PostContent>& page, Millis now) {
    std::lock_guard lock(mu_);
    check_running();
    json posts = json::array();
    for (const auto& p : page) posts.push_back(to_json(p));
    log_input(json{{"type", "feed"}, {"session_id", session_id}, {"timestamp", now}, {"page", posts}});
    return do_curate(session_id, page, now);
}

DraftResult Mediator::submit_draft(const std::string& session_id, const std::string& body, Millis now) {
    UserConfig cfg;
    {
        std::lock_guard lock(mu_);
        check_running();
        cfg = config_;
    }
    // The provider call happens outside the lock; its answer is logged so a
    // replay never touches the network.
    const auto res = resources_snapshot();
    const bool configured = cfg.patterns.rewriter && cfg.rewrite_provider.enabled();
    std::optional<std::string> answer;
    if (configured && res->rewriter->analyze_draft(body).risk > 0.0) {
        try {
            HttpRewriteProvider provider(*gateway_, net::Endpoint::parse(cfg.rewrite_provider.endpoint));
            answer = provider.rewrite(body, Tone::neutral, std::chrono::milliseconds(cfg.rewrite_provider.timeout_ms));
        } catch (const std::exception&) {
            answer.reset();
        }
    }

    std::lock_guard lock(mu_);
    check_running();
    log_input(json{{"type", "draft"},
                   {"session_id", session_id},
                   {"timestamp", now},
                   {"body", body},
                   {"provider", {{"configured", configured}, {"text", answer ? json(*answer) : json(nullptr)}}}});
    return do_draft(session_id, body, now, configured, answer);
}

InboundResult Mediator::receive_inbound(const std::string& session_id, const InboundItem& item) {
    std::lock_guard lock(mu_);
    check_running();
    log_input(json{{"type", "inbound"}, {"session_id", session_id}, {"item", to_json(item)}});
    return do_inbound(session_id, item);
}

RecoveryCommandResult Mediator::recovery_command(RecoveryEvent command, Millis now) {
    std::lock_guard lock(mu_);
    check_running();
    log_input(json{{"type", "recovery"}, {"command", std::string(to_string(command))}, {"timestamp", now}});
    return do_recovery(command, now);
}

AuditRecord Mediator::record_response(std::uint64_t seq, UserResponse response, Millis now) {
    std::lock_guard lock(mu_);
    check_running();
    log_input(json{{"type", "response"},
                   {"seq", seq},
                   {"response", std::string(to_string(response))},
                   {"timestamp", now}});
    return do_response(seq, response, now);
}

TickOutcome Mediator::update_config(const UserConfig& config, Millis now) {
    const UserConfig validated = validate_config(config);
    if (validated.resources != this->config().resources) EngineResources::load(validated);
    std::lock_guard lock(mu_);
    check_running();
    log_input(json{{"type", "config"}, {"config", config_to_json(validated)}, {"timestamp", now}});
    return do_config(validated, now);
}

void Mediator::apply_input(const json& input) {
    std::lock_guard lock(mu_);
    check_running();
    detail::ObjectReader r(input, "input");
    const std::string type = r.string("type");
    if (type == "init") {
        r.integer("v");
        r.raw("config");
        r.finish();
        return;
    }
    log_input(input);
    if (type == "events") {
        const std::string session = r.string("session_id");
        const json& events = r.raw("events");
        r.finish();
        if (!events.is_array()) throw ValidationError("input.events", "expected an array");
        std::vector<SessionEvent> batch;
        for (const auto& e : events) batch.push_back(session_event_from_json(e));
        do_ingest(session, batch);
    } else if (type == "feed") {
        const std::string session = r.string("session_id");
        const Millis now = r.integer("timestamp");
        const json& page = r.raw("page");
        r.finish();
        if (!page.is_array()) throw ValidationError("input.page", "expected an array");
        std::vector<PostContent> posts;
        for (const auto& p : page) posts.push_back(post_from_json(p));
        do_curate(session, posts, now);
    } else if (type == "draft") {
        const std::string session = r.string("session_id");
        const Millis now = r.integer("timestamp");
        const std::string body = r.string("body");
        detail::ObjectReader p(r.raw("provider"), "input.provider");
        const bool configured = p.boolean_or("configured", false);
        const std::optional<std::string> text = p.optional_string("text");
        p.finish();
        r.finish();
        do_draft(session, body, now, configured, text);
    } else if (type == "inbound") {
        const std::string session = r.string("session_id");
        const InboundItem item = inbound_item_from_json(r.raw("item"));
        r.finish();
        do_inbound(session, item);
    } else if (type == "recovery") {
        const std::string command = r.string("command");
        const Millis now = r.integer("timestamp");
        r.finish();
        RecoveryEvent ev;
        if (command == "user_activate") {
            ev = RecoveryEvent::user_activate;
        } else if (command == "user_deactivate") {
            ev = RecoveryEvent::user_deactivate;
        } else {
            throw ValidationError("input.command", "unknown recovery command " + command);
        }
        do_recovery(ev, now);
    } else if (type == "response") {
        const std::int64_t seq = r.integer("seq");
        const UserResponse resp = user_response_from_string(r.string("response"));
        const Millis now = r.integer("timestamp");
        r.finish();
        do_response(static_cast<std::uint64_t>(std::max<std::int64_t>(seq, 0)), resp, now);
    } else if (type == "config") {
        const UserConfig cfg = config_from_json(r.raw("config"));
        const Millis now = r.integer("timestamp");
        r.finish();
        do_config(cfg, now);
    } else {
        throw ValidationError("input.type", "unknown input type " + type);
    }
}

// ---------------------------------------------------------------------------
// Tick producers

EventBatchResult Mediator::do_ingest(const std::string& session_id, const std::vector<SessionEvent>& batch) {
    EventBatchResult result;
    Millis now = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const SessionEvent& e = batch[i];
        const std::string label = "event " + std::to_string(i) + " (" + std::string(event_kind_name(e.payload)) + ")";
        if (e.session_id != session_id) {
            result.diagnostics.push_back(label + ": session_id " + e.session_id + " does not match " + session_id);
            continue;
        }
        try {
            monitor_.ingest_event(e);
            ++result.accepted;
            now = e.timestamp;
        } catch (const UsageError& ex) {
            result.diagnostics.push_back(label + ": " + ex.what());
        }
    }
    if (result.accepted == 0) return result;

    auto effects = advance_clock(now);
    effects["events_accepted"] = static_cast<std::int64_t>(result.accepted);

    Tick tick{session_id, Trigger::event_batch, now, {}};
    if (auto g = recovery_presence_group()) tick.groups.push_back(std::move(*g));

    json extra = json::object();
    std::optional<MicroIntervention> offered;
    const SessionState& session = monitor_.session(session_id);
    if (!session.ended()) {
        result.signals = session.derive_signals(now, config_);
        result.continuation_risk = continuation_risk(result.signals);
        extra["signals"] = to_json(result.signals);
        extra["continuation_risk"] = result.continuation_risk;
        if (config_.patterns.withdrawal) {
            const auto res = resources_snapshot();
            offered = maybe_intervene(result.continuation_risk, cadence_, now, config_,
                                      res->prompts->pick(prompt_counter_));
            if (offered) {
                json payload = to_json(*offered);
                payload["cooldown_minutes"] = cadence_.cooldown_minutes;
                CandidateGroup g;
                g.pattern = Pattern::withdrawal;
                g.subject = session_id;
                g.candidates.push_back(
                    make_candidate(0, InterventionKind::no_op, utility::kNoOp, result.continuation_risk));
                g.candidates.push_back(make_candidate(1, InterventionKind::interstitial_pause, utility::kPause,
                                                      result.continuation_risk, compact(payload)));
                tick.groups.push_back(std::move(g));
            }
        }
    }

    const bool hub_pending = support_hub_pending_;
    TickOutcome out = run_tick(std::move(tick), std::move(effects), std::move(extra));
    if (interjection_from(out, Pattern::withdrawal)) {
        cadence_.last_intervention = now;
        pending_pause_ = PendingPause{out.seq, now};
        ++prompt_counter_;
        result.micro_intervention = offered;
    }
    if (hub_pending && interjection_from(out, Pattern::recovery)) support_hub_pending_ = false;
    result.tick = std::move(out);
    return result;
}

FeedResult Mediator::do_curate(const std::string& session_id, const std::vector<PostContent>& page, Millis now) {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < page.size(); ++i) {
        if (page[i].post_id.empty()) throw ValidationError("page[" + std::to_string(i) + "].post_id", "must not be empty");
        if (!ids.insert(page[i].post_id).second) {
            throw ValidationError("page[" + std::to_string(i) + "].post_id", "duplicate post_id " + page[i].post_id);
        }
    }

    FeedResult result;
    auto effects = advance_clock(now);
    const auto res = resources_snapshot();

    Tick tick{session_id, Trigger::feed_page, now, {}};
    if (auto g = recovery_presence_group()) tick.groups.push_back(std::move(*g));

    if (config_.patterns.integrity) {
        const IntegrityComponents comps = components(*res);
        for (const auto& post : page) {
            IntegrityScore score = assess_post(post, comps);
            const double risk = integrity_risk(score);
            json badge{{"s_fact", score.s_fact},
                       {"s_ai", score.s_ai ? json(*score.s_ai) : json(nullptr)},
                       {"s_bias", score.s_bias ? json(*score.s_bias) : json(nullptr)},
                       {"bias_label", std::string(to_string(score.bias_label))},
                       {"conflicts", score.conflicts},
                       {"total_claims", score.total_claims}};
            CandidateGroup g;
            g.pattern = Pattern::integrity;
            g.subject = post.post_id;
            g.candidates.push_back(make_candidate(0, InterventionKind::no_op, utility::kNoOp, risk));
            g.candidates.push_back(
                make_candidate(1, InterventionKind::passive_cue, utility::kPassiveCue, risk, compact(badge)));
            tick.groups.push_back(std::move(g));
            ++effects["integrity_b" + std::to_string(integrity_bucket(score.s_fact))];
            ++effects["posts_assessed"];
            result.integrity.emplace(post.post_id, std::move(score));
        }
    }

    const CurationPolicy policy = CurationPolicy::from_config(config_);
    CuratedFeed curated = curate_feed(page, policy);
    bool reordered = false;
    std::size_t next = 0;
    for (const auto& v : curated.visible) {
        while (next < page.size() && page[next].post_id != v.post_id) ++next;
        if (next == page.size()) {
            reordered = true;
            break;
        }
        ++next;
    }
    const bool changed = reordered || !curated.hidden.empty();
    if (config_.patterns.curator && changed) {
        CandidateGroup g;
        g.pattern = Pattern::curator;
        g.subject = "page";
        g.candidates.push_back(make_candidate(0, InterventionKind::no_op, utility::kCurationNoOp, 0.0));
        g.candidates.push_back(make_candidate(
            1, InterventionKind::reorder_demote, utility::kCurationApply, 0.0,
            compact({{"hidden", curated.hidden.size()}, {"reordered", reordered}})));
        tick.groups.push_back(std::move(g));
    }

    // Whether curation applies is decided before the record is written.
    TickOutcome probe = resolve_or_reject(tick, config_);
    const PatternDecision* cur = decision_for(probe.resolution, Pattern::curator);
    result.curation_applied = cur && cur->decision.chosen.kind == InterventionKind::reorder_demote;
    if (result.curation_applied) {
        result.feed = std::move(curated);
        effects["posts_hidden"] = static_cast<std::int64_t>(result.feed.hidden.size());
    } else {
        result.feed.warnings = curated.warnings;
        if (!config_.patterns.curator) result.feed.warnings.push_back("curation is turned off; showing the page as received");
        for (const auto& post : page) {
            result.feed.visible.push_back({post.post_id, score_visibility(post, policy).score});
        }
    }

    const bool hub_pending = support_hub_pending_;
    result.tick = finish_tick(tick, std::move(probe), std::move(effects), json::object());
    if (hub_pending && interjection_from(result.tick, Pattern::recovery)) support_hub_pending_ = false;
    return result;
}

DraftResult Mediator::do_draft(const std::string& session_id, const std::string& body, Millis now,
                               bool provider_configured, const std::optional<std::string>& provider_text) {
    DraftResult result;
    auto effects = advance_clock(now);
    const auto res = resources_snapshot();
    result.analysis = res->rewriter->analyze_draft(body);
    result.offer = res->rewriter->with_provider_result(body, result.analysis, provider_configured, provider_text);
    if (!config_.patterns.rewriter) result.offer.suggestions.clear();
    effects["drafts_analyzed"] = 1;

    Tick tick{session_id, Trigger::draft_submitted, now, {}};
    if (auto g = recovery_presence_group()) tick.groups.push_back(std::move(*g));
    if (config_.patterns.rewriter) {
        const double risk = result.analysis.risk;
        CandidateGroup g;
        g.pattern = Pattern::rewriter;
        g.subject = "draft";
        g.candidates.push_back(make_candidate(0, InterventionKind::no_op, utility::kNoOp, risk));
        if (risk > 0.0) {
            json cats = json::array();
            for (DraftRisk c : result.analysis.risk_categories) cats.push_back(std::string(to_string(c)));
            g.candidates.push_back(make_candidate(1, InterventionKind::passive_cue, utility::kPassiveCue, risk,
                                                  compact({{"risk_categories", cats}})));
        }
        if (!result.offer.suggestions.empty()) {
            g.candidates.push_back(make_candidate(2, InterventionKind::rewrite_suggestion, utility::kRewrite, risk,
                                                  compact({{"suggestions", result.offer.suggestions.size()},
                                                           {"provider_fallback", result.offer.provider_fallback}})));
        }
        tick.groups.push_back(std::move(g));
    }

    const bool hub_pending = support_hub_pending_;
    result.tick = run_tick(std::move(tick), std::move(effects), json{{"draft_risk", result.analysis.risk}});
    if (hub_pending && interjection_from(result.tick, Pattern::recovery)) support_hub_pending_ = false;
    return result;
}

InboundResult Mediator::do_inbound(const std::string& session_id, const InboundItem& item) {
    InboundResult result;
    const Millis now = item.timestamp;
    auto effects = advance_clock(now);
    const auto res = resources_snapshot();
    InboundItem scored = item;
    if (!scored.toxicity) scored.toxicity = res->toxicity->score(item.text);
    result.toxicity = *scored.toxicity;
    effects["inbound_received"] = 1;

    Tick tick{session_id, Trigger::inbound_item, now, {}};
    if (recovery_.phase == RecoveryPhase::active) {
        result.verdict = filter_inbound(recovery_, item.sender_id, result.toxicity, config_);
        effects[std::string("inbound_") + std::string(to_string(*result.verdict))] = 1;
        if (*result.verdict != InboundVerdict::deliver) {
            CandidateGroup g;
            g.pattern = Pattern::recovery;
            g.subject = item.item_id;
            g.candidates.push_back(make_candidate(0, InterventionKind::no_op, utility::kNoOp, 0.0));
            g.candidates.push_back(make_candidate(
                1, InterventionKind::passive_cue, utility::kPassiveCue, 0.0,
                compact({{"verdict", std::string(to_string(*result.verdict))}, {"item_id", item.item_id}})));
            tick.groups.push_back(std::move(g));
        }
        if (*result.verdict == InboundVerdict::hide) effects["evidence_captured"] = 1;
    } else {
        const bool pile_on = brigade_.observe(result.toxicity, now);
        if (pile_on && recovery_.phase == RecoveryPhase::inactive && config_.patterns.recovery) {
            const double pressure = brigade_.pressure();
            CandidateGroup g;
            g.pattern = Pattern::recovery;
            g.subject = "recovery_suggestion";
            g.candidates.push_back(make_candidate(0, InterventionKind::no_op, utility::kNoOp, pressure));
            g.candidates.push_back(make_candidate(
                1, InterventionKind::soft_prompt, utility::kRecoverySuggestion, pressure,
                compact({{"suggest", "recovery_mode"}, {"pressure", pressure}, {"window_items", brigade_.window_size()}})));
            tick.groups.push_back(std::move(g));
        }
    }

    TickOutcome probe = resolve_or_reject(tick, config_);
    const bool suggest = probe.resolution.interjection &&
                         probe.resolution.interjection->subject == "recovery_suggestion";
    if (suggest) effects["recovery_suggested"] = 1;

    result.tick = finish_tick(tick, std::move(probe), std::move(effects), json{{"toxicity", result.toxicity}});
    if (result.verdict == InboundVerdict::hide) {
        capture_evidence(to_json(scored), now);
    } else if (result.verdict == InboundVerdict::queue_supportive_review) {
        review_queue_.push_back(scored);
    }
    if (suggest) {
        recovery_ = transition(recovery_, RecoveryEvent::detector_suggest, now).state;
        pending_suggestion_ = result.tick.seq;
        result.recovery_suggested = true;
    }
    return result;
}

RecoveryCommandResult Mediator::do_recovery(RecoveryEvent command, Millis now) {
    if (command != RecoveryEvent::user_activate && command != RecoveryEvent::user_deactivate) {
        throw UsageError("only user_activate and user_deactivate are user commands");
    }
    RecoveryCommandResult result;
    auto effects = advance_clock(now);
    const TransitionResult tr = transition(recovery_, command, now);
    result.changed = tr.changed;
    const bool activated = tr.changed && tr.state.phase == RecoveryPhase::active;
    if (activated) effects["recovery_activated"] = 1;
    if (tr.changed && tr.state.phase == RecoveryPhase::cooling_down) effects["recovery_deactivated"] = 1;

    const RecoveryState before = recovery_;
    const bool hub_before = support_hub_pending_;
    recovery_ = tr.state;
    support_hub_pending_ = activated || (support_hub_pending_ && tr.state.phase == RecoveryPhase::active);
    Tick tick{"", Trigger::recovery_command, now, {}};
    if (auto g = recovery_presence_group()) tick.groups.push_back(std::move(*g));
    TickOutcome out;
    try {
        out = run_tick(std::move(tick), std::move(effects),
                       json{{"command", std::string(to_string(command))},
                            {"previous_phase", std::string(to_string(before.phase))}});
    } catch (...) {
        recovery_ = before;
        support_hub_pending_ = hub_before;
        throw;
    }
    if (activated) {
        pending_suggestion_.reset();
        brigade_.reset();
    }
    if (support_hub_pending_ && interjection_from(out, Pattern::recovery)) support_hub_pending_ = false;
    result.state = recovery_;
    result.tick = std::move(out);
    return result;
}

AuditRecord Mediator::do_response(std::uint64_t seq, UserResponse response, Millis now) {
    if (response == UserResponse::none) throw UsageError("response must be accepted, overridden, or dismissed");
    if (seq == 0 || seq > produced_) throw UsageError("no audit record with seq " + std::to_string(seq));
    if (auto it = responses_.find(seq); it != responses_.end()) {
        throw UsageError("audit record " + std::to_string(seq) + " already has response " +
                         std::string(to_string(it->second)));
    }
    const AuditRecord stored = *audit_->find(seq);
    if (recovering_ && stored.user_response != UserResponse::none) {
        if (stored.user_response != response) {
            throw AuditError("stored response for seq " + std::to_string(seq) + " differs from the input log");
        }
    } else {
        try {
            audit_->record_user_response(seq, response);
        } catch (const AuditError&) {
            halted_ = true;
            throw;
        }
    }
    responses_[seq] = response;

    if (pending_pause_ && pending_pause_->seq == seq) {
        cadence_ = update_cadence(cadence_, response == UserResponse::accepted ? CadenceResponse::accepted
                                                                                : CadenceResponse::dismissed);
        pending_pause_.reset();
    }
    if (pending_suggestion_ && *pending_suggestion_ == seq) {
        // Accepting leaves the suggestion standing until the user activates.
        if (response != UserResponse::accepted) {
            recovery_ = transition(recovery_, RecoveryEvent::user_decline, now).state;
            brigade_.reset();
        }
        pending_suggestion_.reset();
    }
    return *audit_->find(seq);
}

TickOutcome Mediator::do_config(const UserConfig& config, Millis now) {
    const UserConfig validated = validate_config(config);
    std::shared_ptr<const EngineResources> fresh;
    if (validated.resources != config_.resources) fresh = EngineResources::load(validated);

    auto effects = advance_clock(now);
    const std::string previous = config_digest_;
    const UserConfig old = config_;
    config_ = validated;
    config_digest_ = config_digest(config_);
    Tick tick{"", Trigger::config_update, now, {}};
    TickOutcome out;
    try {
        out = run_tick(std::move(tick), std::move(effects), json{{"previous_digest", previous}});
    } catch (...) {
        config_ = old;
        config_digest_ = previous;
        throw;
    }
    recovery_.allowlist = config_.recovery_allowlist;
    if (fresh) {
        std::unique_lock lock(resources_mu_);
        resources_ = std::move(fresh);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Accessors

UserConfig Mediator::config() const {
    std::lock_guard lock(mu_);
    return config_;
}

RecoveryState Mediator::recovery_state() const {
    std::lock_guard lock(mu_);
    return recovery_;
}

CadenceState Mediator::cadence() const {
    std::lock_guard lock(mu_);
    return cadence_;
}

std::vector<InboundItem> Mediator::review_queue() const {
    std::lock_guard lock(mu_);
    return review_queue_;
}

std::vector<EvidenceRecord> Mediator::evidence() const {
    std::lock_guard lock(mu_);
    return evidence_->records();
}

std::optional<SessionSignals> Mediator::signals(const std::string& session_id, Millis now) const {
    std::lock_guard lock(mu_);
    if (!monitor_.has_session(session_id)) return std::nullopt;
    return monitor_.derive_signals(session_id, now, config_);
}

std::vector<std::string> Mediator::resource_warnings() const { return resources_snapshot()->warnings; }

std::vector<json> Mediator::inputs() const {
    std::lock_guard lock(mu_);
    return inputs_;
}

// ---------------------------------------------------------------------------
// Replay

std::vector<json> read_input_log(const std::string& path) {
    if (!std::filesystem::exists(path)) throw LoadError("input log not found: " + path);
    detail::LineFile f = detail::read_line_file(path);
    std::vector<json> out;
    out.reserve(f.lines.size());
    for (std::size_t i = 0; i < f.lines.size(); ++i) {
        try {
            out.push_back(json::parse(f.lines[i]));
        } catch (const json::parse_error& e) {
            throw LoadError(path + " line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

std::optional<UserConfig> initial_config(const std::vector<json>& inputs) {
    if (inputs.empty()) return std::nullopt;
    const json& first = inputs.front();
    if (!first.is_object() || first.value("type", "") != "init" || !first.contains("config")) return std::nullopt;
    return config_from_json(first.at("config"));
}

std::vector<AuditRecord> replay(const std::vector<json>& inputs, const UserConfig& config,
                                const std::vector<AuditRecord>& stored) {
    net::OfflineGateway offline;
    Mediator engine(config, StorageOptions{}, &offline);
    for (const auto& input : inputs) {
        try {
            engine.apply_input(input);
        } catch (const UsageError&) {
        } catch (const ValidationError&) {
        } catch (const LoadError&) {
        }
    }
    std::vector<AuditRecord> produced = engine.audit().all();
    const std::size_t n = std::max(produced.size(), stored.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t seq = i + 1;
        if (i >= stored.size()) throw ReplayDivergence(seq, "replay produced a record the stored log lacks");
        if (i >= produced.size()) throw ReplayDivergence(seq, "stored record was not reproduced");
        if (auto field = first_difference(stored[i], produced[i])) {
            throw ReplayDivergence(seq, "field '" + *field + "' differs");
        }
    }
    return produced;
}

// ---------------------------------------------------------------------------
// Wire formats

PostContent post_from_json(const json& j, const std::string& path) {
    detail::ObjectReader r(j, path);
    PostContent p;
    p.post_id = r.string("post_id");
    p.author_id = r.string_or("author_id", "");
    p.body = r.string_or("body", "");
    p.category = r.string_or("category", "");
    if (const json* media = r.optional_raw("media")) {
        if (!media->is_array()) throw ValidationError(r.field("media"), "expected an array of strings");
        for (const auto& item : *media) {
            if (!item.is_string()) throw ValidationError(r.field("media"), "expected an array of strings");
            p.media.push_back(item.get<std::string>());
        }
    }
    p.timestamp = r.integer_or("timestamp", 0);
    p.ad_category = r.optional_string("ad_category");
    r.finish();
    return p;
}

json to_json(const PostContent& p) {
    return json{{"post_id", p.post_id},
                {"author_id", p.author_id},
                {"body", p.body},
                {"category", p.category},
                {"media", p.media},
                {"timestamp", p.timestamp},
                {"ad_category", p.ad_category ? json(*p.ad_category) : json(nullptr)}};
}

json to_json(const TickOutcome& t) {
    json j = to_json(t.resolution);
    j["seq"] = t.seq;
    j["status"] = t.status;
    if (!t.error.empty()) j["error"] = t.error;
    return j;
}

json to_json(const EventBatchResult& r) {
    return json{{"accepted", r.accepted},
                {"diagnostics", r.diagnostics},
                {"resolution", r.tick ? to_json(*r.tick) : json(nullptr)},
                {"micro_intervention", r.micro_intervention ? to_json(*r.micro_intervention) : json(nullptr)},
                {"signals", to_json(r.signals)},
                {"continuation_risk", r.continuation_risk}};
}

json to_json(const FeedResult& r) {
    json integrity = json::object();
    for (const auto& [id, score] : r.integrity) integrity[id] = to_json(score);
    return json{{"feed", to_json(r.feed)},
                {"curation_applied", r.curation_applied},
                {"integrity", integrity},
                {"resolution", to_json(r.tick)}};
}

json to_json(const DraftResult& r) {
    return json{{"analysis", to_json(r.analysis)}, {"rewrites", to_json(r.offer)}, {"resolution", to_json(r.tick)}};
}

json to_json(const InboundResult& r) {
    return json{{"verdict", r.verdict ? json(std::string(to_string(*r.verdict))) : json(nullptr)},
                {"toxicity", r.toxicity},
                {"recovery_suggested", r.recovery_suggested},
                {"resolution", to_json(r.tick)}};
}

json to_json(const RecoveryCommandResult& r) {
    return json{{"state", to_json(r.state)}, {"changed", r.changed}, {"resolution", to_json(r.tick)}};
}

}  // namespace mediator
