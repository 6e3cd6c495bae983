#include "mediator/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <system_error>

#include "durable_file.hpp"
#include "json_util.hpp"
#include "mediator/digest.hpp"
#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

std::string_view to_string(RecoveryPhase p) {
    switch (p) {
        case RecoveryPhase::inactive: return "inactive";
        case RecoveryPhase::suggested: return "suggested";
        case RecoveryPhase::active: return "active";
        case RecoveryPhase::cooling_down: return "cooling_down";
    }
    return "inactive";
}

std::string_view to_string(RecoveryEvent e) {
    switch (e) {
        case RecoveryEvent::user_activate: return "user_activate";
        case RecoveryEvent::detector_suggest: return "detector_suggest";
        case RecoveryEvent::user_decline: return "user_decline";
        case RecoveryEvent::user_deactivate: return "user_deactivate";
        case RecoveryEvent::timer_expire: return "timer_expire";
    }
    return "user_activate";
}

TransitionResult transition(const RecoveryState& state, RecoveryEvent event, Millis now) {
    RecoveryState next = state;
    using P = RecoveryPhase;
    using E = RecoveryEvent;

    switch (state.phase) {
        case P::inactive:
            if (event == E::user_activate) {
                next.phase = P::active;
                next.activated_at = now;
                next.timer.reset();
            } else if (event == E::detector_suggest) {
                next.phase = P::suggested;
                next.timer = now + kSuggestionLifetimeMillis;
            }
            break;
        case P::suggested:
            if (event == E::user_activate) {
                next.phase = P::active;
                next.activated_at = now;
                next.timer.reset();
            } else if (event == E::user_decline || event == E::timer_expire) {
                next.phase = P::inactive;
                next.timer.reset();
            }
            break;
        case P::active:
            if (event == E::user_deactivate) {
                next.phase = P::cooling_down;
                next.timer = now + kCoolingDownMillis;
            }
            break;
        case P::cooling_down:
            if (event == E::timer_expire) {
                next.phase = P::inactive;
                next.activated_at.reset();
                next.timer.reset();
            }
            break;
    }
    const bool changed = next.phase != state.phase;
    return {changed ? next : state, changed};
}

bool timer_due(const RecoveryState& state, Millis now) {
    return state.timer.has_value() && now >= *state.timer &&
           (state.phase == RecoveryPhase::cooling_down || state.phase == RecoveryPhase::suggested);
}

std::string_view to_string(InboundKind k) {
    switch (k) {
        case InboundKind::reply: return "reply";
        case InboundKind::mention: return "mention";
        case InboundKind::dm: return "dm";
    }
    return "reply";
}

InboundItem inbound_item_from_json(const json& j) {
    detail::ObjectReader r(j, "item");
    InboundItem item;
    item.item_id = r.string("item_id");
    item.sender_id = r.string("sender_id");
    const std::string kind = r.string_or("kind", "reply");
    if (kind == "reply") {
        item.kind = InboundKind::reply;
    } else if (kind == "mention") {
        item.kind = InboundKind::mention;
    } else if (kind == "dm") {
        item.kind = InboundKind::dm;
    } else {
        throw ValidationError("item.kind", "expected reply, mention, or dm");
    }
    item.text = r.string_or("text", "");
    if (const json* t = r.optional_raw("toxicity"); t && !t->is_null()) {
        if (!t->is_number()) throw ValidationError("item.toxicity", "expected a number");
        const double v = t->get<double>();
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw ValidationError("item.toxicity", "must be within [0, 1]");
        }
        item.toxicity = v;
    }
    item.timestamp = r.integer("timestamp");
    r.finish();
    return item;
}

json to_json(const InboundItem& item) {
    return json{{"item_id", item.item_id},
                {"sender_id", item.sender_id},
                {"kind", std::string(to_string(item.kind))},
                {"text", item.text},
                {"toxicity", item.toxicity ? json(*item.toxicity) : json(nullptr)},
                {"timestamp", item.timestamp}};
}

std::string_view to_string(InboundVerdict v) {
    switch (v) {
        case InboundVerdict::deliver: return "deliver";
        case InboundVerdict::hide: return "hide";
        case InboundVerdict::queue_supportive_review: return "queue_supportive_review";
    }
    return "deliver";
}

InboundVerdict filter_inbound(const RecoveryState& state, const std::string& sender_id, double toxicity,
                              const UserConfig& config) {
    if (state.phase != RecoveryPhase::active) {
        throw UsageError("filter_inbound called while recovery mode is " + std::string(to_string(state.phase)));
    }
    if (!std::isfinite(toxicity) || toxicity < 0.0 || toxicity > 1.0) {
        throw UsageError("toxicity outside [0,1]");
    }
    if (state.allowlist.count(sender_id)) return InboundVerdict::deliver;
    if (toxicity >= config.toxicity_hide) return InboundVerdict::hide;
    return InboundVerdict::queue_supportive_review;
}

double LexiconToxicityEstimator::score(std::string_view body) const {
    double keep = 1.0;
    for (const auto& term : lexicon_.matches(text::lower_words(body))) {
        double w = 0.5;
        if (const std::string* v = lexicon_.value(term); v && !v->empty()) {
            try {
                w = std::clamp(std::stod(*v), 0.0, 1.0);
            } catch (const std::exception&) {
                w = 0.5;
            }
        }
        keep *= 1.0 - w;
    }
    return std::clamp(1.0 - keep, 0.0, 1.0);
}

bool BrigadeDetector::observe(double toxicity, Millis at) {
    while (!window_.empty() && at - window_.front().first >= kWindowMillis) window_.pop_front();
    if (toxicity >= kToxicityFloor) window_.emplace_back(at, toxicity);
    return window_.size() >= kThresholdCount;
}

double BrigadeDetector::pressure() const {
    if (window_.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [at, t] : window_) sum += t;
    return sum / static_cast<double>(window_.size());
}

// ---------------------------------------------------------------------------

std::string evidence_digest(std::uint64_t seq, Millis captured_at, const json& item,
                            const std::string& prev_hash) {
    const json canonical{{"seq", seq}, {"captured_at", captured_at}, {"item", item}, {"prev_hash", prev_hash}};
    return sha256_hex(canonical.dump());
}

std::string serialize_evidence(const EvidenceRecord& r) {
    return json{{"seq", r.seq},
                {"captured_at", r.captured_at},
                {"item", r.item},
                {"prev_hash", r.prev_hash},
                {"hash", r.hash}}
        .dump();
}

namespace {

// Parses one persisted line; throws on any structural problem.
EvidenceRecord parse_evidence_line(const std::string& line) {
    const json j = json::parse(line);
    detail::ObjectReader r(j, "");
    EvidenceRecord rec;
    const json& seq = r.raw("seq");
    if (!seq.is_number_unsigned()) throw ValidationError("seq", "expected an unsigned integer");
    rec.seq = seq.get<std::uint64_t>();
    rec.captured_at = r.integer("captured_at");
    rec.item = r.raw("item");
    rec.prev_hash = r.string("prev_hash");
    rec.hash = r.string("hash");
    r.finish();
    return rec;
}

void check_link(const EvidenceRecord& rec, std::size_t index, const std::string& expected_prev) {
    if (rec.seq != index + 1) throw ChainError(index, "sequence number " + std::to_string(rec.seq));
    if (rec.prev_hash != expected_prev) throw ChainError(index, "prev_hash does not match predecessor");
    if (rec.hash != evidence_digest(rec.seq, rec.captured_at, rec.item, rec.prev_hash)) {
        throw ChainError(index, "digest mismatch");
    }
}

}  // namespace

std::optional<std::size_t> EvidenceChain::first_invalid(const std::vector<std::string>& lines) {
    std::string prev = kGenesisHash;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            const EvidenceRecord rec = parse_evidence_line(lines[i]);
            if (serialize_evidence(rec) != lines[i]) return i;
            check_link(rec, i, prev);
            prev = rec.hash;
        } catch (const std::exception&) {
            return i;
        }
    }
    return std::nullopt;
}

std::vector<std::string> EvidenceChain::read_lines(const std::string& path) {
    detail::LineFile f = detail::read_line_file(path);
    if (!f.partial_tail.empty()) f.lines.push_back(f.partial_tail);
    return f.lines;
}

EvidenceChain::EvidenceChain(std::string path) : path_(std::move(path)) {
    const auto lines = read_lines(path_);
    if (auto bad = first_invalid(lines)) throw ChainError(*bad, "persisted evidence failed verification");
    for (const auto& line : lines) records_.push_back(parse_evidence_line(line));
}

void EvidenceChain::verify() const {
    std::string prev = kGenesisHash;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        check_link(records_[i], i, prev);
        prev = records_[i].hash;
    }
}

const EvidenceRecord& EvidenceChain::capture(json item, Millis captured_at) {
    verify();
    if (!path_.empty()) {
        const auto lines = read_lines(path_);
        if (lines.size() != records_.size()) {
            throw ChainError(std::min(lines.size(), records_.size()), "evidence file changed underneath the chain");
        }
        if (auto bad = first_invalid(lines)) throw ChainError(*bad, "persisted evidence failed verification");
    }

    EvidenceRecord rec;
    rec.seq = records_.size() + 1;
    rec.captured_at = captured_at;
    rec.item = std::move(item);
    rec.prev_hash = records_.empty() ? kGenesisHash : records_.back().hash;
    rec.hash = evidence_digest(rec.seq, rec.captured_at, rec.item, rec.prev_hash);

    if (!path_.empty()) {
        try {
            detail::append_line_durable(path_, serialize_evidence(rec));
        } catch (const std::system_error& e) {
            throw ChainError(records_.size(), std::string("cannot persist evidence: ") + e.what());
        }
    }
    records_.push_back(std::move(rec));
    return records_.back();
}

json to_json(const RecoveryState& s) {
    return json{{"phase", std::string(to_string(s.phase))},
                {"activated_at", s.activated_at ? json(*s.activated_at) : json(nullptr)},
                {"allowlist", s.allowlist},
                {"timer", s.timer ? json(*s.timer) : json(nullptr)}};
}

}  // namespace mediator
