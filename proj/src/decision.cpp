#include "mediator/decision.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "json_util.hpp"
#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

namespace {

void check_scalar(double v, const char* name, std::uint32_t id) {
    if (!std::isfinite(v)) {
        throw ComputationError(std::string("non-finite ") + name + " on action " +
                               std::to_string(id));
    }
    if (v < 0.0 || v > 1.0) {
        throw UsageError(std::string(name) + " outside [0,1] on action " + std::to_string(id));
    }
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.3f", v);
    return buf;
}

// True if `a` beats `b`: higher J, or equal J and lower id.
bool better(const ScoredAction& a, const ScoredAction& b) {
    if (a.objective_value != b.objective_value) return a.objective_value > b.objective_value;
    return a.action_id < b.action_id;
}

std::string explain(const ScoredAction& chosen, const ScoredAction* runner_up) {
    std::string text = "Chose " + std::string(to_string(chosen.kind)) + " (J " +
                       fmt3(chosen.objective_value) + ")";
    if (runner_up == nullptr) return text + "; it was the only option.";

    const ObjectiveTerms& w = chosen.components;
    const ObjectiveTerms& l = runner_up->components;
    text += " over " + std::string(to_string(runner_up->kind)) + " (J " +
            fmt3(runner_up->objective_value) + "). Term deltas: utility " +
            fmt3(w.utility_term - l.utility_term) + ", agency " +
            fmt3(w.agency_term - l.agency_term) + ", risk " + fmt3(w.risk_term - l.risk_term) +
            ", safety penalty " + fmt3(w.penalty_term - l.penalty_term) + ".";
    if (runner_up->penalty_applied && !chosen.penalty_applied) {
        text += " The alternative exceeded your risk threshold.";
    }
    if (chosen.objective_value == runner_up->objective_value) {
        text += " Tie resolved by lower action id.";
    }
    text += " You can override this.";
    return text;
}

}  // namespace

ScoredAction score_action(const CandidateAction& a, const UserConfig& config) {
    check_scalar(a.utility, "utility", a.action_id);
    check_scalar(a.agency_penalty, "agency_penalty", a.action_id);
    check_scalar(a.risk, "risk", a.action_id);
    if (!std::isfinite(config.lambda) || !std::isfinite(config.beta) ||
        !std::isfinite(config.tau)) {
        throw ComputationError("non-finite weight in config");
    }

    ScoredAction s;
    s.action_id = a.action_id;
    s.kind = a.kind;
    s.payload = a.payload;

    const bool over_threshold = a.risk > config.tau;
    if (config.mode == ScoringMode::equation1) {
        s.components.utility_term = a.utility;
        s.components.agency_term = -config.lambda * a.agency_penalty;
        s.penalty_applied = over_threshold;
    } else {
        s.components.utility_term = config.lambda * a.utility;
        s.components.risk_term = (1.0 - config.lambda) * a.risk;
        s.components.agency_term = -a.agency_penalty;
        s.penalty_applied = over_threshold && a.intervention_required();
    }
    if (s.penalty_applied) s.components.penalty_term = -config.beta * a.risk;
    s.objective_value = s.components.sum();
    if (!std::isfinite(s.objective_value)) {
        throw ComputationError("objective overflow on action " + std::to_string(a.action_id));
    }
    return s;
}

Decision select_action(std::span<const CandidateAction> candidates, const UserConfig& config) {
    if (candidates.empty()) throw UsageError("select_action needs at least one candidate");

    std::set<std::uint32_t> ids;
    Decision d;
    d.all_scored.reserve(candidates.size());
    for (const CandidateAction& a : candidates) {
        if (!ids.insert(a.action_id).second) {
            throw UsageError("duplicate action_id " + std::to_string(a.action_id));
        }
        d.all_scored.push_back(score_action(a, config));
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < d.all_scored.size(); ++i) {
        if (better(d.all_scored[i], d.all_scored[best])) best = i;
    }
    const ScoredAction* runner_up = nullptr;
    for (std::size_t i = 0; i < d.all_scored.size(); ++i) {
        if (i == best) continue;
        if (runner_up == nullptr || better(d.all_scored[i], *runner_up)) {
            runner_up = &d.all_scored[i];
        }
    }
    d.chosen = d.all_scored[best];
    d.explanation = explain(d.chosen, runner_up);
    d.override_available = true;
    return d;
}

CandidateAction candidate_from_json(const json& j, const std::string& path) {
    detail::ObjectReader r(j, path);
    CandidateAction c;
    const std::int64_t id = r.integer("action_id");
    if (id < 0 || id > std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError(r.field("action_id"), "expected a non-negative 32-bit integer");
    }
    c.action_id = static_cast<std::uint32_t>(id);
    const std::string kind = r.string("kind");
    const auto parsed = intervention_kind_from_string(kind);
    if (!parsed) throw ValidationError(r.field("kind"), "unknown intervention kind '" + kind + "'");
    c.kind = *parsed;
    c.utility = r.number("utility");
    c.risk = r.number("risk");
    c.agency_penalty = r.number_or("agency_penalty", agency_penalty_for(c.kind));
    c.payload = r.string_or("payload", "");
    r.finish();
    return c;
}

json to_json(const CandidateAction& c) {
    return json{{"action_id", c.action_id},
                {"kind", std::string(to_string(c.kind))},
                {"utility", c.utility},
                {"agency_penalty", c.agency_penalty},
                {"risk", c.risk},
                {"payload", c.payload}};
}

json to_json(const ScoredAction& s) {
    return json{{"action_id", s.action_id},
                {"kind", std::string(to_string(s.kind))},
                {"objective_value", s.objective_value},
                {"penalty_applied", s.penalty_applied},
                {"components",
                 {{"utility", s.components.utility_term},
                  {"agency", s.components.agency_term},
                  {"risk", s.components.risk_term},
                  {"penalty", s.components.penalty_term}}},
                {"payload", s.payload}};
}

json to_json(const Decision& d) {
    json all = json::array();
    for (const auto& s : d.all_scored) all.push_back(to_json(s));
    return json{{"chosen", to_json(d.chosen)},
                {"all_scored", all},
                {"explanation", d.explanation},
                {"override_available", d.override_available}};
}

}  // namespace mediator
