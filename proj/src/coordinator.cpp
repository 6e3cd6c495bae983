#include "mediator/coordinator.hpp"

#include <cmath>
#include <set>

namespace mediator {

using nlohmann::json;

std::string_view to_string(Pattern p) {
    switch (p) {
        case Pattern::rewriter: return "rewriter";
        case Pattern::integrity: return "integrity";
        case Pattern::curator: return "curator";
        case Pattern::withdrawal: return "withdrawal";
        case Pattern::recovery: return "recovery";
    }
    return "rewriter";
}

int tier_of(Pattern p) {
    switch (p) {
        case Pattern::recovery: return 0;
        case Pattern::integrity: return 1;
        case Pattern::withdrawal: return 2;
        case Pattern::rewriter:
        case Pattern::curator: return 3;
    }
    return 3;
}

std::string_view to_string(Trigger t) {
    switch (t) {
        case Trigger::event_batch: return "event_batch";
        case Trigger::feed_page: return "feed_page";
        case Trigger::draft_submitted: return "draft_submitted";
        case Trigger::inbound_item: return "inbound_item";
        case Trigger::config_update: return "config_update";
        case Trigger::recovery_command: return "recovery_command";
    }
    return "event_batch";
}

void validate_tick(const Tick& tick) {
    for (std::size_t g = 0; g < tick.groups.size(); ++g) {
        const CandidateGroup& group = tick.groups[g];
        const std::string where = std::string(to_string(group.pattern)) + " group " + std::to_string(g);
        if (group.candidates.empty()) throw MalformedTick(where + " has no candidates");
        bool has_noop = false;
        std::set<std::uint32_t> ids;
        for (const CandidateAction& a : group.candidates) {
            if (!ids.insert(a.action_id).second) {
                throw MalformedTick(where + " repeats action_id " + std::to_string(a.action_id));
            }
            for (double v : {a.utility, a.agency_penalty, a.risk}) {
                if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                    throw MalformedTick(where + " has a scalar outside [0,1] on action " +
                                        std::to_string(a.action_id));
                }
            }
            has_noop = has_noop || a.kind == InterventionKind::no_op;
        }
        if (!has_noop) throw MalformedTick(where + " lacks a no_op candidate");
    }
}

Resolution resolve_tick(const Tick& tick, const UserConfig& config) {
    validate_tick(tick);

    Resolution res;
    res.decisions.reserve(tick.groups.size());
    bool recovery_engaged = false;
    for (const CandidateGroup& group : tick.groups) {
        PatternDecision pd;
        pd.pattern = group.pattern;
        pd.subject = group.subject;
        pd.tier = tier_of(group.pattern);
        pd.decision = select_action(group.candidates, config);
        res.decisions.push_back(std::move(pd));
        if (group.pattern == Pattern::recovery) {
            for (const auto& a : group.candidates) {
                recovery_engaged = recovery_engaged || a.kind != InterventionKind::no_op;
            }
        }
    }

    for (std::size_t i = 0; i < res.decisions.size(); ++i) {
        const PatternDecision& pd = res.decisions[i];
        const ScoredAction& chosen = pd.decision.chosen;
        if (chosen.kind != InterventionKind::no_op && !is_interjection(chosen.kind)) {
            res.passive_cues.push_back({pd.pattern, pd.subject, i, chosen});
        }
    }

    for (int tier = 0; tier <= 3 && !res.interjection; ++tier) {
        if (tier > 0 && recovery_engaged) break;
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < res.decisions.size(); ++i) {
            const PatternDecision& pd = res.decisions[i];
            if (pd.tier != tier || !is_interjection(pd.decision.chosen.kind)) continue;
            if (!best || pd.decision.chosen.objective_value >
                             res.decisions[*best].decision.chosen.objective_value) {
                best = i;
            }
        }
        if (best) {
            const PatternDecision& pd = res.decisions[*best];
            res.interjection = ChosenAction{pd.pattern, pd.subject, *best, pd.decision.chosen};
        }
    }

    std::vector<std::string> suppressed;
    for (std::size_t i = 0; i < res.decisions.size(); ++i) {
        PatternDecision& pd = res.decisions[i];
        if (!is_interjection(pd.decision.chosen.kind)) continue;
        if (res.interjection && res.interjection->group_index == i) continue;
        pd.suppressed = true;
        suppressed.push_back(std::string(to_string(pd.pattern)) + "/" +
                             std::string(to_string(pd.decision.chosen.kind)));
    }

    std::string text;
    if (res.interjection) {
        text = "Showing " + std::string(to_string(res.interjection->action.kind)) + " from " +
               std::string(to_string(res.interjection->pattern)) + " (tier " +
               std::to_string(tier_of(res.interjection->pattern)) + ").";
    } else {
        text = "No interruption this time.";
    }
    if (!res.passive_cues.empty()) {
        text += " " + std::to_string(res.passive_cues.size()) + " passive cue(s) applied.";
    }
    if (!suppressed.empty()) {
        text += " Held back to avoid stacking interruptions:";
        for (std::size_t i = 0; i < suppressed.size(); ++i) text += (i ? ", " : " ") + suppressed[i];
        text += recovery_engaged ? " (Recovery Mode takes priority)." : ".";
    }
    res.explanation = std::move(text);
    return res;
}

json to_json(const ChosenAction& c) {
    return json{{"pattern", std::string(to_string(c.pattern))},
                {"subject", c.subject},
                {"group_index", c.group_index},
                {"action", to_json(c.action)}};
}

json to_json(const Resolution& r) {
    json decisions = json::array();
    for (const auto& pd : r.decisions) {
        decisions.push_back({{"pattern", std::string(to_string(pd.pattern))},
                             {"subject", pd.subject},
                             {"tier", pd.tier},
                             {"suppressed", pd.suppressed},
                             {"decision", to_json(pd.decision)}});
    }
    json cues = json::array();
    for (const auto& c : r.passive_cues) cues.push_back(to_json(c));
    return json{{"decisions", decisions},
                {"passive_cues", cues},
                {"interjection", r.interjection ? to_json(*r.interjection) : json(nullptr)},
                {"explanation", r.explanation}};
}

}  // namespace mediator
