#include "mediator/types.hpp"

#include <algorithm>

namespace mediator {

namespace {

struct KindRow {
    InterventionKind kind;
    std::string_view name;
    double agency_penalty;
    double residual_risk;
};

constexpr std::array<KindRow, 8> kKindTable = {{
    {InterventionKind::no_op, "no_op", 0.0, 1.0},
    {InterventionKind::passive_cue, "passive_cue", 0.1, 0.9},
    {InterventionKind::soft_prompt, "soft_prompt", 0.2, 0.7},
    {InterventionKind::rewrite_suggestion, "rewrite_suggestion", 0.3, 0.5},
    {InterventionKind::reorder_demote, "reorder_demote", 0.4, 0.5},
    {InterventionKind::interstitial_pause, "interstitial_pause", 0.5, 0.4},
    {InterventionKind::hide_filter, "hide_filter", 0.7, 0.2},
    {InterventionKind::block_lock, "block_lock", 0.9, 0.05},
}};

const KindRow& row(InterventionKind kind) {
    return kKindTable[static_cast<std::size_t>(kind)];
}

}  // namespace

std::string_view to_string(InterventionKind kind) { return row(kind).name; }

std::optional<InterventionKind> intervention_kind_from_string(std::string_view name) {
    auto it = std::find_if(kKindTable.begin(), kKindTable.end(),
                           [&](const KindRow& r) { return r.name == name; });
    if (it == kKindTable.end()) return std::nullopt;
    return it->kind;
}

double agency_penalty_for(InterventionKind kind) { return row(kind).agency_penalty; }

double residual_risk_factor(InterventionKind kind) { return row(kind).residual_risk; }

CandidateAction make_candidate(std::uint32_t action_id, InterventionKind kind, double utility,
                               double content_risk, std::string payload) {
    CandidateAction a;
    a.action_id = action_id;
    a.kind = kind;
    a.utility = std::clamp(utility, 0.0, 1.0);
    a.agency_penalty = agency_penalty_for(kind);
    a.risk = std::clamp(content_risk, 0.0, 1.0) * residual_risk_factor(kind);
    a.payload = std::move(payload);
    return a;
}

}  // namespace mediator
