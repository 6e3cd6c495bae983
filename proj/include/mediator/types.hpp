#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mediator {

// Milliseconds since the Unix epoch. All engine time is logical: it comes
// from event timestamps, never from the host clock.
using Millis = std::int64_t;

constexpr Millis kMillisPerSecond = 1000;
constexpr Millis kMillisPerMinute = 60 * kMillisPerSecond;

// Ordered by coerciveness, least to most.
enum class InterventionKind : std::uint8_t {
    no_op,
    passive_cue,
    soft_prompt,
    rewrite_suggestion,
    reorder_demote,
    interstitial_pause,
    hide_filter,
    block_lock,
};

inline constexpr std::array<InterventionKind, 8> kAllInterventionKinds = {
    InterventionKind::no_op,          InterventionKind::passive_cue,
    InterventionKind::soft_prompt,    InterventionKind::rewrite_suggestion,
    InterventionKind::reorder_demote, InterventionKind::interstitial_pause,
    InterventionKind::hide_filter,    InterventionKind::block_lock,
};

std::string_view to_string(InterventionKind kind);
std::optional<InterventionKind> intervention_kind_from_string(std::string_view name);

// Cost of an intervention against user autonomy, in [0,1].
double agency_penalty_for(InterventionKind kind);

// Fraction of the content risk that remains after the intervention is applied.
// Pattern modules use it to estimate r(a) for each option they offer.
double residual_risk_factor(InterventionKind kind);

// Anything beyond a no-op or a passive cue constrains behavior.
constexpr bool intervention_required(InterventionKind kind) {
    return kind != InterventionKind::no_op && kind != InterventionKind::passive_cue;
}

// Attention-demanding actions. At most one of these is shown per tick.
constexpr bool is_interjection(InterventionKind kind) {
    return kind == InterventionKind::soft_prompt || kind == InterventionKind::rewrite_suggestion ||
           kind == InterventionKind::interstitial_pause || kind == InterventionKind::block_lock;
}

struct CandidateAction {
    std::uint32_t action_id = 0;
    InterventionKind kind = InterventionKind::no_op;
    double utility = 0.0;         // u(a)
    double agency_penalty = 0.0;  // Omega(a)
    double risk = 0.0;            // r(a)
    std::string payload;          // kind-specific content reference

    bool intervention_required() const { return mediator::intervention_required(kind); }
};

// Builds a candidate whose agency penalty comes from the fixed table and whose
// risk is the content risk scaled by the kind's residual factor.
CandidateAction make_candidate(std::uint32_t action_id, InterventionKind kind, double utility,
                               double content_risk, std::string payload = {});

struct PostContent {
    std::string post_id;
    std::string author_id;
    std::string body;
    std::string category;
    std::vector<std::string> media;
    Millis timestamp = 0;
    std::optional<std::string> ad_category;  // set for sponsored posts
};

}  // namespace mediator
