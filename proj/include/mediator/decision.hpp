#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "mediator/config.hpp"
#include "mediator/types.hpp"

namespace mediator {

// Additive breakdown of J. `objective_value` is the left-to-right sum
// utility_term + agency_term + risk_term + penalty_term.
//
//   equation1:  utility_term = u,   agency_term = -lambda*Omega,
//               risk_term = 0,      penalty_term = -beta*r if r > tau
//   algorithm1: utility_term = lambda*u, agency_term = -Omega,
//               risk_term = (1-lambda)*r,
//               penalty_term = -beta*r if r > tau and intervention required
struct ObjectiveTerms {
    double utility_term = 0.0;
    double agency_term = 0.0;
    double risk_term = 0.0;
    double penalty_term = 0.0;

    double sum() const { return utility_term + agency_term + risk_term + penalty_term; }
};

struct ScoredAction {
    std::uint32_t action_id = 0;
    InterventionKind kind = InterventionKind::no_op;
    double objective_value = 0.0;
    bool penalty_applied = false;
    ObjectiveTerms components;
    std::string payload;
};

struct Decision {
    ScoredAction chosen;
    std::vector<ScoredAction> all_scored;  // same order as the input candidates
    std::string explanation;
    bool override_available = true;
};

// Throws ComputationError for non-finite scalars and UsageError for scalars
// outside [0,1].
ScoredAction score_action(const CandidateAction& action, const UserConfig& config);

// Arg-max of score_action; ties go to the lowest action_id. Throws UsageError
// on an empty set or duplicate ids.
Decision select_action(std::span<const CandidateAction> candidates, const UserConfig& config);

// {"action_id", "kind", "utility", "risk", optional "agency_penalty" (defaults
// to the kind's table value), optional "payload"}. `path` prefixes field names.
CandidateAction candidate_from_json(const nlohmann::json& j, const std::string& path = "candidate");
nlohmann::json to_json(const CandidateAction& candidate);

nlohmann::json to_json(const ScoredAction& scored);
nlohmann::json to_json(const Decision& decision);

}  // namespace mediator
