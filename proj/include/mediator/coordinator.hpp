#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mediator/config.hpp"
#include "mediator/decision.hpp"
#include "mediator/errors.hpp"
#include "mediator/types.hpp"

namespace mediator {

enum class Pattern { rewriter, integrity, curator, withdrawal, recovery };

std::string_view to_string(Pattern pattern);

// 0 recovery, 1 integrity, 2 withdrawal, 3 curation and rewrite.
int tier_of(Pattern pattern);

enum class Trigger { event_batch, feed_page, draft_submitted, inbound_item, config_update, recovery_command };

std::string_view to_string(Trigger trigger);

// One pattern's options about one subject (a post, a draft, the session).
struct CandidateGroup {
    Pattern pattern = Pattern::withdrawal;
    std::string subject;
    std::vector<CandidateAction> candidates;
};

struct Tick {
    std::string session_id;
    Trigger trigger = Trigger::event_batch;
    Millis timestamp = 0;
    std::vector<CandidateGroup> groups;
};

struct PatternDecision {
    Pattern pattern = Pattern::withdrawal;
    std::string subject;
    int tier = 0;
    Decision decision;
    bool suppressed = false;  // chose an interjection that lost to a higher tier
};

struct ChosenAction {
    Pattern pattern = Pattern::withdrawal;
    std::string subject;
    std::size_t group_index = 0;
    ScoredAction action;
};

struct Resolution {
    std::vector<ChosenAction> passive_cues;  // chosen non-interjecting actions, all tiers
    std::optional<ChosenAction> interjection;
    std::vector<PatternDecision> decisions;  // one per group, in tick order
    std::string explanation;
};

class MalformedTick : public UsageError {
public:
    using UsageError::UsageError;
};

// Throws MalformedTick when a group is empty, lacks a no_op, repeats an
// action_id, or carries a scalar outside [0,1].
void validate_tick(const Tick& tick);

// Tiers are visited in order and the first tier whose decisions pick an
// interjection wins it (highest J inside the tier, then group order). A
// recovery group offering anything beyond no_op blocks every lower-tier
// interjection even when it picks no interjection itself.
Resolution resolve_tick(const Tick& tick, const UserConfig& config);

nlohmann::json to_json(const ChosenAction& chosen);
nlohmann::json to_json(const Resolution& resolution);

}  // namespace mediator
