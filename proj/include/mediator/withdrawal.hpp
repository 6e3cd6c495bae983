#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mediator/config.hpp"
#include "mediator/context_monitor.hpp"
#include "mediator/types.hpp"

namespace mediator {

constexpr double kCooldownMinMinutes = 5.0;
constexpr double kCooldownMaxMinutes = 60.0;
constexpr double kCooldownBaseMinutes = 15.0;
constexpr int kMaxDisplaySeconds = 10;

// Default linear form for continuation risk. Weights sum to 1.
struct ContinuationWeights {
    double velocity = 0.25;
    double repetition = 0.25;
    double late_night = 0.20;
    double duration = 0.20;
    double goal_divergence = 0.10;
    double velocity_scale_px_s = 3000.0;  // velocity saturates here
    double duration_scale_minutes = 60.0;
};

double continuation_risk(const SessionSignals& signals, const ContinuationWeights& weights = {});

enum class CadenceResponse { none, accepted, dismissed, avoided };

std::string_view to_string(CadenceResponse response);

struct CadenceState {
    double cooldown_minutes = kCooldownBaseMinutes;
    std::optional<Millis> last_intervention;
    CadenceResponse last_response = CadenceResponse::none;
};

// dismissed/avoided double the cooldown (cap 60); accepted halves it (floor 5).
CadenceState update_cadence(CadenceState cadence, CadenceResponse response);

enum class MicroOption { continue_scrolling, pause, open_saved_item };

struct MicroIntervention {
    std::string prompt;
    std::vector<MicroOption> options;  // continue_scrolling always first
    int max_display_seconds = kMaxDisplaySeconds;
    double risk = 0.0;
};

// Emits iff risk > tau_p4 and the cooldown has elapsed since the last shown
// intervention (vacuous when none was shown).
std::optional<MicroIntervention> maybe_intervene(double risk, const CadenceState& cadence, Millis now,
                                                 const UserConfig& config,
                                                 const std::string& prompt = "Still finding this worthwhile?");

bool cooldown_elapsed(const CadenceState& cadence, Millis now);

// Reflective prompts, one per line. Falls back to a built-in list.
class PromptBook {
public:
    PromptBook();
    explicit PromptBook(std::vector<std::string> prompts);
    static PromptBook load(const std::string& path);

    // Rotates deterministically through the prompts.
    const std::string& pick(std::size_t index) const;
    std::size_t size() const { return prompts_.size(); }

private:
    std::vector<std::string> prompts_;
};

nlohmann::json to_json(const MicroIntervention& m);
nlohmann::json to_json(const CadenceState& c);

}  // namespace mediator
