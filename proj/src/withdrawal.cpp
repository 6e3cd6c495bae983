#include "mediator/withdrawal.hpp"

#include <algorithm>
#include <fstream>

#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

double continuation_risk(const SessionSignals& s, const ContinuationWeights& w) {
    const double velocity = std::min(std::max(s.scroll_velocity, 0.0) / w.velocity_scale_px_s, 1.0);
    const double duration = std::min(std::max(s.session_minutes, 0.0) / w.duration_scale_minutes, 1.0);
    const double risk = w.velocity * velocity + w.repetition * s.repetition_index +
                        w.late_night * (s.late_night ? 1.0 : 0.0) + w.duration * duration +
                        w.goal_divergence * s.goal_divergence;
    return std::clamp(risk, 0.0, 1.0);
}

std::string_view to_string(CadenceResponse r) {
    switch (r) {
        case CadenceResponse::none: return "none";
        case CadenceResponse::accepted: return "accepted";
        case CadenceResponse::dismissed: return "dismissed";
        case CadenceResponse::avoided: return "avoided";
    }
    return "none";
}

CadenceState update_cadence(CadenceState c, CadenceResponse response) {
    switch (response) {
        case CadenceResponse::dismissed:
        case CadenceResponse::avoided:
            c.cooldown_minutes = std::min(2.0 * c.cooldown_minutes, kCooldownMaxMinutes);
            break;
        case CadenceResponse::accepted:
            c.cooldown_minutes = std::max(c.cooldown_minutes / 2.0, kCooldownMinMinutes);
            break;
        case CadenceResponse::none:
            break;
    }
    c.cooldown_minutes = std::clamp(c.cooldown_minutes, kCooldownMinMinutes, kCooldownMaxMinutes);
    c.last_response = response;
    return c;
}

bool cooldown_elapsed(const CadenceState& c, Millis now) {
    if (!c.last_intervention) return true;
    return static_cast<double>(now - *c.last_intervention) >= c.cooldown_minutes * 60000.0;
}

std::optional<MicroIntervention> maybe_intervene(double risk, const CadenceState& cadence, Millis now,
                                                 const UserConfig& config, const std::string& prompt) {
    if (!(risk > config.tau_p4)) return std::nullopt;
    if (!cooldown_elapsed(cadence, now)) return std::nullopt;
    MicroIntervention m;
    m.prompt = prompt;
    m.options = {MicroOption::continue_scrolling, MicroOption::pause, MicroOption::open_saved_item};
    m.max_display_seconds = kMaxDisplaySeconds;
    m.risk = risk;
    return m;
}

PromptBook::PromptBook()
    : prompts_{"Still finding this worthwhile?",
               "Quick check-in: is this what you came here for?",
               "Take a breath. Keep going, or take a short break?"} {}

PromptBook::PromptBook(std::vector<std::string> prompts) : prompts_(std::move(prompts)) {
    if (prompts_.empty()) *this = PromptBook();
}

PromptBook PromptBook::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open prompt file " + path);
    std::vector<std::string> prompts;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        prompts.push_back(line);
    }
    return PromptBook(std::move(prompts));
}

const std::string& PromptBook::pick(std::size_t index) const { return prompts_[index % prompts_.size()]; }

namespace {
std::string_view option_name(MicroOption o) {
    switch (o) {
        case MicroOption::continue_scrolling: return "continue";
        case MicroOption::pause: return "pause";
        case MicroOption::open_saved_item: return "open_saved_item";
    }
    return "continue";
}
}  // namespace

json to_json(const MicroIntervention& m) {
    json options = json::array();
    for (MicroOption o : m.options) options.push_back(std::string(option_name(o)));
    return json{{"prompt", m.prompt},
                {"options", options},
                {"max_display_seconds", m.max_display_seconds},
                {"risk", m.risk}};
}

json to_json(const CadenceState& c) {
    return json{{"cooldown_minutes", c.cooldown_minutes},
                {"last_intervention", c.last_intervention ? json(*c.last_intervention) : json(nullptr)},
                {"last_response", std::string(to_string(c.last_response))}};
}

}  // namespace mediator
