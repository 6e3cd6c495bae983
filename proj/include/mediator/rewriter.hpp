#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mediator/config.hpp"
#include "mediator/net.hpp"
#include "mediator/text.hpp"

namespace mediator {

// Listed in declaration order in every output.
enum class DraftRisk { insult, absolutism, profanity, shouting, accusation };

std::string_view to_string(DraftRisk category);
double draft_risk_weight(DraftRisk category);

struct DraftAnalysis {
    std::vector<DraftRisk> risk_categories;
    double risk = 0.0;  // capped sum of category weights
    std::string preview;
};

enum class Tone { neutral, empathetic };

std::string_view to_string(Tone tone);

struct RewriteSuggestion {
    Tone tone = Tone::neutral;
    std::string text;
    std::vector<std::string> transforms_applied;
};

// What the composer shows: suggestions plus the untouched draft, which is
// always selectable.
struct RewriteOffer {
    std::string original;
    std::vector<RewriteSuggestion> suggestions;  // at most kMaxSuggestions
    bool provider_fallback = false;

    static constexpr std::size_t kMaxSuggestions = 3;
};

// Rule identifiers recorded in transforms_applied.
namespace transform {
inline constexpr std::string_view caps = "caps";
inline constexpr std::string_view intensifier = "intensifier";
inline constexpr std::string_view profanity_mask = "profanity_mask";
inline constexpr std::string_view insult_mask = "insult_mask";
inline constexpr std::string_view first_person = "first_person_reframe";
inline constexpr std::string_view provider = "provider";
inline constexpr std::string_view provider_fallback = "provider_fallback";
}  // namespace transform

struct RewriteLexicons {
    text::Lexicon profanity;
    text::Lexicon insult;
    text::Lexicon absolutism;
    text::Lexicon intensifiers;  // term -> softer replacement

    static RewriteLexicons load(const UserConfig& config);
};

// External language-model rewriter. Implementations must return within the
// deadline; nullopt means "unavailable" and triggers the rule-based fallback.
class RewriteProvider {
public:
    virtual ~RewriteProvider() = default;
    virtual std::optional<std::string> rewrite(std::string_view draft, Tone tone,
                                               std::chrono::milliseconds deadline) = 0;
};

// POSTs {"text","tone"} to <endpoint>/v1/rewrite and expects {"text"} back.
class HttpRewriteProvider final : public RewriteProvider {
public:
    HttpRewriteProvider(net::Gateway& gateway, net::Endpoint endpoint)
        : gateway_(gateway), endpoint_(std::move(endpoint)) {}

    std::optional<std::string> rewrite(std::string_view draft, Tone tone,
                                       std::chrono::milliseconds deadline) override;

private:
    net::Gateway& gateway_;
    net::Endpoint endpoint_;
};

class Rewriter {
public:
    explicit Rewriter(RewriteLexicons lexicons) : lex_(std::move(lexicons)) {}

    DraftAnalysis analyze_draft(std::string_view body) const;

    // Rule transforms only; never contacts a provider.
    RewriteOffer generate_rewrites(std::string_view body, const DraftAnalysis& analysis) const;

    // Rule transforms, plus one provider suggestion when the provider answers
    // within the deadline. A missing answer flags the offer as a fallback.
    RewriteOffer generate_rewrites(std::string_view body, const DraftAnalysis& analysis,
                                   RewriteProvider* provider,
                                   std::chrono::milliseconds deadline) const;

    // Same, with an already-obtained provider answer (used when replaying).
    RewriteOffer with_provider_result(std::string_view body, const DraftAnalysis& analysis,
                                      bool provider_configured,
                                      const std::optional<std::string>& provider_text) const;

    const RewriteLexicons& lexicons() const { return lex_; }

private:
    RewriteLexicons lex_;
};

nlohmann::json to_json(const DraftAnalysis& analysis);
nlohmann::json to_json(const RewriteOffer& offer);

}  // namespace mediator
