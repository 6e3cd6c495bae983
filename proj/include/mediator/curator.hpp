#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "mediator/config.hpp"
#include "mediator/types.hpp"

namespace mediator {

struct CurationPolicy {
    std::map<std::string, double> intensities;
    std::set<std::string> ad_blocklist;
    QuickToggle quick_toggle = QuickToggle::none;
    std::set<std::string> friends;
    std::map<std::string, PostOverride> post_overrides;

    static CurationPolicy from_config(const UserConfig& config);
};

struct VisibilityScore {
    double score = 0.0;
    std::string reason;                 // rule that zeroed the score, if any
    std::vector<std::string> warnings;  // e.g. unknown category
};

struct VisiblePost {
    std::string post_id;
    double visibility_score = 0.0;
};

struct HiddenPost {
    std::string post_id;
    std::string reason;
    std::string explanation;
};

struct CuratedFeed {
    std::vector<VisiblePost> visible;
    std::vector<HiddenPost> hidden;
    std::vector<std::string> warnings;
};

constexpr double kUnknownCategoryIntensity = 0.5;
constexpr double kOverrideStep = 0.2;

// base = intensity[category]; zeroed by an ad-category block, a muted author,
// or the friends-only toggle; +/-0.2 for more/less_like_this overrides on the
// same category (a zero intensity stays zero).
VisibilityScore score_visibility(const PostContent& post, const CurationPolicy& policy);

// Hides zero-score posts with an explanation and orders the rest by score
// (descending), breaking ties by original position.
CuratedFeed curate_feed(const std::vector<PostContent>& page, const CurationPolicy& policy);

nlohmann::json to_json(const CuratedFeed& feed);

}  // namespace mediator
