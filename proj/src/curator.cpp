#include "mediator/curator.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace mediator {

using nlohmann::json;

CurationPolicy CurationPolicy::from_config(const UserConfig& config) {
    CurationPolicy p;
    p.intensities = config.intensities;
    p.ad_blocklist = config.curation.ad_blocklist;
    p.quick_toggle = config.curation.quick_toggle;
    p.friends = config.curation.friends;
    p.post_overrides = config.curation.post_overrides;
    return p;
}

VisibilityScore score_visibility(const PostContent& post, const CurationPolicy& policy) {
    VisibilityScore v;

    if (post.ad_category && policy.ad_blocklist.count(*post.ad_category)) {
        v.reason = "ad category '" + *post.ad_category + "' disabled";
        return v;
    }
    for (const auto& [post_id, ov] : policy.post_overrides) {
        if (ov.action == OverrideAction::mute_author && ov.author_id == post.author_id) {
            v.reason = "author '" + post.author_id + "' muted";
            return v;
        }
    }
    if (policy.quick_toggle == QuickToggle::friends_only && !policy.friends.count(post.author_id)) {
        v.reason = "friends-only toggle on";
        return v;
    }

    double base = kUnknownCategoryIntensity;
    if (auto it = policy.intensities.find(post.category); it != policy.intensities.end()) {
        base = it->second;
    } else {
        v.warnings.push_back("unknown category '" + post.category + "' on post " + post.post_id +
                             "; using intensity 0.5");
    }
    if (base <= 0.0) {
        v.reason = "category intensity 0";
        return v;
    }

    bool more = false;
    bool less = false;
    for (const auto& [post_id, ov] : policy.post_overrides) {
        if (ov.category != post.category) continue;
        more = more || ov.action == OverrideAction::more_like_this;
        less = less || ov.action == OverrideAction::less_like_this;
    }
    double score = base;
    if (more) score += kOverrideStep;
    if (less) score -= kOverrideStep;
    v.score = std::clamp(score, 0.0, 1.0);
    if (v.score == 0.0) v.reason = "less_like_this override on category '" + post.category + "'";
    return v;
}

namespace {

std::string explain_hidden(const std::string& reason) {
    if (reason == "category intensity 0") {
        return "Hidden because you set this category's intensity to 0. Raise the slider to see "
               "posts like this again.";
    }
    if (reason.rfind("ad category", 0) == 0) {
        return "Hidden because you turned off this ad category in the ad-transparency panel.";
    }
    if (reason.rfind("author", 0) == 0) {
        return "Hidden because you muted this author. Unmute them to see their posts.";
    }
    if (reason == "friends-only toggle on") {
        return "Hidden while the friends-only toggle is on; this author is not in your friends list.";
    }
    return "Hidden by your feed controls (" + reason + ").";
}

}  // namespace

CuratedFeed curate_feed(const std::vector<PostContent>& page, const CurationPolicy& policy) {
    CuratedFeed feed;
    struct Scored {
        std::size_t position;
        double score;
    };
    std::vector<Scored> keep;
    for (std::size_t i = 0; i < page.size(); ++i) {
        VisibilityScore v = score_visibility(page[i], policy);
        feed.warnings.insert(feed.warnings.end(), v.warnings.begin(), v.warnings.end());
        if (v.score <= 0.0) {
            const std::string reason = v.reason.empty() ? "visibility score 0" : v.reason;
            feed.hidden.push_back({page[i].post_id, reason, explain_hidden(reason)});
        } else {
            keep.push_back({i, v.score});
        }
    }
    std::stable_sort(keep.begin(), keep.end(),
                     [](const Scored& a, const Scored& b) { return a.score > b.score; });
    for (const Scored& s : keep) feed.visible.push_back({page[s.position].post_id, s.score});
    return feed;
}

json to_json(const CuratedFeed& feed) {
    json visible = json::array();
    for (const auto& v : feed.visible) {
        visible.push_back({{"post_id", v.post_id}, {"visibility_score", v.visibility_score}});
    }
    json hidden = json::array();
    for (const auto& h : feed.hidden) {
        hidden.push_back({{"post_id", h.post_id}, {"reason", h.reason}, {"explanation", h.explanation}});
    }
    return json{{"visible", visible}, {"hidden", hidden}, {"warnings", feed.warnings}};
}

}  // namespace mediator
