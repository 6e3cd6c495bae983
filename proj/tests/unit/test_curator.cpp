#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "mediator/curator.hpp"
#include "oracles.hpp"

using namespace mediator;
using fixture::post;

namespace {

const std::vector<std::string> kCategories = {"politics", "sports", "science", "memes", "news"};

CurationPolicy all_ones() {
    CurationPolicy p;
    for (const auto& c : kCategories) p.intensities[c] = 1.0;
    return p;
}

std::vector<std::string> ids(const std::vector<VisiblePost>& v) {
    std::vector<std::string> out;
    for (const auto& p : v) out.push_back(p.post_id);
    return out;
}

std::vector<PostContent> random_page(gen::Rng& rng) {
    std::vector<PostContent> page;
    const int n = rng.integer(0, 12);
    for (int i = 0; i < n; ++i) {
        PostContent p = post("p" + std::to_string(i), rng.pick(kCategories), "",
                             "author_" + std::to_string(rng.integer(0, 4)));
        if (rng.chance(0.1)) p.category = "unlisted";
        if (rng.chance(0.2)) p.ad_category = rng.chance(0.5) ? "gambling" : "shoes";
        page.push_back(p);
    }
    return page;
}

CurationPolicy random_policy(gen::Rng& rng) {
    CurationPolicy p;
    for (const auto& c : kCategories) p.intensities[c] = rng.chance(0.2) ? 0.0 : rng.grid(5);
    if (rng.chance(0.5)) p.ad_blocklist.insert("gambling");
    if (rng.chance(0.2)) p.quick_toggle = QuickToggle::friends_only;
    p.friends = {"author_0", "author_1"};
    const int overrides = rng.integer(0, 3);
    for (int i = 0; i < overrides; ++i) {
        const OverrideAction action = static_cast<OverrideAction>(rng.integer(0, 2));
        p.post_overrides["o" + std::to_string(i)] =
            PostOverride{action, rng.pick(kCategories), "author_" + std::to_string(rng.integer(0, 4))};
    }
    return p;
}

}  // namespace

TEST_CASE("score_visibility examples") {
    CurationPolicy p = all_ones();
    p.intensities["politics"] = 0.0;
    CHECK(score_visibility(post("a", "politics"), p).score == 0.0);
    CHECK(score_visibility(post("a", "politics"), p).reason == "category intensity 0");
    CHECK(score_visibility(post("b", "sports"), p).score == 1.0);

    p.intensities["sports"] = 0.5;
    p.post_overrides["other"] = PostOverride{OverrideAction::more_like_this, "sports", "someone"};
    CHECK(score_visibility(post("c", "sports"), p).score == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("score_visibility rules") {
    CurationPolicy p = all_ones();
    SUBCASE("more_like_this caps at 1") {
        p.post_overrides["x"] = PostOverride{OverrideAction::more_like_this, "sports", "a"};
        CHECK(score_visibility(post("s", "sports"), p).score == 1.0);
    }
    SUBCASE("less_like_this lowers the category") {
        p.intensities["news"] = 0.6;
        p.post_overrides["x"] = PostOverride{OverrideAction::less_like_this, "news", "a"};
        CHECK(score_visibility(post("n", "news"), p).score == doctest::Approx(0.4));
    }
    SUBCASE("a zero intensity stays zero under more_like_this") {
        p.intensities["memes"] = 0.0;
        p.post_overrides["x"] = PostOverride{OverrideAction::more_like_this, "memes", "a"};
        CHECK(score_visibility(post("m", "memes"), p).score == 0.0);
    }
    SUBCASE("muted author") {
        p.post_overrides["x"] = PostOverride{OverrideAction::mute_author, "news", "troll"};
        const auto v = score_visibility(post("t", "sports", "", "troll"), p);
        CHECK(v.score == 0.0);
        CHECK(v.reason == "author 'troll' muted");
    }
    SUBCASE("friends-only toggle") {
        p.quick_toggle = QuickToggle::friends_only;
        p.friends = {"pal"};
        CHECK(score_visibility(post("f", "sports", "", "pal"), p).score == 1.0);
        CHECK(score_visibility(post("g", "sports", "", "stranger"), p).reason == "friends-only toggle on");
    }
    SUBCASE("blocked ad category") {
        p.ad_blocklist = {"gambling"};
        PostContent ad = post("ad", "sports");
        ad.ad_category = "gambling";
        CHECK(score_visibility(ad, p).score == 0.0);
        ad.ad_category = "shoes";
        CHECK(score_visibility(ad, p).score == 1.0);
    }
    SUBCASE("unknown category fails open with a warning") {
        const auto v = score_visibility(post("u", "knitting"), p);
        CHECK(v.score == kUnknownCategoryIntensity);
        REQUIRE(v.warnings.size() == 1);
        CHECK(v.warnings[0].find("knitting") != std::string::npos);
    }
}

TEST_CASE("curate_feed examples") {
    SUBCASE("identity") {
        const std::vector<PostContent> page = {post("p1", "news"), post("p2", "sports"), post("p3", "memes")};
        const CuratedFeed f = curate_feed(page, all_ones());
        CHECK(ids(f.visible) == std::vector<std::string>{"p1", "p2", "p3"});
        CHECK(f.hidden.empty());
    }
    SUBCASE("zero-intensity hide") {
        CurationPolicy p = all_ones();
        p.intensities["politics"] = 0.0;
        const CuratedFeed f = curate_feed({post("p1", "politics"), post("p2", "sports")}, p);
        CHECK(ids(f.visible) == std::vector<std::string>{"p2"});
        REQUIRE(f.hidden.size() == 1);
        CHECK(f.hidden[0].post_id == "p1");
        CHECK(f.hidden[0].reason == "category intensity 0");
        CHECK_FALSE(f.hidden[0].explanation.empty());
    }
    SUBCASE("muted author across categories") {
        CurationPolicy p = all_ones();
        p.post_overrides["old"] = PostOverride{OverrideAction::mute_author, "news", "troll"};
        const std::vector<PostContent> page = {post("p1", "news", "", "troll"), post("p2", "sports", "", "kim"),
                                               post("p3", "science", "", "troll"), post("p4", "memes", "", "lee")};
        const CuratedFeed f = curate_feed(page, p);
        CHECK(ids(f.visible) == std::vector<std::string>{"p2", "p4"});
        REQUIRE(f.hidden.size() == 2);
        CHECK(f.hidden[0].post_id == "p1");
        CHECK(f.hidden[1].post_id == "p3");
        for (const auto& h : f.hidden) CHECK(h.reason == "author 'troll' muted");
    }
    SUBCASE("ordering by score with position tie-break") {
        CurationPolicy p = all_ones();
        p.intensities["news"] = 0.4;
        p.intensities["memes"] = 0.8;
        const std::vector<PostContent> page = {post("a", "news"), post("b", "memes"), post("c", "news"),
                                               post("d", "sports"), post("e", "memes")};
        const CuratedFeed f = curate_feed(page, p);
        CHECK(ids(f.visible) == std::vector<std::string>{"d", "b", "e", "a", "c"});
    }
}

TEST_CASE("curate_feed properties over random pages") {
    gen::Rng rng(303);
    for (int i = 0; i < 1000; ++i) {
        const auto page = random_page(rng);
        const auto policy = random_policy(rng);
        const CuratedFeed f = curate_feed(page, policy);

        std::multiset<std::string> out;
        for (const auto& v : f.visible) out.insert(v.post_id);
        for (const auto& h : f.hidden) out.insert(h.post_id);
        std::multiset<std::string> in;
        for (const auto& p : page) in.insert(p.post_id);
        CHECK(out == in);

        std::map<std::string, std::size_t> pos;
        for (std::size_t k = 0; k < page.size(); ++k) pos[page[k].post_id] = k;
        for (std::size_t k = 1; k < f.visible.size(); ++k) {
            const auto& a = f.visible[k - 1];
            const auto& b = f.visible[k];
            CHECK((a.visibility_score > b.visibility_score ||
                   (a.visibility_score == b.visibility_score && pos[a.post_id] < pos[b.post_id])));
        }
        for (const auto& v : f.visible) {
            CHECK(v.visibility_score > 0.0);
            CHECK(v.visibility_score <= 1.0);
        }
        for (const auto& h : f.hidden) {
            CHECK_FALSE(h.reason.empty());
            CHECK_FALSE(h.explanation.empty());
        }
        for (const auto& p : page) {
            auto it = policy.intensities.find(p.category);
            if (it != policy.intensities.end() && it->second == 0.0) {
                CHECK(std::none_of(f.visible.begin(), f.visible.end(),
                                   [&](const VisiblePost& v) { return v.post_id == p.post_id; }));
            }
        }
        CHECK(to_json(f) == to_json(curate_feed(page, policy)));
    }
}

TEST_CASE("raising a category intensity never shrinks its visible count") {
    gen::Rng rng(304);
    for (int i = 0; i < 1000; ++i) {
        const auto page = random_page(rng);
        CurationPolicy low = random_policy(rng);
        const std::string cat = rng.pick(kCategories);
        CurationPolicy high = low;
        high.intensities[cat] = rng.range(low.intensities[cat], 1.0);
        auto count = [&](const CuratedFeed& f) {
            std::size_t n = 0;
            for (const auto& v : f.visible) {
                for (const auto& p : page) n += (p.post_id == v.post_id && p.category == cat);
            }
            return n;
        };
        CHECK(count(curate_feed(page, high)) >= count(curate_feed(page, low)));
    }
}
