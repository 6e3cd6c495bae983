#pragma once

#include <map>
#include <set>
#include <string>

#include "json.hpp"

#include "mediator/types.hpp"

namespace mediator {

constexpr int kConfigSchemaVersion = 1;

enum class ScoringMode { equation1, algorithm1 };

std::string_view to_string(ScoringMode mode);

struct PatternFlags {
    bool rewriter = true;
    bool integrity = true;
    bool curator = true;
    bool withdrawal = true;
    bool recovery = true;

    bool operator==(const PatternFlags&) const = default;
};

enum class QuickToggle { none, friends_only };
enum class OverrideAction { more_like_this, less_like_this, mute_author };

std::string_view to_string(OverrideAction action);

// A per-post override keeps a snapshot of the post's category and author so it
// can shape later pages that no longer contain the post.
struct PostOverride {
    OverrideAction action = OverrideAction::more_like_this;
    std::string category;
    std::string author_id;

    bool operator==(const PostOverride&) const = default;
};

struct CurationSettings {
    std::set<std::string> ad_blocklist;
    QuickToggle quick_toggle = QuickToggle::none;
    std::set<std::string> friends;
    std::map<std::string, PostOverride> post_overrides;

    bool operator==(const CurationSettings&) const = default;
};

// Resource locations. Empty entries resolve against data_dir, and an empty
// data_dir resolves to the compiled-in default.
struct ResourcePaths {
    std::string data_dir;
    std::string fact_db;
    std::string bias_left;
    std::string bias_right;
    std::string profanity;
    std::string insult;
    std::string absolutism;
    std::string intensifiers;
    std::string toxicity;
    std::string prompts;

    bool operator==(const ResourcePaths&) const = default;
};

// External rewrite model. Disabled when endpoint is empty.
struct RewriteProviderSettings {
    std::string endpoint;
    int timeout_ms = 800;

    bool enabled() const { return !endpoint.empty(); }
    bool operator==(const RewriteProviderSettings&) const = default;
};

struct UserConfig {
    double lambda = 0.5;
    double beta = 2.0;
    double tau = 0.6;
    ScoringMode mode = ScoringMode::equation1;
    PatternFlags patterns;
    double tau_p4 = 0.6;
    double toxicity_hide = 0.8;
    std::map<std::string, double> intensities = {
        {"entertainment", 1.0}, {"health", 1.0}, {"memes", 1.0},  {"news", 1.0},
        {"personal", 1.0},      {"politics", 1.0}, {"science", 1.0}, {"sports", 1.0},
    };
    CurationSettings curation;
    int timezone_offset_minutes = 0;
    std::set<std::string> recovery_allowlist;
    ResourcePaths resources;
    RewriteProviderSettings rewrite_provider;

    bool operator==(const UserConfig&) const = default;
};

// Range-checks every field. Returns the normalized config or throws
// ValidationError naming the first offending field.
UserConfig validate_config(const UserConfig& config);

// Strict JSON mapping: schema_version is mandatory and unknown fields are
// rejected at every level.
UserConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const UserConfig& config);

UserConfig load_config_file(const std::string& path);
void save_config_file(const UserConfig& config, const std::string& path);

// SHA-256 of the canonical JSON form, hex encoded.
std::string config_digest(const UserConfig& config);

// Resolves a resource entry against data_dir and the compiled-in default.
std::string resolve_resource(const ResourcePaths& paths, const std::string& entry,
                             const std::string& default_name);

}  // namespace mediator
