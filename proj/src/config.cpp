#include "mediator/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "mediator/digest.hpp"
#include "mediator/errors.hpp"

#ifndef MEDIATOR_DEFAULT_DATA_DIR
#define MEDIATOR_DEFAULT_DATA_DIR "data"
#endif

namespace mediator {

using nlohmann::json;
using detail::ObjectReader;

std::string_view to_string(ScoringMode mode) {
    return mode == ScoringMode::equation1 ? "equation1" : "algorithm1";
}

std::string_view to_string(OverrideAction action) {
    switch (action) {
        case OverrideAction::more_like_this: return "more_like_this";
        case OverrideAction::less_like_this: return "less_like_this";
        case OverrideAction::mute_author: return "mute_author";
    }
    return "more_like_this";
}

namespace {

void require_unit(double v, const std::string& field) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw ValidationError(field, "must be within [0, 1]");
    }
}

void require_nonneg(double v, const std::string& field) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError(field, "must be a finite value >= 0");
}

OverrideAction override_action_from(const std::string& s, const std::string& field) {
    if (s == "more_like_this") return OverrideAction::more_like_this;
    if (s == "less_like_this") return OverrideAction::less_like_this;
    if (s == "mute_author") return OverrideAction::mute_author;
    throw ValidationError(field, "unknown override action '" + s + "'");
}

}  // namespace

UserConfig validate_config(const UserConfig& config) {
    require_nonneg(config.lambda, "lambda");
    require_nonneg(config.beta, "beta");
    require_unit(config.tau, "tau");
    require_unit(config.tau_p4, "thresholds.tau_p4");
    require_unit(config.toxicity_hide, "thresholds.toxicity_hide");
    if (config.intensities.empty()) {
        throw ValidationError("intensities", "category vocabulary must not be empty");
    }
    for (const auto& [category, value] : config.intensities) {
        if (category.empty()) throw ValidationError("intensity", "empty category name");
        require_unit(value, "intensity." + category);
    }
    for (const auto& [post_id, ov] : config.curation.post_overrides) {
        if (post_id.empty()) throw ValidationError("curation.post_overrides", "empty post id");
        if (ov.action == OverrideAction::mute_author && ov.author_id.empty()) {
            throw ValidationError("curation.post_overrides." + post_id + ".author_id",
                                  "mute_author requires the author id");
        }
    }
    if (config.timezone_offset_minutes < -14 * 60 || config.timezone_offset_minutes > 14 * 60) {
        throw ValidationError("timezone_offset_minutes", "must be within [-840, 840]");
    }
    if (config.rewrite_provider.timeout_ms <= 0 || config.rewrite_provider.timeout_ms > 60000) {
        throw ValidationError("rewrite_provider.timeout_ms", "must be within (0, 60000]");
    }
    // Every field is already in canonical form: sets and maps are ordered, so
    // an accepted config round-trips unchanged.
    return config;
}

UserConfig config_from_json(const json& doc) {
    ObjectReader root(doc, "");
    const json& version = root.raw("schema_version");
    if (!version.is_number_integer() || version.get<int>() != kConfigSchemaVersion) {
        throw ValidationError("schema_version",
                              "unsupported schema version (expected " +
                                  std::to_string(kConfigSchemaVersion) + ")");
    }

    UserConfig cfg;
    cfg.lambda = root.number_or("lambda", cfg.lambda);
    cfg.beta = root.number_or("beta", cfg.beta);
    cfg.tau = root.number_or("tau", cfg.tau);

    std::string mode = root.string_or("mode", std::string(to_string(cfg.mode)));
    if (mode == "equation1") {
        cfg.mode = ScoringMode::equation1;
    } else if (mode == "algorithm1") {
        cfg.mode = ScoringMode::algorithm1;
    } else {
        throw ValidationError("mode", "expected 'equation1' or 'algorithm1'");
    }

    if (const json* p = root.optional_raw("patterns")) {
        ObjectReader r(*p, "patterns");
        cfg.patterns.rewriter = r.boolean_or("rewriter", true);
        cfg.patterns.integrity = r.boolean_or("integrity", true);
        cfg.patterns.curator = r.boolean_or("curator", true);
        cfg.patterns.withdrawal = r.boolean_or("withdrawal", true);
        cfg.patterns.recovery = r.boolean_or("recovery", true);
        r.finish();
    }

    if (const json* t = root.optional_raw("thresholds")) {
        ObjectReader r(*t, "thresholds");
        cfg.tau_p4 = r.number_or("tau_p4", cfg.tau_p4);
        cfg.toxicity_hide = r.number_or("toxicity_hide", cfg.toxicity_hide);
        r.finish();
    }

    if (const json* in = root.optional_raw("intensities")) {
        if (!in->is_object()) throw ValidationError("intensities", "expected an object");
        cfg.intensities.clear();
        for (auto it = in->begin(); it != in->end(); ++it) {
            if (!it->is_number()) {
                throw ValidationError("intensity." + it.key(), "expected a number");
            }
            cfg.intensities[it.key()] = it->get<double>();
        }
    }

    if (const json* c = root.optional_raw("curation")) {
        ObjectReader r(*c, "curation");
        if (const json* v = r.optional_raw("ad_blocklist")) {
            cfg.curation.ad_blocklist = detail::string_set(*v, "curation.ad_blocklist");
        }
        std::string toggle = r.string_or("quick_toggle", "none");
        if (toggle == "none") {
            cfg.curation.quick_toggle = QuickToggle::none;
        } else if (toggle == "friends_only") {
            cfg.curation.quick_toggle = QuickToggle::friends_only;
        } else {
            throw ValidationError("curation.quick_toggle", "expected 'none' or 'friends_only'");
        }
        if (const json* v = r.optional_raw("friends")) {
            cfg.curation.friends = detail::string_set(*v, "curation.friends");
        }
        if (const json* v = r.optional_raw("post_overrides")) {
            if (!v->is_object()) {
                throw ValidationError("curation.post_overrides", "expected an object");
            }
            for (auto it = v->begin(); it != v->end(); ++it) {
                const std::string path = "curation.post_overrides." + it.key();
                ObjectReader o(*it, path);
                PostOverride ov;
                ov.action = override_action_from(o.string("action"), path + ".action");
                ov.category = o.string_or("category", "");
                ov.author_id = o.string_or("author_id", "");
                o.finish();
                cfg.curation.post_overrides[it.key()] = ov;
            }
        }
        r.finish();
    }

    const std::int64_t tz = root.integer_or("timezone_offset_minutes", 0);
    if (tz < -14 * 60 || tz > 14 * 60) {
        throw ValidationError("timezone_offset_minutes", "must be within [-840, 840]");
    }
    cfg.timezone_offset_minutes = static_cast<int>(tz);

    if (const json* v = root.optional_raw("recovery_allowlist")) {
        cfg.recovery_allowlist = detail::string_set(*v, "recovery_allowlist");
    }

    if (const json* res = root.optional_raw("resources")) {
        ObjectReader r(*res, "resources");
        ResourcePaths& p = cfg.resources;
        p.data_dir = r.string_or("data_dir", "");
        p.fact_db = r.string_or("fact_db", "");
        p.bias_left = r.string_or("bias_left", "");
        p.bias_right = r.string_or("bias_right", "");
        p.profanity = r.string_or("profanity", "");
        p.insult = r.string_or("insult", "");
        p.absolutism = r.string_or("absolutism", "");
        p.intensifiers = r.string_or("intensifiers", "");
        p.toxicity = r.string_or("toxicity", "");
        p.prompts = r.string_or("prompts", "");
        r.finish();
    }

    if (const json* rp = root.optional_raw("rewrite_provider")) {
        ObjectReader r(*rp, "rewrite_provider");
        cfg.rewrite_provider.endpoint = r.string_or("endpoint", "");
        const std::int64_t timeout = r.integer_or("timeout_ms", cfg.rewrite_provider.timeout_ms);
        if (timeout <= 0 || timeout > 60000) {
            throw ValidationError("rewrite_provider.timeout_ms", "must be within (0, 60000]");
        }
        cfg.rewrite_provider.timeout_ms = static_cast<int>(timeout);
        r.finish();
    }

    root.finish();
    return validate_config(cfg);
}

json config_to_json(const UserConfig& cfg) {
    json overrides = json::object();
    for (const auto& [post_id, ov] : cfg.curation.post_overrides) {
        overrides[post_id] = {{"action", std::string(to_string(ov.action))},
                              {"category", ov.category},
                              {"author_id", ov.author_id}};
    }
    const ResourcePaths& p = cfg.resources;
    return json{
        {"schema_version", kConfigSchemaVersion},
        {"lambda", cfg.lambda},
        {"beta", cfg.beta},
        {"tau", cfg.tau},
        {"mode", std::string(to_string(cfg.mode))},
        {"patterns",
         {{"rewriter", cfg.patterns.rewriter},
          {"integrity", cfg.patterns.integrity},
          {"curator", cfg.patterns.curator},
          {"withdrawal", cfg.patterns.withdrawal},
          {"recovery", cfg.patterns.recovery}}},
        {"thresholds", {{"tau_p4", cfg.tau_p4}, {"toxicity_hide", cfg.toxicity_hide}}},
        {"intensities", cfg.intensities},
        {"curation",
         {{"ad_blocklist", cfg.curation.ad_blocklist},
          {"quick_toggle",
           cfg.curation.quick_toggle == QuickToggle::friends_only ? "friends_only" : "none"},
          {"friends", cfg.curation.friends},
          {"post_overrides", overrides}}},
        {"timezone_offset_minutes", cfg.timezone_offset_minutes},
        {"recovery_allowlist", cfg.recovery_allowlist},
        {"resources",
         {{"data_dir", p.data_dir},
          {"fact_db", p.fact_db},
          {"bias_left", p.bias_left},
          {"bias_right", p.bias_right},
          {"profanity", p.profanity},
          {"insult", p.insult},
          {"absolutism", p.absolutism},
          {"intensifiers", p.intensifiers},
          {"toxicity", p.toxicity},
          {"prompts", p.prompts}}},
        {"rewrite_provider",
         {{"endpoint", cfg.rewrite_provider.endpoint},
          {"timeout_ms", cfg.rewrite_provider.timeout_ms}}},
    };
}

UserConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open config file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("$", std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(doc);
}

void save_config_file(const UserConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw LoadError("cannot write config file " + path);
    out << config_to_json(config).dump(2) << '\n';
    if (!out) throw LoadError("failed writing config file " + path);
}

std::string config_digest(const UserConfig& config) {
    return sha256_hex(config_to_json(config).dump());
}

std::string resolve_resource(const ResourcePaths& paths, const std::string& entry,
                             const std::string& default_name) {
    if (!entry.empty()) return entry;
    const std::filesystem::path dir =
        paths.data_dir.empty() ? std::filesystem::path(MEDIATOR_DEFAULT_DATA_DIR)
                               : std::filesystem::path(paths.data_dir);
    return (dir / default_name).string();
}

}  // namespace mediator
