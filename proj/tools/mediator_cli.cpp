#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mediator/config.hpp"
#include "mediator/decision.hpp"
#include "mediator/engine.hpp"
#include "mediator/errors.hpp"
#include "mediator/service.hpp"
#include "mediator/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mediator;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kDivergence = 3 };

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw LoadError(path + ": " + e.what());
    }
}

UserConfig config_or(const std::string& path, UserConfig fallback) {
    return path.empty() ? validate_config(fallback) : load_config_file(path);
}

int cmd_assess(const std::string& file, const std::string& config_path) {
    json doc = read_json_file(file);
    if (doc.is_object() && doc.contains("post")) doc = doc.at("post");
    const PostContent post = post_from_json(doc);
    net::OfflineGateway offline;
    Mediator engine(config_or(config_path, UserConfig{}), StorageOptions{}, &offline);
    for (const auto& w : engine.resource_warnings()) std::cerr << "warning: " << w << "\n";
    std::cout << to_json(engine.assess(post)).dump(2) << "\n";
    return kOk;
}

int cmd_decide(const std::string& file, const std::string& config_path) {
    const json doc = read_json_file(file);
    UserConfig config = config_or(config_path, UserConfig{});
    const json* list = &doc;
    if (doc.is_object()) {
        if (doc.contains("config") && config_path.empty()) config = config_from_json(doc.at("config"));
        if (!doc.contains("candidates")) throw ValidationError("candidates", "missing required field");
        list = &doc.at("candidates");
    }
    if (!list->is_array()) throw ValidationError("candidates", "expected an array");
    std::vector<CandidateAction> candidates;
    for (std::size_t i = 0; i < list->size(); ++i) {
        candidates.push_back(candidate_from_json((*list)[i], "candidates[" + std::to_string(i) + "]"));
    }
    const Decision d = select_action(candidates, config);
    std::cout << to_json(d).dump(2) << "\n";
    return kOk;
}

struct SimOutcome {
    sim::SimRun run;
    sim::SimReport audited;
    std::vector<std::string> mismatches;
    std::string storage;
};

SimOutcome simulate_one(const sim::SimProfile& profile, std::uint64_t seed, int minutes, const UserConfig& config,
                        const std::string& storage_root, bool many) {
    SimOutcome out;
    if (!storage_root.empty()) {
        out.storage = many ? (fs::path(storage_root) / (profile.name + "-" + std::to_string(seed))).string()
                           : storage_root;
        if (fs::exists(out.storage) && !fs::is_empty(out.storage)) {
            throw UsageError("storage directory " + out.storage + " is not empty");
        }
    }
    Mediator engine(config, StorageOptions{out.storage});
    out.run = sim::run_simulation(profile, seed, minutes, engine);
    out.audited = sim::report_from_audit(engine.audit().all(), profile.name, seed, minutes);
    out.mismatches = sim::reconcile(out.run.report, out.audited);
    return out;
}

int cmd_simulate(const std::string& profile_name, std::vector<std::uint64_t> seeds, int minutes,
                 const std::string& out_path, const std::string& storage, const std::string& config_path,
                 bool parallel) {
    const sim::SimProfile profile = sim::SimProfile::preset(profile_name);
    const UserConfig config = config_or(config_path, sim::default_sim_config());
    if (seeds.empty()) seeds.push_back(42);
    const bool many = seeds.size() > 1;

    std::vector<SimOutcome> outcomes;
    if (parallel && many) {
        std::vector<std::future<SimOutcome>> futures;
        for (auto seed : seeds) {
            futures.push_back(std::async(std::launch::async, simulate_one, std::cref(profile), seed, minutes,
                                         std::cref(config), std::cref(storage), many));
        }
        for (auto& f : futures) outcomes.push_back(f.get());
    } else {
        for (auto seed : seeds) outcomes.push_back(simulate_one(profile, seed, minutes, config, storage, many));
    }

    int code = kOk;
    for (const auto& o : outcomes) {
        std::cout << sim::summary(o.run.report);
        std::cout << "  final repetition index: " << o.run.final_repetition_index
                  << ", peak continuation risk: " << o.run.peak_continuation_risk << "\n";
        if (!o.storage.empty()) std::cout << "  audit log: " << (fs::path(o.storage) / "audit.jsonl").string() << "\n";
        if (!o.mismatches.empty()) {
            std::cerr << "report does not reconcile with the audit log:";
            for (const auto& m : o.mismatches) std::cerr << " " << m;
            std::cerr << "\n";
            code = kDivergence;
        }
        if (!out_path.empty()) {
            std::string path = out_path;
            if (many) {
                const fs::path p(out_path);
                path = (p.parent_path() / (p.stem().string() + "-" + std::to_string(o.run.report.seed) +
                                           p.extension().string()))
                           .string();
            }
            std::ofstream f(path);
            if (!f) throw LoadError("cannot write " + path);
            f << sim::to_csv(o.run.report);
            std::cout << "  report: " << path << "\n";
        }
    }
    return code;
}

int cmd_replay(const std::string& audit_file, std::string inputs_file, const std::string& config_path) {
    if (inputs_file.empty()) inputs_file = (fs::path(audit_file).parent_path() / "inputs.jsonl").string();
    const auto stored = AuditStore::read_file(audit_file);
    const auto inputs = read_input_log(inputs_file);
    UserConfig config;
    if (!config_path.empty()) {
        config = load_config_file(config_path);
    } else if (auto init = initial_config(inputs)) {
        config = *init;
    } else {
        throw UsageError(inputs_file + " has no init line; pass --config");
    }
    const auto produced = replay(inputs, config, stored);
    std::cout << "replay ok: " << produced.size() << " records match\n";
    return kOk;
}

int cmd_config_validate(const std::string& file) {
    const UserConfig cfg = load_config_file(file);
    std::cout << config_to_json(cfg).dump(2) << "\n";
    std::cout << "digest " << config_digest(cfg) << "\n";
    return kOk;
}

int cmd_serve(const std::string& host, int port, const std::string& token, const std::string& storage,
              const std::string& config_path) {
    ServiceOptions opts;
    opts.host = host;
    opts.port = port;
    if (!token.empty()) opts.bearer_token = token;
    check_bind_policy(opts);
    net::HttpGateway gateway;
    Mediator engine(config_or(config_path, UserConfig{}), StorageOptions{storage}, &gateway);
    for (const auto& w : engine.resource_warnings()) std::cerr << "warning: " << w << "\n";
    Service service(engine, opts, &gateway);
    service.listen();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local mediation engine: integrity scoring, decision ticks, simulation and audit replay"};
    app.require_subcommand(1);

    std::string config_path;

    std::string assess_file;
    auto* assess = app.add_subcommand("assess", "Print the integrity score of a post JSON file");
    assess->add_option("file", assess_file, "Post JSON")->required();
    assess->add_option("--config", config_path, "User config JSON");

    std::string decide_file;
    auto* decide = app.add_subcommand("decide", "Score candidate actions and print the decision");
    decide->add_option("file", decide_file, "Candidates JSON")->required();
    decide->add_option("--config", config_path, "User config JSON (overrides an embedded config)");

    std::string profile = "doomscroller";
    std::vector<std::uint64_t> seeds;
    int minutes = 30;
    std::string out_path;
    std::string storage;
    bool parallel = false;
    auto* simulate = app.add_subcommand("simulate", "Run a seeded session simulation");
    simulate->add_option("--profile", profile, "doomscroller, goal_directed, or late_night")
        ->check(CLI::IsMember(sim::profile_names()));
    simulate->add_option("--seed", seeds, "Seed; repeat for several runs")->expected(1, -1);
    simulate->add_option("--minutes", minutes, "Simulated minutes")->check(CLI::PositiveNumber);
    simulate->add_option("--out", out_path, "CSV report path");
    simulate->add_option("--storage", storage, "Directory for audit, evidence, and input logs");
    simulate->add_option("--config", config_path, "User config JSON");
    simulate->add_flag("--parallel", parallel, "Run the seeds concurrently");

    std::string audit_file;
    std::string inputs_file;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run an input log and compare with the stored audit log");
    replay_cmd->add_option("audit-file", audit_file, "audit.jsonl")->required();
    replay_cmd->add_option("--inputs", inputs_file, "Input log (default: inputs.jsonl beside the audit log)");
    replay_cmd->add_option("--config", config_path, "Config to replay under (default: the log's initial config)");

    std::string config_file;
    auto* config_cmd = app.add_subcommand("config", "Config utilities");
    config_cmd->require_subcommand(1);
    auto* validate = config_cmd->add_subcommand("validate", "Validate a config file");
    validate->add_option("file", config_file, "Config JSON")->required();

    std::string host = "127.0.0.1";
    int port = 8765;
    std::string token;
    auto* serve = app.add_subcommand("serve", "Serve the /v1 HTTP API");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
    serve->add_option("--token", token, "Bearer token (required off loopback)");
    serve->add_option("--storage", storage, "Directory for audit, evidence, and input logs");
    serve->add_option("--config", config_path, "User config JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*assess) return cmd_assess(assess_file, config_path);
        if (*decide) return cmd_decide(decide_file, config_path);
        if (*simulate) return cmd_simulate(profile, seeds, minutes, out_path, storage, config_path, parallel);
        if (*replay_cmd) return cmd_replay(audit_file, inputs_file, config_path);
        if (*validate) return cmd_config_validate(config_file);
        if (*serve) return cmd_serve(host, port, token, storage, config_path);
    } catch (const ReplayDivergence& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kDivergence;
    } catch (const ValidationError& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
