#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "mediator/errors.hpp"
#include "mediator/sim.hpp"
#include "oracles.hpp"

using namespace mediator;

namespace {

struct Run {
    sim::SimRun run;
    std::vector<AuditRecord> audit;
};

Run simulate(const std::string& profile, std::uint64_t seed, int minutes = 30) {
    Mediator m(sim::default_sim_config());
    Run r;
    r.run = sim::run_simulation(sim::SimProfile::preset(profile), seed, minutes, m);
    r.audit = m.audit().all();
    return r;
}

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult cli(const std::string& args) {
    const std::string cmd = std::string(MEDIATOR_CLI_PATH) + " " + args + " 2>&1";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

int local_hour(Millis t, int offset_minutes) {
    const Millis local = t + static_cast<Millis>(offset_minutes) * 60'000;
    return static_cast<int>(((local % 86'400'000) + 86'400'000) % 86'400'000 / 3'600'000);
}

}  // namespace

TEST_CASE("acceptance probability declines from 0.6") {
    CHECK(sim::acceptance_probability(0) == 0.6);
    CHECK(sim::acceptance_probability(5) == doctest::Approx(0.6 * std::exp(-1.0)));
    CHECK(sim::acceptance_probability(6) < sim::acceptance_probability(5));
}

TEST_CASE("presets") {
    for (const auto& name : sim::profile_names()) CHECK(sim::SimProfile::preset(name).name == name);
    CHECK_THROWS_AS(sim::SimProfile::preset("insomniac"), UsageError);
}

TEST_CASE("same seed gives identical reports and audit logs") {
    for (const auto& name : sim::profile_names()) {
        const Run a = simulate(name, 42);
        const Run b = simulate(name, 42);
        CHECK(a.run.report == b.run.report);
        CHECK(sim::to_csv(a.run.report) == sim::to_csv(b.run.report));
        REQUIRE(a.audit.size() == b.audit.size());
        for (std::size_t i = 0; i < a.audit.size(); ++i) CHECK(replay_view(a.audit[i]) == replay_view(b.audit[i]));
    }
}

TEST_CASE("a different seed changes the stream") {
    const Run a = simulate("doomscroller", 42);
    const Run b = simulate("doomscroller", 43);
    bool differs = a.audit.size() != b.audit.size();
    for (std::size_t i = 0; !differs && i < a.audit.size(); ++i) differs = replay_view(a.audit[i]) != replay_view(b.audit[i]);
    CHECK(differs);
}

TEST_CASE("doomscroller ends with high topic repetition") {
    for (std::uint64_t seed : {1, 42, 99}) CHECK(simulate("doomscroller", seed).run.final_repetition_index >= 0.6);
}

TEST_CASE("goal-directed sessions never activate recovery") {
    for (std::uint64_t seed : {1, 42, 99}) {
        const Run r = simulate("goal_directed", seed);
        CHECK(r.run.report.recovery_activations == 0);
        CHECK(r.run.report.inbound_hidden == 0);
    }
}

TEST_CASE("goal-directed divergence stays low") {
    const Run r = simulate("goal_directed", 42);
    double peak = 0.0;
    for (const auto& rec : r.audit) {
        if (rec.context.contains("signals")) peak = std::max(peak, rec.context["signals"].value("goal_divergence", 0.0));
    }
    CHECK(peak <= 0.2);
}

TEST_CASE("late-night sessions are stamped between midnight and six") {
    const UserConfig c = sim::default_sim_config();
    const Run r = simulate("late_night", 42);
    for (const auto& rec : r.audit) {
        CHECK(local_hour(rec.timestamp, c.timezone_offset_minutes) < 6);
    }
}

TEST_CASE("reports reconcile with the audit log") {
    for (const auto& name : sim::profile_names()) {
        const Run r = simulate(name, 42);
        const auto audited = sim::report_from_audit(r.audit, name, 42, 30);
        CHECK(sim::reconcile(r.run.report, audited).empty());
        CHECK(r.run.report.ticks == r.audit.size());
    }
    sim::SimReport a;
    sim::SimReport b;
    b.posts_hidden = 3;
    CHECK(sim::reconcile(a, b) == std::vector<std::string>{"posts_hidden"});
}

TEST_CASE("pauses respect the cooldown in force") {
    for (const auto& name : sim::profile_names()) {
        for (std::uint64_t seed : {1, 42, 99}) {
            const Run r = simulate(name, seed);
            std::optional<Millis> last;
            for (const auto& rec : r.audit) {
                const auto& inter = rec.resolution.at("interjection");
                if (inter.is_null() || inter.value("pattern", "") != "withdrawal") continue;
                const double cooldown = rec.context.at("cooldown_minutes").get<double>();
                CHECK(cooldown >= 5.0);
                CHECK(cooldown <= 60.0);
                if (last) CHECK(static_cast<double>(rec.timestamp - *last) >= cooldown * 60'000.0);
                last = rec.timestamp;
            }
        }
    }
}

TEST_CASE("rude drafts and pile-ons exercise rewrites and recovery") {
    const Run d = simulate("doomscroller", 42);
    CHECK(d.run.report.rewrites_offered > 0);
    CHECK(d.run.report.pauses_shown > 0);
    const Run n = simulate("late_night", 42);
    CHECK(n.run.report.recovery_suggestions > 0);
}

TEST_CASE("CSV schema") {
    const Run r = simulate("late_night", 42, 10);
    const std::string csv = sim::to_csv(r.run.report);
    CHECK(csv.rfind("metric,value\nschema_version,1\n", 0) == 0);
    CHECK(csv.find("\nprofile,late_night\n") != std::string::npos);
    CHECK(csv.find("\ncooldown_trajectory,") != std::string::npos);
    CHECK_FALSE(sim::summary(r.run.report).empty());
}

TEST_CASE("cli decide picks a2 from the two-candidate fixture") {
    fixture::TempDir dir("cli");
    fixture::write_text(dir.file("c.json"),
                        R"({"config":{"schema_version":1,"lambda":0.5,"beta":2,"tau":0.6},"candidates":[)"
                        R"({"action_id":1,"kind":"soft_prompt","utility":0.8,"risk":0.7,"agency_penalty":0.2},)"
                        R"({"action_id":2,"kind":"no_op","utility":0.5,"risk":0.1,"agency_penalty":0.0}]})");
    const CliResult r = cli("decide " + dir.file("c.json"));
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("chosen").at("action_id") == 2);
}

TEST_CASE("cli simulate, replay, and exit codes") {
    fixture::TempDir dir("cli");
    const std::string store = dir.file("store");
    const CliResult a = cli("simulate --profile doomscroller --seed 42 --minutes 10 --out " + dir.file("a.csv") +
                            " --storage " + store);
    REQUIRE(a.code == 0);
    CHECK(cli("simulate --profile doomscroller --seed 42 --minutes 10 --out " + dir.file("b.csv")).code == 0);
    CHECK(fixture::read_lines(dir.file("a.csv")) == fixture::read_lines(dir.file("b.csv")));

    const CliResult ok = cli("replay " + store + "/audit.jsonl");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("replay ok") != std::string::npos);

    fixture::write_text(dir.file("other.json"), R"({"schema_version":1,"tau":0.55})");
    const CliResult div = cli("replay " + store + "/audit.jsonl --config " + dir.file("other.json"));
    CHECK(div.code == 3);
    CHECK(div.out.find("seq 1") != std::string::npos);

    CHECK(cli("simulate --profile doomscroller --seed 1 --minutes 1 --storage " + store).code == 1);
    fixture::write_text(dir.file("bad.json"), R"({"schema_version":1,"tau":1.5})");
    const CliResult bad = cli("config validate " + dir.file("bad.json"));
    CHECK(bad.code == 2);
    CHECK(bad.out.find("tau") != std::string::npos);
    CHECK(cli("assess " + dir.file("missing.json")).code == 1);
    CHECK(cli("frobnicate").code == 1);
}
