#include "mediator/service.hpp"

#include <charconv>
#include <cstdio>
#include <random>
#include <regex>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

namespace {

struct HttpError {
    int status;
    json body;
};

HttpError bad_request(const std::string& field, const std::string& message) {
    return {400, json{{"error", "validation"}, {"field", field}, {"message", message}}};
}

json parse_body(const ApiRequest& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw HttpError{400, json{{"error", "malformed_json"}, {"message", e.what()}}};
    }
}

// Pulls an optional logical timestamp from the body, falling back to the
// latest audited time so ticks never run backwards.
Millis now_from(const json& body, const Mediator& engine) {
    if (body.is_object() && body.contains("now")) {
        const json& v = body.at("now");
        if (!v.is_number_integer()) throw HttpError(bad_request("now", "expected an integer (ms since epoch)"));
        return v.get<Millis>();
    }
    const auto last = engine.audit().find(engine.audit().last_seq());
    return last ? last->timestamp : 0;
}

const json& require(const json& body, const std::string& key) {
    if (!body.is_object()) throw HttpError(bad_request("$", "expected an object"));
    auto it = body.find(key);
    if (it == body.end()) throw HttpError(bad_request(key, "missing required field"));
    return *it;
}

std::string require_string(const json& body, const std::string& key) {
    const json& v = require(body, key);
    if (!v.is_string()) throw HttpError(bad_request(key, "expected a string"));
    return v.get<std::string>();
}

std::uint64_t parse_seq(const std::string& text, const std::string& field) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) throw HttpError(bad_request(field, "expected a sequence number"));
    return v;
}

std::string fault_id(std::uint64_t counter) {
    static const std::uint64_t salt = std::random_device{}();
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(salt ^ (counter * 0x9E3779B97F4A7C15ULL)));
    return buf;
}

bool is_mutating(const std::string& method) { return method == "POST" || method == "PUT"; }

}  // namespace

void check_bind_policy(const ServiceOptions& options) {
    if (!net::is_loopback_host(options.host) && (!options.bearer_token || options.bearer_token->empty())) {
        throw UsageError("binding to " + options.host + " requires a bearer token");
    }
}

Service::Service(Mediator& engine, ServiceOptions options, net::Gateway* gateway)
    : engine_(engine), options_(std::move(options)), gateway_(gateway) {
    check_bind_policy(options_);
}

Service::~Service() { stop(); }

ApiResponse Service::dispatch(const ApiRequest& req) {
    static const std::regex kEvents("^/v1/session/([^/]+)/events$");
    static const std::regex kRecovery("^/v1/recovery/(activate|deactivate)$");
    static const std::regex kResponse("^/v1/audit/([0-9]+)/response$");

    auto ok = [](const json& j) { return ApiResponse{200, j.dump()}; };
    try {
        if (options_.bearer_token) {
            auto it = req.headers.find("authorization");
            if (it == req.headers.end() || it->second != "Bearer " + *options_.bearer_token) {
                return {401, json{{"error", "unauthorized"}}.dump()};
            }
        }
        if (is_mutating(req.method)) {
            auto it = req.headers.find("content-type");
            const std::string ct = it == req.headers.end() ? "" : it->second.substr(0, it->second.find(';'));
            if (ct != "application/json") {
                return {415, json{{"error", "unsupported_media_type"}, {"message", "expected application/json"}}.dump()};
            }
        }

        std::smatch m;
        const std::string& path = req.path;
        const std::string& method = req.method;

        if (path == "/v1/health" && method == "GET") {
            return ok(json{{"status", engine_.halted() ? "halted" : "ok"}});
        }
        if (path == "/v1/assess" && method == "POST") {
            const json body = parse_body(req);
            return ok(to_json(engine_.assess(post_from_json(require(body, "post"), "post"))));
        }
        if (std::regex_match(path, m, kEvents) && method == "POST") {
            const std::string session = m[1];
            const json body = parse_body(req);
            const json& raw = require(body, "events");
            if (!raw.is_array()) throw HttpError(bad_request("events", "expected an array"));
            std::vector<SessionEvent> batch;
            for (std::size_t i = 0; i < raw.size(); ++i) {
                try {
                    batch.push_back(session_event_from_json(raw[i], session));
                } catch (const ValidationError& e) {
                    throw HttpError(bad_request("events[" + std::to_string(i) + "]." + e.field(), e.what()));
                }
            }
            return ok(to_json(engine_.ingest_events(session, batch)));
        }
        if (path == "/v1/feed/curate" && method == "POST") {
            const json body = parse_body(req);
            const std::string session = require_string(body, "session_id");
            const json& raw = require(body, "page");
            if (!raw.is_array()) throw HttpError(bad_request("page", "expected an array"));
            std::vector<PostContent> page;
            for (std::size_t i = 0; i < raw.size(); ++i) {
                page.push_back(post_from_json(raw[i], "page[" + std::to_string(i) + "]"));
            }
            return ok(to_json(engine_.curate_page(session, page, now_from(body, engine_))));
        }
        if (path == "/v1/draft/analyze" && method == "POST") {
            const json body = parse_body(req);
            const std::string session = require_string(body, "session_id");
            const std::string text = require_string(body, "body");
            return ok(to_json(engine_.submit_draft(session, text, now_from(body, engine_))));
        }
        if (path == "/v1/inbound" && method == "POST") {
            const json body = parse_body(req);
            const std::string session = require_string(body, "session_id");
            InboundItem item;
            try {
                item = inbound_item_from_json(require(body, "item"));
            } catch (const ValidationError& e) {
                throw HttpError(bad_request("item." + e.field(), e.what()));
            }
            return ok(to_json(engine_.receive_inbound(session, item)));
        }
        if (path == "/v1/config") {
            if (method == "GET") return ok(config_to_json(engine_.config()));
            if (method == "PUT") {
                const json body = parse_body(req);
                UserConfig cfg = config_from_json(body);
                Millis now = now_from(json::object(), engine_);
                if (auto it = req.query.find("now"); it != req.query.end()) {
                    now = static_cast<Millis>(parse_seq(it->second, "now"));
                }
                const TickOutcome tick = engine_.update_config(cfg, now);
                return ok(json{{"config", config_to_json(engine_.config())}, {"tick", to_json(tick)}});
            }
        }
        if (path == "/v1/recovery" && method == "GET") {
            return ok(to_json(engine_.recovery_state()));
        }
        if (std::regex_match(path, m, kRecovery) && method == "POST") {
            const RecoveryEvent command =
                m[1] == "activate" ? RecoveryEvent::user_activate : RecoveryEvent::user_deactivate;
            const json body = parse_body(req);
            return ok(to_json(engine_.recovery_command(command, now_from(body, engine_))));
        }
        if (path == "/v1/audit" && method == "GET") {
            std::uint64_t since = 0;
            if (auto it = req.query.find("since"); it != req.query.end()) since = parse_seq(it->second, "since");
            json records = json::array();
            for (const auto& r : engine_.audit().since(since)) records.push_back(to_json(r));
            return ok(json{{"records", records}, {"last_seq", engine_.audit().last_seq()}});
        }
        if (std::regex_match(path, m, kResponse) && method == "POST") {
            const std::uint64_t seq = parse_seq(m[1], "seq");
            const json body = parse_body(req);
            const UserResponse response = user_response_from_string(require_string(body, "response"));
            if (!engine_.audit().find(seq)) {
                return {404, json{{"error", "not_found"}, {"field", "seq"}, {"message", "no audit record " + std::to_string(seq)}}.dump()};
            }
            return ok(to_json(engine_.record_response(seq, response, now_from(body, engine_))));
        }
        if (path == "/v1/evidence" && method == "GET") {
            json out = json::array();
            for (const auto& e : engine_.evidence()) out.push_back(json::parse(serialize_evidence(e)));
            return ok(json{{"records", out}});
        }
        if (path == "/v1/review-queue" && method == "GET") {
            json out = json::array();
            for (const auto& i : engine_.review_queue()) out.push_back(to_json(i));
            return ok(json{{"items", out}});
        }
        return {404, json{{"error", "not_found"}, {"message", method + " " + path}}.dump()};
    } catch (const HttpError& e) {
        return {e.status, e.body.dump()};
    } catch (const ValidationError& e) {
        return {400, bad_request(e.field(), e.what()).body.dump()};
    } catch (const UsageError& e) {
        return {409, json{{"error", "conflict"}, {"message", e.what()}}.dump()};
    } catch (const std::exception& e) {
        const std::string id = fault_id(++fault_counter_);
        spdlog::error("fault {} on {} {}: {}", id, req.method, req.path, e.what());
        const int status = dynamic_cast<const AuditError*>(&e) ? 503 : 500;
        return {status, json{{"error", "internal"}, {"id", id}}.dump()};
    }
}

void Service::bind() {
    check_bind_policy(options_);
    server_ = std::make_unique<httplib::Server>();
    auto handler = [this](const httplib::Request& hreq, httplib::Response& hres) {
        ApiRequest req;
        req.method = hreq.method;
        req.path = hreq.path;
        for (const auto& [k, v] : hreq.params) req.query[k] = v;
        for (const auto& [k, v] : hreq.headers) {
            std::string key = k;
            for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            req.headers[key] = v;
        }
        req.body = hreq.body;
        const ApiResponse res = dispatch(req);
        hres.status = res.status;
        hres.set_content(res.body, "application/json");
    };
    const std::string any = R"(/.*)";
    server_->Get(any, handler);
    server_->Post(any, handler);
    server_->Put(any, handler);
    server_->Delete(any, handler);

    if (gateway_ != nullptr) gateway_->note_listen(options_.host, options_.port);
    if (options_.port == 0) {
        bound_port_ = server_->bind_to_any_port(options_.host);
        if (bound_port_ <= 0) throw Error("cannot bind " + options_.host);
    } else {
        if (!server_->bind_to_port(options_.host, options_.port)) {
            throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
        }
        bound_port_ = options_.port;
    }
    spdlog::info("listening on {}:{}", options_.host, bound_port_);
}

void Service::listen() {
    bind();
    server_->listen_after_bind();
}

int Service::start() {
    bind();
    thread_ = std::make_unique<std::thread>([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound_port_;
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_ && thread_->joinable()) thread_->join();
    thread_.reset();
}

}  // namespace mediator
