#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "mediator/engine.hpp"
#include "mediator/net.hpp"

namespace httplib {
class Server;
}

namespace mediator {

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8765;  // 0 picks a free port
    // Required for non-loopback binds; checked as "Authorization: Bearer <token>".
    std::optional<std::string> bearer_token;
};

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::map<std::string, std::string> headers;  // lower-case names
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string body;  // always JSON
};

// The /v1 HTTP surface over one Mediator. dispatch() is socket-free so the
// routes can be exercised directly; listen() binds through the gateway.
class Service {
public:
    Service(Mediator& engine, ServiceOptions options, net::Gateway* gateway = nullptr);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    ApiResponse dispatch(const ApiRequest& request);

    // Binds and serves until stop(). Throws UsageError for a non-loopback host
    // without a bearer token, and Error when the bind fails.
    void listen();
    // Binds on a background thread and returns once the socket is ready.
    // Returns the bound port.
    int start();
    void stop();

private:
    void bind();

    Mediator& engine_;
    ServiceOptions options_;
    net::Gateway* gateway_;
    std::unique_ptr<httplib::Server> server_;
    std::unique_ptr<std::thread> thread_;
    int bound_port_ = 0;
    std::atomic<std::uint64_t> fault_counter_{0};
};

// Throws UsageError when the options would expose an unauthenticated
// service beyond the loopback interface.
void check_bind_policy(const ServiceOptions& options);

}  // namespace mediator
