#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mediator::net {

struct Endpoint {
    std::string scheme = "http";
    std::string host;
    int port = 80;
    std::string base_path;  // no trailing slash

    // Accepts "http://host[:port][/path]". Throws UsageError otherwise.
    static Endpoint parse(std::string_view url);
};

// "localhost", 127.0.0.0/8, and ::1.
bool is_loopback_host(std::string_view host);

struct HttpResponse {
    int status = 0;
    std::string body;
};

enum class OpKind { outbound_request, listen };

struct NetworkOp {
    OpKind kind = OpKind::outbound_request;
    std::string host;
    int port = 0;
    bool loopback = false;
};

// Every socket the engine opens goes through a Gateway.
class Gateway {
public:
    virtual ~Gateway() = default;

    // JSON POST to endpoint.base_path + path. nullopt on connection failure or
    // when the deadline passes.
    virtual std::optional<HttpResponse> post_json(const Endpoint& endpoint, const std::string& path,
                                                  const std::string& body,
                                                  std::chrono::milliseconds timeout) = 0;

    // Called by the service before it binds a listening socket.
    virtual void note_listen(const std::string& host, int port) = 0;
};

// Real sockets via cpp-httplib.
class HttpGateway final : public Gateway {
public:
    std::optional<HttpResponse> post_json(const Endpoint& endpoint, const std::string& path,
                                          const std::string& body,
                                          std::chrono::milliseconds timeout) override;
    void note_listen(const std::string&, int) override {}
};

// Refuses all outbound traffic.
class OfflineGateway final : public Gateway {
public:
    std::optional<HttpResponse> post_json(const Endpoint&, const std::string&, const std::string&,
                                          std::chrono::milliseconds) override {
        return std::nullopt;
    }
    void note_listen(const std::string&, int) override {}
};

// Records every operation, then forwards to the wrapped gateway.
class InstrumentedGateway final : public Gateway {
public:
    explicit InstrumentedGateway(Gateway& inner) : inner_(inner) {}

    std::optional<HttpResponse> post_json(const Endpoint& endpoint, const std::string& path,
                                          const std::string& body,
                                          std::chrono::milliseconds timeout) override;
    void note_listen(const std::string& host, int port) override;

    std::vector<NetworkOp> operations() const;
    std::size_t total_operations() const;
    std::size_t non_loopback_operations() const;

private:
    void record(OpKind kind, const std::string& host, int port);

    Gateway& inner_;
    mutable std::mutex mu_;
    std::vector<NetworkOp> ops_;
};

}  // namespace mediator::net
