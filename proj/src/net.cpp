#include "mediator/net.hpp"

#include <algorithm>
#include <charconv>

#include "httplib.h"
#include "mediator/errors.hpp"

namespace mediator::net {

Endpoint Endpoint::parse(std::string_view url) {
    constexpr std::string_view kPrefix = "http://";
    if (url.substr(0, kPrefix.size()) != kPrefix) {
        throw UsageError("endpoint must start with http:// : " + std::string(url));
    }
    std::string_view rest = url.substr(kPrefix.size());
    Endpoint ep;
    const std::size_t slash = rest.find('/');
    std::string_view authority = rest.substr(0, slash);
    if (slash != std::string_view::npos) {
        ep.base_path = std::string(rest.substr(slash));
        while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
    }
    if (authority.empty()) throw UsageError("endpoint has no host: " + std::string(url));
    if (authority.front() == '[') {
        const std::size_t close = authority.find(']');
        if (close == std::string_view::npos) throw UsageError("bad IPv6 host: " + std::string(url));
        ep.host = std::string(authority.substr(1, close - 1));
        authority = authority.substr(close + 1);
        if (!authority.empty() && authority.front() == ':') authority.remove_prefix(1);
        else authority = {};
    } else {
        const std::size_t colon = authority.find(':');
        ep.host = std::string(authority.substr(0, colon));
        authority = colon == std::string_view::npos ? std::string_view{} : authority.substr(colon + 1);
    }
    if (!authority.empty()) {
        int port = 0;
        auto [p, ec] = std::from_chars(authority.data(), authority.data() + authority.size(), port);
        if (ec != std::errc{} || p != authority.data() + authority.size() || port <= 0 || port > 65535) {
            throw UsageError("bad port in endpoint: " + std::string(url));
        }
        ep.port = port;
    }
    return ep;
}

bool is_loopback_host(std::string_view host) {
    if (host == "localhost" || host == "::1") return true;
    return host.substr(0, 4) == "127." &&
           std::all_of(host.begin(), host.end(), [](char c) { return c == '.' || (c >= '0' && c <= '9'); });
}

std::optional<HttpResponse> HttpGateway::post_json(const Endpoint& endpoint, const std::string& path,
                                                   const std::string& body,
                                                   std::chrono::milliseconds timeout) {
    httplib::Client client(endpoint.host, endpoint.port);
    const auto secs = static_cast<time_t>(timeout.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(endpoint.base_path + path, body, "application/json");
    if (!res) return std::nullopt;
    return HttpResponse{res->status, res->body};
}

std::optional<HttpResponse> InstrumentedGateway::post_json(const Endpoint& endpoint,
                                                           const std::string& path,
                                                           const std::string& body,
                                                           std::chrono::milliseconds timeout) {
    record(OpKind::outbound_request, endpoint.host, endpoint.port);
    return inner_.post_json(endpoint, path, body, timeout);
}

void InstrumentedGateway::note_listen(const std::string& host, int port) {
    record(OpKind::listen, host, port);
    inner_.note_listen(host, port);
}

void InstrumentedGateway::record(OpKind kind, const std::string& host, int port) {
    std::lock_guard lock(mu_);
    ops_.push_back({kind, host, port, is_loopback_host(host)});
}

std::vector<NetworkOp> InstrumentedGateway::operations() const {
    std::lock_guard lock(mu_);
    return ops_;
}

std::size_t InstrumentedGateway::total_operations() const {
    std::lock_guard lock(mu_);
    return ops_.size();
}

std::size_t InstrumentedGateway::non_loopback_operations() const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(
        std::count_if(ops_.begin(), ops_.end(), [](const NetworkOp& op) { return !op.loopback; }));
}

}  // namespace mediator::net
