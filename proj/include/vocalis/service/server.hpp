#pragma once

#include "vocalis/service/live.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <nlohmann/json.hpp>

#include <deque>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <thread>

namespace vocalis::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct Route {
    enum Kind { references, sessions, summary, stream, unknown } kind = unknown;
    std::string id;
};

inline Route route(std::string_view target) {
    if (const auto q = target.find('?'); q != std::string_view::npos) target = target.substr(0, q);
    if (target == "/references") return {Route::references, {}};
    if (target == "/sessions") return {Route::sessions, {}};
    auto match = [&](std::string_view prefix, std::string_view suffix) -> std::optional<std::string> {
        if (target.size() <= prefix.size() + suffix.size()) return std::nullopt;
        if (target.substr(0, prefix.size()) != prefix) return std::nullopt;
        if (target.substr(target.size() - suffix.size()) != suffix) return std::nullopt;
        const auto id = target.substr(prefix.size(), target.size() - prefix.size() - suffix.size());
        if (id.find('/') != std::string_view::npos) return std::nullopt;
        return std::string(id);
    };
    if (auto id = match("/sessions/", "/summary")) return {Route::summary, *id};
    if (auto id = match("/session/", "/stream")) return {Route::stream, *id};
    return {};
}

inline std::string_view target_of(const http::request<http::string_body>& req) {
    return {req.target().data(), req.target().size()};
}

inline http::status status_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::missing_file: return http::status::not_found;
    case ErrorKind::degenerate: return http::status::unprocessable_entity;
    case ErrorKind::illegal_transition: return http::status::conflict;
    default: return http::status::bad_request;
    }
}

// Stateless request handling, separate from the socket plumbing.
inline http::response<http::string_body> handle_http(SessionRegistry& registry,
                                                     const http::request<http::string_body>& req) {
    http::response<http::string_body> res;
    res.version(req.version());
    res.keep_alive(req.keep_alive());
    res.set(http::field::content_type, "application/json");
    auto reply = [&](http::status status, const nlohmann::json& body) {
        res.result(status);
        res.body() = body.dump() + "\n";
        res.prepare_payload();
        return res;
    };
    const auto r = route(target_of(req));
    try {
        switch (r.kind) {
        case Route::references:
            if (req.method() != http::verb::get) return reply(http::status::method_not_allowed, {{"error", "use GET"}});
            return reply(http::status::ok, registry.references().listing());
        case Route::sessions: {
            if (req.method() != http::verb::post) return reply(http::status::method_not_allowed, {{"error", "use POST"}});
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body());
            } catch (const nlohmann::json::exception& e) {
                return reply(http::status::bad_request, {{"error", std::string("invalid JSON: ") + e.what()}});
            }
            return reply(http::status::created, registry.create(body));
        }
        case Route::summary: {
            if (req.method() != http::verb::get) return reply(http::status::method_not_allowed, {{"error", "use GET"}});
            const auto s = registry.find(r.id);
            if (!s) return reply(http::status::not_found, nlohmann::json{{"error", "unknown session '" + r.id + "'"}});
            return reply(http::status::ok, s->summary());
        }
        case Route::stream:
            return reply(http::status::upgrade_required, {{"error", "WebSocket upgrade required"}});
        case Route::unknown: break;
        }
    } catch (const Error& e) {
        return reply(status_for(e.kind()), {{"error", e.what()}, {"kind", std::string(to_string(e.kind()))}});
    } catch (const nlohmann::json::exception& e) {
        return reply(http::status::bad_request, {{"error", e.what()}});
    }
    return reply(http::status::not_found, nlohmann::json{{"error", "no route for " + std::string(target_of(req))}});
}

// Frames and replies go out as NDJSON text messages; control commands come in.
class StreamConnection : public std::enable_shared_from_this<StreamConnection> {
public:
    StreamConnection(tcp::socket socket, std::shared_ptr<LiveSession> session)
        : ws_(std::move(socket)), session_(std::move(session)) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->subscription_ = self->session_->subscribe();
            std::weak_ptr<StreamConnection> weak = self;
            auto executor = self->ws_.get_executor();
            self->subscription_->set_notify([weak, executor] {
                net::post(executor, [weak] {
                    if (auto s = weak.lock()) s->pump();
                });
            });
            self->read();
        });
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->shutdown();
                return;
            }
            const auto text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->on_message(text);
            self->read();
        });
    }

    void on_message(const std::string& text) {
        std::size_t start = 0;
        while (start < text.size()) {
            auto stop = text.find('\n', start);
            if (stop == std::string::npos) stop = text.size();
            const auto line = io::trim(std::string_view(text).substr(start, stop - start));
            start = stop + 1;
            if (line.empty()) continue;
            nlohmann::json reply;
            try {
                reply = session_->command(nlohmann::json::parse(line));
            } catch (const nlohmann::json::exception& e) {
                reply = error_event(std::string("malformed command: ") + e.what(), ErrorKind::malformed);
            }
            enqueue(reply.dump());
        }
    }

    void pump() {
        if (!subscription_) return;
        for (auto& m : subscription_->drain()) enqueue(std::move(m));
        if (subscription_->overflowed() && !closing_) {
            closing_ = true;
            ws_.async_close(websocket::close_reason(websocket::close_code::policy_error, "subscriber buffer overflow"),
                            [self = shared_from_this()](beast::error_code) {});
        }
    }

    void enqueue(std::string message) {
        if (closing_) return;
        outbox_.push_back(std::move(message) + "\n");
        if (!writing_) write();
    }

    void write() {
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->outbox_.pop_front();
            if (ec) {
                self->writing_ = false;
                self->shutdown();
                return;
            }
            if (self->outbox_.empty()) {
                self->writing_ = false;
            } else {
                self->write();
            }
        });
    }

    void shutdown() {
        if (subscription_) subscription_->close();
    }

    websocket::stream<beast::tcp_stream> ws_;
    std::shared_ptr<LiveSession> session_;
    std::shared_ptr<feedback::Subscription<std::string>> subscription_;
    beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
    bool writing_ = false;
    bool closing_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket socket, SessionRegistry& registry) : stream_(std::move(socket)), registry_(registry) {}

    void run() { read(); }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(60));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->close();
                return;
            }
            self->dispatch();
        });
    }

    void dispatch() {
        if (websocket::is_upgrade(req_)) {
            const auto r = route(target_of(req_));
            std::shared_ptr<LiveSession> session;
            if (r.kind == Route::stream) session = registry_.find(r.id);
            if (session) {
                stream_.expires_never();
                std::make_shared<StreamConnection>(stream_.release_socket(), std::move(session))->run(std::move(req_));
                return;
            }
        }
        auto res = std::make_shared<http::response<http::string_body>>(handle_http(registry_, req_));
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec || !res->keep_alive()) {
                self->close();
                return;
            }
            self->read();
        });
    }

    void close() {
        beast::error_code ec;
        stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    }

    beast::tcp_stream stream_;
    SessionRegistry& registry_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

// HTTP + WebSocket endpoints on one io thread.
class Server {
public:
    explicit Server(ServiceConfig cfg) : registry_(std::move(cfg)), acceptor_(ioc_) {}

    ~Server() { stop(); }

    SessionRegistry& registry() { return registry_; }
    unsigned short port() const { return port_; }

    void start() {
        const auto& cfg = registry_.config();
        beast::error_code ec;
        const auto address = net::ip::make_address(cfg.address, ec);
        if (ec) fail(ErrorKind::invalid_argument, "invalid listen address '" + cfg.address + "'");
        const tcp::endpoint endpoint(address, cfg.port);
        acceptor_.open(endpoint.protocol(), ec);
        if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
        if (!ec) acceptor_.bind(endpoint, ec);
        if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
        if (ec) fail(ErrorKind::io, "cannot listen on " + cfg.address + ":" + std::to_string(cfg.port) + ": " + ec.message());
        port_ = acceptor_.local_endpoint().port();
        accept();
        thread_ = std::thread([this] { ioc_.run(); });
    }

    // Blocks until SIGINT or SIGTERM.
    void wait_for_signal() {
        net::signal_set signals(ioc_, SIGINT, SIGTERM);
        std::promise<void> done;
        signals.async_wait([&](beast::error_code, int) { done.set_value(); });
        done.get_future().wait();
    }

    void stop() {
        registry_.shutdown();
        if (!thread_.joinable()) return;
        net::post(ioc_, [this] {
            beast::error_code ec;
            acceptor_.close(ec);
        });
        ioc_.stop();
        thread_.join();
    }

private:
    void accept() {
        acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<HttpConnection>(std::move(socket), registry_)->run();
            accept();
        });
    }

    SessionRegistry registry_;
    net::io_context ioc_{1};
    tcp::acceptor acceptor_;
    unsigned short port_ = 0;
    std::thread thread_;
};

} // namespace vocalis::service
