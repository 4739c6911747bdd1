#pragma once

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <condition_variable>
#include <set>
#include <thread>

#include "otf/server/session_manager.hpp"

namespace otf {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

inline http::status http_status(ErrorKind k) {
  switch (k) {
    case ErrorKind::not_found: return http::status::not_found;
    case ErrorKind::conflict:
    case ErrorKind::invalid_state:
    case ErrorKind::out_of_order: return http::status::conflict;
    case ErrorKind::invalid_argument:
    case ErrorKind::parse: return http::status::bad_request;
    case ErrorKind::io: return http::status::internal_server_error;
  }
  return http::status::internal_server_error;
}

inline json error_body(const Error& e) {
  return {{"error", e.reason()}, {"kind", to_string(e.kind())}, {"detail", e.what()}};
}

inline std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += char(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i] == '+' ? ' ' : s[i];
    }
  }
  return out;
}

struct Target {
  std::vector<std::string> segments;
  std::map<std::string, std::string> query;
};

inline Target parse_target(std::string_view target) {
  Target t;
  const auto q = target.find('?');
  const auto path = target.substr(0, q);
  std::size_t pos = 0;
  while (pos < path.size()) {
    const auto next = path.find('/', pos);
    const auto seg = path.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    if (!seg.empty()) t.segments.push_back(percent_decode(seg));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  if (q != std::string_view::npos) {
    auto rest = target.substr(q + 1);
    while (!rest.empty()) {
      const auto amp = rest.find('&');
      const auto kv = rest.substr(0, amp);
      const auto eq = kv.find('=');
      if (!kv.empty())
        t.query[percent_decode(kv.substr(0, eq))] = eq == std::string_view::npos ? "" : percent_decode(kv.substr(eq + 1));
      if (amp == std::string_view::npos) break;
      rest = rest.substr(amp + 1);
    }
  }
  return t;
}

inline std::string_view mime_type(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".mp4") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  if (ext == ".json") return "application/json";
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

// REST + one WebSocket event stream per session, thread per connection.
class HttpServer {
 public:
  using Response = http::response<http::string_body>;
  using Request = http::request<http::string_body>;

  HttpServer(SessionManager& mgr, const std::string& address, unsigned short port)
      : mgr_(mgr), acceptor_(ioc_) {
    tcp::endpoint ep(net::ip::make_address(address), port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
  }

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;
  ~HttpServer() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  void start() {
    accept_thread_ = std::thread([this] { run(); });
  }

  // Blocks until stop().
  void run() {
    while (!stopping_) {
      beast::error_code ec;
      tcp::socket sock(ioc_);
      acceptor_.accept(sock, ec);
      if (stopping_) break;
      if (ec) continue;
      std::unique_lock lock(mu_);
      ++active_;
      open_fds_.insert(sock.native_handle());
      lock.unlock();
      std::thread([this, s = std::move(sock)]() mutable {
        const int fd = s.native_handle();
        try {
          serve(std::move(s));
        } catch (const std::exception&) {
        }
        std::lock_guard g(mu_);
        open_fds_.erase(fd);
        --active_;
        cv_.notify_all();
      }).detach();
    }
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    {
      // Wake the blocking accept.
      beast::error_code ec;
      net::io_context ioc;
      tcp::socket poke(ioc);
      auto ep = acceptor_.local_endpoint(ec);
      if (!ec) {
        if (ep.address().is_unspecified()) ep.address(net::ip::make_address("127.0.0.1"));
        poke.connect(ep, ec);
      }
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::unique_lock lock(mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    cv_.wait(lock, [&] { return active_ == 0; });
    beast::error_code ec;
    acceptor_.close(ec);
  }

  // Routes one plain HTTP request. Public so that it can be driven without
  // sockets.
  Response route(const Request& req) {
    Response res{http::status::ok, req.version()};
    res.set(http::field::server, "otf");
    res.set(http::field::access_control_allow_origin, "*");
    auto send_json = [&](http::status st, const json& body) {
      res.result(st);
      res.set(http::field::content_type, "application/json");
      res.body() = body.dump();
    };
    try {
      const auto t = parse_target(std::string(req.target()));
      const auto& s = t.segments;
      const auto verb = req.method();
      if (verb == http::verb::options) {
        res.result(http::status::no_content);
        res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
        return res;
      }
      if (s.size() == 1 && s[0] == "health" && verb == http::verb::get) {
        send_json(http::status::ok, {{"ok", true}});
      } else if (s.size() == 1 && s[0] == "videos" && verb == http::verb::get) {
        send_json(http::status::ok, mgr_.videos());
      } else if (s.size() == 1 && s[0] == "sessions" && verb == http::verb::get) {
        send_json(http::status::ok, mgr_.sessions());
      } else if (s.size() == 1 && s[0] == "sessions" && verb == http::verb::post) {
        const auto body = parse_json_text(req.body(), "request body");
        send_json(http::status::created, mgr_.create_session(decode<CreateSessionRequest>(body, "request body")));
      } else if (s.size() == 2 && s[0] == "sessions" && verb == http::verb::get) {
        send_json(http::status::ok, mgr_.session(s[1]));
      } else if (s.size() == 3 && s[0] == "sessions" && s[2] == "events" && verb == http::verb::post) {
        const auto body = parse_json_text(req.body(), "request body");
        if (body.is_array()) {
          json out = json::array();
          bool all = true;
          for (const auto& m : body) {
            const auto r = mgr_.ingest_wire(s[1], m);
            all = all && r.accepted;
            out.push_back(r);
            if (!r.accepted) break;
          }
          send_json(all ? http::status::ok : http::status::conflict, out);
        } else {
          const auto r = mgr_.ingest_wire(s[1], body);
          send_json(r.accepted ? http::status::ok : http::status::conflict, r);
        }
      } else if (s.size() == 3 && s[0] == "sessions" && s[2] == "events" && verb == http::verb::get) {
        send_json(http::status::ok, mgr_.sync(s[1]));
      } else if (s.size() == 3 && s[0] == "sessions" && s[2] == "finalize" && verb == http::verb::post) {
        send_json(http::status::ok, mgr_.finalize(s[1]));
      } else if (s.size() == 2 && s[0] == "analyses" && verb == http::verb::get) {
        send_json(http::status::ok, mgr_.analysis(s[1], t.query));
      } else if (s.size() >= 2 && s[0] == "static" && verb == http::verb::get) {
        std::string rel;
        for (std::size_t i = 1; i < s.size(); ++i) rel += (i > 1 ? "/" : "") + s[i];
        const auto p = SessionManager::contained(mgr_.options().data_dir / "videos", rel);
        if (!fs::is_regular_file(p)) throw Error(ErrorKind::not_found, "no_such_file", rel);
        res.set(http::field::content_type, std::string(mime_type(p)));
        res.body() = read_text_file(p);
      } else {
        send_json(http::status::not_found, {{"error", "no_route"}, {"kind", "not_found"}, {"detail", std::string(req.target())}});
      }
    } catch (const Error& e) {
      send_json(http_status(e.kind()), error_body(e));
    } catch (const std::exception& e) {
      send_json(http::status::bad_request, {{"error", "bad_request"}, {"kind", "invalid_argument"}, {"detail", e.what()}});
    }
    return res;
  }

 private:
  void serve(tcp::socket sock) {
    beast::flat_buffer buf;
    for (;;) {
      Request req;
      beast::error_code ec;
      http::read(sock, buf, req, ec);
      if (ec) break;
      if (websocket::is_upgrade(req)) {
        serve_stream(std::move(sock), std::move(req));
        return;
      }
      auto res = route(req);
      res.keep_alive(req.keep_alive());
      res.prepare_payload();
      http::write(sock, res, ec);
      if (ec || !res.keep_alive()) break;
    }
    beast::error_code ec;
    sock.shutdown(tcp::socket::shutdown_send, ec);
  }

  // WS /sessions/{id}/events: a sync message on connect, then one ack or
  // reject per text frame.
  void serve_stream(tcp::socket sock, Request req) {
    const auto t = parse_target(std::string(req.target()));
    std::string id;
    if (t.segments.size() == 3 && t.segments[0] == "sessions" && t.segments[2] == "events") id = t.segments[1];
    json hello;
    try {
      if (id.empty()) throw Error(ErrorKind::not_found, "no_route", std::string(req.target()));
      hello = mgr_.sync(id);
    } catch (const Error& e) {
      Response res{http_status(e.kind()), req.version()};
      res.set(http::field::content_type, "application/json");
      res.body() = error_body(e).dump();
      res.prepare_payload();
      beast::error_code ec;
      http::write(sock, res, ec);
      return;
    }
    websocket::stream<tcp::socket> ws(std::move(sock));
    beast::error_code ec;
    ws.accept(req, ec);
    if (ec) return;
    ws.text(true);
    ws.write(net::buffer(hello.dump()), ec);
    while (!ec) {
      beast::flat_buffer b;
      ws.read(b, ec);
      if (ec) break;
      json reply;
      try {
        const auto msg = json::parse(beast::buffers_to_string(b.data()));
        if (msg.is_object() && msg.value("type", "") == "sync") reply = mgr_.sync(id);
        else reply = mgr_.ingest_wire(id, msg);
      } catch (const Error& e) {
        reply = error_body(e);
      } catch (const std::exception& e) {
        IngestResult r;
        r.reason = "malformed_message";
        r.kind = "parse";
        r.detail = e.what();
        r.last_seq = mgr_.last_seq(id);
        reply = r;
      }
      ws.write(net::buffer(reply.dump()), ec);
    }
  }

  SessionManager& mgr_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  std::condition_variable cv_;
  std::set<int> open_fds_;
  int active_ = 0;
};

}  // namespace otf
