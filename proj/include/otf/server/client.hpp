#pragma once

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <optional>
#include <string>

#include "otf/core/json_io.hpp"

namespace otf {

struct HttpReply {
  int status = 0;
  json body;
  std::string raw;
};

// Blocking client, one connection per request.
class HttpClient {
 public:
  HttpClient(std::string host, unsigned short port) : host_(std::move(host)), port_(port) {}

  HttpReply request(boost::beast::http::verb verb, const std::string& target,
                    const std::optional<json>& body = std::nullopt) const {
    namespace http = boost::beast::http;
    boost::asio::io_context ioc;
    boost::asio::ip::tcp::resolver resolver(ioc);
    boost::beast::tcp_stream stream(ioc);
    stream.connect(resolver.resolve(host_, std::to_string(port_)));
    http::request<http::string_body> req{verb, target, 11};
    req.set(http::field::host, host_);
    if (body) {
      req.set(http::field::content_type, "application/json");
      req.body() = body->dump();
    }
    req.prepare_payload();
    http::write(stream, req);
    boost::beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(stream, buf, res);
    boost::beast::error_code ec;
    stream.socket().shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
    HttpReply out;
    out.status = res.result_int();
    out.raw = res.body();
    out.body = json::parse(out.raw, nullptr, false);
    return out;
  }

  HttpReply get(const std::string& target) const { return request(boost::beast::http::verb::get, target); }
  HttpReply post(const std::string& target, const json& body = json::object()) const {
    return request(boost::beast::http::verb::post, target, body);
  }

 private:
  std::string host_;
  unsigned short port_;
};

// Event stream of one session.
class StreamClient {
 public:
  StreamClient(const std::string& host, unsigned short port, const std::string& target) : ws_(ioc_) {
    boost::asio::ip::tcp::resolver resolver(ioc_);
    boost::asio::connect(ws_.next_layer(), resolver.resolve(host, std::to_string(port)));
    ws_.handshake(host, target);
    ws_.text(true);
  }

  ~StreamClient() {
    boost::beast::error_code ec;
    ws_.close(boost::beast::websocket::close_code::normal, ec);
  }

  void send(const json& msg) { ws_.write(boost::asio::buffer(msg.dump())); }

  json receive() {
    boost::beast::flat_buffer b;
    ws_.read(b);
    return json::parse(boost::beast::buffers_to_string(b.data()));
  }

  json call(const json& msg) {
    send(msg);
    return receive();
  }

 private:
  boost::asio::io_context ioc_;
  boost::beast::websocket::stream<boost::asio::ip::tcp::socket> ws_;
};

}  // namespace otf
