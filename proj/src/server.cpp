// Copyright 2026 The sotif-fm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sotif/server.hpp"

#include <chrono>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace sotif::server
{
namespace
{

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

std::string_view mime_type(const std::filesystem::path & path)
{
  const auto ext = path.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wav") return "audio/wav";
  return "application/octet-stream";
}

// Shared by all connections; touched only from the io thread.
struct Shared
{
  ServerOptions options;
  session::SessionStore store;
  bool session_active{false};
};

class WsSession : public std::enable_shared_from_this<WsSession>
{
public:
  WsSession(tcp::socket socket, Shared & shared) : ws_(std::move(socket)), timer_(ws_.get_executor()), shared_(shared)
  {
  }

  void start(http::request<http::string_body> req)
  {
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  ~WsSession()
  {
    if (owner_) shared_.session_active = false;
  }

private:
  void on_accept(beast::error_code ec)
  {
    if (ec) return;
    if (shared_.session_active) {
      send({session::busy_frame()}, true);
      read();
      return;
    }
    shared_.session_active = true;
    owner_ = true;
    core_.emplace(shared_.options.session, shared_.store.next_tc());
    read();
  }

  void read()
  {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec)
  {
    if (ec) {
      finished_ = true;
      timer_.cancel();
      release();
      return;
    }
    const auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if (core_ && !closing_) {
      // frames may carry several newline-delimited objects
      std::istringstream lines(text);
      std::string line;
      while (!closing_ && std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        handle(core_->receive(line));
      }
      if (!ticking_ && core_->phase() == session::Phase::kRunning) {
        ticking_ = true;
        next_tick_ = std::chrono::steady_clock::now();
        schedule();
      }
    }
    read();
  }

  void schedule()
  {
    const auto period = std::chrono::duration<double>(session::kTickPeriod / shared_.options.realtime_factor);
    next_tick_ += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
    timer_.expires_at(next_tick_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->finished_ || self->closing_) return;
      self->handle(self->core_->tick());
      if (!self->closing_) self->schedule();
    });
  }

  void handle(session::Outbound out)
  {
    if (out.close && core_ && core_->result() && !stored_) {
      stored_ = true;
      try {
        shared_.store.append(*core_->result());
      } catch (const std::exception & e) {
        std::cerr << "serve: " << e.what() << "\n";
      }
    }
    send(std::move(out.frames), out.close);
  }

  void send(std::vector<std::string> frames, bool close)
  {
    for (auto & f : frames) queue_.push_back(std::move(f));
    if (close) {
      closing_ = true;
      release();
    }
    if (!writing_) write_next();
  }

  void write_next()
  {
    if (queue_.empty()) {
      writing_ = false;
      if (closing_ && !close_sent_) {
        close_sent_ = true;
        ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
      }
      return;
    }
    writing_ = true;
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->queue_.pop_front();
      if (ec) {
        self->queue_.clear();
        self->writing_ = false;
        return;
      }
      self->write_next();
    });
  }

  void release()
  {
    if (owner_) {
      owner_ = false;
      shared_.session_active = false;
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  Shared & shared_;
  beast::flat_buffer buffer_;
  std::optional<session::SessionCore> core_;
  std::deque<std::string> queue_;
  std::chrono::steady_clock::time_point next_tick_;
  bool owner_{false};
  bool ticking_{false};
  bool writing_{false};
  bool closing_{false};
  bool close_sent_{false};
  bool finished_{false};
  bool stored_{false};
};

class HttpSession : public std::enable_shared_from_this<HttpSession>
{
public:
  HttpSession(tcp::socket socket, Shared & shared) : stream_(std::move(socket)), shared_(shared) {}

  void start() { read(); }

private:
  void read()
  {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec)
  {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      if (req_.target() != "/session") {
        respond(http::status::not_found, "text/plain", "no such endpoint\n");
        return;
      }
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), shared_)->start(std::move(req_));
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      respond(http::status::method_not_allowed, "text/plain", "GET only\n");
      return;
    }
    std::string target(req_.target());
    target = target.substr(0, target.find('?'));
    if (target.empty() || target.front() != '/' || target.find("..") != std::string::npos) {
      respond(http::status::bad_request, "text/plain", "bad path\n");
      return;
    }
    if (target.back() == '/') target += "index.html";
    const auto path = shared_.options.web_root / target.substr(1);
    std::ifstream in(path, std::ios::binary);
    if (!in || std::filesystem::is_directory(path)) {
      respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::ostringstream body;
    body << in.rdbuf();
    respond(http::status::ok, mime_type(path), body.str());
  }

  void respond(http::status status, std::string_view type, std::string body)
  {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, std::string(type));
    res->keep_alive(req_.keep_alive());
    const auto size = body.size();
    if (req_.method() != http::verb::head) res->body() = std::move(body);
    res->prepare_payload();
    if (req_.method() == http::verb::head) res->content_length(size);
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->keep_alive()) {
        self->read();
      } else {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      }
    });
  }

  beast::tcp_stream stream_;
  Shared & shared_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

class Server::Impl
{
public:
  explicit Impl(ServerOptions options)
  : shared_{options, session::SessionStore(options.out_dir)},
    acceptor_(ioc_, tcp::endpoint(net::ip::make_address(options.host), options.port)),
    signals_(ioc_)
  {
  }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  void run()
  {
    if (shared_.options.handle_signals) {
      signals_.add(SIGINT);
      signals_.add(SIGTERM);
      signals_.async_wait([this](beast::error_code ec, int) {
        if (!ec) ioc_.stop();
      });
    }
    accept();
    ioc_.run();
  }

  void stop() { net::post(ioc_, [this] { ioc_.stop(); }); }

private:
  void accept()
  {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<HttpSession>(std::move(socket), shared_)->start();
      accept();
    });
  }

  // Declared before the io_context so pending handlers, destroyed with it,
  // can still release the shared state.
  Shared shared_;
  net::io_context ioc_{1};
  tcp::acceptor acceptor_;
  net::signal_set signals_;
};

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
Server::~Server() = default;
unsigned short Server::port() const { return impl_->port(); }
void Server::run() { impl_->run(); }
void Server::stop() { impl_->stop(); }

}  // namespace sotif::server
