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

#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "sotif/session.hpp"

namespace sotif::server
{

struct ServerOptions
{
  std::string host{"127.0.0.1"};
  unsigned short port{8080};  // 0 picks a free port
  std::filesystem::path web_root;
  std::filesystem::path out_dir;
  session::SessionOptions session;
  double realtime_factor{1.0};  // > 1 runs faster than wall clock
  bool handle_signals{false};   // stop on SIGINT / SIGTERM
};

/// HTTP server: static files under `/`, the session protocol as a
/// WebSocket at `/session`. One session at a time; all simulation and
/// socket work runs on a single thread.
class Server
{
public:
  explicit Server(ServerOptions options);
  ~Server();

  Server(const Server &) = delete;
  Server & operator=(const Server &) = delete;

  unsigned short port() const;
  /// Blocks until stop() is called.
  void run();
  /// Thread-safe.
  void stop();

private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sotif::server
