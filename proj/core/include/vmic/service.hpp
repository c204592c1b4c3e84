#pragma once

// HTTP front end for interactive sessions. JSON control plane, chunked
// binary audio frames (see frame.hpp) on GET /sessions/{id}/stream.
//
//   GET    /health
//   POST   /sessions                      JSON {source_path, mics, source_position}
//                                         or a WAV body (audio/wav)
//   GET    /sessions/{id}/state
//   PATCH  /sessions/{id}/mics/{k}        {m?, d?, g?}
//   PATCH  /sessions/{id}/source          {x, y}
//   POST   /sessions/{id}/transport       {action: play|pause|seek, position_s?}
//   GET    /sessions/{id}/pattern?f=&mode=&mic=&angles=
//   GET    /sessions/{id}/stream
//   DELETE /sessions/{id}
//
// Errors: 400 malformed request, 404 unknown session or microphone,
// 409 source sampling-rate mismatch, 413 upload too large, 422 validity
// violation with {"errors": [{"field", "message"}]}.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "vmic/config.hpp"

namespace vmic {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;                // 0 picks a free port
  double speed = 1.0;             // playback rate vs real time; <= 0 unpaced
  std::size_t queue_capacity = 64;  // frames buffered per subscriber
  std::size_t max_upload = 64u << 20;
  double keepalive_ms = 500.0;
  std::optional<SceneConfig> defaults; // used when a session omits fields
};

class Service {
public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket. Throws IoError when the address is taken.
  /// Returns the bound port.
  int bind();
  /// Serves until stop(); binds first if needed.
  void run();
  /// bind() plus run() on a background thread.
  void start();
  /// Ends every session and stream and stops serving. Idempotent.
  void stop();

  int port() const;
  std::string address() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace vmic
