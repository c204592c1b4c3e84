#include "vmic/service.hpp"

#include <sys/socket.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vmic/analysis.hpp"
#include "vmic/errors.hpp"
#include "vmic/frame.hpp"
#include "vmic/version.hpp"

namespace vmic {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct FieldError {
  std::string field;
  std::string message;
};

void send_json(httplib::Response& res, int status, const json& body)
{
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::vector<FieldError>& fields = {})
{
  json body{{"error", message}};
  if (!fields.empty()) {
    json list = json::array();
    for (const auto& f : fields)
      list.push_back({{"field", f.field}, {"message", f.message}});
    body["errors"] = std::move(list);
  }
  send_json(res, status, body);
}

json point_json(Point2 p)
{
  return {{"x", p.x}, {"y", p.y}};
}

// Frames shared read-only between the render thread and subscribers.
struct QueuedFrame {
  std::shared_ptr<const std::string> bytes;
  std::uint64_t block_index = 0;
  std::uint64_t snapshot = 0;
  std::uint16_t channels = 0;
  bool keepalive = false;
};

class Subscriber {
public:
  explicit Subscriber(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  // Drop-oldest: a full queue loses its front and the consumer is told
  // through a gap frame.
  void push(QueuedFrame frame)
  {
    {
      std::lock_guard lk(mu_);
      if (closed_)
        return;
      // keepalives only matter to an idle reader and must never evict data
      if (frame.keepalive && !queue_.empty())
        return;
      if (queue_.size() >= capacity_) {
        queue_.pop_front();
        gap_ = true;
      }
      queue_.push_back(std::move(frame));
    }
    cv_.notify_one();
  }

  void close()
  {
    {
      std::lock_guard lk(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  // Waits briefly for frames. Returns the encoded bytes to send (possibly
  // empty) and whether the stream is finished.
  std::pair<std::vector<std::shared_ptr<const std::string>>, bool>
  take(std::chrono::milliseconds wait)
  {
    std::unique_lock lk(mu_);
    cv_.wait_for(lk, wait, [&] { return !queue_.empty() || closed_; });
    std::vector<std::shared_ptr<const std::string>> out;
    if (gap_ && !queue_.empty()) {
      Frame gap;
      gap.header.flags = frame_gap;
      gap.header.block_index = queue_.front().block_index;
      gap.header.snapshot = queue_.front().snapshot;
      gap.header.channels = queue_.front().channels;
      out.push_back(std::make_shared<const std::string>(encode_frame(gap)));
      gap_ = false;
    }
    for (auto& f : queue_)
      out.push_back(std::move(f.bytes));
    queue_.clear();
    return {std::move(out), closed_};
  }

private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<QueuedFrame> queue_;
  bool gap_ = false;
  bool closed_ = false;
};

enum class Transport { paused, playing, ended };

std::string_view to_string(Transport t)
{
  switch (t) {
  case Transport::playing:
    return "playing";
  case Transport::ended:
    return "ended";
  default:
    return "paused";
  }
}

class Session {
public:
  Session(std::string id, AudioBuffer source, Scene scene,
          const ServiceOptions& options)
    : id_(std::move(id)),
      fs_(source.fs),
      source_(std::move(source.samples)),
      scene_(std::move(scene)),
      block_(scene_.options().block_size),
      crossfade_ms_(scene_.options().crossfade_ms),
      gain_ceiling_(scene_.options().gain_ceiling),
      speed_(options.speed),
      keepalive_(std::chrono::milliseconds(
          std::max<long>(1, std::lround(options.keepalive_ms)))),
      capacity_(options.queue_capacity)
  {
    for (std::size_t k = 0; k < scene_.mic_count(); ++k) {
      MicSetup mic = scene_.mic(k).setup();
      mic.params = scene_.mic(k).params();
      mics_.push_back(std::move(mic));
    }
    source_position_ = scene_.source_position();
    thread_ = std::thread([this] { render_loop(); });
  }

  ~Session() { shutdown(); }

  const std::string& id() const noexcept { return id_; }

  void shutdown()
  {
    {
      std::lock_guard lk(mu_);
      if (stopping_)
        return;
      stopping_ = true;
    }
    wake_.notify_all();
    if (thread_.joinable())
      thread_.join();
    std::lock_guard lk(subs_mu_);
    for (auto& s : subs_)
      s->close();
    subs_.clear();
  }

  std::shared_ptr<Subscriber> subscribe()
  {
    auto sub = std::make_shared<Subscriber>(capacity_);
    std::lock_guard lk(subs_mu_);
    subs_.push_back(sub);
    return sub;
  }

  void unsubscribe(const std::shared_ptr<Subscriber>& sub)
  {
    std::lock_guard lk(subs_mu_);
    std::erase(subs_, sub);
  }

  json state()
  {
    std::lock_guard lk(mu_);
    return state_locked();
  }

  std::size_t mic_count() const { return mics_.size(); }

  // PATCH /mics/{k}. Returns field errors, empty on success.
  std::vector<FieldError> set_mic(std::size_t k, const json& body, json& echo)
  {
    std::lock_guard lk(mu_);
    MicParams candidate = mics_[k].params;
    std::vector<FieldError> errors;
    for (const auto& [key, value] : body.items()) {
      double* slot = key == "m"   ? &candidate.m
                     : key == "d" ? &candidate.d
                     : key == "g" ? &candidate.g
                                  : nullptr;
      if (!slot)
        errors.push_back({key, "unknown field; expected m, d or g"});
      else if (!value.is_number())
        errors.push_back({key, "must be a number"});
      else
        *slot = value.get<double>();
    }
    if (!errors.empty())
      return errors;
    // Report every out-of-bounds field, not just the first.
    for (int guard = 0; guard < 8; ++guard) {
      try {
        candidate.validate();
        break;
      } catch (const ValidityError& e) {
        errors.push_back({e.field(), e.what()});
        const MicParams& old = mics_[k].params;
        if (e.field() == "m")
          candidate.m = old.m;
        else if (e.field() == "d")
          candidate.d = old.d;
        else if (e.field() == "g")
          candidate.g = old.g;
        else
          break;
      }
    }
    if (!errors.empty())
      return errors;
    try {
      tap_set(local_pose(mics_[k].placement, source_position_), candidate,
              gain_ceiling_);
    } catch (const ValidityError& e) {
      return {{e.field(), "mic '" + mics_[k].label + "': " + e.what()}};
    }
    mics_[k].params = candidate;
    channel_.post(SetMicParams{k, candidate});
    ++posted_;
    echo = state_locked();
    return {};
  }

  std::vector<FieldError> set_source(const json& body, json& echo)
  {
    std::vector<FieldError> errors;
    for (const auto& [key, value] : body.items())
      if (key != "x" && key != "y")
        errors.push_back({key, "unknown field; expected x and y"});
    for (const char* key : {"x", "y"})
      if (!body.contains(key) || !body[key].is_number())
        errors.push_back({key, "required number"});
    if (!errors.empty())
      return errors;
    const Point2 p{body["x"].get<double>(), body["y"].get<double>()};
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      return {{"x", "coordinates must be finite"}};

    std::lock_guard lk(mu_);
    for (const auto& mic : mics_) {
      try {
        tap_set(local_pose(mic.placement, p), mic.params, gain_ceiling_);
      } catch (const ValidityError& e) {
        errors.push_back({e.field(), "mic '" + mic.label + "': " + e.what()});
      }
    }
    if (!errors.empty())
      return errors;
    source_position_ = p;
    channel_.post(MoveSource{p});
    ++posted_;
    echo = state_locked();
    return {};
  }

  // POST /transport. Returns an error message, empty on success.
  std::string transport(const json& body, json& echo)
  {
    if (!body.contains("action") || !body["action"].is_string())
      return "transport needs an action: play, pause or seek";
    const std::string action = body["action"].get<std::string>();
    {
      std::lock_guard lk(mu_);
      if (action == "play") {
        if (transport_ != Transport::ended)
          transport_ = Transport::playing;
      } else if (action == "pause") {
        if (transport_ == Transport::playing)
          transport_ = Transport::paused;
      } else if (action == "seek") {
        if (!body.contains("position_s") || !body["position_s"].is_number())
          return "seek needs a numeric position_s";
        const double t = body["position_s"].get<double>();
        if (!(t >= 0.0) || !std::isfinite(t))
          return "seek position must be >= 0";
        // Snap down to a block boundary.
        const auto sample = static_cast<std::uint64_t>(std::floor(t * fs_));
        position_ = std::min<std::uint64_t>(sample / block_, total_blocks());
        if (position_ >= total_blocks())
          transport_ = Transport::ended;
        else if (transport_ == Transport::ended)
          transport_ = Transport::paused;
      } else {
        return "unknown transport action '" + action + "'";
      }
      echo = transport_locked();
    }
    wake_.notify_all();
    return {};
  }

  json pattern(double f, IntegratorMode mode, std::size_t k, std::size_t angles)
  {
    MicSetup mic;
    Point2 source;
    std::uint64_t snapshot;
    {
      std::lock_guard lk(mu_);
      mic = mics_.at(k);
      source = source_position_;
      snapshot = posted_;
    }
    const ScenePose pose = local_pose(mic.placement, source);
    const auto grid = angle_grid(angles);
    const PatternTable t = monochromatic_pattern(mic.params, f, pose.r, grid, mode);
    json deg = json::array(), mag = json::array(), classic = json::array();
    for (std::size_t a = 0; a < grid.size(); ++a) {
      deg.push_back(rad_to_deg(grid[a]));
      mag.push_back(t.at(a));
      classic.push_back(std::abs(classical_directivity(mic.params.m, grid[a])));
    }
    return {{"mic", k},          {"label", mic.label},
            {"f", f},            {"mode", to_string(mode)},
            {"r", pose.r},       {"theta", pose.theta},
            {"m", mic.params.m}, {"d", mic.params.d},
            {"g", mic.params.g}, {"snapshot", snapshot},
            {"angles_deg", deg}, {"magnitude", mag},
            {"classical", classic}};
  }

private:
  std::uint64_t total_blocks() const
  {
    return (source_.size() + block_ - 1) / block_;
  }

  json transport_locked() const
  {
    return {{"state", to_string(transport_)},
            {"block_index", position_},
            {"position_s", double(position_ * block_) / fs_}};
  }

  json state_locked() const
  {
    json mics = json::array();
    for (std::size_t k = 0; k < mics_.size(); ++k) {
      const auto& mic = mics_[k];
      const ScenePose pose = local_pose(mic.placement, source_position_);
      const TapSet taps = tap_set(pose, mic.params, gain_ceiling_);
      mics.push_back({{"index", k},
                      {"label", mic.label},
                      {"x", mic.placement.position.x},
                      {"y", mic.placement.position.y},
                      {"orientation", mic.placement.orientation},
                      {"m", mic.params.m},
                      {"d", mic.params.d},
                      {"g", mic.params.g},
                      {"c0", mic.params.c0},
                      {"r", pose.r},
                      {"theta", pose.theta},
                      {"theta_deg", rad_to_deg(pose.theta)},
                      {"taps",
                       {{"gain0", taps.center.gain},
                        {"gain1", taps.front.gain},
                        {"gain2", taps.rear.gain},
                        {"delay0", taps.center.delay},
                        {"delay1", taps.front.delay},
                        {"delay2", taps.rear.delay}}}});
    }
    std::size_t subscribers;
    {
      std::lock_guard lk(subs_mu_);
      subscribers = subs_.size();
    }
    return {{"id", id_},
            {"fs", fs_},
            {"block_size", block_},
            {"channels", mics_.size()},
            {"source_frames", source_.size()},
            {"snapshot", posted_},
            {"applied_snapshot", applied_.load()},
            {"source", point_json(source_position_)},
            {"mics", std::move(mics)},
            {"transport", transport_locked()},
            {"subscribers", subscribers}};
  }

  void broadcast(const QueuedFrame& frame)
  {
    std::lock_guard lk(subs_mu_);
    for (auto& s : subs_)
      s->push(frame);
  }

  QueuedFrame make_frame(Frame frame) const
  {
    QueuedFrame q;
    q.block_index = frame.header.block_index;
    q.snapshot = frame.header.snapshot;
    q.channels = frame.header.channels;
    q.bytes = std::make_shared<const std::string>(encode_frame(frame));
    return q;
  }

  QueuedFrame control_frame(std::uint16_t flags, std::uint64_t block) const
  {
    Frame f;
    f.header.flags = flags;
    f.header.block_index = block;
    f.header.snapshot = applied_.load();
    f.header.channels = static_cast<std::uint16_t>(mics_.size());
    QueuedFrame q = make_frame(std::move(f));
    q.keepalive = (flags & frame_keepalive) != 0;
    return q;
  }

  void render_loop()
  {
    const std::size_t channels = scene_.mic_count();
    std::vector<double> in(block_), out(block_ * channels);
    const auto block_time = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(speed_ > 0.0 ? double(block_) / fs_ / speed_ : 0.0));
    Clock::time_point deadline{};
    bool was_playing = false;

    while (true) {
      std::uint64_t block;
      {
        std::unique_lock lk(mu_);
        if (!stopping_ && transport_ != Transport::playing) {
          was_playing = false;
          wake_.wait_for(lk, keepalive_);
          if (stopping_)
            return;
          if (transport_ != Transport::playing) {
            const std::uint64_t at = position_;
            lk.unlock();
            broadcast(control_frame(frame_keepalive, at));
            continue;
          }
        }
        if (stopping_)
          return;
        block = position_;
      }
      if (!was_playing) {
        deadline = Clock::now();
        was_playing = true;
      }

      for (const auto& update : channel_.drain()) {
        try {
          scene_.apply(update, Smoothing::crossfade(crossfade_ms_));
        } catch (const Error& e) {
          std::cerr << "session " << id_ << ": update rejected by engine: "
                    << e.what() << '\n';
        }
        ++applied_;
      }
      const bool fading = scene_.crossfading();

      const std::size_t start = block * block_;
      for (std::size_t i = 0; i < block_; ++i)
        in[i] = start + i < source_.size() ? source_[start + i] : 0.0;
      scene_.render_block(in, out);

      Frame f;
      f.header.flags = fading ? frame_crossfade : 0;
      f.header.block_index = block;
      f.header.snapshot = applied_.load();
      f.header.channels = static_cast<std::uint16_t>(channels);
      f.header.frames = static_cast<std::uint32_t>(block_);
      f.samples.assign(out.begin(), out.end());
      broadcast(make_frame(std::move(f)));

      bool ended = false;
      {
        std::lock_guard lk(mu_);
        if (position_ == block)
          position_ = block + 1;
        if (position_ >= total_blocks() && transport_ == Transport::playing) {
          transport_ = Transport::ended;
          ended = true;
        }
      }
      if (ended)
        broadcast(control_frame(frame_end, block + 1));

      if (speed_ > 0.0) {
        deadline += block_time;
        const auto now = Clock::now();
        if (now - deadline > std::chrono::seconds(1))
          deadline = now; // fell far behind; do not burst to catch up
        std::unique_lock lk(mu_);
        wake_.wait_until(lk, deadline, [&] { return stopping_; });
      }
    }
  }

  const std::string id_;
  const double fs_;
  const std::vector<double> source_;
  Scene scene_; // render thread only
  const std::size_t block_;
  const double crossfade_ms_;
  const double gain_ceiling_;
  const double speed_;
  const std::chrono::milliseconds keepalive_;
  const std::size_t capacity_;

  std::mutex mu_; // guards everything below up to subs_mu_
  std::condition_variable wake_;
  std::vector<MicSetup> mics_; // control-side mirror of the engine
  Point2 source_position_;
  std::uint64_t posted_ = 0;
  Transport transport_ = Transport::paused;
  std::uint64_t position_ = 0; // next block to render
  bool stopping_ = false;
  ControlChannel channel_;
  std::atomic<std::uint64_t> applied_{0};

  mutable std::mutex subs_mu_;
  std::vector<std::shared_ptr<Subscriber>> subs_;

  std::thread thread_;
};

std::string new_session_id()
{
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lk(mu);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(rng()));
  return buf;
}

SceneConfig builtin_defaults()
{
  SceneConfig cfg;
  cfg.source_position = {1.0, 0.0};
  MicSetup mic;
  mic.label = "mic1";
  cfg.mics.push_back(mic);
  return cfg;
}

// Applies a JSON session request on top of the defaults.
std::vector<FieldError> apply_request(const json& body, SceneConfig& cfg,
                                      std::optional<double>& expected_fs)
{
  std::vector<FieldError> errors;
  const auto number = [&](const json& obj, const char* key, const std::string& field,
                          double& slot) {
    if (!obj.contains(key))
      return;
    if (!obj[key].is_number())
      errors.push_back({field, "must be a number"});
    else
      slot = obj[key].get<double>();
  };

  for (const auto& [key, value] : body.items())
    if (key != "source_path" && key != "fs" && key != "mics" &&
        key != "source_position")
      errors.push_back({key, "unknown field"});

  if (body.contains("source_path")) {
    if (!body["source_path"].is_string())
      errors.push_back({"source_path", "must be a string"});
    else
      cfg.source = body["source_path"].get<std::string>();
  }
  if (body.contains("fs")) {
    double fs = 0.0;
    number(body, "fs", "fs", fs);
    expected_fs = fs;
  }
  if (body.contains("source_position")) {
    const auto& p = body["source_position"];
    if (!p.is_object())
      errors.push_back({"source_position", "must be an object {x, y}"});
    else {
      number(p, "x", "source_position.x", cfg.source_position.x);
      number(p, "y", "source_position.y", cfg.source_position.y);
    }
  }
  if (body.contains("mics")) {
    const auto& list = body["mics"];
    if (!list.is_array() || list.empty()) {
      errors.push_back({"mics", "must be a non-empty array"});
      return errors;
    }
    cfg.mics.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& item = list[i];
      const std::string field = "mics[" + std::to_string(i) + "]";
      MicSetup mic;
      mic.label = "mic" + std::to_string(i + 1);
      mic.params.c0 = cfg.c0;
      if (!item.is_object()) {
        errors.push_back({field, "must be an object"});
        continue;
      }
      if (item.contains("label")) {
        if (item["label"].is_string())
          mic.label = item["label"].get<std::string>();
        else
          errors.push_back({field + ".label", "must be a string"});
      }
      number(item, "x", field + ".x", mic.placement.position.x);
      number(item, "y", field + ".y", mic.placement.position.y);
      number(item, "orientation", field + ".orientation", mic.placement.orientation);
      number(item, "m", field + ".m", mic.params.m);
      number(item, "d", field + ".d", mic.params.d);
      number(item, "g", field + ".g", mic.params.g);
      cfg.mics.push_back(std::move(mic));
    }
  }
  return errors;
}

} // namespace

struct Service::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::thread runner;
  int port = -1;
  bool bound = false;

  std::mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;

  explicit Impl(ServiceOptions opts) : options(std::move(opts)) { routes(); }

  std::shared_ptr<Session> find(const std::string& id)
  {
    std::lock_guard lk(sessions_mu);
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void stop_sessions()
  {
    std::map<std::string, std::shared_ptr<Session>> doomed;
    {
      std::lock_guard lk(sessions_mu);
      doomed.swap(sessions);
    }
    for (auto& [id, s] : doomed)
      s->shutdown();
  }

  // Parses a JSON object body; sends 400 and returns nullopt otherwise.
  static std::optional<json> json_body(const httplib::Request& req,
                                       httplib::Response& res)
  {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      send_error(res, 400, "request body must be a JSON object");
      return std::nullopt;
    }
    return body;
  }

  void create_session(const httplib::Request& req, httplib::Response& res)
  {
    SceneConfig cfg = options.defaults.value_or(builtin_defaults());
    std::optional<double> expected_fs = cfg.fs;
    AudioBuffer audio;
    const std::string type = req.get_header_value("Content-Type");
    const bool wav_upload = type.starts_with("audio/") ||
                            type.starts_with("application/octet-stream");
    try {
      if (wav_upload) {
        audio = to_mono(decode_wav(std::span(
            reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size())));
      } else {
        auto body = req.body.empty() ? std::optional<json>(json::object())
                                     : json_body(req, res);
        if (!body)
          return;
        const auto errors = apply_request(*body, cfg, expected_fs);
        if (!errors.empty())
          return send_error(res, 422, "invalid session request", errors);
        if (cfg.source.empty())
          return send_error(res, 422, "no source given",
                            {{"source_path", "required (no default source configured)"}});
        audio = load_source(cfg);
      }
    } catch (const FormatError& e) {
      return send_error(res, 400, e.what(), {{"source", e.what()}});
    } catch (const IoError& e) {
      return send_error(res, 400, e.what(), {{"source_path", e.what()}});
    }

    if (expected_fs && *expected_fs != audio.fs)
      return send_error(res, 409,
                        "source is sampled at " + std::to_string(audio.fs) +
                            " Hz, expected " + std::to_string(*expected_fs) +
                            " Hz; resample it externally");
    if (audio.frames() == 0)
      return send_error(res, 422, "source holds no samples", {{"source", "empty"}});

    cfg.fs.reset();
    std::vector<FieldError> errors;
    for (std::size_t i = 0; i < cfg.mics.size(); ++i) {
      MicParams p = cfg.mics[i].params;
      p.fs = audio.fs;
      try {
        p.validate();
      } catch (const ValidityError& e) {
        errors.push_back({"mics[" + std::to_string(i) + "]." + e.field(), e.what()});
      }
    }
    if (!errors.empty())
      return send_error(res, 422, "invalid microphone parameters", errors);

    std::shared_ptr<Session> session;
    try {
      Scene scene = build_scene(cfg, audio.fs);
      session = std::make_shared<Session>(new_session_id(), std::move(audio),
                                          std::move(scene), options);
    } catch (const ValidityError& e) {
      return send_error(res, 422, e.what(), {{e.field(), e.what()}});
    } catch (const Error& e) {
      return send_error(res, 422, e.what());
    }
    {
      std::lock_guard lk(sessions_mu);
      sessions.emplace(session->id(), session);
    }
    send_json(res, 201, session->state());
  }

  void routes()
  {
    using httplib::Request;
    using httplib::Response;

    server.set_socket_options([](socket_t sock) {
      // Address reuse for quick restarts, but no SO_REUSEPORT: a second
      // server on the same port must fail to bind.
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    server.set_payload_max_length(options.max_upload);

    server.set_exception_handler([](const Request&, Response& res,
                                    std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const ValidityError& e) {
        send_error(res, 422, e.what(), {{e.field(), e.what()}});
      } catch (const RangeError& e) {
        send_error(res, 422, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    });

    server.Get("/health", [](const Request&, Response& res) {
      send_json(res, 200, {{"status", "ok"}, {"version", kVersion}});
    });

    server.Post("/sessions", [this](const Request& req, Response& res) {
      create_session(req, res);
    });

    server.Get(R"(/sessions/([^/]+)/state)", [this](const Request& req, Response& res) {
      auto s = find(req.matches[1]);
      if (!s)
        return send_error(res, 404, "unknown session");
      send_json(res, 200, s->state());
    });

    server.Patch(R"(/sessions/([^/]+)/mics/(\d+))", [this](const Request& req,
                                                           Response& res) {
      auto s = find(req.matches[1]);
      if (!s)
        return send_error(res, 404, "unknown session");
      const auto k = std::stoul(req.matches[2]);
      if (k >= s->mic_count())
        return send_error(res, 404, "unknown microphone index");
      auto body = json_body(req, res);
      if (!body)
        return;
      json echo;
      const auto errors = s->set_mic(k, *body, echo);
      if (!errors.empty())
        return send_error(res, 422, errors.front().message, errors);
      send_json(res, 200, echo);
    });

    server.Patch(R"(/sessions/([^/]+)/source)", [this](const Request& req, Response& res) {
      auto s = find(req.matches[1]);
      if (!s)
        return send_error(res, 404, "unknown session");
      auto body = json_body(req, res);
      if (!body)
        return;
      json echo;
      const auto errors = s->set_source(*body, echo);
      if (!errors.empty())
        return send_error(res, 422, errors.front().message, errors);
      send_json(res, 200, echo);
    });

    server.Post(R"(/sessions/([^/]+)/transport)", [this](const Request& req,
                                                        Response& res) {
      auto s = find(req.matches[1]);
      if (!s)
        return send_error(res, 404, "unknown session");
      auto body = json_body(req, res);
      if (!body)
        return;
      json echo;
      const std::string err = s->transport(*body, echo);
      if (!err.empty())
        return send_error(res, 400, err);
      send_json(res, 200, echo);
    });

    server.Get(R"(/sessions/([^/]+)/pattern)", [this](const Request& req, Response& res) {
      auto s = find(req.matches[1]);
      if (!s)
        return send_error(res, 404, "unknown session");
      double f = 0.0;
      IntegratorMode mode = IntegratorMode::lossy;
      std::size_t mic = 0, angles = kDefaultAngleCount;
      try {
        if (!req.has_param("f"))
          return send_error(res, 400, "pattern needs a frequency f (Hz)");
        f = std::stod(req.get_param_value("f"));
        if (req.has_param("mode"))
          mode = parse_integrator_mode(req.get_param_value("mode"));
        if (req.has_param("mic"))
          mic = std::stoul(req.get_param_value("mic"));
        if (req.has_param("angles"))
          angles = std::stoul(req.get_param_value("angles"));
      } catch (const std::exception& e) {
        return send_error(res, 400, std::string("bad query parameter: ") + e.what());
      }
      if (mic >= s->mic_count())
        return send_error(res, 404, "unknown microphone index");
      if (angles == 0 || angles > 3600)
        return send_error(res, 400, "angles must be in [1, 3600]");
      try {
        send_json(res, 200, s->pattern(f, mode, mic, angles));
      } catch (const RangeError& e) {
        send_error(res, 422, e.what(), {{"f", e.what()}});
      }
    });

    server.Get(R"(/sessions/([^/]+)/stream)", [this](const Request& req, Response& res) {
      auto s = find(req.matches[1]);
      if (!s)
        return send_error(res, 404, "unknown session");
      auto sub = s->subscribe();
      std::weak_ptr<Session> weak = s;
      res.set_header("Cache-Control", "no-store");
      res.set_chunked_content_provider(
          "application/octet-stream",
          [sub](std::size_t, httplib::DataSink& sink) {
            auto [frames, closed] = sub->take(std::chrono::milliseconds(200));
            for (const auto& bytes : frames)
              if (!sink.write(bytes->data(), bytes->size()))
                return false;
            if (closed)
              sink.done();
            return true;
          },
          [sub, weak](bool) {
            sub->close();
            if (auto session = weak.lock())
              session->unsubscribe(sub);
          });
    });

    server.Delete(R"(/sessions/([^/]+))", [this](const Request& req, Response& res) {
      std::shared_ptr<Session> s;
      {
        std::lock_guard lk(sessions_mu);
        const auto it = sessions.find(req.matches[1]);
        if (it == sessions.end())
          return send_error(res, 404, "unknown session");
        s = it->second;
        sessions.erase(it);
      }
      s->shutdown();
      send_json(res, 200, {{"id", s->id()}, {"deleted", true}});
    });
  }
};

Service::Service(ServiceOptions options)
  : impl_(std::make_unique<Impl>(std::move(options)))
{
}

Service::~Service()
{
  stop();
}

int Service::bind()
{
  if (impl_->bound)
    return impl_->port;
  const auto& o = impl_->options;
  if (o.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(o.host);
    if (impl_->port < 0)
      throw IoError("cannot bind " + o.host + " on any port");
  } else {
    if (!impl_->server.bind_to_port(o.host, o.port))
      throw IoError("cannot bind " + o.host + ":" + std::to_string(o.port) +
                    " (address in use?)");
    impl_->port = o.port;
  }
  impl_->bound = true;
  return impl_->port;
}

void Service::run()
{
  bind();
  impl_->server.listen_after_bind();
}

void Service::start()
{
  bind();
  impl_->runner = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Service::stop()
{
  impl_->stop_sessions();
  impl_->server.stop();
  if (impl_->runner.joinable())
    impl_->runner.join();
}

int Service::port() const
{
  return impl_->port;
}

std::string Service::address() const
{
  return "http://" + impl_->options.host + ":" + std::to_string(impl_->port);
}

} // namespace vmic
