#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "support.hpp"
#include "vmic/analysis.hpp"
#include "vmic/errors.hpp"
#include "vmic/frame.hpp"
#include "vmic/service.hpp"

using namespace vmic;
using namespace vmic::test;
using json = nlohmann::json;
using namespace std::chrono_literals;

namespace {

std::string wav_bytes(const std::vector<double>& samples, double fs = 44100)
{
  const auto bytes = encode_wav(mono(samples, fs), SampleFormat::float32);
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

// Noise that is exactly representable in float32 WAV files.
std::vector<double> test_source(std::size_t n, std::uint64_t seed = 1)
{
  auto x = white_noise(n, 0.1, seed);
  for (auto& v : x)
    v = static_cast<float>(v);
  return x;
}

struct Harness {
  explicit Harness(ServiceOptions opt = unpaced()) : service(std::move(opt))
  {
    service.start();
    client = std::make_unique<httplib::Client>("127.0.0.1", service.port());
    client->set_read_timeout(10s);
  }

  static ServiceOptions unpaced()
  {
    ServiceOptions o;
    o.port = 0;
    o.speed = 0.0;
    o.keepalive_ms = 50;
    return o;
  }

  std::string upload(const std::vector<double>& samples, double fs = 44100)
  {
    auto res = client->Post("/sessions", wav_bytes(samples, fs), "audio/wav");
    REQUIRE(res);
    REQUIRE(res->status == 201);
    return json::parse(res->body)["id"].get<std::string>();
  }

  json get(const std::string& path, int expect = 200)
  {
    auto res = client->Get(path);
    REQUIRE(res);
    CHECK(res->status == expect);
    return json::parse(res->body);
  }

  json patch(const std::string& path, const json& body, int expect = 200)
  {
    auto res = client->Patch(path, body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == expect);
    return json::parse(res->body);
  }

  json post(const std::string& path, const json& body, int expect = 200)
  {
    auto res = client->Post(path, body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == expect);
    return json::parse(res->body);
  }

  json transport(const std::string& id, const json& body)
  {
    return post("/sessions/" + id + "/transport", body);
  }

  Service service;
  std::unique_ptr<httplib::Client> client;
};

// Reads a session stream on its own connection and collects decoded frames.
class StreamCapture {
public:
  StreamCapture(int port, const std::string& id,
                std::function<void(std::size_t)> on_chunk = {})
    : on_chunk_(std::move(on_chunk))
  {
    thread_ = std::thread([this, port, id] {
      httplib::Client cli("127.0.0.1", port);
      cli.set_read_timeout(10s);
      std::size_t chunks = 0;
      cli.Get("/sessions/" + id + "/stream",
              [&](const char* data, std::size_t n) {
                reader_.feed(std::string_view(data, n));
                {
                  std::lock_guard lk(mu_);
                  while (auto f = reader_.next())
                    frames_.push_back(std::move(*f));
                }
                cv_.notify_all();
                if (on_chunk_)
                  on_chunk_(chunks++);
                return !stop_.load();
              });
      std::lock_guard lk(mu_);
      finished_ = true;
      cv_.notify_all();
    });
  }

  ~StreamCapture()
  {
    stop_ = true;
    thread_.join();
  }

  bool wait(const std::function<bool(const std::vector<Frame>&)>& pred,
            std::chrono::milliseconds timeout = 20s)
  {
    std::unique_lock lk(mu_);
    return cv_.wait_for(lk, timeout, [&] { return pred(frames_) || finished_; }) &&
           pred(frames_);
  }

  bool wait_finished(std::chrono::milliseconds timeout = 20s)
  {
    std::unique_lock lk(mu_);
    return cv_.wait_for(lk, timeout, [&] { return finished_; });
  }

  std::vector<Frame> frames()
  {
    std::lock_guard lk(mu_);
    return frames_;
  }

private:
  std::function<void(std::size_t)> on_chunk_;
  FrameReader reader_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Frame> frames_;
  bool finished_ = false;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

bool wait_subscribers(Harness& h, const std::string& id, int count)
{
  for (int i = 0; i < 400; ++i) {
    if (h.get("/sessions/" + id + "/state")["subscribers"] == count)
      return true;
    std::this_thread::sleep_for(10ms);
  }
  return false;
}

bool has_end(const std::vector<Frame>& frames)
{
  return std::any_of(frames.begin(), frames.end(),
                     [](const Frame& f) { return f.has(frame_end); });
}

std::vector<Frame> audio_frames(const std::vector<Frame>& frames)
{
  std::vector<Frame> out;
  for (const auto& f : frames)
    if (f.header.frames > 0)
      out.push_back(f);
  return out;
}

} // namespace

TEST_CASE("health")
{
  Harness h;
  const auto body = h.get("/health");
  CHECK(body["status"] == "ok");
  CHECK(body["version"].is_string());
}

TEST_CASE("session from an uploaded WAV")
{
  Harness h;
  AudioBuffer stereo;
  stereo.fs = 44100;
  stereo.channels = 2;
  stereo.samples = {0.5, 0.0, 0.25, 0.25, 0.0, 0.0};
  const auto bytes = encode_wav(stereo, SampleFormat::pcm16);
  auto res = h.client->Post("/sessions",
                            std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                            "audio/wav");
  REQUIRE(res);
  CHECK(res->status == 201);
  const auto state = json::parse(res->body);
  CHECK(state["fs"] == 44100.0);
  CHECK(state["source_frames"] == 3);
  CHECK(state["channels"] == 1);
  CHECK(state["transport"]["state"] == "paused");
  CHECK(state["mics"][0]["label"] == "mic1");
  CHECK(state["mics"][0]["r"] == 1.0);

  auto bad = h.client->Post("/sessions", "definitely not a wav", "audio/wav");
  REQUIRE(bad);
  CHECK(bad->status == 400);
}

TEST_CASE("upload size limit")
{
  auto opt = Harness::unpaced();
  opt.max_upload = 1000;
  Harness h(opt);
  auto res = h.client->Post("/sessions", wav_bytes(test_source(1000)), "audio/wav");
  REQUIRE(res);
  CHECK(res->status == 413);
}

TEST_CASE("session from a source path")
{
  TempDir dir;
  write_wav(mono(test_source(4410)), dir / "take.wav", SampleFormat::float32);
  Harness h;
  json req{{"source_path", (dir / "take.wav").string()},
           {"source_position", {{"x", 0.0}, {"y", 2.0}}},
           {"mics", {{{"label", "a"}, {"m", 0.5}}, {{"label", "b"}, {"x", 1.0}, {"m", 0.0}}}}};
  const auto state = h.post("/sessions", req, 201);
  CHECK(state["channels"] == 2);
  CHECK(state["mics"][1]["label"] == "b");
  CHECK(state["mics"][0]["r"] == 2.0);
  CHECK(state["mics"][0]["theta_deg"] == doctest::Approx(90.0));

  SUBCASE("sampling-rate mismatch")
  {
    req["fs"] = 48000;
    const auto err = h.post("/sessions", req, 409);
    CHECK(err["error"].get<std::string>().find("48000") != std::string::npos);
  }
  SUBCASE("parameters out of bounds")
  {
    req["mics"][0]["m"] = 2.0;
    req["mics"][1]["g"] = 1.0;
    const auto err = h.post("/sessions", req, 422);
    REQUIRE(err["errors"].size() == 2);
    CHECK(err["errors"][0]["field"] == "mics[0].m");
    CHECK(err["errors"][1]["field"] == "mics[1].g");
  }
  SUBCASE("missing file")
  {
    req["source_path"] = (dir / "nope.wav").string();
    const auto err = h.post("/sessions", req, 400);
    CHECK(err["errors"][0]["field"] == "source_path");
  }
  SUBCASE("unknown fields")
  {
    req["colour"] = "red";
    const auto err = h.post("/sessions", req, 422);
    CHECK(err["errors"][0]["field"] == "colour");
  }
  SUBCASE("source too close to a capsule")
  {
    req["source_position"] = {{"x", 1.001}, {"y", 0.0}};
    const auto err = h.post("/sessions", req, 422);
    CHECK(err["error"].get<std::string>().find("'b'") != std::string::npos);
  }
}

TEST_CASE("unknown sessions and microphones")
{
  Harness h;
  h.get("/sessions/nope/state", 404);
  h.patch("/sessions/nope/source", {{"x", 1}, {"y", 0}}, 404);
  const std::string id = h.upload(test_source(1000));
  h.patch("/sessions/" + id + "/mics/3", {{"m", 0.5}}, 404);
  h.get("/sessions/" + id + "/pattern?f=100&mic=2", 404);
  auto del = h.client->Delete("/sessions/nope");
  REQUIRE(del);
  CHECK(del->status == 404);
}

TEST_CASE("microphone updates echo derived values")
{
  Harness h;
  const std::string id = h.upload(test_source(1000));
  const auto echo = h.patch("/sessions/" + id + "/mics/0", {{"m", 0.5}, {"d", 0.015}});
  CHECK(echo["snapshot"] == 1);
  const auto& mic = echo["mics"][0];
  CHECK(mic["m"] == 0.5);
  CHECK(mic["d"] == 0.015);
  MicParams p;
  p.m = 0.5;
  p.d = 0.015;
  const TapSet taps = tap_set(local_pose(MicPlacement{}, {1.0, 0.0}), p);
  CHECK(mic["taps"]["delay0"].get<double>() == taps.center.delay);
  CHECK(mic["taps"]["delay1"].get<double>() == taps.front.delay);
  CHECK(mic["taps"]["delay2"].get<double>() == taps.rear.delay);
  CHECK(mic["taps"]["gain1"].get<double>() == taps.front.gain);
  CHECK(mic["taps"]["gain2"].get<double>() == taps.rear.gain);
}

TEST_CASE("rejected updates report every field and change nothing")
{
  Harness h;
  const std::string id = h.upload(test_source(1000));
  const auto err = h.patch("/sessions/" + id + "/mics/0", {{"m", 2.0}, {"g", 1.5}}, 422);
  REQUIRE(err["errors"].size() == 2);
  CHECK(err["errors"][0]["field"] == "m");
  CHECK(err["errors"][1]["field"] == "g");
  h.patch("/sessions/" + id + "/mics/0", {{"m", "loud"}}, 422);
  h.patch("/sessions/" + id + "/mics/0", {{"tilt", 1}}, 422);
  auto res = h.client->Patch("/sessions/" + id + "/mics/0", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);

  const auto close = h.patch("/sessions/" + id + "/source", {{"x", 0.005}, {"y", 0.0}}, 422);
  CHECK(close["errors"][0]["field"] == "r");
  CHECK(close["error"].get<std::string>().find("r >= d/2") != std::string::npos);
  h.patch("/sessions/" + id + "/source", {{"x", 1.0}}, 422);

  const auto state = h.get("/sessions/" + id + "/state");
  CHECK(state["snapshot"] == 0);
  CHECK(state["mics"][0]["m"] == MicParams{}.m);
  CHECK(state["source"]["x"] == 1.0);
}

TEST_CASE("moving the source")
{
  Harness h;
  const std::string id = h.upload(test_source(1000));
  const auto echo = h.patch("/sessions/" + id + "/source", {{"x", 0.0}, {"y", -0.5}});
  CHECK(echo["source"]["y"] == -0.5);
  CHECK(echo["mics"][0]["r"] == 0.5);
  CHECK(echo["mics"][0]["theta_deg"] == doctest::Approx(270.0));
}

TEST_CASE("pattern endpoint")
{
  Harness h;
  const std::string id = h.upload(test_source(1000));
  h.patch("/sessions/" + id + "/mics/0", {{"m", 1.0}});
  const auto omni = h.get("/sessions/" + id + "/pattern?f=1000&angles=36");
  REQUIRE(omni["magnitude"].size() == 36);
  for (const auto& v : omni["magnitude"])
    CHECK(v.get<double>() == 1.0);
  CHECK(omni["snapshot"] == 1);

  h.patch("/sessions/" + id + "/mics/0", {{"m", 0.5}});
  h.patch("/sessions/" + id + "/source", {{"x", 1000.0}, {"y", 0.0}});
  const auto card = h.get("/sessions/" + id + "/pattern?f=50&mode=ideal");
  REQUIRE(card["angles_deg"].size() == 72);
  CHECK(card["mode"] == "ideal");
  CHECK(card["r"] == 1000.0);
  for (std::size_t i = 0; i < 72; ++i)
    CHECK(card["magnitude"][i].get<double>() ==
          doctest::Approx(card["classical"][i].get<double>()).epsilon(0.01).scale(1.0));

  h.get("/sessions/" + id + "/pattern", 400);
  h.get("/sessions/" + id + "/pattern?f=abc", 400);
  h.get("/sessions/" + id + "/pattern?f=100&mode=perfect", 400);
  h.get("/sessions/" + id + "/pattern?f=100&angles=0", 400);
  h.get("/sessions/" + id + "/pattern?f=0", 422);
  h.get("/sessions/" + id + "/pattern?f=30000", 422);
}

TEST_CASE("transport")
{
  Harness h;
  const std::string id = h.upload(test_source(44100));
  auto t = h.transport(id, {{"action", "seek"}, {"position_s", 0.5}});
  CHECK(t["state"] == "paused");
  CHECK(t["block_index"] == 86);
  CHECK(t["position_s"].get<double>() == 86 * 256 / 44100.0);
  t = h.transport(id, {{"action", "seek"}, {"position_s", 5.0}});
  CHECK(t["state"] == "ended");
  t = h.transport(id, {{"action", "seek"}, {"position_s", 0.0}});
  CHECK(t["state"] == "paused");
  h.post("/sessions/" + id + "/transport", {{"action", "rewind"}}, 400);
  h.post("/sessions/" + id + "/transport", {{"action", "seek"}}, 400);
  h.post("/sessions/" + id + "/transport", {{"action", "seek"}, {"position_s", -1}}, 400);
  h.post("/sessions/" + id + "/transport", json::object(), 400);
}

TEST_CASE("a paused session only sends keepalives")
{
  Harness h;
  const std::string id = h.upload(test_source(44100));
  StreamCapture cap(h.service.port(), id);
  CHECK(cap.wait([](const auto& f) { return f.size() >= 4; }));
  for (const auto& f : cap.frames()) {
    CHECK(f.has(frame_keepalive));
    CHECK(f.header.frames == 0);
    CHECK(f.samples.empty());
    CHECK(f.header.channels == 1);
  }
}

TEST_CASE("one second of playback is 173 consecutive blocks")
{
  auto opt = Harness::unpaced();
  opt.queue_capacity = 4096;
  Harness h(opt);
  const std::string id = h.upload(test_source(44100));
  StreamCapture cap(h.service.port(), id);
  REQUIRE(wait_subscribers(h, id, 1));
  h.transport(id, {{"action", "play"}});
  REQUIRE(cap.wait(has_end));
  const auto frames = cap.frames();
  const auto audio = audio_frames(frames);
  REQUIRE(audio.size() == 173);
  for (std::size_t i = 0; i < audio.size(); ++i) {
    CHECK(audio[i].header.block_index == i);
    CHECK(audio[i].header.frames == 256);
    CHECK(audio[i].samples.size() == 256);
    CHECK_FALSE(audio[i].has(frame_crossfade));
  }
  std::size_t ends = 0;
  for (const auto& f : frames) {
    CHECK_FALSE(f.has(frame_gap));
    if (f.has(frame_end)) {
      ++ends;
      CHECK(f.header.block_index == 173);
    }
  }
  CHECK(ends == 1);
  CHECK(h.get("/sessions/" + id + "/state")["transport"]["state"] == "ended");
}

TEST_CASE("streamed blocks equal the offline render")
{
  auto opt = Harness::unpaced();
  opt.queue_capacity = 4096;
  Harness h(opt);
  const auto source = test_source(441000, 3);
  const std::string id = h.upload(source);
  const std::string other = h.upload(test_source(44100, 4));
  StreamCapture cap(h.service.port(), id);
  REQUIRE(wait_subscribers(h, id, 1));
  h.transport(id, {{"action", "play"}});
  // activity on another session must not leak into this one
  h.transport(other, {{"action", "play"}});
  h.patch("/sessions/" + other + "/mics/0", {{"m", 0.1}});
  h.patch("/sessions/" + other + "/source", {{"x", 0.3}, {"y", 0.3}});
  REQUIRE(cap.wait(has_end, 60s));

  Scene scene(44100, {{"mic1", {}, MicParams{}}}, {1.0, 0.0});
  const auto offline = render_file(scene, mono(source));
  std::vector<float> streamed;
  std::uint64_t expect = 0;
  for (const auto& f : audio_frames(cap.frames())) {
    CHECK(f.header.block_index == expect++);
    CHECK(f.header.snapshot == 0);
    streamed.insert(streamed.end(), f.samples.begin(), f.samples.end());
  }
  REQUIRE(streamed.size() >= source.size());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < source.size(); ++i)
    mismatches += streamed[i] != static_cast<float>(offline.samples[i]);
  CHECK(mismatches == 0);
}

TEST_CASE("parameter changes reach the stream within two blocks")
{
  auto opt = Harness::unpaced();
  opt.speed = 1.0;
  Harness h(opt);
  const std::string id = h.upload(test_source(441000));
  StreamCapture cap(h.service.port(), id);
  REQUIRE(wait_subscribers(h, id, 1));
  h.transport(id, {{"action", "play"}});
  REQUIRE(cap.wait([](const auto& f) { return audio_frames(f).size() >= 20; }));

  for (int round = 1; round <= 3; ++round) {
    const auto echo = h.patch("/sessions/" + id + "/mics/0", {{"m", 0.2 * round}});
    const std::uint64_t snapshot = echo["snapshot"];
    const std::uint64_t at_block = echo["transport"]["block_index"];
    CHECK(snapshot == std::uint64_t(round));
    const auto reached = [&](const std::vector<Frame>& frames) {
      for (const auto& f : frames)
        if (f.header.frames > 0 && f.header.snapshot >= snapshot)
          return true;
      return false;
    };
    REQUIRE(cap.wait(reached));
    for (const auto& f : audio_frames(cap.frames()))
      if (f.header.snapshot >= snapshot) {
        CHECK(f.header.block_index <= at_block + 2);
        break;
      }
    std::this_thread::sleep_for(100ms);
  }
  h.transport(id, {{"action", "pause"}});

  // blocks inside a fade are flagged; outside a fade one snapshot per block
  const auto frames = audio_frames(cap.frames());
  std::size_t flagged = 0;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].header.snapshot != frames[i - 1].header.snapshot)
      CHECK(frames[i].has(frame_crossfade));
    flagged += frames[i].has(frame_crossfade);
  }
  CHECK(flagged >= 3);
  CHECK_FALSE(frames.front().has(frame_crossfade));
  CHECK(h.get("/sessions/" + id + "/state")["applied_snapshot"] == 3);
}

TEST_CASE("slow readers get a gap marker instead of stale audio")
{
  auto opt = Harness::unpaced();
  opt.queue_capacity = 2;
  Harness h(opt);
  const std::string id = h.upload(test_source(44100 * 60));
  StreamCapture cap(h.service.port(), id, [](std::size_t chunk) {
    if (chunk < 40)
      std::this_thread::sleep_for(25ms);
  });
  REQUIRE(wait_subscribers(h, id, 1));
  h.transport(id, {{"action", "play"}});
  REQUIRE(cap.wait(has_end, 60s));
  const auto frames = cap.frames();
  std::size_t gaps = 0;
  std::uint64_t next = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (f.has(frame_gap)) {
      ++gaps;
      REQUIRE(i + 1 < frames.size());
      CHECK(frames[i + 1].header.block_index == f.header.block_index);
      CHECK(f.header.block_index > next);
      next = f.header.block_index;
    } else if (f.header.frames > 0) {
      CHECK(f.header.block_index == next);
      ++next;
    }
  }
  CHECK(gaps >= 1);
  CHECK(next == (44100 * 60 + 255) / 256);
}

TEST_CASE("disconnecting a stream removes only that subscriber")
{
  Harness h;
  const std::string id = h.upload(test_source(44100));
  {
    StreamCapture a(h.service.port(), id);
    REQUIRE(wait_subscribers(h, id, 1));
    {
      StreamCapture b(h.service.port(), id);
      REQUIRE(wait_subscribers(h, id, 2));
    }
    CHECK(wait_subscribers(h, id, 1));
    h.transport(id, {{"action", "play"}});
    CHECK(a.wait(has_end));
  }
  CHECK(wait_subscribers(h, id, 0));
}

TEST_CASE("deleting a session ends its streams")
{
  Harness h;
  const std::string id = h.upload(test_source(44100));
  StreamCapture cap(h.service.port(), id);
  REQUIRE(wait_subscribers(h, id, 1));
  auto res = h.client->Delete("/sessions/" + id);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(cap.wait_finished());
  h.get("/sessions/" + id + "/state", 404);
}

TEST_CASE("a second service cannot take a bound port")
{
  Harness h;
  ServiceOptions opt = Harness::unpaced();
  opt.port = h.service.port();
  Service second(opt);
  CHECK_THROWS_AS(second.bind(), IoError);
}
