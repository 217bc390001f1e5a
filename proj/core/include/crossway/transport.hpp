#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "crossway/rng.hpp"

namespace crossway {

// Reliable, message-framed, bidirectional channel. Implementations deliver
// each sent frame exactly once (no loss, no duplication) and invoke at most
// one callback at a time per endpoint. Callbacks must be installed before
// start().
class transport_endpoint {
 public:
  virtual ~transport_endpoint() = default;
  virtual void send(std::string frame) = 0;
  virtual void set_on_message(std::function<void(const std::string&)> cb) = 0;
  virtual void set_on_disconnect(std::function<void()> cb) = 0;
  virtual void start() {}
  virtual void close() = 0;
  virtual bool connected() const = 0;
};

enum class delay_distribution { constant, normal, lognormal };

// One-way delay model for a simulated link direction. Sampled delays are
// clamped at zero; everything is deterministic given the seed.
struct latency_model {
  delay_distribution distribution = delay_distribution::constant;
  double mean_ms = 0.0;  // constant / normal
  double std_ms = 0.0;   // normal
  double mu = 0.0;       // lognormal, log space
  double sigma = 0.0;
  double reorder_probability = 0.0;  // [0, 1)
  std::uint64_t seed = 0;
};

void validate(const latency_model& model);
double sample_delay_ms(const latency_model& model, det_rng& rng);

// Discrete-event clock. Events fire in (due time, class, stream, sequence,
// insertion order) order; class 0 is reserved for message deliveries and
// class 1 for timers, so a frame arriving exactly on a timer edge is visible
// to that timer's callback.
class virtual_clock {
 public:
  static constexpr int kDeliveryClass = 0;
  static constexpr int kTimerClass = 1;

  explicit virtual_clock(std::int64_t start_us = 0) : now_us_(start_us) {}

  std::int64_t now_us() const { return now_us_; }

  void schedule(std::int64_t due_us, int event_class, std::uint64_t stream,
                std::uint64_t seq, std::function<void()> fn);

  // Fires the earliest pending event; false when none remain.
  bool step();

  // Fires every event due at or before t_us, then sets now to t_us.
  void run_until(std::int64_t t_us);

  bool empty() const { return events_.empty(); }

  // Sequential stream ids for links/timers created under this clock. Tying
  // the counter to the clock keeps repeated runs bit-identical.
  std::uint64_t allocate_stream() { return stream_counter_++; }

 private:
  using key_t = std::tuple<std::int64_t, int, std::uint64_t, std::uint64_t,
                           std::uint64_t>;
  std::int64_t now_us_;
  std::uint64_t insert_counter_ = 0;
  std::uint64_t stream_counter_ = 1;
  std::map<key_t, std::function<void()>> events_;
};

// Timer interface shared by the simulated and live stacks. `stream`/`seq`
// only break ties between events due at the same instant.
class scheduler {
 public:
  virtual ~scheduler() = default;
  virtual std::int64_t now_us() = 0;
  virtual void call_at(std::int64_t due_us, std::uint64_t stream,
                       std::uint64_t seq, std::function<void()> fn) = 0;
};

class virtual_scheduler final : public scheduler {
 public:
  explicit virtual_scheduler(virtual_clock& clock) : clock_(clock) {}
  std::int64_t now_us() override { return clock_.now_us(); }
  void call_at(std::int64_t due_us, std::uint64_t stream, std::uint64_t seq,
               std::function<void()> fn) override {
    clock_.schedule(due_us, virtual_clock::kTimerClass, stream, seq,
                    std::move(fn));
  }

 private:
  virtual_clock& clock_;
};

// Real-time scheduler: one worker thread draining a deadline queue. now_us
// is CLOCK_MONOTONIC, so timestamps are comparable across processes on the
// same host.
class thread_scheduler final : public scheduler {
 public:
  thread_scheduler();
  ~thread_scheduler() override;

  std::int64_t now_us() override;
  void call_at(std::int64_t due_us, std::uint64_t stream, std::uint64_t seq,
               std::function<void()> fn) override;
  void stop();

 private:
  void run();

  using key_t = std::tuple<std::int64_t, std::uint64_t, std::uint64_t,
                           std::uint64_t>;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<key_t, std::function<void()>> events_;
  std::uint64_t insert_counter_ = 0;
  bool stopping_ = false;
  std::thread worker_;
};

// In-process link pair under a virtual clock. Frames sent on one endpoint
// arrive at the other after a sampled one-way delay; each direction has its
// own deterministic delay stream. Without reordering the link preserves send
// order (a delayed frame holds back its successors, as on a byte stream);
// with reorder_probability > 0 an inverted delay sample may overtake the
// previous frame instead.
std::pair<std::shared_ptr<transport_endpoint>,
          std::shared_ptr<transport_endpoint>>
simulated_link(const latency_model& model, virtual_clock& clock);

}  // namespace crossway
