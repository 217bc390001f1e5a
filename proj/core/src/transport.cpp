#include "crossway/transport.hpp"

#include <chrono>
#include <cmath>

#include "crossway/errors.hpp"

namespace crossway {

void validate(const latency_model& model) {
  if (model.reorder_probability < 0.0 || model.reorder_probability >= 1.0) {
    throw validation_error("network.reorder_p", "must lie in [0, 1)");
  }
  switch (model.distribution) {
    case delay_distribution::constant:
      if (!(model.mean_ms >= 0.0)) {
        throw validation_error("network.mean_ms", "must be >= 0");
      }
      break;
    case delay_distribution::normal:
      if (!(model.mean_ms >= 0.0)) {
        throw validation_error("network.mean_ms", "must be >= 0");
      }
      if (!(model.std_ms >= 0.0)) {
        throw validation_error("network.std_ms", "must be >= 0");
      }
      break;
    case delay_distribution::lognormal:
      if (!(model.sigma >= 0.0)) {
        throw validation_error("network.sigma", "must be >= 0");
      }
      break;
  }
}

double sample_delay_ms(const latency_model& model, det_rng& rng) {
  double d = 0.0;
  switch (model.distribution) {
    case delay_distribution::constant:
      d = model.mean_ms;
      break;
    case delay_distribution::normal:
      d = rng.normal(model.mean_ms, model.std_ms);
      break;
    case delay_distribution::lognormal:
      d = rng.lognormal(model.mu, model.sigma);
      break;
  }
  return d < 0.0 ? 0.0 : d;
}

void virtual_clock::schedule(std::int64_t due_us, int event_class,
                             std::uint64_t stream, std::uint64_t seq,
                             std::function<void()> fn) {
  if (due_us < now_us_) due_us = now_us_;
  events_.emplace(key_t{due_us, event_class, stream, seq, insert_counter_++},
                  std::move(fn));
}

bool virtual_clock::step() {
  if (events_.empty()) return false;
  auto node = events_.extract(events_.begin());
  now_us_ = std::get<0>(node.key());
  node.mapped()();
  return true;
}

void virtual_clock::run_until(std::int64_t t_us) {
  while (!events_.empty() && std::get<0>(events_.begin()->first) <= t_us) {
    step();
  }
  if (t_us > now_us_) now_us_ = t_us;
}

thread_scheduler::thread_scheduler() : worker_([this] { run(); }) {}

thread_scheduler::~thread_scheduler() { stop(); }

std::int64_t thread_scheduler::now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void thread_scheduler::call_at(std::int64_t due_us, std::uint64_t stream,
                               std::uint64_t seq, std::function<void()> fn) {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    events_.emplace(key_t{due_us, stream, seq, insert_counter_++},
                    std::move(fn));
  }
  cv_.notify_one();
}

void thread_scheduler::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_one();
  if (worker_.joinable()) worker_.join();
}

void thread_scheduler::run() {
  std::unique_lock lock(mu_);
  while (!stopping_) {
    if (events_.empty()) {
      cv_.wait(lock, [this] { return stopping_ || !events_.empty(); });
      continue;
    }
    const std::int64_t due = std::get<0>(events_.begin()->first);
    const std::int64_t now = now_us();
    if (now < due) {
      cv_.wait_for(lock, std::chrono::microseconds(due - now));
      continue;
    }
    auto node = events_.extract(events_.begin());
    lock.unlock();
    node.mapped()();
    lock.lock();
  }
}

namespace {

// Shared state of one simulated bidirectional link.
struct sim_link_state {
  virtual_clock* clock = nullptr;
  latency_model model;
};

class sim_endpoint final : public transport_endpoint,
                           public std::enable_shared_from_this<sim_endpoint> {
 public:
  sim_endpoint(virtual_clock& clock, const latency_model& model,
               std::uint64_t stream_id)
      : clock_(clock),
        model_(model),
        stream_id_(stream_id),
        rng_(mix_seed(model.seed, stream_id)) {}

  void wire(std::shared_ptr<sim_endpoint> peer) { peer_ = std::move(peer); }

  void send(std::string frame) override {
    auto peer = peer_.lock();
    if (!open_ || !peer) return;
    const double delay_ms = sample_delay_ms(model_, rng_);
    std::int64_t due =
        clock_.now_us() + static_cast<std::int64_t>(std::llround(delay_ms * 1000.0));
    if (due < last_due_us_) {
      // A jitter inversion would overtake the previous frame. A byte stream
      // forbids that, so by default the frame queues behind its predecessor;
      // with reorder enabled the inversion is allowed to stand.
      const bool allow_swap = model_.reorder_probability > 0.0 &&
                              rng_.uniform01() < model_.reorder_probability;
      if (!allow_swap) due = last_due_us_;
    }
    last_due_us_ = std::max(last_due_us_, due);
    clock_.schedule(
        due, virtual_clock::kDeliveryClass, stream_id_, send_seq_++,
        [peer, frame = std::move(frame)] { peer->deliver(frame); });
  }

  void set_on_message(std::function<void(const std::string&)> cb) override {
    on_message_ = std::move(cb);
  }

  void set_on_disconnect(std::function<void()> cb) override {
    on_disconnect_ = std::move(cb);
  }

  void close() override {
    if (!open_) return;
    open_ = false;
    if (auto peer = peer_.lock()) {
      clock_.schedule(clock_.now_us(), virtual_clock::kDeliveryClass,
                      stream_id_, send_seq_++,
                      [peer] { peer->peer_closed(); });
    }
  }

  bool connected() const override { return open_; }

 private:
  void deliver(const std::string& frame) {
    if (open_ && on_message_) on_message_(frame);
  }

  void peer_closed() {
    if (!open_) return;
    open_ = false;
    if (on_disconnect_) on_disconnect_();
  }

  virtual_clock& clock_;
  latency_model model_;
  std::uint64_t stream_id_;
  det_rng rng_;
  std::weak_ptr<sim_endpoint> peer_;
  std::function<void(const std::string&)> on_message_;
  std::function<void()> on_disconnect_;
  bool open_ = true;
  std::uint64_t send_seq_ = 0;
  std::int64_t last_due_us_ = 0;
};

}  // namespace

std::pair<std::shared_ptr<transport_endpoint>,
          std::shared_ptr<transport_endpoint>>
simulated_link(const latency_model& model, virtual_clock& clock) {
  validate(model);
  auto a = std::make_shared<sim_endpoint>(clock, model,
                                          clock.allocate_stream());
  auto b = std::make_shared<sim_endpoint>(clock, model,
                                          clock.allocate_stream());
  a->wire(b);
  b->wire(a);
  return {a, b};
}

}  // namespace crossway
