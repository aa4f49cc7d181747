#include "scl/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace scl {

int worker_count() {
  static const int n = [] {
    if (const char* env = std::getenv("SCL_THREADS")) {
      const int v = std::atoi(env);
      if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return n;
}

namespace {

class Pool {
public:
  Pool() {
    const int n = worker_count() - 1;  // caller participates
    for (int i = 0; i < n; ++i) workers_.emplace_back([this] { worker_loop(); });
  }

  ~Pool() {
    {
      std::lock_guard lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  void run(int n_shards, const std::function<void(int)>& fn) {
    if (n_shards <= 0) return;
    if (workers_.empty() || n_shards == 1) {
      for (int s = 0; s < n_shards; ++s) fn(s);
      return;
    }
    {
      std::lock_guard lk(mu_);
      fn_ = &fn;
      next_ = 0;
      limit_ = n_shards;
      pending_ = n_shards;
      ++generation_;
    }
    cv_.notify_all();
    drain();
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    fn_ = nullptr;
  }

private:
  void drain() {
    while (true) {
      const int s = next_.fetch_add(1);
      if (s >= limit_) break;
      (*fn_)(s);
      if (pending_.fetch_sub(1) == 1) done_cv_.notify_all();
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    while (true) {
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      drain();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  const std::function<void(int)>* fn_ = nullptr;
  std::atomic<int> next_{0};
  int limit_ = 0;
  std::atomic<int> pending_{0};
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace

void parallel_shards(int n_shards, const std::function<void(int)>& fn) {
  static Pool pool;
  pool.run(n_shards, fn);
}

}  // namespace scl
