#ifndef LOGITMC_PARALLEL_HPP_
#define LOGITMC_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace logitmc {

// Rows are reduced in fixed-size blocks. The block decomposition depends only
// on the row count, never on the worker count, and block partial sums are
// added in ascending block order. That makes every reduction bitwise
// reproducible for any number of workers.
inline constexpr std::size_t kReductionBlock = 4096;

inline std::size_t block_count(std::size_t rows) {
  return (rows + kReductionBlock - 1) / kReductionBlock;
}

// Persistent pool of `workers - 1` helper threads; the calling thread is the
// last worker. One parallel_for runs at a time per pool.
class WorkerPool {
public:
  explicit WorkerPool(std::size_t workers = 1) : workers_(std::max<std::size_t>(1, workers)) {
    for (std::size_t i = 1; i < workers_; ++i) threads_.emplace_back([this] { loop(); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  std::size_t workers() const noexcept { return workers_; }

  // Calls body(i) for every i in [0, tasks). The first exception (lowest task
  // index) is rethrown on the calling thread.
  void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& body) {
    if (tasks == 0) return;
    if (workers_ == 1 || tasks == 1) {
      for (std::size_t i = 0; i < tasks; ++i) body(i);
      return;
    }
    std::unique_lock<std::mutex> run_lock(run_mutex_);
    errors_.assign(tasks, nullptr);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      body_ = &body;
      tasks_ = tasks;
      next_.store(0);
      active_ = threads_.size();
      ++generation_;
    }
    wake_.notify_all();
    drain();
    {
      std::unique_lock<std::mutex> lock(mutex_);
      done_.wait(lock, [this] { return active_ == 0; });
      body_ = nullptr;
    }
    for (auto& e : errors_)
      if (e) std::rethrow_exception(e);
  }

private:
  void drain() {
    for (;;) {
      const std::size_t i = next_.fetch_add(1);
      if (i >= tasks_) return;
      try {
        (*body_)(i);
      } catch (...) {
        errors_[i] = std::current_exception();
      }
    }
  }

  void loop() {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(mutex_);
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      drain();
      {
        std::lock_guard<std::mutex> lock(mutex_);
        if (--active_ == 0) done_.notify_one();
      }
    }
  }

  std::size_t workers_;
  std::vector<std::thread> threads_;
  std::mutex run_mutex_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* body_ = nullptr;
  std::size_t tasks_ = 0;
  std::atomic<std::size_t> next_{0};
  std::size_t active_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::vector<std::exception_ptr> errors_;
};

// Sum of block_sum(b) over blocks b in [0, blocks), combined in ascending order.
template <class BlockSum>
double ordered_block_reduce(std::size_t blocks, BlockSum&& block_sum, WorkerPool* pool) {
  if (blocks == 0) return 0.0;
  if (pool == nullptr || pool->workers() == 1 || blocks == 1) {
    double total = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) total += block_sum(b);
    return total;
  }
  std::vector<double> partial(blocks, 0.0);
  pool->parallel_for(blocks, [&](std::size_t b) { partial[b] = block_sum(b); });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

}  // namespace logitmc

#endif  // LOGITMC_PARALLEL_HPP_
