#include "cbfswarm/executor.hpp"

#include <cstdlib>
#include <string>

namespace cbfswarm {

AgentExecutor::AgentExecutor(std::size_t threads) {
  if (threads == 0) threads = 1;
  nthreads_ = threads;
  for (std::size_t s = 1; s < threads; ++s) workers_.emplace_back([this, s] { worker(s); });
}

AgentExecutor::~AgentExecutor() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto& w : workers_) w.join();
}

void AgentExecutor::run(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (workers_.empty() || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    job_ = &fn;
    job_n_ = n;
    pending_ = workers_.size();
    ++generation_;
  }
  start_cv_.notify_all();
  const std::size_t stride = threads();
  for (std::size_t i = 0; i < n; i += stride) fn(i);
  std::unique_lock lock(mutex_);
  done_cv_.wait(lock, [this] { return pending_ == 0; });
  job_ = nullptr;
}

void AgentExecutor::worker(std::size_t slot) {
  std::size_t seen = 0;
  while (true) {
    const std::function<void(std::size_t)>* job;
    std::size_t n;
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
      n = job_n_;
    }
    const std::size_t stride = threads();
    for (std::size_t i = slot; i < n; i += stride) (*job)(i);
    {
      std::lock_guard lock(mutex_);
      --pending_;
    }
    done_cv_.notify_one();
  }
}

std::size_t AgentExecutor::threads_from_env() {
  const char* v = std::getenv("CBFSWARM_THREADS");
  if (!v || !*v) return 1;
  try {
    const long n = std::stol(v);
    return n > 0 ? static_cast<std::size_t>(n) : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace cbfswarm
