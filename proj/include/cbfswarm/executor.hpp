#ifndef CBFSWARM_EXECUTOR_HPP
#define CBFSWARM_EXECUTOR_HPP

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cbfswarm {

/// Fixed pool that runs fn(i) for i in [0, n). Work is split by stride, so each
/// index is handled by exactly one thread and results do not depend on the
/// thread count as long as fn(i) only writes slot i.
class AgentExecutor {
 public:
  explicit AgentExecutor(std::size_t threads = 1);
  ~AgentExecutor();
  AgentExecutor(const AgentExecutor&) = delete;
  AgentExecutor& operator=(const AgentExecutor&) = delete;

  std::size_t threads() const { return nthreads_; }
  void run(std::size_t n, const std::function<void(std::size_t)>& fn);

  /// Thread count from CBFSWARM_THREADS, default 1.
  static std::size_t threads_from_env();

 private:
  void worker(std::size_t slot);

  std::size_t nthreads_ = 1;
  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t job_n_ = 0;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stop_ = false;
};

}  // namespace cbfswarm

#endif  // CBFSWARM_EXECUTOR_HPP
