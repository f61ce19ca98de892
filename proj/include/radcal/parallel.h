#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace radcal {

// Runs data-parallel loops. Work is split into fixed chunks that depend only
// on the range and the grain, never on the worker count, so reductions that
// combine per-chunk partials in chunk order give identical results for any
// pool size.
class Executor {
 public:
  using RangeFn = std::function<void(std::size_t begin, std::size_t end)>;

  virtual ~Executor() = default;
  virtual std::size_t workers() const = 0;

  // Calls fn on consecutive sub-ranges of [begin, end) of at most `grain`
  // elements. Returns after every call has finished; the first exception
  // thrown by fn is rethrown.
  virtual void ForRange(std::size_t begin, std::size_t end, std::size_t grain,
                        const RangeFn& fn) = 0;

  // Number of chunks ForRange would create.
  static std::size_t ChunkCount(std::size_t begin, std::size_t end, std::size_t grain);
};

// Runs everything on the calling thread.
class SerialExecutor final : public Executor {
 public:
  std::size_t workers() const override { return 1; }
  void ForRange(std::size_t begin, std::size_t end, std::size_t grain,
                const RangeFn& fn) override;
};

// Fixed-size pool of worker threads. The calling thread participates, so a
// pool of size 1 spawns no threads.
class ThreadPool final : public Executor {
 public:
  explicit ThreadPool(std::size_t workers);
  ~ThreadPool() override;

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t workers() const override { return threads_.size() + 1; }
  void ForRange(std::size_t begin, std::size_t end, std::size_t grain,
                const RangeFn& fn) override;

 private:
  struct Job;
  void WorkerLoop();
  static void RunChunks(Job& job);

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  Job* job_ = nullptr;
  std::size_t generation_ = 0;
  std::size_t active_ = 0;
  bool stopping_ = false;
};

// Shared single-threaded executor for callers that do not care.
Executor& Serial();

std::size_t DefaultWorkerCount();

}  // namespace radcal
