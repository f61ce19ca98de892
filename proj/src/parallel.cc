#include "radcal/parallel.h"

#include <algorithm>
#include <atomic>
#include <exception>

namespace radcal {

std::size_t Executor::ChunkCount(std::size_t begin, std::size_t end, std::size_t grain) {
  if (end <= begin) return 0;
  grain = std::max<std::size_t>(grain, 1);
  return (end - begin + grain - 1) / grain;
}

void SerialExecutor::ForRange(std::size_t begin, std::size_t end, std::size_t grain,
                              const RangeFn& fn) {
  grain = std::max<std::size_t>(grain, 1);
  for (std::size_t lo = begin; lo < end; lo += grain) fn(lo, std::min(end, lo + grain));
}

struct ThreadPool::Job {
  std::size_t begin;
  std::size_t end;
  std::size_t grain;
  const RangeFn* fn;
  std::atomic<std::size_t> next{0};
  std::size_t chunks;
  std::mutex error_mutex;
  std::exception_ptr error;
};

ThreadPool::ThreadPool(std::size_t workers) {
  workers = std::max<std::size_t>(workers, 1);
  threads_.reserve(workers - 1);
  for (std::size_t i = 1; i < workers; ++i) threads_.emplace_back([this] { WorkerLoop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::RunChunks(Job& job) {
  for (;;) {
    const std::size_t chunk = job.next.fetch_add(1);
    if (chunk >= job.chunks) return;
    const std::size_t lo = job.begin + chunk * job.grain;
    const std::size_t hi = std::min(job.end, lo + job.grain);
    try {
      (*job.fn)(lo, hi);
    } catch (...) {
      std::lock_guard lock(job.error_mutex);
      if (!job.error) job.error = std::current_exception();
      job.next.store(job.chunks);
    }
  }
}

void ThreadPool::WorkerLoop() {
  std::size_t seen = 0;
  for (;;) {
    Job* job = nullptr;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) return;
      seen = generation_;
      job = job_;
      // The job may already have completed without this worker.
      if (job == nullptr) continue;
      ++active_;
    }
    RunChunks(*job);
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    done_.notify_all();
  }
}

void ThreadPool::ForRange(std::size_t begin, std::size_t end, std::size_t grain,
                          const RangeFn& fn) {
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t chunks = ChunkCount(begin, end, grain);
  if (chunks == 0) return;
  if (threads_.empty() || chunks == 1) {
    SerialExecutor().ForRange(begin, end, grain, fn);
    return;
  }
  Job job;
  job.begin = begin;
  job.end = end;
  job.grain = grain;
  job.fn = &fn;
  job.chunks = chunks;
  {
    std::lock_guard lock(mutex_);
    job_ = &job;
    ++generation_;
  }
  wake_.notify_all();
  RunChunks(job);
  {
    // Workers that woke up hold a pointer to `job`; wait for all of them.
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return active_ == 0; });
    job_ = nullptr;
  }
  if (job.error) std::rethrow_exception(job.error);
}

Executor& Serial() {
  static SerialExecutor serial;
  return serial;
}

std::size_t DefaultWorkerCount() {
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace radcal
