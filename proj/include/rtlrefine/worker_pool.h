// Copyright 2026 The rtlrefine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RTLREFINE_WORKER_POOL_H_
#define RTLREFINE_WORKER_POOL_H_

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace rtlrefine {

// Counting semaphore sized at runtime.
class Semaphore {
 public:
  explicit Semaphore(int count) : count_(std::max(count, 1)) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++count_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int count_;
};

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(Semaphore& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  Semaphore& s_;
};

// Runs work(i) for i in [0, n) on `jobs` threads and hands each result to
// commit(i, result) on the calling thread in strictly increasing i. When
// `stop` becomes true no new items are started; already started items still
// commit if they form a prefix. Returns the number of committed items. The
// first exception thrown by work or commit is rethrown after the workers
// drain.
template <typename T>
std::size_t run_ordered(std::size_t n, int jobs, const std::function<T(std::size_t)>& work,
                        const std::function<void(std::size_t, T&)>& commit,
                        const std::atomic<bool>* stop = nullptr) {
  auto stopped = [&] { return stop != nullptr && stop->load(); };
  if (jobs <= 1 || n <= 1) {
    std::size_t i = 0;
    for (; i < n && !stopped(); ++i) {
      T result = work(i);
      commit(i, result);
    }
    return i;
  }

  std::vector<std::optional<T>> slots(n);
  std::vector<char> finished(n, 0);
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::condition_variable cv;
  std::exception_ptr error;
  std::size_t started_limit = n;  // items >= this were never started

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      if (stopped()) {
        std::lock_guard lock(mu);
        started_limit = std::min(started_limit, i);
        cv.notify_all();
        return;
      }
      {
        std::lock_guard lock(mu);
        if (error) {
          started_limit = std::min(started_limit, i);
          cv.notify_all();
          return;
        }
      }
      try {
        T result = work(i);
        std::lock_guard lock(mu);
        slots[i].emplace(std::move(result));
        finished[i] = 1;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        finished[i] = 1;
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  const int count = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), n));
  threads.reserve(count);
  for (int t = 0; t < count; ++t) threads.emplace_back(worker);

  std::size_t committed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return finished[i] || i >= started_limit || error; });
    if (error || !finished[i] || !slots[i]) break;
    T result = std::move(*slots[i]);
    slots[i].reset();
    lock.unlock();
    try {
      commit(i, result);
    } catch (...) {
      std::lock_guard relock(mu);
      if (!error) error = std::current_exception();
      break;
    }
    ++committed;
  }
  // Workers still running finish their current item and exit.
  next.store(n);
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
  return committed;
}

}  // namespace rtlrefine

#endif  // RTLREFINE_WORKER_POOL_H_
