#ifndef NLPN_PARALLEL_HPP
#define NLPN_PARALLEL_HPP

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace nlpn {

/// Fixed partition of [0, n) into chunks of `chunk` items. Chunk boundaries
/// depend only on (n, chunk), never on the worker count.
struct ChunkPlan {
  std::uint64_t n = 0;
  std::uint64_t chunk = 1 << 14;

  std::uint64_t chunks() const noexcept { return chunk == 0 ? 0 : (n + chunk - 1) / chunk; }
  std::uint64_t begin(std::uint64_t c) const noexcept { return c * chunk; }
  std::uint64_t end(std::uint64_t c) const noexcept { return std::min(n, (c + 1) * chunk); }
};

/// Evaluates `work(chunk_index)` on up to `threads` workers and folds the
/// results with `fold(result)` strictly in chunk order. `fold` returns false to
/// stop early; chunks past the stopping point are discarded, so the folded
/// value is identical for every thread count.
template <typename Result>
void ordered_chunks(std::uint64_t chunks, int threads,
                    const std::function<Result(std::uint64_t)>& work,
                    const std::function<bool(Result&&)>& fold) {
  if (chunks == 0) return;
  threads = std::max(1, threads);
  if (threads == 1) {
    for (std::uint64_t c = 0; c < chunks; ++c)
      if (!fold(work(c))) return;
    return;
  }

  std::mutex mutex;
  std::condition_variable cv;
  std::map<std::uint64_t, Result> ready;
  std::uint64_t next_issue = 0;
  std::uint64_t next_fold = 0;
  bool stop = false;
  std::exception_ptr error;
  // Bound the number of unfolded results held in memory.
  const std::uint64_t window = static_cast<std::uint64_t>(threads) * 2;

  auto worker = [&] {
    for (;;) {
      std::uint64_t c;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return stop || next_issue >= chunks || next_issue < next_fold + window; });
        if (stop || next_issue >= chunks) return;
        c = next_issue++;
      }
      std::optional<Result> r;
      try {
        r.emplace(work(c));
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        stop = true;
        cv.notify_all();
        return;
      }
      std::unique_lock lock(mutex);
      ready.emplace(c, std::move(*r));
      while (!stop) {
        auto it = ready.find(next_fold);
        if (it == ready.end()) break;
        Result value = std::move(it->second);
        ready.erase(it);
        ++next_fold;
        bool more = true;
        try {
          more = fold(std::move(value));
        } catch (...) {
          if (!error) error = std::current_exception();
          more = false;
        }
        if (!more || next_fold >= chunks) stop = true;
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace nlpn

#endif  // NLPN_PARALLEL_HPP
