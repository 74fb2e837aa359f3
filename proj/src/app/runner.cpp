#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "safecomp/app.hpp"
#include "safecomp/error.hpp"
#include "safecomp/rng.hpp"

namespace safecomp {

std::vector<RegionVerification> run_parallel_verification(const Network& net, std::span<const Region> regions,
                                                          const VerifierOptions& options, std::size_t workers,
                                                          std::uint64_t seed) {
  if (workers == 0) throw Error("workers must be at least 1");
  std::vector<const Region*> tasks;
  std::set<std::string> ids;
  for (const auto& r : regions) {
    if (!ids.insert(r.id).second) throw Error("duplicate region id '" + r.id + "'");
    tasks.push_back(&r);
  }
  std::sort(tasks.begin(), tasks.end(), [](const Region* a, const Region* b) { return a->id < b->id; });

  std::vector<std::optional<FullVerification>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        VerifierOptions opt = options;
        opt.seed = mix_seed(seed, fnv1a(tasks[i]->id));
        slots[i] = verify_full(net, *tasks[i], opt);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(tasks.size());
      }
    }
  };

  const std::size_t n = std::min(workers, std::max<std::size_t>(tasks.size(), 1));
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RegionVerification> out;
  out.reserve(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) out.push_back({*tasks[i], std::move(*slots[i])});
  return out;
}

} // namespace safecomp
