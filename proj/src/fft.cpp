#include "wdmair/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace wdmair::fft {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface
// is. Plans are created with FFTW_ESTIMATE, which leaves the data untouched
// and picks the same algorithm in every process, so results are bit-stable.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::span<Complex> data, int sign) {
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    const auto key = std::make_tuple(data.size(), sign, fftw_alignment_of(reinterpret_cast<double*>(ptr)));
    std::lock_guard lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(data.size()), ptr, ptr, sign, FFTW_ESTIMATE);
    if (plan == nullptr) throw Error("fft: planner failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(std::span<Complex> data, int sign) {
  if (data.empty()) return;
  fftw_plan plan = cache().get(data, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

}  // namespace

void forward(std::span<Complex> data) { execute(data, FFTW_FORWARD); }

void inverse(std::span<Complex> data) {
  execute(data, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

double bin_frequency(std::size_t m, std::size_t n, double sample_rate) {
  const double signed_bin = m < (n + 1) / 2 ? static_cast<double>(m)
                                             : static_cast<double>(m) - static_cast<double>(n);
  return signed_bin * sample_rate / static_cast<double>(n);
}

std::size_t wrap_bin(long long signed_bin, std::size_t n) {
  const auto nn = static_cast<long long>(n);
  long long r = signed_bin % nn;
  if (r < 0) r += nn;
  return static_cast<std::size_t>(r);
}

}  // namespace wdmair::fft
