#include "mfnls/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace mfnls::fft {
namespace {

using Key = std::tuple<std::size_t, std::size_t, std::size_t, int>;

// The FFTW planner is not reentrant; execution of an existing plan is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t m, std::size_t particles, std::size_t axis, int sign, cplx* data) {
    const Key key{m, particles, axis, sign};
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const std::size_t slot = m * m;
    std::size_t inner = 1;
    for (std::size_t j = axis + 1; j < particles; ++j) inner *= slot;
    std::size_t outer = 1;
    for (std::size_t j = 0; j < axis; ++j) outer *= slot;

    const auto n = static_cast<ptrdiff_t>(m);
    const auto in = static_cast<ptrdiff_t>(inner);
    fftw_iodim64 dims[2] = {{n, n * in, n * in}, {n, in, in}};
    fftw_iodim64 loops[2] = {
        {static_cast<ptrdiff_t>(outer), static_cast<ptrdiff_t>(slot) * in,
         static_cast<ptrdiff_t>(slot) * in},
        {in, 1, 1},
    };
    auto* p = reinterpret_cast<fftw_complex*>(data);
    // FFTW_ESTIMATE never touches the arrays while planning, so the caller's
    // buffer can serve as the planning buffer.
    fftw_plan plan = fftw_plan_guru64_dft(2, dims, 2, loops, p, p, sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw NumericError("fft: planner failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void run(std::span<cplx> data, std::size_t m, std::size_t particles, std::size_t axis,
         Direction dir) {
  const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan plan = cache().get(m, particles, axis, sign, data.data());
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
  const double scale = 1.0 / static_cast<double>(m);
  for (auto& v : data) v *= scale;
}

}  // namespace

void transform_2d(std::span<cplx> data, std::size_t m, Direction dir) {
  if (data.size() != m * m) throw ValidationError("fft: array size is not M*M");
  run(data, m, 1, 0, dir);
}

void transform_axis(std::span<cplx> data, std::size_t m, std::size_t particles,
                    std::size_t axis, Direction dir) {
  std::size_t expected = 1;
  for (std::size_t j = 0; j < particles; ++j) expected *= m * m;
  if (data.size() != expected) throw ValidationError("fft: tensor size mismatch");
  if (axis >= particles) throw ValidationError("fft: axis out of range");
  run(data, m, particles, axis, dir);
}

}  // namespace mfnls::fft
