#include "nelson/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "nelson/error.hpp"

namespace nelson {

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned w = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < w; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

CubicWeights cubic_weights(const Grid1D& grid, double x) {
  const double s = (x - grid.x_min()) / grid.dx();
  const double last = static_cast<double>(grid.size() - 1);
  if (!(s >= 0.0 && s <= last)) {
    throw Error(ErrorCode::interpolation_out_of_range, "interpolation point outside grid");
  }
  const std::size_t n = grid.size();
  const std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(s), 1, n - 3);
  const double f = s - static_cast<double>(i);
  const double f2 = f * f, f3 = f2 * f;
  CubicWeights cw;
  cw.i0 = i - 1;
  cw.w[0] = 0.5 * (-f + 2.0 * f2 - f3);
  cw.w[1] = 0.5 * (2.0 - 5.0 * f2 + 3.0 * f3);
  cw.w[2] = 0.5 * (f + 4.0 * f2 - 3.0 * f3);
  cw.w[3] = 0.5 * (f3 - f2);
  return cw;
}

double cubic_at(const Grid1D& grid, std::span<const double> v, double x) {
  return cubic_weights(grid, x).apply(v);
}

std::size_t TimeTable::row_index(double t) const {
  const double j = (t - t0) / dt;
  const double jr = std::round(j);
  if (rows.empty() || std::abs(j - jr) > 1e-6 || jr < 0.0 ||
      jr >= static_cast<double>(rows.size())) {
    throw Error(ErrorCode::out_of_range, "time not covered by table");
  }
  return static_cast<std::size_t>(jr);
}

CubicInterpolator::CubicInterpolator(const Grid1D& grid, std::span<const double> values)
    : grid_(grid), v_(values.begin(), values.end()) {
  if (v_.size() != grid.size()) throw Error(ErrorCode::invalid_argument, "interpolator size mismatch");
}

double CubicInterpolator::operator()(double x) const { return cubic_at(grid_, v_, x); }

bool CubicInterpolator::contains(double x) const noexcept {
  return x >= grid_.x_min() && x <= grid_.x(grid_.size() - 1);
}

}  // namespace nelson
