#include "nelson/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace nelson {

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// FFTW's planner is not thread-safe; executing an existing plan on new
// arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<Complex> scratch_in(n), scratch_out(n);
  auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
  auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.forward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, flags);
  p.backward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_BACKWARD, flags);
  return cache.emplace(n, p).first->second;
}

void execute(fftw_plan plan, std::span<const Complex> in, std::vector<Complex>& out) {
  // Plans were made out-of-place, so the input is never written.
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data()));
  fftw_execute_dft(plan, src, reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace

Spectral::Spectral(const Grid1D& grid) : grid_(grid), k_(grid.size()) {
  const std::size_t n = grid.size();
  const double dk = 2.0 * std::numbers::pi / grid.length();
  for (std::size_t j = 0; j < n; ++j) {
    const auto s = static_cast<double>(j < n / 2 ? static_cast<std::ptrdiff_t>(j)
                                                 : static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(n));
    k_[j] = dk * s;
  }
  plans_for(n);
}

std::vector<Complex> Spectral::forward(std::span<const Complex> values) const {
  std::vector<Complex> out(values.size());
  execute(plans_for(grid_.size()).forward, values, out);
  return out;
}

std::vector<Complex> Spectral::inverse(std::span<const Complex> spectrum) const {
  std::vector<Complex> out(spectrum.size());
  execute(plans_for(grid_.size()).backward, spectrum, out);
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<Complex> Spectral::derivative(std::span<const Complex> values, int order) const {
  auto spec = forward(values);
  const std::size_t n = grid_.size();
  for (std::size_t j = 0; j < n; ++j) {
    const Complex ik{0.0, k_[j]};
    Complex f{1.0, 0.0};
    for (int p = 0; p < order; ++p) f *= ik;
    spec[j] *= f;
  }
  if (order % 2 == 1) spec[n / 2] = 0.0;
  return inverse(spec);
}

double Spectral::top_octave_fraction(std::span<const Complex> values) const {
  const auto spec = forward(values);
  const double k_cut = 0.5 * std::numbers::pi / grid_.dx();
  double total = 0.0, top = 0.0;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const double p = std::norm(spec[j]);
    total += p;
    if (std::abs(k_[j]) > k_cut) top += p;
  }
  return total > 0.0 ? top / total : 0.0;
}

}  // namespace nelson
