#pragma once

#include <complex>
#include <span>
#include <vector>

#include "nelson/grid.hpp"

namespace nelson {

using Complex = std::complex<double>;

/// In-place style FFT helpers over a fixed-size periodic grid. Plans are
/// cached per size and shared; execution is reentrant.
class Spectral {
 public:
  explicit Spectral(const Grid1D& grid);

  const Grid1D& grid() const noexcept { return grid_; }
  /// Angular wavenumbers in FFT order; the Nyquist mode carries -pi/dx.
  const std::vector<double>& wavenumbers() const noexcept { return k_; }

  std::vector<Complex> forward(std::span<const Complex> values) const;
  /// Normalised inverse (divides by n).
  std::vector<Complex> inverse(std::span<const Complex> spectrum) const;

  /// order-th spatial derivative via multiplication by (ik)^order. The
  /// Nyquist mode is dropped for odd orders.
  std::vector<Complex> derivative(std::span<const Complex> values, int order) const;

  /// Fraction of the L2 mass carried by |k| > k_nyquist/2.
  double top_octave_fraction(std::span<const Complex> values) const;

 private:
  Grid1D grid_;
  std::vector<double> k_;
};

}  // namespace nelson
