#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace fracac {

// Rectangular block of lattice nodes in local (0-based) grid indices; extent[1] is 1 in 1D.
struct IndexBox {
  int dim = 1;
  std::array<std::int64_t, 2> lo{0, 0};
  std::array<std::int64_t, 2> extent{1, 1};

  std::size_t size() const { return static_cast<std::size_t>(extent[0] * extent[1]); }
  std::size_t flat(std::int64_t p, std::int64_t q) const {
    return static_cast<std::size_t>((p - lo[0]) * extent[1] + (q - lo[1]));
  }
};

enum class ConvMethod { Auto, Direct, FFT };

// Translation-invariant weights indexed by integer lattice offsets.
using Stencil = std::function<double(std::int64_t, std::int64_t)>;

// out[t] = sum over sources s in the source box of K(t - s) in[s], for targets t in the target box.
// The direct path sums each target in a fixed pairwise order; the FFT path uses zero-padded
// real transforms of size >= src + dst - 1 per axis.
class Convolver {
public:
  Convolver(const IndexBox& src, const IndexBox& dst, const Stencil& kernel, ConvMethod method = ConvMethod::Auto);
  ~Convolver();
  Convolver(const Convolver&) = delete;
  Convolver& operator=(const Convolver&) = delete;

  std::vector<double> apply(const std::vector<double>& in) const;
  ConvMethod method() const { return method_; }
  const IndexBox& source() const { return src_; }
  const IndexBox& target() const { return dst_; }

private:
  struct FftState;

  std::vector<double> apply_direct(const std::vector<double>& in) const;
  std::vector<double> apply_fft(const std::vector<double>& in) const;

  IndexBox src_;
  IndexBox dst_;
  ConvMethod method_;
  std::array<std::int64_t, 2> dmin_{0, 0};
  std::array<std::int64_t, 2> dcount_{1, 1};
  std::vector<double> stencil_;  // K over the offset range, row-major
  std::unique_ptr<FftState> fft_;
};

// Smallest integer >= n whose only prime factors are 2, 3, 5 and 7.
std::size_t fft_size(std::size_t n);

}  // namespace fracac
