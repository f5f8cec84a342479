#include "fracac/convolution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

#include "fracac/parallel.hpp"
#include "fracac/summation.hpp"

namespace fracac {

namespace {

std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

bool smooth(std::size_t n) {
  for (std::size_t p : {2, 3, 5, 7})
    while (n % p == 0) n /= p;
  return n == 1;
}

}  // namespace

std::size_t fft_size(std::size_t n) {
  if (n <= 1) return 1;
  while (!smooth(n)) ++n;
  return n;
}

struct Convolver::FftState {
  std::array<std::size_t, 2> padded{1, 1};
  std::size_t real_count = 0;
  std::size_t complex_count = 0;
  fftw_complex* kernel_hat = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~FftState() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (kernel_hat) fftw_free(kernel_hat);
  }
};

Convolver::Convolver(const IndexBox& src, const IndexBox& dst, const Stencil& kernel, ConvMethod method)
    : src_(src), dst_(dst), method_(method) {
  if (src.dim != dst.dim) throw std::invalid_argument("convolution boxes differ in dimension");
  for (int a = 0; a < 2; ++a) {
    if (src.extent[a] < 1 || dst.extent[a] < 1) throw std::invalid_argument("empty convolution box");
    dmin_[a] = dst.lo[a] - (src.lo[a] + src.extent[a] - 1);
    dcount_[a] = src.extent[a] + dst.extent[a] - 1;
  }
  stencil_.resize(static_cast<std::size_t>(dcount_[0] * dcount_[1]));
  for (std::int64_t i = 0; i < dcount_[0]; ++i)
    for (std::int64_t j = 0; j < dcount_[1]; ++j)
      stencil_[static_cast<std::size_t>(i * dcount_[1] + j)] = kernel(dmin_[0] + i, dmin_[1] + j);

  if (method_ == ConvMethod::Auto)
    method_ = static_cast<double>(src.size()) * static_cast<double>(dst.size()) <= 2e4 ? ConvMethod::Direct
                                                                                       : ConvMethod::FFT;
  if (method_ != ConvMethod::FFT) return;

  fft_ = std::make_unique<FftState>();
  auto& st = *fft_;
  st.padded[0] = fft_size(static_cast<std::size_t>(dcount_[0]));
  st.padded[1] = src.dim == 2 ? fft_size(static_cast<std::size_t>(dcount_[1])) : 1;
  const std::size_t last = src.dim == 2 ? st.padded[1] : st.padded[0];
  const std::size_t lead = src.dim == 2 ? st.padded[0] : 1;
  st.real_count = lead * last;
  st.complex_count = lead * (last / 2 + 1);

  double* rbuf = fftw_alloc_real(st.real_count);
  st.kernel_hat = fftw_alloc_complex(st.complex_count);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (src.dim == 1) {
      const int n = static_cast<int>(st.padded[0]);
      st.forward = fftw_plan_dft_r2c_1d(n, rbuf, st.kernel_hat, FFTW_ESTIMATE);
      st.backward = fftw_plan_dft_c2r_1d(n, st.kernel_hat, rbuf, FFTW_ESTIMATE);
    } else {
      const int n0 = static_cast<int>(st.padded[0]);
      const int n1 = static_cast<int>(st.padded[1]);
      st.forward = fftw_plan_dft_r2c_2d(n0, n1, rbuf, st.kernel_hat, FFTW_ESTIMATE);
      st.backward = fftw_plan_dft_c2r_2d(n0, n1, st.kernel_hat, rbuf, FFTW_ESTIMATE);
    }
  }
  std::fill(rbuf, rbuf + st.real_count, 0.0);
  for (std::int64_t i = 0; i < dcount_[0]; ++i)
    for (std::int64_t j = 0; j < dcount_[1]; ++j)
      rbuf[static_cast<std::size_t>(i) * st.padded[1] + static_cast<std::size_t>(j)] =
          stencil_[static_cast<std::size_t>(i * dcount_[1] + j)];
  fftw_execute_dft_r2c(st.forward, rbuf, st.kernel_hat);
  fftw_free(rbuf);
}

Convolver::~Convolver() = default;

std::vector<double> Convolver::apply(const std::vector<double>& in) const {
  if (in.size() != src_.size()) throw std::invalid_argument("convolution input has the wrong size");
  return method_ == ConvMethod::FFT ? apply_fft(in) : apply_direct(in);
}

std::vector<double> Convolver::apply_direct(const std::vector<double>& in) const {
  std::vector<double> out(dst_.size(), 0.0);
  const std::int64_t ns0 = src_.extent[0], ns1 = src_.extent[1];
  const std::int64_t nd1 = dst_.extent[1];
  parallel_for(dst_.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> terms(in.size());
    for (std::size_t t = b; t < e; ++t) {
      const std::int64_t tp = static_cast<std::int64_t>(t) / nd1;
      const std::int64_t tq = static_cast<std::int64_t>(t) % nd1;
      std::size_t k = 0;
      for (std::int64_t i = 0; i < ns0; ++i) {
        // Offset index of (target - source) relative to dmin.
        const std::int64_t oi = tp + dst_.lo[0] - (src_.lo[0] + i) - dmin_[0];
        const double* row = stencil_.data() + oi * dcount_[1];
        for (std::int64_t j = 0; j < ns1; ++j) {
          const std::int64_t oj = tq + dst_.lo[1] - (src_.lo[1] + j) - dmin_[1];
          terms[k] = row[oj] * in[k];
          ++k;
        }
      }
      out[t] = pairwise_sum(terms);
    }
  });
  return out;
}

std::vector<double> Convolver::apply_fft(const std::vector<double>& in) const {
  const auto& st = *fft_;
  double* rbuf = fftw_alloc_real(st.real_count);
  fftw_complex* cbuf = fftw_alloc_complex(st.complex_count);
  std::fill(rbuf, rbuf + st.real_count, 0.0);
  for (std::int64_t i = 0; i < src_.extent[0]; ++i)
    for (std::int64_t j = 0; j < src_.extent[1]; ++j)
      rbuf[static_cast<std::size_t>(i) * st.padded[1] + static_cast<std::size_t>(j)] =
          in[static_cast<std::size_t>(i * src_.extent[1] + j)];
  fftw_execute_dft_r2c(st.forward, rbuf, cbuf);
  for (std::size_t k = 0; k < st.complex_count; ++k) {
    const double re = cbuf[k][0] * st.kernel_hat[k][0] - cbuf[k][1] * st.kernel_hat[k][1];
    const double im = cbuf[k][0] * st.kernel_hat[k][1] + cbuf[k][1] * st.kernel_hat[k][0];
    cbuf[k][0] = re;
    cbuf[k][1] = im;
  }
  fftw_execute_dft_c2r(st.backward, cbuf, rbuf);
  const double norm = 1.0 / static_cast<double>(st.real_count);
  std::vector<double> out(dst_.size());
  const std::int64_t off0 = src_.extent[0] - 1, off1 = src_.extent[1] - 1;
  for (std::int64_t i = 0; i < dst_.extent[0]; ++i)
    for (std::int64_t j = 0; j < dst_.extent[1]; ++j)
      out[static_cast<std::size_t>(i * dst_.extent[1] + j)] =
          rbuf[static_cast<std::size_t>(i + off0) * st.padded[1] + static_cast<std::size_t>(j + off1)] * norm;
  fftw_free(rbuf);
  fftw_free(cbuf);
  return out;
}

}  // namespace fracac
