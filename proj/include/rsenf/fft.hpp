#pragma once

// Thin RAII wrappers over FFTW plans. Plan creation is serialized because the
// FFTW planner is not thread-safe; execution on distinct objects is.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <type_traits>

namespace rsenf::fft {

namespace detail {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct PlanFree {
  void operator()(fftw_plan p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

template <typename T>
std::unique_ptr<T[], FftwFree> alloc(std::size_t n) {
  return std::unique_ptr<T[], FftwFree>(static_cast<T*>(fftw_malloc(sizeof(T) * n)));
}

using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanFree>;

}  // namespace detail

/// Real-to-complex forward transform of fixed length n.
class RealForward {
 public:
  explicit RealForward(std::size_t n) : n_(n), in_(detail::alloc<double>(n)), out_(detail::alloc<fftw_complex>(n / 2 + 1)) {
    std::lock_guard lock(detail::planner_mutex());
    plan_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE));
  }

  std::size_t size() const noexcept { return n_; }
  double* input() noexcept { return in_.get(); }
  void execute() { fftw_execute(plan_.get()); }
  std::complex<double> bin(std::size_t k) const { return {out_[k][0], out_[k][1]}; }

 private:
  std::size_t n_;
  std::unique_ptr<double[], detail::FftwFree> in_;
  std::unique_ptr<fftw_complex[], detail::FftwFree> out_;
  detail::Plan plan_;
};

/// Complex forward transform of fixed length n.
class ComplexForward {
 public:
  explicit ComplexForward(std::size_t n) : n_(n), in_(detail::alloc<fftw_complex>(n)), out_(detail::alloc<fftw_complex>(n)) {
    std::lock_guard lock(detail::planner_mutex());
    plan_.reset(fftw_plan_dft_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_FORWARD, FFTW_ESTIMATE));
  }

  std::size_t size() const noexcept { return n_; }
  void set(std::size_t i, std::complex<double> v) {
    in_[i][0] = v.real();
    in_[i][1] = v.imag();
  }
  void execute() { fftw_execute(plan_.get()); }
  std::complex<double> bin(std::size_t k) const { return {out_[k][0], out_[k][1]}; }

 private:
  std::size_t n_;
  std::unique_ptr<fftw_complex[], detail::FftwFree> in_;
  std::unique_ptr<fftw_complex[], detail::FftwFree> out_;
  detail::Plan plan_;
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace rsenf::fft
