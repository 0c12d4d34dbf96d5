#include "fractorus/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <stdexcept>

namespace fractorus {

Fft::Fft(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty() || dims_.size() > 3)
        throw std::invalid_argument("Fft: rank must be 1..3");
    n_ = 1;
    for (int d : dims_) {
        if (d < 2) throw std::invalid_argument("Fft: each dim must be >= 2");
        n_ *= static_cast<std::size_t>(d);
    }
    buf_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n_));
    if (!buf_) throw std::bad_alloc();
    auto* b = reinterpret_cast<fftw_complex*>(buf_);
    fwd_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), b, b,
                         FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), b, b,
                         FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) throw std::runtime_error("Fft: planning failed");
}

Fft::~Fft() {
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
    fftw_free(buf_);
}

void Fft::forward(const std::complex<double>* in, std::complex<double>* out) const {
    std::memcpy(buf_, in, n_ * sizeof(std::complex<double>));
    fftw_execute(static_cast<fftw_plan>(fwd_));
    std::memcpy(out, buf_, n_ * sizeof(std::complex<double>));
}

void Fft::backward(const std::complex<double>* in, std::complex<double>* out) const {
    std::memcpy(buf_, in, n_ * sizeof(std::complex<double>));
    fftw_execute(static_cast<fftw_plan>(bwd_));
    std::memcpy(out, buf_, n_ * sizeof(std::complex<double>));
}

Fft& fft_for(const std::vector<int>& dims) {
    static std::map<std::vector<int>, std::unique_ptr<Fft>> cache;
    auto it = cache.find(dims);
    if (it == cache.end())
        it = cache.emplace(dims, std::make_unique<Fft>(dims)).first;
    return *it->second;
}

} // namespace fractorus
