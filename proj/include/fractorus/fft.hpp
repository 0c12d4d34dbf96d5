#pragma once

// Thin wrapper around FFTW3 complex transforms on row-major n-d arrays.
// Plans are created with FFTW_ESTIMATE so results do not depend on
// runtime measurement; same input always gives the same output bytes.

#include <complex>
#include <cstddef>
#include <vector>

namespace fractorus {

class Fft {
public:
    explicit Fft(std::vector<int> dims);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }

    // out[k] = sum_x in[x] exp(-2 pi i k.x / N), unnormalized.
    void forward(const std::complex<double>* in, std::complex<double>* out) const;
    // out[x] = sum_k in[k] exp(+2 pi i k.x / N), unnormalized.
    void backward(const std::complex<double>* in, std::complex<double>* out) const;

private:
    std::vector<int> dims_;
    std::size_t n_;
    void* fwd_;
    void* bwd_;
    std::complex<double>* buf_;
};

// Cached plan lookup; one instance per distinct dims. Not thread safe,
// callers serialize FFT use (the library computes on one thread).
Fft& fft_for(const std::vector<int>& dims);

} // namespace fractorus
