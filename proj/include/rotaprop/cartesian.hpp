#pragma once

// Cartesian fine grid with spectral (FFT) differentiation for the local
// relative-boundedness checks. Cell-centered samples on [-L/2, L/2]^2 so the
// singular square potentials are never evaluated exactly at their center.
//
// FFTW plan creation is serialized behind a mutex (the planner is not
// thread-safe); plans use FFTW_ESTIMATE so results are bit-reproducible
// across runs and worker counts. Each grid owns its buffers, so concurrent
// tasks each build their own grid.

#include <complex>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include <Eigen/Dense>

namespace rotaprop {

class CartesianGrid {
  public:
    CartesianGrid(int n, double box_len) : n_(n), len_(box_len), h_(box_len / n) {
        if (n < 8) throw std::invalid_argument("CartesianGrid: n must be >= 8");
        xs_.resize(n);
        ks_.resize(n);
        for (int i = 0; i < n; ++i) xs_[i] = -0.5 * box_len + (i + 0.5) * h_;
        const double dk = 2.0 * M_PI / box_len;
        for (int i = 0; i < n; ++i) ks_[i] = dk * (i <= n / 2 ? i : i - n);
        buf_.resize(std::size_t(n) * n);
        {
            static std::mutex planner;
            std::lock_guard<std::mutex> lock(planner);
            auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
            fwd_ = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
    }
    ~CartesianGrid() {
        static std::mutex planner;
        std::lock_guard<std::mutex> lock(planner);
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    CartesianGrid(const CartesianGrid&) = delete;
    CartesianGrid& operator=(const CartesianGrid&) = delete;

    int n() const { return n_; }
    double h() const { return h_; }
    double box() const { return len_; }
    double x(int i) const { return xs_[i]; }
    double k(int i) const { return ks_[i]; }

    using Cfield = Eigen::MatrixXcd;  // (i, j) = (x index, y index), n x n

    // L2 norm with the cell measure
    double nrm(const Cfield& f) const { return h_ * f.norm(); }

    // psi <- IFFT[ sym(kx, ky) .* FFT[psi] ]
    template <class Symbol>
    Cfield apply_symbol(const Cfield& f, Symbol&& sym) const {
        load(f);
        fftw_execute_dft(fwd_, raw(), raw());
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                buf_[std::size_t(i) * n_ + j] *= sym(ks_[i], ks_[j]);
        fftw_execute_dft(bwd_, raw(), raw());
        return store(1.0 / (double(n_) * double(n_)));
    }

    Cfield dx(const Cfield& f) const {
        return apply_symbol(f, [](double kx, double) { return std::complex<double>(0, kx); });
    }
    Cfield dy(const Cfield& f) const {
        return apply_symbol(f, [](double, double ky) { return std::complex<double>(0, ky); });
    }

  private:
    void load(const Cfield& f) const {
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) buf_[std::size_t(i) * n_ + j] = f(i, j);
    }
    Cfield store(double scale) const {
        Cfield out(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) out(i, j) = scale * buf_[std::size_t(i) * n_ + j];
        return out;
    }
    fftw_complex* raw() const {
        return reinterpret_cast<fftw_complex*>(
            const_cast<std::complex<double>*>(buf_.data()));
    }

    int n_;
    double len_, h_;
    std::vector<double> xs_, ks_;
    mutable std::vector<std::complex<double>> buf_;
    fftw_plan fwd_, bwd_;
};

}  // namespace rotaprop
