#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "sgkdv/fft.hpp"
#include "sgkdv/grid.hpp"

namespace sgkdv {

using Complex = std::complex<double>;
using SpectralData = std::vector<Complex>;

namespace spectral {

// Coefficient convention. A real sample vector u_j on x_j = -L/2 + j*dx has
// Fourier-series coefficients c_m with u_j = sum_m c_m exp(i xi_m x_j) and
// c_m = (1/n) sum_j u_j exp(-i xi_m x_j). Because exp(i xi_m x_j) =
// (-1)^m exp(2 pi i m j / n), the stored ("packed") spectrum is
// chat_m = (-1)^m c_m in FFT index order: one plain FFT/n forward and one
// plain inverse FFT backward. Every multiplier in this project is diagonal
// in m, so the parity phase is invisible everywhere except when quoting an
// individual c_m, which coeff_of() converts.

inline double parity(int m) { return (m % 2 == 0) ? 1.0 : -1.0; }

inline void pack(const Grid& g, std::span<const double> samples, SpectralData& out) {
    const int n = g.size();
    SpectralData tmp(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) tmp[j] = Complex(samples[j], 0.0);
    out.resize(static_cast<size_t>(n));
    fft::Plans::forward(tmp, out);
    const double inv_n = 1.0 / n;
    for (auto& c : out) c *= inv_n;
}

// Returns the largest |imaginary part| seen among the reconstructed samples,
// the residue of an imperfectly conjugate-symmetric spectrum.
inline double unpack(const Grid& g, std::span<const Complex> coeffs, std::vector<double>& out) {
    const int n = g.size();
    SpectralData tmp(static_cast<size_t>(n));
    fft::Plans::backward(coeffs, tmp);
    out.resize(static_cast<size_t>(n));
    double residue = 0.0;
    for (int j = 0; j < n; ++j) {
        out[j] = tmp[j].real();
        residue = std::max(residue, std::abs(tmp[j].imag()));
    }
    return residue;
}

inline Complex coeff_of(const Grid& g, std::span<const Complex> packed, int m) {
    return packed[static_cast<size_t>(g.slot(m))] * parity(m);
}

// || f ||_{H^sigma} = sqrt( L * sum_m (1 + xi_m^2)^sigma |c_m|^2 ).
inline double sobolev_norm(const Grid& g, std::span<const Complex> packed, double sigma) {
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double xi = g.xi(i);
        s += std::pow(1.0 + xi * xi, sigma) * std::norm(packed[static_cast<size_t>(i)]);
    }
    return std::sqrt(g.length() * s);
}

// Homogeneous counterpart sqrt( L * sum_m |xi_m|^{2 gamma} |c_m|^2 ).
inline double homogeneous_norm(const Grid& g, std::span<const Complex> packed, double gamma) {
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double axi = std::abs(g.xi(i));
        if (axi == 0.0) continue;
        s += std::pow(axi, 2.0 * gamma) * std::norm(packed[static_cast<size_t>(i)]);
    }
    return std::sqrt(g.length() * s);
}

inline double l2_norm_sq(const Grid& g, std::span<const Complex> packed) {
    double s = 0.0;
    for (const auto& c : packed) s += std::norm(c);
    return g.length() * s;
}

}  // namespace spectral

// A real-valued function sample on a Grid together with its spectral dual.
// Both representations are populated at construction and never mutated, so
// Fields can be shared freely across worker threads.
class Field {
public:
    static Field from_samples(const Grid& g, std::vector<double> samples) {
        if (static_cast<int>(samples.size()) != g.size())
            throw std::invalid_argument("Field: sample count does not match grid");
        Field f(g);
        f.samples_ = std::move(samples);
        spectral::pack(g, f.samples_, f.packed_);
        return f;
    }

    static Field from_packed(const Grid& g, SpectralData packed) {
        if (static_cast<int>(packed.size()) != g.size())
            throw std::invalid_argument("Field: coefficient count does not match grid");
        Field f(g);
        f.packed_ = std::move(packed);
        f.imag_residue_ = spectral::unpack(g, f.packed_, f.samples_);
        return f;
    }

    static Field zero(const Grid& g) {
        Field f(g);
        f.samples_.assign(static_cast<size_t>(g.size()), 0.0);
        f.packed_.assign(static_cast<size_t>(g.size()), Complex(0.0, 0.0));
        return f;
    }

    const Grid& grid() const { return *grid_; }
    std::span<const double> samples() const { return samples_; }
    std::span<const Complex> packed() const { return packed_; }

    // Fourier-series coefficient c_m (unpacked convention).
    Complex coeff(int m) const { return spectral::coeff_of(*grid_, packed_, m); }

    // Largest imaginary sample left behind by the inverse transform; zero for
    // fields built from real samples.
    double imag_residue() const { return imag_residue_; }

private:
    explicit Field(const Grid& g) : grid_(&g) {}

    const Grid* grid_;
    std::vector<double> samples_;
    SpectralData packed_;
    double imag_residue_ = 0.0;
};

// Discrete L^p norm (sum |u_j|^p dx)^(1/p); p = infinity gives max_j |u_j|.
inline double lp_norm(const Field& f, double p) {
    if (!(p >= 1.0))
        throw std::invalid_argument("lp_norm: p must satisfy p >= 1");
    const auto u = f.samples();
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : u) m = std::max(m, std::abs(v));
        return m;
    }
    double s = 0.0;
    for (double v : u) s += std::pow(std::abs(v), p);
    return std::pow(s * f.grid().dx(), 1.0 / p);
}

inline double sobolev_norm(const Field& f, double sigma) {
    return spectral::sobolev_norm(f.grid(), f.packed(), sigma);
}

inline double homogeneous_norm(const Field& f, double gamma) {
    return spectral::homogeneous_norm(f.grid(), f.packed(), gamma);
}

}  // namespace sgkdv
