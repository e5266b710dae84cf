#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgkdv {

// Uniform periodic grid on [-L/2, L/2) with n sample points and the matching
// table of wavenumbers xi_m = 2*pi*m/L, m = -n/2 .. n/2-1.
//
// Spectral data is stored in FFT ("wrapped") index order: array slot s holds
// mode m = s for s < n/2 and m = s - n otherwise, so slot n/2 is the lone
// Nyquist mode m = -n/2.
class Grid {
public:
    Grid(int n, double length) : n_(n), length_(length) {
        if (n < 8 || n % 2 != 0)
            throw std::invalid_argument("Grid: n must be even and >= 8, got " + std::to_string(n));
        if (!(length > 0.0))
            throw std::invalid_argument("Grid: length must be positive");
        dx_ = length_ / n_;
        xi_.resize(n_);
        for (int s = 0; s < n_; ++s)
            xi_[s] = 2.0 * std::numbers::pi * mode(s) / length_;
    }

    int size() const { return n_; }
    double length() const { return length_; }
    double dx() const { return dx_; }

    // Sample location of index j.
    double x(int j) const { return -0.5 * length_ + j * dx_; }

    // Signed mode number held in spectral slot s.
    int mode(int s) const { return s < n_ / 2 ? s : s - n_; }

    // Spectral slot of signed mode m in [-n/2, n/2).
    int slot(int m) const { return m >= 0 ? m : m + n_; }

    int nyquist_slot() const { return n_ / 2; }

    double xi(int s) const { return xi_[s]; }
    const std::vector<double>& wavenumbers() const { return xi_; }

    bool operator==(const Grid& o) const { return n_ == o.n_ && length_ == o.length_; }
    bool operator!=(const Grid& o) const { return !(*this == o); }

private:
    int n_;
    double length_;
    double dx_;
    std::vector<double> xi_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

}  // namespace sgkdv
