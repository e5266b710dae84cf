#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgkdv/field.hpp"
#include "sgkdv/grid.hpp"

namespace sgkdv {

// A diagonal Fourier-space operator: one complex factor per mode, stored in
// the same wrapped index order as packed spectra. Multipliers built from
// even real functions of xi keep real fields real; odd (derivative-type)
// multipliers are zeroed at the lone Nyquist mode, which the grid treats as
// cosine-only.
struct SpectralMultiplier {
    SpectralData values;
    std::string label;

    void apply_in_place(std::span<Complex> packed) const {
        for (size_t i = 0; i < values.size(); ++i) packed[i] *= values[i];
    }
};

inline Field apply_multiplier(const Field& f, const SpectralMultiplier& m) {
    if (m.values.size() != static_cast<size_t>(f.grid().size()))
        throw std::invalid_argument("apply_multiplier: grid mismatch");
    SpectralData c(f.packed().begin(), f.packed().end());
    m.apply_in_place(c);
    return Field::from_packed(f.grid(), std::move(c));
}

inline SpectralMultiplier identity_multiplier(const Grid& g) {
    return {SpectralData(static_cast<size_t>(g.size()), Complex(1.0, 0.0)), "Id"};
}

// Airy group S(t): exp(i t xi^3) mode-wise. Unit modulus at every mode, so
// all H^sigma norms are preserved. The Nyquist mode is frozen (factor 1):
// the grid cannot represent the sine companion its phase would rotate into.
inline SpectralMultiplier airy_multiplier(const Grid& g, double t) {
    SpectralMultiplier m{SpectralData(static_cast<size_t>(g.size())), "S(" + std::to_string(t) + ")"};
    for (int i = 0; i < g.size(); ++i) {
        if (i == g.nyquist_slot()) {
            m.values[static_cast<size_t>(i)] = Complex(1.0, 0.0);
            continue;
        }
        const double xi = g.xi(i);
        m.values[static_cast<size_t>(i)] = std::polar(1.0, t * xi * xi * xi);
    }
    return m;
}

// D^gamma = |xi|^gamma, gamma >= 0; the zero mode is annihilated for the
// whole family so D^0 is the zero-mean projection.
inline SpectralMultiplier fractional_derivative_multiplier(const Grid& g, double gamma) {
    if (gamma < 0.0)
        throw std::invalid_argument("fractional_derivative_multiplier: gamma must be >= 0");
    SpectralMultiplier m{SpectralData(static_cast<size_t>(g.size())), "D^" + std::to_string(gamma)};
    for (int i = 0; i < g.size(); ++i) {
        const double axi = std::abs(g.xi(i));
        m.values[static_cast<size_t>(i)] = (axi == 0.0) ? Complex(0.0, 0.0)
                                                        : Complex(std::pow(axi, gamma), 0.0);
    }
    return m;
}

// Bessel potential J_sigma = (1 + xi^2)^(sigma/2), any real sigma.
inline SpectralMultiplier bessel_multiplier(const Grid& g, double sigma) {
    SpectralMultiplier m{SpectralData(static_cast<size_t>(g.size())), "J_" + std::to_string(sigma)};
    for (int i = 0; i < g.size(); ++i) {
        const double xi = g.xi(i);
        m.values[static_cast<size_t>(i)] = Complex(std::pow(1.0 + xi * xi, 0.5 * sigma), 0.0);
    }
    return m;
}

// Hilbert transform -i sign(xi); zero at the mean and at Nyquist. With this
// sign, H(cos) = sin and the first derivative factors as d/dx = -H o D^1.
inline SpectralMultiplier hilbert_multiplier(const Grid& g) {
    SpectralMultiplier m{SpectralData(static_cast<size_t>(g.size())), "H"};
    for (int i = 0; i < g.size(); ++i) {
        const double xi = g.xi(i);
        double s = (xi > 0.0) ? 1.0 : (xi < 0.0 ? -1.0 : 0.0);
        if (i == g.nyquist_slot()) s = 0.0;
        m.values[static_cast<size_t>(i)] = Complex(0.0, -s);
    }
    return m;
}

// d/dx = i xi, zeroed at Nyquist.
inline SpectralMultiplier derivative_multiplier(const Grid& g) {
    SpectralMultiplier m{SpectralData(static_cast<size_t>(g.size())), "d/dx"};
    for (int i = 0; i < g.size(); ++i) {
        const double xi = (i == g.nyquist_slot()) ? 0.0 : g.xi(i);
        m.values[static_cast<size_t>(i)] = Complex(0.0, xi);
    }
    return m;
}

// D^gamma d/dx as the single symbol i xi |xi|^gamma (zeroed at Nyquist),
// avoiding two lossy grid passes.
inline SpectralMultiplier fractional_dx_multiplier(const Grid& g, double gamma) {
    if (gamma < 0.0)
        throw std::invalid_argument("fractional_dx_multiplier: gamma must be >= 0");
    SpectralMultiplier m{SpectralData(static_cast<size_t>(g.size())),
                         "D^" + std::to_string(gamma) + " d/dx"};
    for (int i = 0; i < g.size(); ++i) {
        const double xi = (i == g.nyquist_slot()) ? 0.0 : g.xi(i);
        const double axi = std::abs(xi);
        m.values[static_cast<size_t>(i)] =
            (axi == 0.0) ? Complex(0.0, 0.0) : Complex(0.0, xi * std::pow(axi, gamma));
    }
    return m;
}

}  // namespace sgkdv
