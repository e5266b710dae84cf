#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgkdv/field.hpp"
#include "sgkdv/grid.hpp"

namespace sgkdv {

// Covariance operator Phi of the driving noise, diagonal in the Fourier
// basis with an even nonnegative spectral profile phi(xi): Phi e_m =
// phi_m e_m over the cosine/sine system. Everything the model needs from
// Phi -- Hilbert-Schmidt norms, increment laws, Ito drifts -- is a function
// of the profile alone.
//
// The Nyquist profile entry is forced to zero so the noise never excites
// the lone unpaired mode.
class CovarianceOperator {
public:
    enum class Kind { power_law, band_limited, table };

    static CovarianceOperator power_law(const Grid& g, double amplitude, double decay_r) {
        CovarianceOperator c(g, Kind::power_law);
        c.amplitude_ = amplitude;
        c.decay_r_ = decay_r;
        for (int i = 0; i < g.size(); ++i) {
            const double xi = g.xi(i);
            c.profile_[static_cast<size_t>(i)] =
                amplitude * std::pow(1.0 + xi * xi, -0.5 * decay_r);
        }
        c.profile_[static_cast<size_t>(g.nyquist_slot())] = 0.0;
        return c;
    }

    static CovarianceOperator band_limited(const Grid& g, double amplitude, double cutoff) {
        CovarianceOperator c(g, Kind::band_limited);
        c.amplitude_ = amplitude;
        c.cutoff_ = cutoff;
        for (int i = 0; i < g.size(); ++i)
            c.profile_[static_cast<size_t>(i)] = (std::abs(g.xi(i)) <= cutoff) ? amplitude : 0.0;
        c.profile_[static_cast<size_t>(g.nyquist_slot())] = 0.0;
        return c;
    }

    // Explicit profile per nonnegative mode index; mirrored onto -m.
    static CovarianceOperator from_table(const Grid& g, std::span<const double> values) {
        if (static_cast<int>(values.size()) != g.size() / 2)
            throw std::invalid_argument("CovarianceOperator: table needs n/2 entries (modes 0..n/2-1)");
        CovarianceOperator c(g, Kind::table);
        for (int m = 0; m < g.size() / 2; ++m) {
            const double v = values[static_cast<size_t>(m)];
            if (v < 0.0) throw std::invalid_argument("CovarianceOperator: profile must be >= 0");
            c.profile_[static_cast<size_t>(g.slot(m))] = v;
            if (m > 0) c.profile_[static_cast<size_t>(g.slot(-m))] = v;
        }
        c.profile_[static_cast<size_t>(g.nyquist_slot())] = 0.0;
        return c;
    }

    static CovarianceOperator zero(const Grid& g) {
        return band_limited(g, 0.0, 0.0);
    }

    const Grid& grid() const { return *grid_; }
    Kind kind() const { return kind_; }
    std::span<const double> profile() const { return profile_; }
    double profile_at_slot(int s) const { return profile_[static_cast<size_t>(s)]; }

    bool is_zero() const {
        for (double p : profile_)
            if (p != 0.0) return false;
        return true;
    }

    // || Phi ||_{L_2^{0,sigma}} = sqrt( sum_m phi_m^2 (1 + xi_m^2)^sigma ),
    // summed over all signed modes. Nondecreasing in sigma.
    double hs_norm(double sigma) const {
        double s = 0.0;
        for (int i = 0; i < grid_->size(); ++i) {
            const double xi = grid_->xi(i);
            const double p = profile_[static_cast<size_t>(i)];
            s += p * p * std::pow(1.0 + xi * xi, sigma);
        }
        return std::sqrt(s);
    }

    // Copy rescaled so that hs_norm(sigma_req) == 1.
    CovarianceOperator normalized(double sigma_req) const {
        const double h = hs_norm(sigma_req);
        if (h == 0.0)
            throw std::invalid_argument("CovarianceOperator: cannot normalize the zero operator");
        return scaled(1.0 / h);
    }

    CovarianceOperator scaled(double factor) const {
        if (factor < 0.0) throw std::invalid_argument("CovarianceOperator: negative scale");
        CovarianceOperator c(*this);
        for (double& p : c.profile_) p *= factor;
        c.amplitude_ *= factor;
        return c;
    }

    // Generic operator application Phi f = F^{-1}(phi * F f). Used by the
    // brute-force basis oracles; the fast paths read the profile directly.
    Field apply(const Field& f) const {
        require_same_grid(*grid_, f.grid(), "CovarianceOperator::apply");
        SpectralData c(f.packed().begin(), f.packed().end());
        for (size_t i = 0; i < c.size(); ++i) c[i] *= profile_[i];
        return Field::from_packed(*grid_, std::move(c));
    }

private:
    CovarianceOperator(const Grid& g, Kind kind)
        : grid_(&g), kind_(kind), profile_(static_cast<size_t>(g.size()), 0.0) {}

    const Grid* grid_;
    Kind kind_;
    std::vector<double> profile_;
    double amplitude_ = 0.0;
    double decay_r_ = 0.0;
    double cutoff_ = 0.0;
};

}  // namespace sgkdv
