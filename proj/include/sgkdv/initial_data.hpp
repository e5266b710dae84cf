#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgkdv/field.hpp"
#include "sgkdv/grid.hpp"
#include "sgkdv/multipliers.hpp"

namespace sgkdv {

struct InitialDataSpec {
    enum class Kind { zero, gaussian, soliton, custom_table };
    Kind kind = Kind::zero;
    double amplitude = 1.0;  // gaussian peak value
    double width = 1.0;      // gaussian width w in exp(-(x-x0)^2 / (2 w^2))
    double center = 0.0;
    double speed = 1.0;      // soliton speed c > 0
    std::vector<double> table;

    // Optional rescaling: make sobolev_norm(u0, norm_sigma) == norm_value.
    bool normalize = false;
    double norm_sigma = 0.0;
    double norm_value = 1.0;

    static Kind kind_from_name(const std::string& name) {
        if (name == "zero") return Kind::zero;
        if (name == "gaussian") return Kind::gaussian;
        if (name == "soliton") return Kind::soliton;
        if (name == "custom-table") return Kind::custom_table;
        throw std::invalid_argument("initial_data: unknown kind '" + name + "'");
    }
};

// Traveling-wave profile of u_t + u_xxx + u^k u_x = 0 (focusing sign):
// substituting psi(x - c t) and integrating once with decay at infinity
// gives -c psi + psi'' + psi^{k+1}/(k+1) = 0, solved by
//   psi(y) = (c (k+1)(k+2) / 2)^{1/k} sech^{2/k}( (k sqrt(c) / 2) y ).
inline double soliton_profile(double y, int k, double c) {
    const double amp = std::pow(0.5 * c * (k + 1) * (k + 2), 1.0 / k);
    const double theta = 0.5 * k * std::sqrt(c);
    return amp * std::pow(1.0 / std::cosh(theta * y), 2.0 / k);
}

inline Field soliton_field(const Grid& g, int k, double c, double x0) {
    std::vector<double> u(static_cast<size_t>(g.size()));
    for (int j = 0; j < g.size(); ++j) u[static_cast<size_t>(j)] = soliton_profile(g.x(j) - x0, k, c);
    return Field::from_samples(g, std::move(u));
}

// L^2 norm of the traveling-wave residual -c psi' + psi''' + mu psi^k psi'
// on the grid, with every derivative taken in closed form (symbolic
// substitution): with S = sech(theta y), T = tanh(theta y), p = 2/k,
//   psi'   = -A p theta S^p T,
//   psi''' =  A p theta^3 S^p T ( (3p+2) S^2 - p^2 T^2 ).
// The correct (A, theta) make the residual vanish pointwise; a wrong
// constant leaves an O(1) mismatch.
inline double soliton_residual(const Grid& g, int k, int mu, double c, double x0 = 0.0) {
    const double p = 2.0 / k;
    const double amp = std::pow(0.5 * c * (k + 1) * (k + 2), 1.0 / k);
    const double theta = 0.5 * k * std::sqrt(c);
    double acc = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        const double y = g.x(j) - x0;
        const double S = 1.0 / std::cosh(theta * y);
        const double T = std::tanh(theta * y);
        const double Sp = std::pow(S, p);
        const double psi = amp * Sp;
        const double dpsi = -amp * p * theta * Sp * T;
        const double d3psi =
            amp * p * theta * theta * theta * Sp * T * ((3.0 * p + 2.0) * S * S - p * p * T * T);
        double powk = 1.0;
        for (int e = 0; e < k; ++e) powk *= psi;
        const double r = -c * dpsi + d3psi + mu * powk * dpsi;
        acc += r * r;
    }
    return std::sqrt(acc * g.dx());
}

inline Field initial_data(const InitialDataSpec& spec, const Grid& g, int k, int mu) {
    Field f = Field::zero(g);
    switch (spec.kind) {
        case InitialDataSpec::Kind::zero:
            break;
        case InitialDataSpec::Kind::gaussian: {
            std::vector<double> u(static_cast<size_t>(g.size()));
            for (int j = 0; j < g.size(); ++j) {
                const double y = g.x(j) - spec.center;
                u[static_cast<size_t>(j)] =
                    spec.amplitude * std::exp(-y * y / (2.0 * spec.width * spec.width));
            }
            f = Field::from_samples(g, std::move(u));
            break;
        }
        case InitialDataSpec::Kind::soliton: {
            if (mu != 1)
                throw std::invalid_argument("initial_data: soliton requires mu = +1 (focusing)");
            if (!(spec.speed > 0.0))
                throw std::invalid_argument("initial_data: soliton speed must be > 0");
            const double res = soliton_residual(g, k, mu, spec.speed, spec.center);
            if (res > 1e-8)
                throw std::invalid_argument("initial_data: soliton residual " +
                                            std::to_string(res) + " exceeds 1e-8");
            f = soliton_field(g, k, spec.speed, spec.center);
            break;
        }
        case InitialDataSpec::Kind::custom_table: {
            if (static_cast<int>(spec.table.size()) != g.size())
                throw std::invalid_argument("initial_data: custom table must hold exactly n samples");
            f = Field::from_samples(g, spec.table);
            break;
        }
    }
    if (spec.normalize) {
        const double nrm = sobolev_norm(f, spec.norm_sigma);
        if (nrm == 0.0)
            throw std::invalid_argument("initial_data: cannot normalize the zero field");
        SpectralData c(f.packed().begin(), f.packed().end());
        const double s = spec.norm_value / nrm;
        for (auto& z : c) z *= s;
        f = Field::from_packed(g, std::move(c));
    }
    return f;
}

}  // namespace sgkdv
