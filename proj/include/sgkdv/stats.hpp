#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "sgkdv/rng.hpp"

namespace sgkdv {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> xs) {
    MeanSe r;
    r.n = xs.size();
    if (r.n == 0) return r;
    double s = 0.0;
    for (double x : xs) s += x;
    r.mean = s / static_cast<double>(r.n);
    if (r.n < 2) return r;
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - r.mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(r.n - 1);
    r.se = std::sqrt(var / static_cast<double>(r.n));
    return r;
}

inline double sample_variance(std::span<const double> xs) {
    const MeanSe m = mean_se(xs);
    return m.se * m.se * static_cast<double>(m.n);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares: need >= 2 matched points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

struct SlopeCi {
    double slope = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Log-log slope of mean(samples[i]) against abscissa[i], with a percentile
// bootstrap CI over resampled trajectories (resampling within each
// abscissa's sample set independently).
inline SlopeCi bootstrap_loglog_slope(std::span<const double> abscissa,
                                      const std::vector<std::vector<double>>& samples,
                                      int n_resample = 1000,
                                      std::uint64_t seed = 0x5eedb001) {
    if (abscissa.size() != samples.size() || abscissa.size() < 2)
        throw std::invalid_argument("bootstrap_loglog_slope: mismatched inputs");
    std::vector<double> lx(abscissa.size()), ly(abscissa.size());
    for (size_t i = 0; i < abscissa.size(); ++i) {
        lx[i] = std::log(abscissa[i]);
        ly[i] = std::log(mean_se(samples[i]).mean);
    }
    SlopeCi out;
    out.slope = least_squares(lx, ly).slope;

    RngStream rng(seed, 0);
    std::vector<double> slopes(static_cast<size_t>(n_resample));
    std::vector<double> ry(abscissa.size());
    for (int r = 0; r < n_resample; ++r) {
        for (size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            double acc = 0.0;
            for (size_t j = 0; j < s.size(); ++j)
                acc += s[rng.next_u64() % s.size()];
            ry[i] = std::log(acc / static_cast<double>(s.size()));
        }
        slopes[static_cast<size_t>(r)] = least_squares(lx, ry).slope;
    }
    std::sort(slopes.begin(), slopes.end());
    const auto pick = [&](double q) {
        const double pos = q * static_cast<double>(slopes.size() - 1);
        const size_t i = static_cast<size_t>(pos);
        const double w = pos - static_cast<double>(i);
        return (i + 1 < slopes.size()) ? (1.0 - w) * slopes[i] + w * slopes[i + 1] : slopes[i];
    };
    out.lo = pick(0.025);
    out.hi = pick(0.975);
    return out;
}

}  // namespace sgkdv
