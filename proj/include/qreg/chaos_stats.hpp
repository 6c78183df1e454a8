#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qreg/register_model.hpp"
#include "qreg/spectral.hpp"

namespace qreg {

/// Mean consecutive-spacing ratio of an integrable (Poisson) spectrum,
/// 2 ln 2 - 1.
inline constexpr double poisson_mean_ratio = 0.3862943611198906;

/// Mean consecutive-spacing ratio of the Gaussian orthogonal ensemble.
inline constexpr double goe_mean_ratio = 0.5307;

/// Midpoint between the two references; a scan's ratio curve crossing this
/// marks the regular-to-chaotic transition.
inline constexpr double ratio_crossing_level =
    0.5 * (poisson_mean_ratio + goe_mean_ratio);

namespace detail {

/// Indices [lo, hi) keeping the central `fraction` of `count` sorted levels.
inline std::pair<int, int> central_range(int count, double fraction) {
    const int keep = std::max(2, static_cast<int>(count * fraction));
    const int lo = (count - keep) / 2;
    return {lo, lo + keep};
}

}  // namespace detail

/// Unfold a sorted spectrum: fit a degree-7 polynomial to the cumulative
/// level count over the central `fraction`, then read each level's smoothed
/// count. The fit abscissa is mapped to [-1, 1] for conditioning and the
/// result is clamped to be nondecreasing, so spacings stay >= 0.
inline std::vector<double> unfold(const Eigen::VectorXd& eigenvalues,
                                  double fraction = 0.8, int degree = 7) {
    const int dim = static_cast<int>(eigenvalues.size());
    auto [lo, hi] = detail::central_range(dim, fraction);
    const int m = hi - lo;
    if (m < 2 * (degree + 1))
        throw std::invalid_argument("unfold needs at least " +
                                    std::to_string(2 * (degree + 1)) +
                                    " central levels, got " + std::to_string(m));
    const double e0 = eigenvalues(lo), e1 = eigenvalues(hi - 1);
    if (!(e1 > e0))
        throw std::invalid_argument("unfold needs a nondegenerate central spectrum");
    auto to_u = [&](double e) { return 2.0 * (e - e0) / (e1 - e0) - 1.0; };

    Eigen::MatrixXd vand(m, degree + 1);
    Eigen::VectorXd staircase(m);
    for (int i = 0; i < m; ++i) {
        double p = 1.0;
        const double u = to_u(eigenvalues(lo + i));
        for (int d = 0; d <= degree; ++d) {
            vand(i, d) = p;
            p *= u;
        }
        staircase(i) = lo + i + 0.5;
    }
    const Eigen::VectorXd coeff = vand.colPivHouseholderQr().solve(staircase);

    std::vector<double> out(m);
    double floor_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        const double u = to_u(eigenvalues(lo + i));
        double v = 0.0, p = 1.0;
        for (int d = 0; d <= degree; ++d) {
            v += coeff(d) * p;
            p *= u;
        }
        floor_val = std::max(floor_val, v);
        out[i] = floor_val;
    }
    return out;
}

/// Consecutive spacings of an already-unfolded (or raw sorted) sequence.
inline std::vector<double> level_spacings(const std::vector<double>& levels) {
    if (levels.size() < 2)
        throw std::invalid_argument("level_spacings needs at least 2 levels");
    std::vector<double> s(levels.size() - 1);
    for (std::size_t i = 0; i + 1 < levels.size(); ++i)
        s[i] = levels[i + 1] - levels[i];
    return s;
}

/// Mean ratio of consecutive raw spacings, r = min(s_k, s_k+1)/max(...),
/// over the central `fraction` of the sorted spectrum. Needs no unfolding.
inline double mean_spacing_ratio(const Eigen::VectorXd& eigenvalues,
                                 double fraction = 0.8) {
    const int dim = static_cast<int>(eigenvalues.size());
    auto [lo, hi] = detail::central_range(dim, fraction);
    if (hi - lo < 3)
        throw std::invalid_argument("mean_spacing_ratio needs >= 3 central levels");
    double acc = 0.0;
    int count = 0;
    for (int k = lo; k + 2 < hi; ++k) {
        const double s0 = eigenvalues(k + 1) - eigenvalues(k);
        const double s1 = eigenvalues(k + 2) - eigenvalues(k + 1);
        const double mx = std::max(s0, s1);
        if (mx <= 0.0) continue;  // exact degeneracy; ratio undefined
        acc += std::min(s0, s1) / mx;
        ++count;
    }
    if (count == 0)
        throw std::invalid_argument("mean_spacing_ratio: all central spacings degenerate");
    return acc / count;
}

/// Maximum-likelihood repulsion exponent of the one-parameter spacing family
/// P(s) = (eta+1) b s^eta exp(-b s^(eta+1)), b = Gamma((eta+2)/(eta+1))^(eta+1),
/// interpolating Poisson (eta = 0) to Wigner-Dyson (eta = 1). Spacings must be
/// normalized to unit mean; zero spacings are skipped. Golden-section search
/// on [0, 1].
inline double brody_ml_fit(const std::vector<double>& spacings) {
    std::vector<double> s;
    s.reserve(spacings.size());
    for (double v : spacings)
        if (v > 1e-12) s.push_back(v);
    if (s.size() < 10)
        throw std::invalid_argument("brody_ml_fit needs >= 10 positive spacings, got " +
                                    std::to_string(s.size()));
    auto neg_ll = [&](double eta) {
        const double q = (eta + 2.0) / (eta + 1.0);
        const double log_b = (eta + 1.0) * std::lgamma(q);
        const double b = std::exp(log_b);
        double ll = 0.0;
        for (double v : s)
            ll += std::log(eta + 1.0) + log_b + eta * std::log(v) -
                  b * std::pow(v, eta + 1.0);
        return -ll;
    };
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = 1.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = neg_ll(x1), f2 = neg_ll(x2);
    while (b - a > 1e-6) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = neg_ll(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = neg_ll(x2);
        }
    }
    double eta = 0.5 * (a + b);
    // endpoints win when the interior optimum is spurious
    if (neg_ll(0.0) <= neg_ll(eta)) eta = 0.0;
    if (neg_ll(1.0) <= neg_ll(eta)) eta = 1.0;
    return eta;
}

struct SpacingStats {
    int levels_used = 0;       // central levels entering the statistics
    double mean_ratio = 0.0;   // raw consecutive-spacing ratio
    double brody_eta = 0.0;    // repulsion exponent of unfolded spacings
    double mean_spacing = 0.0; // unfolded, before normalization (~1 by design)
};

/// Spacing statistics of one spectrum (typically a single parity sector —
/// mixing sectors superposes independent sequences and masks repulsion).
inline SpacingStats spacing_statistics(const Eigen::VectorXd& eigenvalues,
                                       double fraction = 0.8) {
    const std::vector<double> u = unfold(eigenvalues, fraction);
    std::vector<double> s = level_spacings(u);
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= s.size();
    if (mean > 0.0)
        for (double& v : s) v /= mean;
    SpacingStats st;
    st.levels_used = static_cast<int>(u.size());
    st.mean_spacing = mean;
    st.mean_ratio = mean_spacing_ratio(eigenvalues, fraction);
    st.brody_eta = brody_ml_fit(s);
    return st;
}

inline SpacingStats spacing_statistics(const Spectrum& s, double fraction = 0.8) {
    return spacing_statistics(s.eigenvalues, fraction);
}

// ---------------------------------------------------------------------------
// coupling-strength scan for the chaos boundary

struct ChaosScanOptions {
    std::vector<double> j_values;   // coupling scales, ascending
    int realizations = 20;
    int threads = 1;
    double entropy_fraction = 0.25; // central fraction of levels for mean S^(k)
    double ratio_fraction = 0.8;    // central fraction for the spacing ratio
};

struct ChaosScanRow {
    double j = 0.0;
    double mean_entropy = 0.0;  // eigenstate entropy S^(k), bits
    double stderr_entropy = 0.0;
    double mean_ratio = 0.0;    // per-sector spacing ratio, sector-averaged
    double stderr_ratio = 0.0;
};

struct ChaosScanResult {
    std::vector<ChaosScanRow> rows;
    // linear-interpolated first upward crossings; empty if not bracketed
    std::optional<double> j_entropy_crossing;  // mean S^(k) through 1 bit
    std::optional<double> j_ratio_crossing;    // mean ratio through the midpoint
};

namespace detail {

inline std::optional<double> first_upward_crossing(
    const std::vector<ChaosScanRow>& rows, double level,
    double ChaosScanRow::* field) {
    if (rows.empty() || rows.front().*field >= level) return std::nullopt;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double y0 = rows[i - 1].*field, y1 = rows[i].*field;
        if (y1 >= level) {
            const double f = (level - y0) / (y1 - y0);
            return rows[i - 1].j + f * (rows[i].j - rows[i - 1].j);
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Sweep the coupling scale and track, per value, the disorder-averaged
/// central eigenstate entropy and per-sector spacing ratio. Realization r
/// reuses the same underlying draws at every coupling value (the couplings
/// scale linearly with j), so the curves differ only through j — not noise.
/// Worker threads split the realizations; the reduction order is fixed, so
/// results are independent of the thread count.
inline ChaosScanResult chaos_boundary_scan(const RegisterConfig& base,
                                           const ChaosScanOptions& opt) {
    if (opt.j_values.empty())
        throw std::invalid_argument("chaos_boundary_scan needs a nonempty j grid");
    if (!std::is_sorted(opt.j_values.begin(), opt.j_values.end()))
        throw std::invalid_argument("chaos_boundary_scan j grid must be ascending");
    if (opt.realizations < 1)
        throw std::invalid_argument("chaos_boundary_scan needs >= 1 realization");
    require_valid(base);

    const int nj = static_cast<int>(opt.j_values.size());
    const int nr = opt.realizations;
    // per (realization, j) samples, reduced sequentially afterwards
    std::vector<double> entropy(static_cast<std::size_t>(nr) * nj);
    std::vector<double> ratio(static_cast<std::size_t>(nr) * nj);

    auto worker = [&](int tid, int stride) {
        for (int r = tid; r < nr; r += stride) {
            for (int ji = 0; ji < nj; ++ji) {
                RegisterConfig c = base;
                c.j_scale = opt.j_values[ji];
                const DisorderRealization real = sample_disorder(c, r);
                const Hamiltonian h = build_hamiltonian(real);
                const ParityBlocks blocks = split_by_parity(h);
                double ratio_acc = 0.0;
                std::vector<std::pair<double, double>> levels;  // (E, S^(k))
                levels.reserve(h.dim());
                for (int parity_sector : {0, 1}) {
                    const Spectrum s = diagonalize_sector(blocks, parity_sector);
                    ratio_acc += mean_spacing_ratio(s.eigenvalues, opt.ratio_fraction);
                    for (int k = 0; k < s.dim(); ++k) {
                        const EigenstateProfile p = eigenstate_profile(s, k);
                        levels.emplace_back(p.energy, p.entropy_bits);
                    }
                }
                std::sort(levels.begin(), levels.end());
                auto [lo, hi] = detail::central_range(
                    static_cast<int>(levels.size()), opt.entropy_fraction);
                double s_acc = 0.0;
                for (int k = lo; k < hi; ++k) s_acc += levels[k].second;
                entropy[static_cast<std::size_t>(r) * nj + ji] = s_acc / (hi - lo);
                ratio[static_cast<std::size_t>(r) * nj + ji] = 0.5 * ratio_acc;
            }
        }
    };

    const int threads = std::clamp(opt.threads, 1, nr);
    if (threads == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
        for (auto& t : pool) t.join();
    }

    ChaosScanResult out;
    out.rows.resize(nj);
    for (int ji = 0; ji < nj; ++ji) {
        ChaosScanRow& row = out.rows[ji];
        row.j = opt.j_values[ji];
        double se = 0.0, sr = 0.0;
        for (int r = 0; r < nr; ++r) {
            se += entropy[static_cast<std::size_t>(r) * nj + ji];
            sr += ratio[static_cast<std::size_t>(r) * nj + ji];
        }
        row.mean_entropy = se / nr;
        row.mean_ratio = sr / nr;
        if (nr > 1) {
            double ve = 0.0, vr = 0.0;
            for (int r = 0; r < nr; ++r) {
                const double de = entropy[static_cast<std::size_t>(r) * nj + ji] - row.mean_entropy;
                const double dr = ratio[static_cast<std::size_t>(r) * nj + ji] - row.mean_ratio;
                ve += de * de;
                vr += dr * dr;
            }
            row.stderr_entropy = std::sqrt(ve / (nr - 1) / nr);
            row.stderr_ratio = std::sqrt(vr / (nr - 1) / nr);
        }
    }
    out.j_entropy_crossing =
        detail::first_upward_crossing(out.rows, 1.0, &ChaosScanRow::mean_entropy);
    out.j_ratio_crossing = detail::first_upward_crossing(
        out.rows, ratio_crossing_level, &ChaosScanRow::mean_ratio);
    return out;
}

}  // namespace qreg
