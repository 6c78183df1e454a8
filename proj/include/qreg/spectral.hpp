#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qreg/register_model.hpp"

namespace qreg {

class EigensolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fewer occupied bins (or weighted pairs) than the Breit-Wigner fit needs;
/// callers fall back to golden_rule_width.
class FitUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Eigendecomposition over an explicit list of basis states. For a full
/// diagonalization `states` is the identity map 0..2^n-1; for one conserved
/// parity sector it lists the sector's basis bits (ascending). Column k of
/// `coefficients` is eigenvector k: coefficients(f, k) = C_f^(k).
struct Spectrum {
    Eigen::VectorXd eigenvalues;        // ascending
    Eigen::MatrixXd coefficients;       // (basis row f, eigenstate k)
    std::vector<std::uint32_t> states;  // basis bits per row, ascending

    int dim() const { return static_cast<int>(eigenvalues.size()); }

    /// Row index of a basis state; throws if the state is not in this basis
    /// (e.g. wrong parity sector).
    int row_of(BasisState i) const {
        auto it = std::lower_bound(states.begin(), states.end(), i.bits);
        if (it == states.end() || *it != i.bits)
            throw std::invalid_argument("basis state " + std::to_string(i.bits) +
                                        " is not in this spectrum's basis");
        return static_cast<int>(it - states.begin());
    }
};

namespace detail {

inline Spectrum diagonalize_matrix(const Eigen::MatrixXd& m,
                                   std::vector<std::uint32_t> states) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
        throw EigensolverError(
            "symmetric eigensolver failed to converge within its internal "
            "iteration cap (30 implicit QL sweeps per off-diagonal element), "
            "dim=" + std::to_string(m.rows()));
    Spectrum s;
    s.eigenvalues = solver.eigenvalues();
    s.coefficients = solver.eigenvectors();
    s.states = std::move(states);
    return s;
}

}  // namespace detail

/// Full diagonalization of the register Hamiltonian.
inline Spectrum diagonalize(const Hamiltonian& h) {
    std::vector<std::uint32_t> states(h.dim());
    std::iota(states.begin(), states.end(), 0u);
    return detail::diagonalize_matrix(h.matrix, std::move(states));
}

/// Diagonalize one conserved-parity block. Dynamics started from a basis
/// state stays inside the state's own sector, so this is the cheap route for
/// time evolution (half the dimension, an eighth of the work).
inline Spectrum diagonalize_sector(const ParityBlocks& b, int parity_sector) {
    if (parity_sector == 0)
        return detail::diagonalize_matrix(b.even, b.even_states);
    return detail::diagonalize_matrix(b.odd, b.odd_states);
}

/// Strength function of a basis state: its weight distribution over the exact
/// eigenstates, with the binned density and its first two moments.
struct StrengthFunction {
    BasisState initial_state;
    std::vector<std::pair<double, double>> pairs;  // (E^(k), |C_i^(k)|^2)
    double bin_lo = 0.0;
    double bin_width = 0.0;
    std::vector<double> bin_density;  // sum of weights in bin / bin width
    double first_moment = 0.0;        // equals H_ii
    double second_moment = 0.0;       // central; equals sum_edges J_ij^2
};

inline StrengthFunction strength_function(const Spectrum& s, BasisState i,
                                          double bin_width) {
    if (!(bin_width > 0.0))
        throw std::invalid_argument("bin_width must be > 0");
    const int row = s.row_of(i);
    const int dim = s.dim();

    StrengthFunction sf;
    sf.initial_state = i;
    sf.pairs.reserve(dim);
    double m1 = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double w = s.coefficients(row, k) * s.coefficients(row, k);
        sf.pairs.emplace_back(s.eigenvalues(k), w);
        m1 += w * s.eigenvalues(k);
    }
    double m2 = 0.0;
    for (const auto& [e, w] : sf.pairs) m2 += w * (e - m1) * (e - m1);
    sf.first_moment = m1;
    sf.second_moment = m2;

    sf.bin_width = bin_width;
    const double lo = s.eigenvalues(0), hi = s.eigenvalues(dim - 1);
    sf.bin_lo = lo - 0.5 * bin_width;
    const int nbins =
        std::max(1, static_cast<int>(std::floor((hi - sf.bin_lo) / bin_width)) + 1);
    sf.bin_density.assign(nbins, 0.0);
    for (const auto& [e, w] : sf.pairs) {
        int b = static_cast<int>(std::floor((e - sf.bin_lo) / bin_width));
        b = std::clamp(b, 0, nbins - 1);
        sf.bin_density[b] += w / bin_width;
    }
    return sf;
}

namespace detail {

/// Nelder-Mead on a small fixed dimension; enough for the two-parameter
/// Breit-Wigner shape fit.
template <int N, class Fn>
Eigen::Matrix<double, N, 1> nelder_mead(Fn&& f, Eigen::Matrix<double, N, 1> x0,
                                        double step, int max_iter = 400) {
    using Vec = Eigen::Matrix<double, N, 1>;
    std::vector<std::pair<double, Vec>> simplex;
    simplex.reserve(N + 1);
    simplex.emplace_back(f(x0), x0);
    for (int d = 0; d < N; ++d) {
        Vec x = x0;
        x(d) += step;
        simplex.emplace_back(f(x), x);
    }
    auto order = [&] {
        std::sort(simplex.begin(), simplex.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    };
    order();
    for (int it = 0; it < max_iter; ++it) {
        Vec centroid = Vec::Zero();
        for (int v = 0; v < N; ++v) centroid += simplex[v].second;
        centroid /= N;
        const Vec& worst = simplex[N].second;
        Vec refl = centroid + (centroid - worst);
        double fr = f(refl);
        if (fr < simplex[0].first) {
            Vec exp_ = centroid + 2.0 * (centroid - worst);
            double fe = f(exp_);
            simplex[N] = fe < fr ? std::make_pair(fe, exp_) : std::make_pair(fr, refl);
        } else if (fr < simplex[N - 1].first) {
            simplex[N] = {fr, refl};
        } else {
            Vec con = centroid + 0.5 * (worst - centroid);
            double fc = f(con);
            if (fc < simplex[N].first) {
                simplex[N] = {fc, con};
            } else {
                for (int v = 1; v <= N; ++v) {
                    Vec x = simplex[0].second +
                            0.5 * (simplex[v].second - simplex[0].second);
                    simplex[v] = {f(x), x};
                }
            }
        }
        order();
        if (std::abs(simplex[N].first - simplex[0].first) <
            1e-14 * (1.0 + std::abs(simplex[0].first)))
            break;
    }
    return simplex[0].second;
}

inline double breit_wigner_density(double e, double center, double gamma) {
    const double d = e - center;
    return gamma / (2.0 * std::numbers::pi * (d * d + 0.25 * gamma * gamma));
}

}  // namespace detail

struct BreitWignerFit {
    double gamma = 0.0;     // spreading width Gamma_i
    double shift = 0.0;     // level shift delta_i
    double residual = 0.0;  // fit residual norm over the window bins
};

/// Least-squares Breit-Wigner fit to the binned density, restricted to a
/// window |E - E_i - delta| <= 4*Gamma and iterated twice from a moment-based
/// start. The window keeps the fit away from the far tails, whose weight the
/// Lorentzian form overstates.
inline BreitWignerFit fit_breit_wigner(const StrengthFunction& sf) {
    int significant = 0;
    for (const auto& [e, w] : sf.pairs)
        if (w > 1e-12) ++significant;
    if (significant < 20)
        throw FitUnavailable("only " + std::to_string(significant) +
                             " pairs carry weight > 1e-12; need 20");

    const double e_i = sf.first_moment;
    double gamma = std::sqrt(sf.second_moment);
    // peak bin locates the initial shift guess
    int peak = 0;
    for (int b = 1; b < static_cast<int>(sf.bin_density.size()); ++b)
        if (sf.bin_density[b] > sf.bin_density[peak]) peak = b;
    double shift = sf.bin_lo + (peak + 0.5) * sf.bin_width - e_i;

    double residual = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        const double lo = e_i + shift - 4.0 * gamma;
        const double hi = e_i + shift + 4.0 * gamma;
        std::vector<std::pair<double, double>> window;  // (bin center, density)
        int occupied = 0;
        for (int b = 0; b < static_cast<int>(sf.bin_density.size()); ++b) {
            const double c = sf.bin_lo + (b + 0.5) * sf.bin_width;
            if (c < lo || c > hi) continue;
            window.emplace_back(c, sf.bin_density[b]);
            if (sf.bin_density[b] > 0.0) ++occupied;
        }
        if (occupied < 5)
            throw FitUnavailable("window holds " + std::to_string(occupied) +
                                 " occupied bins; need 5");
        auto sse = [&](const Eigen::Vector2d& p) {
            const double g = std::exp(p(0));  // log-parameterized: Gamma > 0
            double acc = 0.0;
            for (const auto& [c, d] : window) {
                const double m = detail::breit_wigner_density(c, e_i + p(1), g);
                acc += (d - m) * (d - m);
            }
            return acc;
        };
        Eigen::Vector2d start(std::log(gamma), shift);
        Eigen::Vector2d best = detail::nelder_mead<2>(sse, start, 0.3);
        gamma = std::exp(best(0));
        shift = best(1);
        residual = std::sqrt(sse(best));
    }
    return {gamma, shift, residual};
}

struct GoldenRuleWidth {
    double gamma = 0.0;          // 2*pi*mean(J^2)*rho_f, empirical rho_f
    double gamma_scaling = 0.0;  // 2*pi*J_r^2*qn/Delta0
    double gamma_coarse = 0.0;   // J_r^2*qn/Delta0
    int coupled_in_window = 0;   // 0 => gamma = 0, empirical estimate unavailable
    double window = 0.0;
};

/// Golden-rule spreading width of a basis state. The density of directly
/// coupled final states is counted empirically inside |E_f - E_i| <= W
/// (W = Delta0 unless overridden); the coarse qn/Delta0 scaling forms are
/// reported alongside.
inline GoldenRuleWidth golden_rule_width(const DisorderRealization& r,
                                         BasisState i, double window = 0.0) {
    if (!(r.config.delta0 > 0.0))
        throw std::invalid_argument("golden_rule_width needs delta0 > 0");
    const double w = window > 0.0 ? window : r.config.delta0;
    const double e_i = diagonal_energy(r, i.bits);

    GoldenRuleWidth out;
    out.window = w;
    double mean_j2 = 0.0;
    for (const auto& c : r.couplings) {
        mean_j2 += c.value * c.value;
        const std::uint32_t f = i.bits ^ ((1u << c.i) | (1u << c.j));
        if (std::abs(diagonal_energy(r, f) - e_i) <= w) ++out.coupled_in_window;
    }
    const double qn = static_cast<double>(r.couplings.size());
    if (qn > 0) mean_j2 /= qn;
    const double rho_f = out.coupled_in_window / (2.0 * w);
    out.gamma = 2.0 * std::numbers::pi * mean_j2 * rho_f;
    const double jr2 = coupling_mean_square(r.config);
    out.gamma_scaling = 2.0 * std::numbers::pi * jr2 * qn / r.config.delta0;
    out.gamma_coarse = jr2 * qn / r.config.delta0;
    return out;
}

struct EigenstateProfile {
    int k = 0;
    double energy = 0.0;
    double entropy_bits = 0.0;   // S^(k) = -sum w log2 w
    double participation = 0.0;  // N_p = 1 / sum w^2
};

namespace detail {

inline void entropy_participation(const auto& weights, double& entropy_bits,
                                  double& participation) {
    double s = 0.0, p2 = 0.0;
    for (int f = 0; f < static_cast<int>(weights.size()); ++f) {
        const double w = weights(f);
        if (w > 0.0) s -= w * std::log2(w);
        p2 += w * w;
    }
    entropy_bits = s;
    participation = p2 > 0.0 ? 1.0 / p2 : 0.0;
}

}  // namespace detail

inline EigenstateProfile eigenstate_profile(const Spectrum& s, int k) {
    if (k < 0 || k >= s.dim()) throw std::invalid_argument("eigenstate index out of range");
    EigenstateProfile p;
    p.k = k;
    p.energy = s.eigenvalues(k);
    const auto w = s.coefficients.col(k).array().square();
    detail::entropy_participation(w, p.entropy_bits, p.participation);
    return p;
}

struct DensityOfStates {
    double bin_lo = 0.0;
    double bin_width = 0.0;
    std::vector<int> counts;       // eigenvalue histogram, total = dim
    double gauss_weight = 0.0;     // total weight of the Gaussian reference
    double gauss_sigma2 = 0.0;     // n*mean(eps^2) + (Delta E)^2, mean 0
    double central_spacing = 0.0;  // mean level spacing, central 10%
    double coarse_spacing = 0.0;   // Delta0 * n * 2^-n
};

/// Eigenvalue histogram with the Gaussian reference curve whose variance is
/// fixed by the disorder strengths, plus the central mean level spacing and
/// its coarse estimate.
inline DensityOfStates density_of_states(const Spectrum& s,
                                         const DisorderRealization& r,
                                         double bin_width) {
    if (!(bin_width > 0.0))
        throw std::invalid_argument("bin_width must be > 0");
    const int dim = s.dim();
    DensityOfStates d;
    d.bin_width = bin_width;
    const double lo = s.eigenvalues(0), hi = s.eigenvalues(dim - 1);
    d.bin_lo = lo - 0.5 * bin_width;
    const int nbins =
        std::max(1, static_cast<int>(std::floor((hi - d.bin_lo) / bin_width)) + 1);
    d.counts.assign(nbins, 0);
    for (int k = 0; k < dim; ++k) {
        int b = static_cast<int>(std::floor((s.eigenvalues(k) - d.bin_lo) / bin_width));
        d.counts[std::clamp(b, 0, nbins - 1)]++;
    }
    d.gauss_weight = dim;
    double eps2 = 0.0;
    for (double e : r.eps) eps2 += e * e;
    d.gauss_sigma2 = eps2 + second_moment(r);  // n*mean(eps^2) + (Delta E)^2

    const int c0 = static_cast<int>(0.45 * dim), c1 = static_cast<int>(0.55 * dim);
    if (c1 - c0 >= 2)
        d.central_spacing = (s.eigenvalues(c1 - 1) - s.eigenvalues(c0)) / (c1 - 1 - c0);
    else if (dim >= 2)
        d.central_spacing = (hi - lo) / (dim - 1);
    d.coarse_spacing = r.config.delta0 * r.config.n * std::pow(2.0, -r.config.n);
    return d;
}

/// Gaussian reference density at energy e (level count per unit energy).
inline double gaussian_reference_density(const DensityOfStates& d, double e) {
    if (!(d.gauss_sigma2 > 0.0)) return 0.0;
    return d.gauss_weight / std::sqrt(2.0 * std::numbers::pi * d.gauss_sigma2) *
           std::exp(-e * e / (2.0 * d.gauss_sigma2));
}

}  // namespace qreg
