#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qreg/register_model.hpp"
#include "qreg/spectral.hpp"

namespace qreg {

// ---------------------------------------------------------------------------
// time grids

inline std::vector<double> linear_times(double t0, double t1, int count) {
    if (count < 2 || !(t1 > t0))
        throw std::invalid_argument("linear_times needs count >= 2 and t1 > t0");
    std::vector<double> t(count);
    for (int i = 0; i < count; ++i)
        t[i] = t0 + (t1 - t0) * i / (count - 1);
    return t;
}

inline std::vector<double> geometric_times(double t0, double t1, int count) {
    if (count < 2 || !(t0 > 0.0) || !(t1 > t0))
        throw std::invalid_argument("geometric_times needs count >= 2 and t1 > t0 > 0");
    std::vector<double> t(count);
    const double r = std::log(t1 / t0) / (count - 1);
    for (int i = 0; i < count; ++i) t[i] = t0 * std::exp(r * i);
    t.front() = t0;
    t.back() = t1;
    return t;
}

/// Geometric grid spanning the interesting dynamical range of a realization:
/// from well inside the quadratic regime (~1/(50*DeltaE)) to well past the
/// golden-rule lifetime (~50/Gamma, or the Heisenberg-ish fallback when the
/// width estimate degenerates).
inline std::vector<double> default_time_grid(double deltaE2, double gamma,
                                             int count = 240) {
    if (!(deltaE2 > 0.0))
        throw std::invalid_argument("default_time_grid needs deltaE2 > 0");
    const double deltaE = std::sqrt(deltaE2);
    const double t0 = 1.0 / (50.0 * deltaE);
    double t1 = gamma > 0.0 ? 50.0 / gamma : 5e3 / deltaE;
    if (t1 <= t0) t1 = 100.0 * t0;
    return geometric_times(t0, t1, count);
}

// ---------------------------------------------------------------------------
// exact evolution

struct EvolveOptions {
    std::vector<double> times;
    bool store_components = false;        // keep full W_f(t) matrix
    std::size_t component_cap_bytes = std::size_t{1} << 28;
    int chunk = 32;                       // times per matrix-product block
};

struct Trajectory {
    BasisState initial_state;
    std::vector<double> times;
    std::vector<double> survival;       // W_i(t)
    std::vector<double> entropy_bits;   // S(t) = -sum_f W_f log2 W_f
    std::vector<double> participation;  // N_p(t) = 1 / sum_f W_f^2
    Eigen::MatrixXd components;         // (time, basis row f); empty unless stored
    bool components_stored = false;
    bool components_dropped = false;    // requested but over the byte cap
};

/// Exact time evolution of a basis state under the diagonalized Hamiltonian:
/// W_f(t) = |sum_k C_i^(k) C_f^(k) exp(-i E^(k) t)|^2. Phases are evaluated
/// in chunks of times so the inner work is two dense matrix products.
inline Trajectory evolve(const Spectrum& s, BasisState i, const EvolveOptions& opt) {
    if (opt.times.empty()) throw std::invalid_argument("evolve needs a nonempty time grid");
    if (opt.chunk < 1) throw std::invalid_argument("evolve chunk must be >= 1");
    const int dim = s.dim();
    const int row = s.row_of(i);
    const int nt = static_cast<int>(opt.times.size());

    Trajectory tr;
    tr.initial_state = i;
    tr.times = opt.times;
    tr.survival.resize(nt);
    tr.entropy_bits.resize(nt);
    tr.participation.resize(nt);
    if (opt.store_components) {
        const std::size_t need = static_cast<std::size_t>(nt) * dim * sizeof(double);
        if (need <= opt.component_cap_bytes) {
            tr.components.resize(nt, dim);
            tr.components_stored = true;
        } else {
            tr.components_dropped = true;
        }
    }

    const Eigen::VectorXd ci = s.coefficients.row(row).transpose();
    Eigen::MatrixXd phase_re(dim, opt.chunk), phase_im(dim, opt.chunk);
    Eigen::MatrixXd amp_re, amp_im;
    for (int base = 0; base < nt; base += opt.chunk) {
        const int block = std::min(opt.chunk, nt - base);
        for (int c = 0; c < block; ++c) {
            const double t = opt.times[base + c];
            for (int k = 0; k < dim; ++k) {
                const double ph = s.eigenvalues(k) * t;
                phase_re(k, c) = ci(k) * std::cos(ph);
                phase_im(k, c) = -ci(k) * std::sin(ph);
            }
        }
        amp_re.noalias() = s.coefficients * phase_re.leftCols(block);
        amp_im.noalias() = s.coefficients * phase_im.leftCols(block);
        for (int c = 0; c < block; ++c) {
            double entropy = 0.0, p2 = 0.0;
            for (int f = 0; f < dim; ++f) {
                const double w = amp_re(f, c) * amp_re(f, c) + amp_im(f, c) * amp_im(f, c);
                if (w > 0.0) entropy -= w * std::log2(w);
                p2 += w * w;
                if (tr.components_stored) tr.components(base + c, f) = w;
            }
            tr.survival[base + c] =
                amp_re(row, c) * amp_re(row, c) + amp_im(row, c) * amp_im(row, c);
            tr.entropy_bits[base + c] = entropy;
            tr.participation[base + c] = p2 > 0.0 ? 1.0 / p2 : 0.0;
        }
    }
    return tr;
}

/// Exact survival probability at a single time, from the initial state's
/// eigenstate weights alone: W_i(t) = |sum_k |C_i^(k)|^2 exp(-i E^(k) t)|^2.
inline double survival_probability(const Spectrum& s, BasisState i, double t) {
    const int row = s.row_of(i);
    double re = 0.0, im = 0.0;
    for (int k = 0; k < s.dim(); ++k) {
        const double w = s.coefficients(row, k) * s.coefficients(row, k);
        re += w * std::cos(s.eigenvalues(k) * t);
        im -= w * std::sin(s.eigenvalues(k) * t);
    }
    return re * re + im * im;
}

// ---------------------------------------------------------------------------
// analytic survival models

/// True when the coupling graph contains no closed loop (union-find).
inline bool coupling_graph_is_acyclic(std::span<const Coupling> couplings) {
    int max_site = -1;
    for (const auto& c : couplings) max_site = std::max({max_site, c.i, c.j});
    std::vector<int> parent(max_site + 1);
    for (int v = 0; v <= max_site; ++v) parent[v] = v;
    auto find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (const auto& c : couplings) {
        const int a = find(c.i), b = find(c.j);
        if (a == b) return false;
        parent[a] = b;
    }
    return true;
}

/// Exact survival probability at zero level splitting: with all eps_i = 0 the
/// coupling terms commute pairwise, and on a loop-free graph the return
/// amplitude factorizes into prod cos(J_ij t).
inline double zero_field_survival(std::span<const Coupling> couplings, double t) {
    if (!coupling_graph_is_acyclic(couplings))
        throw std::invalid_argument(
            "zero-field product form needs a loop-free coupling graph; closed "
            "loops add interference terms it omits");
    double w = 1.0;
    for (const auto& c : couplings) {
        const double f = std::cos(c.value * t);
        w *= f * f;
    }
    return w;
}

enum class SurvivalModel {
    SmallTime,      // 1 - (DeltaE)^2 t^2
    Gaussian,       // exp(-(DeltaE)^2 t^2)
    Exponential,    // exp(-Gamma t)
    Interpolation,  // Gaussian -> exponential crossover, valid for Gamma < DeltaE
    ZeroFieldExact  // prod cos^2(J_ij t), needs the couplings
};

struct SurvivalParams {
    double deltaE2 = 0.0;  // (Delta E)^2 = sum_edges J_ij^2
    double gamma = 0.0;    // spreading width
};

inline double analytic_survival(SurvivalModel m, const SurvivalParams& p, double t,
                                std::span<const Coupling> couplings = {}) {
    switch (m) {
        case SurvivalModel::SmallTime:
            return 1.0 - p.deltaE2 * t * t;
        case SurvivalModel::Gaussian:
            return std::exp(-p.deltaE2 * t * t);
        case SurvivalModel::Exponential:
            return std::exp(-p.gamma * t);
        case SurvivalModel::Interpolation: {
            if (!(p.deltaE2 > 0.0))
                throw std::invalid_argument("interpolation model needs deltaE2 > 0");
            if (!(p.gamma < std::sqrt(p.deltaE2)))
                throw std::invalid_argument(
                    "interpolation model assumes Gamma < DeltaE (many weak "
                    "decay channels); got Gamma >= DeltaE");
            const double g2 = p.gamma * p.gamma;
            return std::exp(g2 / (2.0 * p.deltaE2) -
                            std::sqrt(g2 * g2 / (4.0 * p.deltaE2 * p.deltaE2) +
                                      g2 * t * t));
        }
        case SurvivalModel::ZeroFieldExact:
            if (couplings.empty())
                throw std::invalid_argument("zero-field model needs the couplings");
            return zero_field_survival(couplings, t);
    }
    throw std::invalid_argument("unknown survival model");
}

// ---------------------------------------------------------------------------
// perturbative and stationary components

/// First-order component weight of a directly coupled state whose transition
/// frequency is omega = E_f - E_i, with the initial state decaying at rate
/// Gamma: |H_if|^2 / (omega^2 + Gamma^2/4) * |exp((i omega - Gamma/2) t) - 1|^2.
inline double perturbative_component(double h_if, double omega, double gamma,
                                     double t) {
    const double denom = omega * omega + 0.25 * gamma * gamma;
    if (denom < 1e-300) return h_if * h_if * t * t;  // resonant, undamped limit
    const double decay = std::exp(-0.5 * gamma * t);
    const double osc = 1.0 - 2.0 * decay * std::cos(omega * t) + decay * decay;
    return h_if * h_if / denom * osc;
}

/// Long-time average weight of basis state f when started from i:
/// W_f^s = sum_k |C_i^(k)|^2 |C_f^(k)|^2.
inline double stationary_component(const Spectrum& s, BasisState i, BasisState f) {
    const int ri = s.row_of(i), rf = s.row_of(f);
    double w = 0.0;
    for (int k = 0; k < s.dim(); ++k) {
        const double a = s.coefficients(ri, k), b = s.coefficients(rf, k);
        w += a * a * b * b;
    }
    return w;
}

/// All stationary weights at once (index = basis row).
inline Eigen::VectorXd stationary_distribution(const Spectrum& s, BasisState i) {
    const int ri = s.row_of(i);
    const Eigen::VectorXd wi = s.coefficients.row(ri).transpose().array().square();
    return (s.coefficients.array().square().matrix() * wi);
}

/// Breit-Wigner estimate of a stationary weight: the overlap of two width-
/// Gamma profiles centered at E_i and E_f is a width-2*Gamma profile at the
/// separation, diluted by the level density at the midpoint.
inline double stationary_component_estimate(double e_i, double e_f, double gamma,
                                            double rho_mid) {
    if (!(rho_mid > 0.0))
        throw std::invalid_argument("stationary estimate needs rho_mid > 0");
    return detail::breit_wigner_density(e_f, e_i, 2.0 * gamma) / rho_mid;
}

// ---------------------------------------------------------------------------
// entropy estimates and the critical time

/// Small-time entropy growth: qn equally coupled states each at weight
/// (J_r t)^2 give S ~ qn (J_r t)^2 log2(1/(J_r t)^2).
inline double entropy_small_time(double qn, double jr2, double t) {
    const double w = jr2 * t * t;
    if (!(w > 0.0) || w >= 1.0) return 0.0;  // outside the model's validity range
    return qn * w * std::log2(1.0 / w);
}

/// Two-level entropy model: survival w on the initial state, the rest spread
/// evenly over n_f final states.
inline double entropy_from_survival(double w, double n_f) {
    if (!(n_f > 0.0)) throw std::invalid_argument("entropy model needs n_f > 0");
    w = std::clamp(w, 0.0, 1.0);
    double s = 0.0;
    if (w > 0.0) s -= w * std::log2(w);
    if (w < 1.0) s -= (1.0 - w) * std::log2((1.0 - w) / n_f);
    return s;
}

/// Shortcut keeping only the spreading term: S ~ (1 - w) log2(n_f).
inline double entropy_from_survival_shortcut(double w, double n_f) {
    if (!(n_f > 0.0)) throw std::invalid_argument("entropy model needs n_f > 0");
    return (1.0 - std::clamp(w, 0.0, 1.0)) * std::log2(n_f);
}

/// Survival level at which the shortcut entropy crosses one bit:
/// w = 1 - 1/log2(n_f).
inline double melting_survival(double n_f) {
    const double l = std::log2(n_f);
    if (!(l > 0.0)) throw std::invalid_argument("melting level needs n_f > 1");
    return 1.0 - 1.0 / l;
}

/// Effective number of final states resolved by the spreading width:
/// n_f ~ qn * Gamma / Delta0.
inline double refined_final_count(double qn, double gamma, double delta0) {
    if (!(delta0 > 0.0)) throw std::invalid_argument("refined_final_count needs delta0 > 0");
    return qn * gamma / delta0;
}

/// Critical time from the interpolation survival model crossing the melting
/// level: t_c = (1/(Gamma log2 n_f)) sqrt(1 + Gamma^2 log2(n_f) / DeltaE^2).
inline double critical_time_interp(double gamma, double deltaE2, double n_f) {
    const double l = std::log2(n_f);
    if (!(gamma > 0.0) || !(l > 0.0) || !(deltaE2 > 0.0))
        throw std::invalid_argument("critical_time_interp needs gamma, deltaE2 > 0 and n_f > 1");
    return std::sqrt(1.0 + gamma * gamma * l / deltaE2) / (gamma * l);
}

/// Exponential-regime limit of the critical time: t_c = 1/(Gamma log2 n_f).
inline double critical_time_exponential(double gamma, double n_f) {
    const double l = std::log2(n_f);
    if (!(gamma > 0.0) || !(l > 0.0))
        throw std::invalid_argument("critical_time_exponential needs gamma > 0 and n_f > 1");
    return 1.0 / (gamma * l);
}

/// Critical time expressed through a single-spin lifetime tau0:
/// t_c = tau0 / (n log2 n).
inline double critical_time_from_lifetime(double tau0, double n) {
    if (!(tau0 > 0.0) || !(n > 1.0))
        throw std::invalid_argument("critical_time_from_lifetime needs tau0 > 0, n > 1");
    return tau0 / (n * std::log2(n));
}

/// Saturation entropy from the mean eigenstate participation number:
/// S(t >> t_c) ~ log2(2 N_p).
inline double saturation_entropy(double participation) {
    if (!(participation > 0.0))
        throw std::invalid_argument("saturation_entropy needs participation > 0");
    return std::log2(2.0 * participation);
}

/// First upward crossing of the entropy through `threshold` bits, linearly
/// interpolated between the bracketing samples. Empty when the trajectory
/// never reaches the threshold (or starts above it).
inline std::optional<double> measure_critical_time(
    const std::vector<double>& times, const std::vector<double>& entropy_bits,
    double threshold = 1.0) {
    if (times.size() != entropy_bits.size())
        throw std::invalid_argument("times and entropy_bits lengths differ");
    if (times.empty() || entropy_bits.front() >= threshold) return std::nullopt;
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (entropy_bits[i] >= threshold) {
            const double s0 = entropy_bits[i - 1], s1 = entropy_bits[i];
            const double f = (threshold - s0) / (s1 - s0);
            return times[i - 1] + f * (times[i] - times[i - 1]);
        }
    }
    return std::nullopt;
}

inline std::optional<double> measure_critical_time(const Trajectory& tr,
                                                   double threshold = 1.0) {
    return measure_critical_time(tr.times, tr.entropy_bits, threshold);
}

}  // namespace qreg
