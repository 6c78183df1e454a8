#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qreg/rng.hpp"

namespace qreg {

/// Invalid register description (bad topology, bad parameters).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Register size exceeds the configured dense-storage cap.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TopologyKind { Chain, Ring, Grid, Explicit };

struct Topology {
    TopologyKind kind = TopologyKind::Chain;
    int grid_w = 0;
    int grid_h = 0;
    std::vector<std::pair<int, int>> explicit_edges;

    static Topology chain() { return {}; }
    static Topology ring() { return {TopologyKind::Ring, 0, 0, {}}; }
    static Topology grid(int w, int h) { return {TopologyKind::Grid, w, h, {}}; }
    static Topology edges(std::vector<std::pair<int, int>> e) {
        return {TopologyKind::Explicit, 0, 0, std::move(e)};
    }

    bool operator==(const Topology&) const = default;
};

enum class CouplingLaw {
    Uniform,     // J_ij uniform on [-J, J]
    RandomSign,  // J_ij = +-J with random sign
    Fixed        // J_ij = J
};

enum class SplittingLaw {
    UniformBand  // eps_i uniform on [0.5*Delta0, 1.5*Delta0]
};

/// Declarative register description: everything needed to regenerate an
/// ensemble bit-for-bit.
struct RegisterConfig {
    int n = 8;
    Topology topology = Topology::chain();
    double delta0 = 1.0;   // single-qubit splitting scale; 0 = zero-field limit
    double j_scale = 0.1;  // coupling scale J >= 0
    CouplingLaw j_law = CouplingLaw::Uniform;
    SplittingLaw eps_law = SplittingLaw::UniformBand;
    std::uint64_t master_seed = 0;
    int size_cap = 14;  // dense 2^n storage cap

    bool operator==(const RegisterConfig&) const = default;
};

/// Mean square coupling implied by the law: J_r^2 = mean(J_ij^2).
inline double coupling_mean_square(const RegisterConfig& c) {
    switch (c.j_law) {
        case CouplingLaw::Uniform:
            return c.j_scale * c.j_scale / 3.0;
        default:
            return c.j_scale * c.j_scale;
    }
}

namespace detail {

inline void normalize_edge(std::pair<int, int>& e) {
    if (e.first > e.second) std::swap(e.first, e.second);
}

}  // namespace detail

/// Edge set of the topology, normalized to i < j, in a fixed deterministic
/// order (sampling order of the couplings). Throws ConfigError on a malformed
/// topology.
inline std::vector<std::pair<int, int>> edge_list(const Topology& t, int n) {
    std::vector<std::pair<int, int>> edges;
    switch (t.kind) {
        case TopologyKind::Chain:
            for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
            break;
        case TopologyKind::Ring:
            if (n < 3) throw ConfigError("ring topology needs n >= 3");
            for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
            edges.emplace_back(0, n - 1);
            break;
        case TopologyKind::Grid: {
            if (t.grid_w < 1 || t.grid_h < 1 || t.grid_w * t.grid_h != n) {
                std::ostringstream os;
                os << "grid " << t.grid_w << "x" << t.grid_h
                   << " does not match n=" << n;
                throw ConfigError(os.str());
            }
            for (int r = 0; r < t.grid_h; ++r)
                for (int c = 0; c < t.grid_w; ++c) {
                    int q = r * t.grid_w + c;
                    if (c + 1 < t.grid_w) edges.emplace_back(q, q + 1);
                    if (r + 1 < t.grid_h) edges.emplace_back(q, q + t.grid_w);
                }
            break;
        }
        case TopologyKind::Explicit: {
            edges = t.explicit_edges;
            std::set<std::pair<int, int>> seen;
            for (auto& e : edges) {
                detail::normalize_edge(e);
                if (e.first == e.second)
                    throw ConfigError("edge connects a qubit to itself: " +
                                      std::to_string(e.first));
                if (e.first < 0 || e.second >= n) {
                    std::ostringstream os;
                    os << "edge (" << e.first << "," << e.second
                       << ") out of range for n=" << n;
                    throw ConfigError(os.str());
                }
                if (!seen.insert(e).second) {
                    std::ostringstream os;
                    os << "duplicate edge (" << e.first << "," << e.second << ")";
                    throw ConfigError(os.str());
                }
            }
            break;
        }
    }
    return edges;
}

/// All config problems at once; empty when valid.
inline std::vector<std::string> validate(const RegisterConfig& c) {
    std::vector<std::string> errors;
    if (c.n < 1) errors.push_back("n must be >= 1");
    if (c.size_cap < 1) errors.push_back("size_cap must be >= 1");
    if (c.n >= 1 && c.size_cap >= 1 && c.n > c.size_cap) {
        std::ostringstream os;
        os << "n=" << c.n << " exceeds size cap " << c.size_cap
           << " (2^n dense storage)";
        errors.push_back(os.str());
    }
    if (!(c.delta0 >= 0.0)) errors.push_back("delta0 must be >= 0");
    if (!(c.j_scale >= 0.0)) errors.push_back("j_scale must be >= 0");
    if (c.n >= 1) {
        try {
            edge_list(c.topology, c.n);
        } catch (const ConfigError& e) {
            errors.push_back(e.what());
        }
    }
    return errors;
}

inline void require_valid(const RegisterConfig& c) {
    auto errors = validate(c);
    if (errors.empty()) return;
    std::string msg = "invalid register config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
}

inline int edge_count(const RegisterConfig& c) {
    return static_cast<int>(edge_list(c.topology, c.n).size());
}

/// Pair density q, from "q n interacting pairs": edges per qubit.
inline double pair_density(const RegisterConfig& c) {
    return static_cast<double>(edge_count(c)) / static_cast<double>(c.n);
}

struct Coupling {
    int i = 0;
    int j = 0;
    double value = 0.0;
};

/// One concrete draw of the random parameters {eps_i}, {J_ij}.
struct DisorderRealization {
    RegisterConfig config;
    std::uint64_t realization_index = 0;
    std::vector<double> eps;         // n single-qubit splittings
    std::vector<Coupling> couplings; // one per topology edge, edge-list order
};

/// Deterministic draw: one uniform per eps_i, then one per edge, from a
/// splitmix64 stream seeded by (master_seed, realization_index).
inline DisorderRealization sample_disorder(const RegisterConfig& c,
                                           std::uint64_t realization_index) {
    require_valid(c);
    auto edges = edge_list(c.topology, c.n);
    SplitMix64 gen(realization_seed(c.master_seed, realization_index));

    DisorderRealization r;
    r.config = c;
    r.realization_index = realization_index;
    r.eps.resize(c.n);
    for (int i = 0; i < c.n; ++i)
        r.eps[i] = c.delta0 * gen.next_double(0.5, 1.5);
    r.couplings.reserve(edges.size());
    for (auto [a, b] : edges) {
        double u = gen.next_double();  // consumed by every law, stream-stable
        double j = 0.0;
        switch (c.j_law) {
            case CouplingLaw::Uniform:    j = c.j_scale * (2.0 * u - 1.0); break;
            case CouplingLaw::RandomSign: j = (u < 0.5 ? -1.0 : 1.0) * c.j_scale; break;
            case CouplingLaw::Fixed:      j = c.j_scale; break;
        }
        r.couplings.push_back({a, b, j});
    }
    return r;
}

/// Basis state of the register: bit b set = qubit b "up" (sigma^z = +1).
struct BasisState {
    std::uint32_t bits = 0;
};

inline int spin(std::uint32_t bits, int qubit) {
    return (bits >> qubit) & 1u ? +1 : -1;
}

/// Diagonal matrix element H_ss = sum_i eps_i * (+-1).
inline double diagonal_energy(const DisorderRealization& r, std::uint32_t bits) {
    double e = 0.0;
    for (int i = 0; i < r.config.n; ++i) e += r.eps[i] * spin(bits, i);
    return e;
}

/// Second moment of the strength function, (Delta E)^2 = sum_edges J_ij^2.
/// Independent of the initial basis state: each coupling moves any state to
/// exactly one distinct partner.
inline double second_moment(const DisorderRealization& r) {
    double s = 0.0;
    for (const auto& c : r.couplings) s += c.value * c.value;
    return s;
}

/// Default initial state for dynamics runs: the basis state whose diagonal
/// energy sits closest to the spectrum center (zero), i.e. deepest inside the
/// dense part of the spectrum. Ties break toward smaller bits.
inline BasisState auto_initial_state(const DisorderRealization& r) {
    const std::uint32_t dim = 1u << r.config.n;
    std::uint32_t best = 0;
    double best_abs = std::abs(diagonal_energy(r, 0));
    for (std::uint32_t s = 1; s < dim; ++s) {
        const double a = std::abs(diagonal_energy(r, s));
        if (a < best_abs) {
            best_abs = a;
            best = s;
        }
    }
    return {best};
}

struct Hamiltonian {
    int n = 0;
    Eigen::MatrixXd matrix;  // dense symmetric, 2^n x 2^n

    int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Assemble the dense 2^n Hamiltonian. Diagonal from the splittings, one
/// off-diagonal J_ij per edge per row (the two-bit-flip coupling).
inline Hamiltonian build_hamiltonian(const DisorderRealization& r) {
    const int n = r.config.n;
    if (n > r.config.size_cap) {
        std::ostringstream os;
        os << "n=" << n << " exceeds size cap " << r.config.size_cap;
        throw ResourceError(os.str());
    }
    const int dim = 1 << n;
    Hamiltonian h;
    h.n = n;
    h.matrix = Eigen::MatrixXd::Zero(dim, dim);
    for (int s = 0; s < dim; ++s)
        h.matrix(s, s) = diagonal_energy(r, static_cast<std::uint32_t>(s));
    for (const auto& c : r.couplings) {
        const std::uint32_t mask = (1u << c.i) | (1u << c.j);
        for (int s = 0; s < dim; ++s) {
            const int f = static_cast<int>(static_cast<std::uint32_t>(s) ^ mask);
            if (s < f) {
                h.matrix(s, f) = c.value;
                h.matrix(f, s) = c.value;
            }
        }
    }
    return h;
}

/// Parity of the up-spin count. Conserved: each coupling flips two bits, so
/// popcount changes by 0 or +-2.
inline int parity(std::uint32_t bits) { return std::popcount(bits) & 1; }

struct ParityBlocks {
    Eigen::MatrixXd even, odd;
    std::vector<std::uint32_t> even_states, odd_states;  // block row -> basis bits
};

/// Split H into its two conserved-parity blocks. The cross-parity entries of
/// H are identically zero; reassembling through the index maps reproduces H.
inline ParityBlocks split_by_parity(const Hamiltonian& h) {
    ParityBlocks b;
    const int dim = h.dim();
    for (int s = 0; s < dim; ++s) {
        auto bits = static_cast<std::uint32_t>(s);
        (parity(bits) == 0 ? b.even_states : b.odd_states).push_back(bits);
    }
    auto gather = [&](const std::vector<std::uint32_t>& states) {
        const int m = static_cast<int>(states.size());
        Eigen::MatrixXd block(m, m);
        for (int a = 0; a < m; ++a)
            for (int c = 0; c < m; ++c)
                block(a, c) = h.matrix(states[a], states[c]);
        return block;
    };
    b.even = gather(b.even_states);
    b.odd = gather(b.odd_states);
    return b;
}

}  // namespace qreg
