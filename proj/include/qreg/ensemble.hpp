#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qreg/chaos_stats.hpp"
#include "qreg/dynamics.hpp"
#include "qreg/manifest.hpp"
#include "qreg/register_model.hpp"
#include "qreg/spectral.hpp"
#include "qreg/version.hpp"

namespace qreg {

/// Round-trip-exact float formatting used in every data file.
inline std::string format_g17(double v) { return detail::g17(v); }

/// Write via a temporary name in the same directory, then rename into place,
/// so readers never observe a half-written file.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path data_csv;
    std::filesystem::path components_csv;  // evolve with store_components only
    std::filesystem::path summary_json;
};

inline RunPaths run_paths(const RunManifest& m) {
    RunPaths p;
    p.dir = m.out_dir;
    p.data_csv = p.dir / (command_name(m.command) + ".csv");
    p.components_csv = p.dir / "components.csv";
    p.summary_json = p.dir / "summary.json";
    return p;
}

/// Mean and standard error of one observable across realizations. A NaN
/// value marks the observable as unavailable for that realization (e.g. no
/// entropy crossing); such entries are excluded from the moments.
struct ObservableSummary {
    std::vector<double> values;  // one slot per realization
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stderr_value = std::numeric_limits<double>::quiet_NaN();
    bool stderr_defined = false;  // needs >= 2 defined values
    int defined_count = 0;
};

inline ObservableSummary summarize(std::vector<double> values) {
    ObservableSummary s;
    s.values = std::move(values);
    double acc = 0.0;
    for (double v : s.values)
        if (!std::isnan(v)) {
            acc += v;
            ++s.defined_count;
        }
    if (s.defined_count > 0) s.mean = acc / s.defined_count;
    if (s.defined_count >= 2) {
        double var = 0.0;
        for (double v : s.values)
            if (!std::isnan(v)) var += (v - s.mean) * (v - s.mean);
        s.stderr_value =
            std::sqrt(var / (s.defined_count - 1) / s.defined_count);
        s.stderr_defined = true;
    }
    return s;
}

struct RealizationFailure {
    int realization = -1;
    std::string message;
};

struct EnsembleSummary {
    Command command = Command::Evolve;
    int realizations = 0;
    std::uint64_t master_seed = 0;
    std::string version;
    bool partial = false;  // at least one realization failed
    std::vector<RealizationFailure> failures;
    std::vector<std::pair<std::string, ObservableSummary>> observables;
    nlohmann::ordered_json results;  // command-specific payload
};

namespace detail {

/// Run fn(0..count-1) on up to `threads` workers. Callers write results into
/// slots indexed by the argument, so the outcome is independent of scheduling.
template <class Fn>
void run_indexed_pool(int count, int threads, Fn&& fn) {
    threads = std::clamp(threads, 1, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

/// Ensemble-level (realization-independent) width scale: the golden-rule
/// estimate evaluated with the configured mean-square coupling.
inline double config_gamma_scale(const RegisterConfig& c) {
    if (!(c.delta0 > 0.0)) return 0.0;
    return 2.0 * std::numbers::pi * coupling_mean_square(c) * edge_count(c) /
           c.delta0;
}

inline double config_deltaE2(const RegisterConfig& c) {
    return coupling_mean_square(c) * edge_count(c);
}

}  // namespace detail

/// The shared time grid of a run: explicit bounds when given, otherwise the
/// default grid derived from the configured coupling scale (identical for
/// every realization, so rows align across the ensemble).
inline std::vector<double> ensemble_time_grid(const RunManifest& m,
                                              const RegisterConfig& reg) {
    switch (m.time_grid) {
        case TimeGridKind::Linear:
            return linear_times(m.time_min, m.time_max, m.time_count);
        case TimeGridKind::Geometric:
            return geometric_times(m.time_min, m.time_max, m.time_count);
        case TimeGridKind::Auto: {
            const double deltaE2 = detail::config_deltaE2(reg);
            if (!(deltaE2 > 0.0))
                throw std::invalid_argument(
                    "automatic time grid needs couplings (j_scale > 0); give "
                    "time_grid = linear or geometric instead");
            return default_time_grid(deltaE2, detail::config_gamma_scale(reg),
                                     m.time_count);
        }
    }
    throw std::invalid_argument("unknown time grid kind");
}

/// Strength-histogram bin width when the manifest leaves it automatic: a
/// fraction of the expected profile width (golden-rule scale when the fields
/// are on, spread scale otherwise).
inline double auto_bin_width(const RegisterConfig& reg) {
    const double deltaE2 = detail::config_deltaE2(reg);
    if (!(deltaE2 > 0.0))
        throw std::invalid_argument("strength histogram needs couplings (j_scale > 0)");
    const double gamma = detail::config_gamma_scale(reg);
    return std::max(std::sqrt(deltaE2) / 20.0, gamma / 4.0);
}

namespace detail {

struct SlotBase {
    bool failed = false;
    std::string error;
};

template <class Slot, class Work>
void pooled_realizations(int realizations, int threads, std::vector<Slot>& slots,
                         Work&& work) {
    slots.resize(realizations);
    run_indexed_pool(realizations, threads, [&](int r) {
        try {
            work(r, slots[r]);
        } catch (const std::exception& e) {
            slots[r].failed = true;
            slots[r].error = e.what();
        }
    });
}

template <class Slot>
void collect_failures(const std::vector<Slot>& slots, EnsembleSummary& s) {
    for (int r = 0; r < static_cast<int>(slots.size()); ++r)
        if (slots[r].failed) {
            s.partial = true;
            s.failures.push_back({r, slots[r].error});
        }
}

inline BasisState pick_initial_state(const RunManifest& m,
                                     const DisorderRealization& real) {
    if (m.initial_state) return {*m.initial_state};
    return auto_initial_state(real);
}

inline Spectrum sector_spectrum_of(const Hamiltonian& h, BasisState i) {
    return diagonalize_sector(split_by_parity(h), parity(i.bits));
}

inline constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

// ---- evolve ---------------------------------------------------------------

struct EvolveSlot : SlotBase {
    std::uint32_t initial_bits = 0;
    Trajectory tr;
    double tc = nan_v;
    double deltaE2 = nan_v;
    std::vector<std::pair<std::uint32_t, std::vector<double>>> top;  // bits, W_f(t)
};

inline void run_evolve(const RunManifest& m, const std::vector<double>& grid,
                       EnsembleSummary& summary, std::string& data_csv,
                       std::string& components_csv) {
    std::vector<EvolveSlot> slots;
    pooled_realizations(m.realizations, m.threads, slots, [&](int r, EvolveSlot& s) {
        const DisorderRealization real = sample_disorder(m.reg, r);
        const BasisState initial = pick_initial_state(m, real);
        s.initial_bits = initial.bits;
        s.deltaE2 = second_moment(real);
        const Hamiltonian h = build_hamiltonian(real);
        const Spectrum spec = sector_spectrum_of(h, initial);
        EvolveOptions opt;
        opt.times = grid;
        opt.store_components = m.store_components;
        s.tr = evolve(spec, initial, opt);
        if (auto tc = measure_critical_time(s.tr)) s.tc = *tc;
        if (s.tr.components_stored) {
            // top components by long-time average weight; ties toward smaller bits
            const Eigen::VectorXd stat = stationary_distribution(spec, initial);
            std::vector<int> rows(spec.dim());
            std::iota(rows.begin(), rows.end(), 0);
            const int keep = std::min<int>(m.top_components, spec.dim());
            std::partial_sort(rows.begin(), rows.begin() + keep, rows.end(),
                              [&](int a, int b) {
                                  if (stat(a) != stat(b)) return stat(a) > stat(b);
                                  return spec.states[a] < spec.states[b];
                              });
            for (int t = 0; t < keep; ++t) {
                const int f = rows[t];
                std::vector<double> w(s.tr.times.size());
                for (std::size_t ti = 0; ti < w.size(); ++ti)
                    w[ti] = s.tr.components(static_cast<int>(ti), f);
                s.top.emplace_back(spec.states[f], std::move(w));
            }
            s.tr.components.resize(0, 0);  // rows extracted; drop the bulk
        }
    });
    collect_failures(slots, summary);

    data_csv = "realization,time,W_i,S_bits,Np_t\n";
    for (int r = 0; r < m.realizations; ++r) {
        if (slots[r].failed) continue;
        const Trajectory& tr = slots[r].tr;
        for (std::size_t ti = 0; ti < tr.times.size(); ++ti) {
            data_csv += std::to_string(r) + ',' + format_g17(tr.times[ti]) + ',' +
                        format_g17(tr.survival[ti]) + ',' +
                        format_g17(tr.entropy_bits[ti]) + ',' +
                        format_g17(tr.participation[ti]) + '\n';
        }
    }
    if (m.store_components) {
        components_csv = "realization,time,state_bits,W_f\n";
        for (int r = 0; r < m.realizations; ++r) {
            if (slots[r].failed) continue;
            for (const auto& [bits, w] : slots[r].top)
                for (std::size_t ti = 0; ti < w.size(); ++ti)
                    components_csv += std::to_string(r) + ',' +
                                      format_g17(slots[r].tr.times[ti]) + ',' +
                                      std::to_string(bits) + ',' +
                                      format_g17(w[ti]) + '\n';
        }
    }

    auto values = [&](auto&& get) {
        std::vector<double> v(m.realizations, nan_v);
        for (int r = 0; r < m.realizations; ++r)
            if (!slots[r].failed) v[r] = get(slots[r]);
        return v;
    };
    summary.observables.emplace_back(
        "final_survival", summarize(values([](const EvolveSlot& s) {
            return s.tr.survival.back();
        })));
    summary.observables.emplace_back(
        "final_entropy_bits", summarize(values([](const EvolveSlot& s) {
            return s.tr.entropy_bits.back();
        })));
    summary.observables.emplace_back(
        "final_participation", summarize(values([](const EvolveSlot& s) {
            return s.tr.participation.back();
        })));
    summary.observables.emplace_back(
        "tc_measured",
        summarize(values([](const EvolveSlot& s) { return s.tc; })));
    summary.observables.emplace_back(
        "deltaE2",
        summarize(values([](const EvolveSlot& s) { return s.deltaE2; })));

    nlohmann::ordered_json initials = nlohmann::ordered_json::array();
    for (int r = 0; r < m.realizations; ++r)
        initials.push_back(slots[r].failed
                               ? nlohmann::ordered_json(nullptr)
                               : nlohmann::ordered_json(slots[r].initial_bits));
    summary.results["initial_states"] = std::move(initials);
    summary.results["time_count"] = grid.size();
    summary.results["time_min"] = grid.front();
    summary.results["time_max"] = grid.back();
}

// ---- spectrum -------------------------------------------------------------

struct SpectrumSlot : SlotBase {
    struct Level {
        double energy, entropy, participation;
        int parity;
    };
    std::vector<Level> levels;  // merged, energy-ascending
    double central_entropy = nan_v;
    double mean_participation = nan_v;
    double mean_ratio = nan_v;
    double central_spacing = nan_v;
};

inline void run_spectrum(const RunManifest& m, EnsembleSummary& summary,
                         std::string& data_csv) {
    std::vector<SpectrumSlot> slots;
    pooled_realizations(m.realizations, m.threads, slots, [&](int r, SpectrumSlot& s) {
        const DisorderRealization real = sample_disorder(m.reg, r);
        const Hamiltonian h = build_hamiltonian(real);
        const ParityBlocks blocks = split_by_parity(h);
        double ratio_acc = 0.0;
        for (int sector : {0, 1}) {
            const Spectrum sp = diagonalize_sector(blocks, sector);
            ratio_acc += mean_spacing_ratio(sp.eigenvalues);
            for (int k = 0; k < sp.dim(); ++k) {
                const EigenstateProfile p = eigenstate_profile(sp, k);
                s.levels.push_back({p.energy, p.entropy_bits, p.participation, sector});
            }
        }
        std::sort(s.levels.begin(), s.levels.end(), [](const auto& a, const auto& b) {
            if (a.energy != b.energy) return a.energy < b.energy;
            return a.parity < b.parity;
        });
        s.mean_ratio = 0.5 * ratio_acc;
        const int dim = static_cast<int>(s.levels.size());
        auto [lo, hi] = central_range(dim, 0.25);
        double se = 0.0;
        for (int k = lo; k < hi; ++k) se += s.levels[k].entropy;
        s.central_entropy = se / (hi - lo);
        double pp = 0.0;
        for (const auto& l : s.levels) pp += l.participation;
        s.mean_participation = pp / dim;
        const int c0 = static_cast<int>(0.45 * dim), c1 = static_cast<int>(0.55 * dim);
        if (c1 - c0 >= 2)
            s.central_spacing =
                (s.levels[c1 - 1].energy - s.levels[c0].energy) / (c1 - 1 - c0);
    });
    collect_failures(slots, summary);

    data_csv = "realization,k,energy,S_k_bits,participation,parity\n";
    for (int r = 0; r < m.realizations; ++r) {
        if (slots[r].failed) continue;
        for (std::size_t k = 0; k < slots[r].levels.size(); ++k) {
            const auto& l = slots[r].levels[k];
            data_csv += std::to_string(r) + ',' + std::to_string(k) + ',' +
                        format_g17(l.energy) + ',' + format_g17(l.entropy) + ',' +
                        format_g17(l.participation) + ',' + std::to_string(l.parity) +
                        '\n';
        }
    }

    auto values = [&](auto&& get) {
        std::vector<double> v(m.realizations, nan_v);
        for (int r = 0; r < m.realizations; ++r)
            if (!slots[r].failed) v[r] = get(slots[r]);
        return v;
    };
    summary.observables.emplace_back(
        "central_entropy_bits", summarize(values([](const SpectrumSlot& s) {
            return s.central_entropy;
        })));
    summary.observables.emplace_back(
        "mean_participation", summarize(values([](const SpectrumSlot& s) {
            return s.mean_participation;
        })));
    summary.observables.emplace_back(
        "mean_spacing_ratio", summarize(values([](const SpectrumSlot& s) {
            return s.mean_ratio;
        })));
    summary.observables.emplace_back(
        "central_spacing", summarize(values([](const SpectrumSlot& s) {
            return s.central_spacing;
        })));
}

// ---- strength -------------------------------------------------------------

struct StrengthSlot : SlotBase {
    std::uint32_t initial_bits = 0;
    std::vector<std::pair<double, double>> pairs;
    double first_moment = nan_v, deltaE2 = nan_v;
    double gamma_fit = nan_v, shift_fit = nan_v, fit_residual = nan_v;
    double gamma_golden = nan_v;
};

inline void run_strength(const RunManifest& m, double bin_width,
                         EnsembleSummary& summary, std::string& data_csv) {
    std::vector<StrengthSlot> slots;
    pooled_realizations(m.realizations, m.threads, slots, [&](int r, StrengthSlot& s) {
        const DisorderRealization real = sample_disorder(m.reg, r);
        const BasisState initial = pick_initial_state(m, real);
        s.initial_bits = initial.bits;
        const Hamiltonian h = build_hamiltonian(real);
        const Spectrum spec = sector_spectrum_of(h, initial);
        const StrengthFunction sf = strength_function(spec, initial, bin_width);
        s.pairs = sf.pairs;
        s.first_moment = sf.first_moment;
        s.deltaE2 = sf.second_moment;
        try {
            const BreitWignerFit fit = fit_breit_wigner(sf);
            s.gamma_fit = fit.gamma;
            s.shift_fit = fit.shift;
            s.fit_residual = fit.residual;
        } catch (const FitUnavailable&) {
            // profile too sparse for a shape fit; the golden-rule value below
            // remains meaningful
        }
        s.gamma_golden = golden_rule_width(real, initial).gamma;
    });
    collect_failures(slots, summary);

    data_csv = "realization,energy,weight\n";
    for (int r = 0; r < m.realizations; ++r) {
        if (slots[r].failed) continue;
        for (const auto& [e, w] : slots[r].pairs)
            data_csv += std::to_string(r) + ',' + format_g17(e) + ',' +
                        format_g17(w) + '\n';
    }

    auto values = [&](auto&& get) {
        std::vector<double> v(m.realizations, nan_v);
        for (int r = 0; r < m.realizations; ++r)
            if (!slots[r].failed) v[r] = get(slots[r]);
        return v;
    };
    summary.observables.emplace_back(
        "first_moment",
        summarize(values([](const StrengthSlot& s) { return s.first_moment; })));
    summary.observables.emplace_back(
        "deltaE2",
        summarize(values([](const StrengthSlot& s) { return s.deltaE2; })));
    summary.observables.emplace_back(
        "gamma_fit",
        summarize(values([](const StrengthSlot& s) { return s.gamma_fit; })));
    summary.observables.emplace_back(
        "shift_fit",
        summarize(values([](const StrengthSlot& s) { return s.shift_fit; })));
    summary.observables.emplace_back(
        "fit_residual",
        summarize(values([](const StrengthSlot& s) { return s.fit_residual; })));
    summary.observables.emplace_back(
        "gamma_golden",
        summarize(values([](const StrengthSlot& s) { return s.gamma_golden; })));

    summary.results["bin_width"] = bin_width;
    summary.results["gamma_scale_config"] = config_gamma_scale(m.reg);
    summary.results["deltaE2_config"] = config_deltaE2(m.reg);
    nlohmann::ordered_json initials = nlohmann::ordered_json::array();
    for (int r = 0; r < m.realizations; ++r)
        initials.push_back(slots[r].failed
                               ? nlohmann::ordered_json(nullptr)
                               : nlohmann::ordered_json(slots[r].initial_bits));
    summary.results["initial_states"] = std::move(initials);
}

// ---- tc-scan --------------------------------------------------------------

struct TcSlot : SlotBase {
    // one entry per register size
    std::vector<double> tc_measured, tc_interp, tc_exp, gamma_used, deltaE2;
};

inline void run_tc_scan(const RunManifest& m, EnsembleSummary& summary,
                        std::string& data_csv) {
    const int ns = static_cast<int>(m.sizes.size());
    std::vector<RegisterConfig> configs(ns);
    std::vector<std::vector<double>> grids(ns);
    for (int si = 0; si < ns; ++si) {
        configs[si] = m.reg;
        configs[si].n = m.sizes[si];
        require_valid(configs[si]);
        grids[si] = ensemble_time_grid(m, configs[si]);
    }

    std::vector<TcSlot> slots;
    pooled_realizations(m.realizations, m.threads, slots, [&](int r, TcSlot& s) {
        s.tc_measured.assign(ns, nan_v);
        s.tc_interp.assign(ns, nan_v);
        s.tc_exp.assign(ns, nan_v);
        s.gamma_used.assign(ns, nan_v);
        s.deltaE2.assign(ns, nan_v);
        for (int si = 0; si < ns; ++si) {
            const RegisterConfig& c = configs[si];
            const DisorderRealization real = sample_disorder(c, r);
            const BasisState initial = auto_initial_state(real);
            const Hamiltonian h = build_hamiltonian(real);
            const Spectrum spec = sector_spectrum_of(h, initial);
            EvolveOptions opt;
            opt.times = grids[si];
            const Trajectory tr = evolve(spec, initial, opt);
            if (auto tc = measure_critical_time(tr)) s.tc_measured[si] = *tc;
            s.deltaE2[si] = second_moment(real);
            double gamma = nan_v;
            try {
                gamma = fit_breit_wigner(
                            strength_function(spec, initial, auto_bin_width(c)))
                            .gamma;
            } catch (const FitUnavailable&) {
                gamma = golden_rule_width(real, initial).gamma;
            }
            s.gamma_used[si] = gamma;
            const double n_f = static_cast<double>(real.couplings.size());
            if (gamma > 0.0 && n_f > 1.0) {
                s.tc_interp[si] = critical_time_interp(gamma, s.deltaE2[si], n_f);
                s.tc_exp[si] = critical_time_exponential(gamma, n_f);
            }
        }
    });
    collect_failures(slots, summary);

    auto mean_over = [&](int si, std::vector<double> TcSlot::* field) {
        double acc = 0.0;
        int cnt = 0;
        for (const TcSlot& s : slots) {
            if (s.failed) continue;
            const double v = (s.*field)[si];
            if (!std::isnan(v)) {
                acc += v;
                ++cnt;
            }
        }
        return cnt ? acc / cnt : nan_v;
    };

    // column names here are the file-format contract
    data_csv = "n,tc_measured,tc_eq24,tc_eq25,gamma_fit,deltaE2\n";
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::vector<double> scaled;  // tc * n * log2(n), flat when tc ~ 1/(n log2 n)
    for (int si = 0; si < ns; ++si) {
        const double tc_m = mean_over(si, &TcSlot::tc_measured);
        const double tc_i = mean_over(si, &TcSlot::tc_interp);
        const double tc_e = mean_over(si, &TcSlot::tc_exp);
        const double g = mean_over(si, &TcSlot::gamma_used);
        const double d2 = mean_over(si, &TcSlot::deltaE2);
        data_csv += std::to_string(m.sizes[si]) + ',' + format_g17(tc_m) + ',' +
                    format_g17(tc_i) + ',' + format_g17(tc_e) + ',' +
                    format_g17(g) + ',' + format_g17(d2) + '\n';
        nlohmann::ordered_json row;
        row["n"] = m.sizes[si];
        row["tc_measured"] = tc_m;
        row["tc_predicted"] = tc_i;
        row["tc_predicted_exponential"] = tc_e;
        row["gamma"] = g;
        row["deltaE2"] = d2;
        rows.push_back(std::move(row));
        if (!std::isnan(tc_m))
            scaled.push_back(tc_m * m.sizes[si] * std::log2(double(m.sizes[si])));

        const std::string tag = "_n" + std::to_string(m.sizes[si]);
        auto values = [&](std::vector<double> TcSlot::* field) {
            std::vector<double> v(m.realizations, nan_v);
            for (int r = 0; r < m.realizations; ++r)
                if (!slots[r].failed) v[r] = (slots[r].*field)[si];
            return v;
        };
        summary.observables.emplace_back("tc_measured" + tag,
                                         summarize(values(&TcSlot::tc_measured)));
        summary.observables.emplace_back("gamma" + tag,
                                         summarize(values(&TcSlot::gamma_used)));
        summary.observables.emplace_back("deltaE2" + tag,
                                         summarize(values(&TcSlot::deltaE2)));
    }
    summary.results["rows"] = std::move(rows);
    if (scaled.size() >= 2) {
        const auto [mn, mx] = std::minmax_element(scaled.begin(), scaled.end());
        summary.results["scaled_tc_spread"] = *mx / *mn;  // 1 = perfectly flat
    }
}

// ---- jc-scan --------------------------------------------------------------

inline void run_jc_scan(const RunManifest& m, EnsembleSummary& summary,
                        std::string& data_csv) {
    ChaosScanOptions opt;
    opt.realizations = m.realizations;
    opt.threads = m.threads;
    opt.j_values.resize(m.j_count);
    for (int i = 0; i < m.j_count; ++i)
        opt.j_values[i] =
            m.j_min + (m.j_max - m.j_min) * i / (m.j_count - 1);
    const ChaosScanResult scan = chaos_boundary_scan(m.reg, opt);

    // column names here are the file-format contract
    data_csv = "J,mean_S_k,stderr,mean_ratio,stderr_ratio\n";
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const ChaosScanRow& row : scan.rows) {
        data_csv += format_g17(row.j) + ',' + format_g17(row.mean_entropy) + ',' +
                    format_g17(row.stderr_entropy) + ',' +
                    format_g17(row.mean_ratio) + ',' +
                    format_g17(row.stderr_ratio) + '\n';
        nlohmann::ordered_json jr;
        jr["J"] = row.j;
        jr["mean_S_k"] = row.mean_entropy;
        jr["stderr"] = row.stderr_entropy;
        jr["mean_ratio"] = row.mean_ratio;
        jr["stderr_ratio"] = row.stderr_ratio;
        rows.push_back(std::move(jr));
    }
    summary.results["rows"] = std::move(rows);
    summary.results["j_entropy_crossing"] =
        scan.j_entropy_crossing ? nlohmann::ordered_json(*scan.j_entropy_crossing)
                                : nlohmann::ordered_json(nullptr);
    summary.results["j_ratio_crossing"] =
        scan.j_ratio_crossing ? nlohmann::ordered_json(*scan.j_ratio_crossing)
                              : nlohmann::ordered_json(nullptr);
    summary.results["ratio_crossing_level"] = ratio_crossing_level;
}

}  // namespace detail

/// Summary file content. The manifest echo normalizes the two keys that place
/// the run rather than define it (threads, out_dir): outputs are a pure
/// function of the computation-defining keys, and the echo reflects that
/// equivalence so runs of one manifest agree byte-for-byte wherever and
/// however parallel they execute.
inline nlohmann::ordered_json summary_to_json(const EnsembleSummary& s,
                                              const RunManifest& m) {
    nlohmann::ordered_json j;
    j["version"] = s.version;
    j["command"] = command_name(s.command);
    j["master_seed"] = s.master_seed;
    j["realizations"] = s.realizations;
    j["partial"] = s.partial;
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto& f : s.failures) {
        nlohmann::ordered_json jf;
        jf["realization"] = f.realization;
        jf["message"] = f.message;
        failures.push_back(std::move(jf));
    }
    j["failures"] = std::move(failures);
    nlohmann::ordered_json obs;
    for (const auto& [name, o] : s.observables) {
        nlohmann::ordered_json jo;
        jo["mean"] = o.defined_count ? nlohmann::ordered_json(o.mean)
                                     : nlohmann::ordered_json(nullptr);
        jo["stderr"] = o.stderr_defined ? nlohmann::ordered_json(o.stderr_value)
                                        : nlohmann::ordered_json(nullptr);
        jo["defined"] = o.defined_count;
        nlohmann::ordered_json vals = nlohmann::ordered_json::array();
        for (double v : o.values)
            vals.push_back(std::isnan(v) ? nlohmann::ordered_json(nullptr)
                                         : nlohmann::ordered_json(v));
        jo["values"] = std::move(vals);
        obs[name] = std::move(jo);
    }
    j["observables"] = std::move(obs);
    if (!s.results.is_null()) j["results"] = s.results;
    RunManifest normalized = m;
    normalized.threads = 1;
    normalized.out_dir = RunManifest{}.out_dir;
    j["manifest"] = manifest_to_text(normalized);
    return j;
}

/// Execute a validated manifest: run every realization (work-pool, results
/// keyed by realization index), write the data CSV, optional components CSV,
/// and summary JSON into out_dir, and return the summary. Output bytes
/// depend only on the manifest, not on the thread count.
inline EnsembleSummary run_ensemble(const RunManifest& m) {
    require_valid(m.reg);
    const RunPaths paths = run_paths(m);
    std::filesystem::create_directories(paths.dir);

    EnsembleSummary summary;
    summary.command = m.command;
    summary.realizations = m.realizations;
    summary.master_seed = m.reg.master_seed;
    summary.version = version;

    std::string data_csv, components_csv;
    switch (m.command) {
        case Command::Evolve: {
            const std::vector<double> grid = ensemble_time_grid(m, m.reg);
            detail::run_evolve(m, grid, summary, data_csv, components_csv);
            break;
        }
        case Command::Spectrum:
            detail::run_spectrum(m, summary, data_csv);
            break;
        case Command::Strength: {
            const double bw = m.bin_width ? *m.bin_width : auto_bin_width(m.reg);
            detail::run_strength(m, bw, summary, data_csv);
            break;
        }
        case Command::TcScan:
            detail::run_tc_scan(m, summary, data_csv);
            break;
        case Command::JcScan:
            detail::run_jc_scan(m, summary, data_csv);
            break;
    }

    write_file_atomic(paths.data_csv, data_csv);
    if (!components_csv.empty())
        write_file_atomic(paths.components_csv, components_csv);
    write_file_atomic(paths.summary_json, summary_to_json(summary, m).dump(2) + "\n");
    return summary;
}

}  // namespace qreg
