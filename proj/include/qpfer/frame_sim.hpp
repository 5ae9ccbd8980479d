#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qpfer/rate_maps.hpp"
#include "qpfer/rates.hpp"
#include "qpfer/rng.hpp"

namespace qpfer {

// One sifted raw bit, tracked at the Pauli-frame level: whether the decoded
// bit differs from Alice's record, and whether the conjugate-basis flag is
// set.  (bit, phase) <-> {I, X, Y, Z} bijectively.
struct FrameBit {
    bool bit_flip{false};
    bool phase_flip{false};
};

inline Pauli to_pauli(FrameBit f) {
    return f.bit_flip ? (f.phase_flip ? Pauli::Y : Pauli::X)
                      : (f.phase_flip ? Pauli::Z : Pauli::I);
}

inline FrameBit to_frame(Pauli p) { return {has_bit_flip(p), has_phase_flip(p)}; }

struct SimConfig {
    PauliRates channel{};
    ProtocolVariant variant{ProtocolVariant::FourState};
    std::int64_t n_codes{0};
    int g{0};
    std::int64_t reps{1};
    std::uint64_t seed{0};
    double check_fraction{0.0};   // extra fraction of leftover Z bits to check; 0 = only the forced equal count
    double abort_threshold{0.0};  // 0 = auto: 1.2x the analytic post-decode bit-flip rate
    double eta{kDefaultEta};
};

struct RoundStats {
    PauliRates rates{};
    std::int64_t survivors{0};
};

struct SimReport {
    std::int64_t sent{0};
    std::int64_t kept_after_parity{0};
    std::int64_t sifted{0};
    std::int64_t checked{0};
    double check_error_rate{0.0};
    double check_error_rate_x{0.0};
    double check_error_rate_y{0.0};
    double check_error_rate_z{0.0};
    double abort_threshold{0.0};  // resolved value actually used
    bool aborted{false};
    PauliRates post_decode_empirical{};
    std::int64_t key_bits{0};  // sifted bits left after check consumption
    std::vector<RoundStats> per_round_empirical;
    std::int64_t final_count{0};
    double final_bit_flip_rate{0.0};
    double final_phase_flip_rate{0.0};
    double yield{0.0};
    bool converged{false};
};

namespace stream {
inline constexpr std::uint64_t prep_basis = 1;
inline constexpr std::uint64_t channel_e1 = 2;
inline constexpr std::uint64_t channel_e2 = 3;
inline constexpr std::uint64_t meas_basis = 4;
inline constexpr std::uint64_t check_shuffle = 5;
inline constexpr std::uint64_t pec_shuffle = 6;
inline constexpr std::uint64_t round_base = 16;  // + round index
}  // namespace stream

inline Pauli sample_pauli(const PauliRates& r, double u) {
    if (u < r.p_I) return Pauli::I;
    u -= r.p_I;
    if (u < r.p_x) return Pauli::X;
    u -= r.p_x;
    if (u < r.p_y) return Pauli::Y;
    return Pauli::Z;
}

// Raw-pair error left on the decoded qubit for a joint error that passes the
// parity check (both qubits flipped or neither).
inline Pauli joint_raw_error(Pauli e1, Pauli e2) {
    const bool bit = has_phase_flip(e1) != has_phase_flip(e2);
    const bool phase = has_bit_flip(e1) && has_bit_flip(e2);
    return to_pauli(FrameBit{bit, phase});
}

// Sample a joint channel error on one transmitted code.  Absent means the
// parity check discards it (exactly one qubit carried a bit-flip component).
inline std::optional<Pauli> transmit_code(const PauliRates& channel, const CounterRng& rng,
                                          std::uint64_t code_index) {
    const Pauli e1 = sample_pauli(channel, rng.uniform(stream::channel_e1, code_index));
    const Pauli e2 = sample_pauli(channel, rng.uniform(stream::channel_e2, code_index));
    if (has_bit_flip(e1) != has_bit_flip(e2)) return std::nullopt;
    return joint_raw_error(e1, e2);
}

// Preparation-basis proportions: 1/4 X and 3/4 Z; the six-state variant
// moves a quarter of the Z codes to Y.
inline Basis draw_prep_basis(const CounterRng& rng, std::uint64_t i, ProtocolVariant v) {
    const double u = rng.uniform(stream::prep_basis, i);
    if (u < 0.25) return Basis::X;
    if (v == ProtocolVariant::SixState && u < 0.5) return Basis::Y;
    return Basis::Z;
}

inline Basis draw_meas_basis(const CounterRng& rng, std::uint64_t i, ProtocolVariant v) {
    const double u = rng.uniform(stream::meas_basis, i);
    if (v == ProtocolVariant::FourState) return u < 0.5 ? Basis::Z : Basis::X;
    if (u < 1.0 / 3.0) return Basis::Z;
    if (u < 2.0 / 3.0) return Basis::X;
    return Basis::Y;
}

// Whether a raw-pair error flips the outcome of a measurement in the basis
// both sides agreed on.
inline bool error_flips_in_basis(Pauli raw, Basis basis) {
    switch (basis) {
        case Basis::Z: return has_bit_flip(raw);
        case Basis::X: return has_phase_flip(raw);
        case Basis::Y: return raw == Pauli::X || raw == Pauli::Z;
    }
    return false;
}

struct SiftedBit {
    Pauli raw{Pauli::I};
    Basis basis{Basis::Z};
};

struct SiftStats {
    std::int64_t checked{0};
    std::int64_t checks_x{0}, checks_y{0}, checks_z{0};
    std::int64_t errors_x{0}, errors_y{0}, errors_z{0};
    double check_error_rate{0.0};
    double check_error_rate_x{0.0}, check_error_rate_y{0.0}, check_error_rate_z{0.0};
    double abort_threshold{0.0};
    bool aborted{false};
    std::vector<FrameBit> key;
};

// Consume every X- (and Y-) sifted bit as a check, plus an equal number of
// randomly chosen Z-sifted bits; the remaining Z bits become key candidates.
inline SiftStats sift_and_check(const std::vector<SiftedBit>& sifted, const SimConfig& cfg,
                                const CounterRng& rng) {
    if (cfg.check_fraction < 0.0 || cfg.check_fraction >= 1.0)
        throw std::invalid_argument("sift_and_check: check_fraction must lie in [0, 1)");

    SiftStats st;
    std::vector<std::size_t> z_indices;
    for (std::size_t i = 0; i < sifted.size(); ++i) {
        const SiftedBit& b = sifted[i];
        const bool err = error_flips_in_basis(b.raw, b.basis);
        switch (b.basis) {
            case Basis::X: ++st.checks_x; st.errors_x += err; break;
            case Basis::Y: ++st.checks_y; st.errors_y += err; break;
            case Basis::Z: z_indices.push_back(i); break;
        }
    }

    const std::int64_t forced = st.checks_x + st.checks_y;
    if (static_cast<std::int64_t>(z_indices.size()) < forced)
        throw std::runtime_error("sifting: fewer Z-sifted bits (" +
                                 std::to_string(z_indices.size()) + ") than required checks (" +
                                 std::to_string(forced) + ")");
    const std::int64_t spare = static_cast<std::int64_t>(z_indices.size()) - forced;
    st.checks_z = forced + static_cast<std::int64_t>(cfg.check_fraction * static_cast<double>(spare));

    counter_shuffle(z_indices, rng, stream::check_shuffle);
    for (std::int64_t k = 0; k < st.checks_z; ++k) {
        const SiftedBit& b = sifted[z_indices[static_cast<std::size_t>(k)]];
        st.errors_z += error_flips_in_basis(b.raw, b.basis);
    }
    for (std::size_t k = static_cast<std::size_t>(st.checks_z); k < z_indices.size(); ++k) {
        const Pauli raw = sifted[z_indices[k]].raw;
        st.key.push_back(to_frame(raw));
    }

    st.checked = st.checks_x + st.checks_y + st.checks_z;
    const auto rate = [](std::int64_t err, std::int64_t n) {
        return n > 0 ? static_cast<double>(err) / static_cast<double>(n) : 0.0;
    };
    st.check_error_rate = rate(st.errors_x + st.errors_y + st.errors_z, st.checked);
    st.check_error_rate_x = rate(st.errors_x, st.checks_x);
    st.check_error_rate_y = rate(st.errors_y, st.checks_y);
    st.check_error_rate_z = rate(st.errors_z, st.checks_z);

    st.abort_threshold = cfg.abort_threshold;
    if (st.abort_threshold <= 0.0)
        st.abort_threshold = std::min(1.0, 1.2 * qpfer_decode_map(cfg.channel).rates.bit_flip());
    st.aborted = st.check_error_rate > st.abort_threshold;
    return st;
}

inline PauliRates empirical_rates(const std::vector<FrameBit>& bits) {
    if (bits.empty()) throw std::domain_error("empirical_rates: no bits");
    std::array<std::int64_t, 4> n{0, 0, 0, 0};
    for (const FrameBit& b : bits) ++n[static_cast<int>(to_pauli(b))];
    const double total = static_cast<double>(bits.size());
    return {static_cast<double>(n[0]) / total, static_cast<double>(n[1]) / total,
            static_cast<double>(n[2]) / total, static_cast<double>(n[3]) / total};
}

// One round of bit-flip error-rejection on the frame bits: random disjoint
// pairs, discard pairs whose bit flags differ, keep one bit per agreeing
// pair with the phase flags combined by parity.  Odd leftover dropped.
inline std::vector<FrameBit> rejection_round(std::vector<FrameBit> bits, const CounterRng& rng,
                                             std::uint64_t stream_id = stream::round_base) {
    counter_shuffle(bits, rng, stream_id);
    std::vector<FrameBit> out;
    out.reserve(bits.size() / 2);
    for (std::size_t i = 0; i + 1 < bits.size(); i += 2) {
        const FrameBit &a = bits[i], &b = bits[i + 1];
        if (a.bit_flip != b.bit_flip) continue;
        out.push_back(FrameBit{a.bit_flip, a.phase_flip != b.phase_flip});
    }
    return out;
}

// [reps,1,reps]_2 compression: random disjoint groups; the new bit flag is
// the parity of the group, the new phase flag the majority vote. Partial
// trailing group dropped.
inline std::vector<FrameBit> pec_compress(std::vector<FrameBit> bits, std::int64_t reps,
                                          const CounterRng& rng,
                                          std::uint64_t stream_id = stream::pec_shuffle) {
    if (reps < 1 || reps % 2 == 0)
        throw std::invalid_argument("pec_compress: reps must be a positive odd integer");
    counter_shuffle(bits, rng, stream_id);
    std::vector<FrameBit> out;
    const std::size_t r = static_cast<std::size_t>(reps);
    out.reserve(bits.size() / r);
    for (std::size_t start = 0; start + r <= bits.size(); start += r) {
        bool bit = false;
        std::size_t phase_votes = 0;
        for (std::size_t k = start; k < start + r; ++k) {
            bit ^= bits[k].bit_flip;
            phase_votes += bits[k].phase_flip;
        }
        out.push_back(FrameBit{bit, phase_votes > r / 2});
    }
    return out;
}

namespace detail {

struct CodeOutcome {
    std::uint8_t kept{0};
    Basis prep{Basis::Z};
    Basis meas{Basis::Z};
    Pauli raw{Pauli::I};
};

inline void validate(const SimConfig& cfg) {
    if (!cfg.channel.valid()) throw std::invalid_argument("simulate: channel is not a probability vector");
    if (cfg.n_codes < 1) throw std::invalid_argument("simulate: n_codes must be positive");
    if (cfg.g < 0) throw std::invalid_argument("simulate: g must be nonnegative");
    if (cfg.reps < 1 || cfg.reps % 2 == 0)
        throw std::invalid_argument("simulate: reps must be a positive odd integer");
    if (cfg.check_fraction < 0.0 || cfg.check_fraction >= 1.0)
        throw std::invalid_argument("simulate: check_fraction must lie in [0, 1)");
    if (cfg.abort_threshold < 0.0 || cfg.abort_threshold >= 1.0)
        throw std::invalid_argument("simulate: abort_threshold must lie in [0, 1) (0 = auto)");
    if (!(cfg.eta > 0.0 && cfg.eta < 1.0))
        throw std::invalid_argument("simulate: eta must lie in (0, 1)");
}

}  // namespace detail

// Full protocol run at the Pauli-frame level.  Deterministic in (cfg, seed):
// per-code sampling is keyed on the code index, so the worker count only
// changes who computes each entry, never the result.
inline SimReport run_protocol(const SimConfig& cfg, int workers = 1) {
    detail::validate(cfg);
    if (workers < 1) throw std::invalid_argument("simulate: workers must be positive");
    const CounterRng rng(cfg.seed);
    const std::int64_t n = cfg.n_codes;

    std::vector<detail::CodeOutcome> outcomes(static_cast<std::size_t>(n));
    const auto fill_range = [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            detail::CodeOutcome& o = outcomes[static_cast<std::size_t>(i)];
            const std::uint64_t idx = static_cast<std::uint64_t>(i);
            o.prep = draw_prep_basis(rng, idx, cfg.variant);
            o.meas = draw_meas_basis(rng, idx, cfg.variant);
            const std::optional<Pauli> raw = transmit_code(cfg.channel, rng, idx);
            o.kept = raw.has_value();
            if (raw) o.raw = *raw;
        }
    };
    if (workers == 1 || n < 4096) {
        fill_range(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t chunk = (n + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::int64_t lo = w * chunk;
            const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(fill_range, lo, hi);
        }
        for (std::thread& t : pool) t.join();
    }

    SimReport rep;
    rep.sent = n;
    std::array<std::int64_t, 4> raw_counts{0, 0, 0, 0};
    std::vector<SiftedBit> sifted;
    for (const detail::CodeOutcome& o : outcomes) {
        if (!o.kept) continue;
        ++rep.kept_after_parity;
        ++raw_counts[static_cast<int>(o.raw)];
        if (o.prep == o.meas) sifted.push_back({o.raw, o.prep});
    }
    if (rep.kept_after_parity == 0)
        throw std::runtime_error("parity check: no codes survived");
    const double kept_total = static_cast<double>(rep.kept_after_parity);
    rep.post_decode_empirical =
        PauliRates{static_cast<double>(raw_counts[0]) / kept_total,
                   static_cast<double>(raw_counts[1]) / kept_total,
                   static_cast<double>(raw_counts[2]) / kept_total,
                   static_cast<double>(raw_counts[3]) / kept_total};
    rep.sifted = static_cast<std::int64_t>(sifted.size());

    SiftStats st = sift_and_check(sifted, cfg, rng);
    rep.checked = st.checked;
    rep.check_error_rate = st.check_error_rate;
    rep.check_error_rate_x = st.check_error_rate_x;
    rep.check_error_rate_y = st.check_error_rate_y;
    rep.check_error_rate_z = st.check_error_rate_z;
    rep.abort_threshold = st.abort_threshold;
    rep.aborted = st.aborted;
    rep.key_bits = static_cast<std::int64_t>(st.key.size());
    if (rep.aborted) return rep;

    std::vector<FrameBit> bits = std::move(st.key);
    for (int round = 1; round <= cfg.g; ++round) {
        if (bits.size() < 2)
            throw std::runtime_error("bit-flip rejection round " + std::to_string(round) +
                                     ": insufficient surviving bits (" +
                                     std::to_string(bits.size()) + ")");
        bits = rejection_round(std::move(bits), rng,
                               stream::round_base + static_cast<std::uint64_t>(round));
        if (bits.empty())
            throw std::runtime_error("bit-flip rejection round " + std::to_string(round) +
                                     ": no pairs survived");
        rep.per_round_empirical.push_back({empirical_rates(bits),
                                           static_cast<std::int64_t>(bits.size())});
    }

    PauliRates pre_pec = cfg.g > 0 ? rep.per_round_empirical.back().rates
                                   : rep.post_decode_empirical;
    if (cfg.variant == ProtocolVariant::FourState) {
        try {
            pre_pec = worst_case_4state(pre_pec);
            rep.converged = converges(pre_pec, cfg.reps, cfg.eta);
        } catch (const std::domain_error&) {
            rep.converged = false;
        }
    } else {
        rep.converged = converges(pre_pec, cfg.reps, cfg.eta);
    }

    if (static_cast<std::int64_t>(bits.size()) < cfg.reps)
        throw std::runtime_error("phase error correction: fewer bits (" +
                                 std::to_string(bits.size()) + ") than one group of " +
                                 std::to_string(cfg.reps));
    bits = pec_compress(std::move(bits), cfg.reps, rng);

    rep.final_count = static_cast<std::int64_t>(bits.size());
    std::int64_t bit_err = 0, phase_err = 0;
    for (const FrameBit& b : bits) {
        bit_err += b.bit_flip;
        phase_err += b.phase_flip;
    }
    rep.final_bit_flip_rate = static_cast<double>(bit_err) / static_cast<double>(bits.size());
    rep.final_phase_flip_rate = static_cast<double>(phase_err) / static_cast<double>(bits.size());
    rep.yield = static_cast<double>(rep.final_count) / static_cast<double>(rep.sent);
    return rep;
}

}  // namespace qpfer
