#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "qpfer/rates.hpp"

namespace qpfer {

// Output of a post-selecting map: the renormalized error distribution of the
// survivors plus the kept fraction (the map's denominator).
struct MapResult {
    PauliRates rates{};
    double survival{1.0};
};

namespace detail {
inline double rejection_denominator(const PauliRates& r) {
    const double a = r.p_I + r.p_z;
    const double b = r.p_x + r.p_y;
    return a * a + b * b;
}
}  // namespace detail

// One round of bit-flip error-rejection: random pairs are compared in the Z
// basis, pairs with differing parity are discarded, one bit of each agreeing
// pair survives.
inline MapResult bitflip_rejection_map(const PauliRates& r) {
    const double d = detail::rejection_denominator(r);
    if (d <= 0.0)
        throw std::domain_error("bitflip_rejection_map: degenerate input, zero survival");
    return {PauliRates{(r.p_I * r.p_I + r.p_z * r.p_z) / d,
                       (r.p_x * r.p_x + r.p_y * r.p_y) / d,
                       2.0 * r.p_x * r.p_y / d,
                       2.0 * r.p_I * r.p_z / d},
            d};
}

inline PauliRates swap_xz(const PauliRates& r) { return {r.p_I, r.p_z, r.p_y, r.p_x}; }

// Phase-flip error-rejection is the bit-flip map conjugated by the x<->z swap.
inline MapResult phaseflip_rejection_map(const PauliRates& r) {
    const MapResult m = bitflip_rejection_map(swap_xz(r));
    return {swap_xz(m.rates), m.survival};
}

// Error distribution of the raw pairs that survive the two-qubit code's
// parity check, as a function of the channel rates.  Channel phase flips
// turn into raw bit flips and channel bit flips into raw phase flips;
// the kept fraction is the denominator.
inline MapResult qpfer_decode_map(const PauliRates& c) {
    const double d = detail::rejection_denominator(c);
    if (d <= 0.0)
        throw std::domain_error("qpfer_decode_map: degenerate input, zero survival");
    return {PauliRates{(c.p_I * c.p_I + c.p_z * c.p_z) / d,
                       2.0 * c.p_I * c.p_z / d,
                       2.0 * c.p_x * c.p_y / d,
                       (c.p_x * c.p_x + c.p_y * c.p_y) / d},
            d};
}

// Bounds on the error rates after one [r,1,r]_2 phase-error-correction step
// (parity replaces each group of reps bits; majority vote governs the phase).
struct PecBounds {
    double bitphase_bound{};  // on p_x + p_y after the step
    double phase_bound{};     // on p_y + p_z after the step
    double chernoff_bound{};  // exponential relaxation of phase_bound
};

inline PecBounds pec_bounds(const PauliRates& r, std::int64_t reps) {
    if (reps < 1 || reps % 2 == 0)
        throw std::domain_error("pec_bounds: reps must be a positive odd integer");
    if (!(r.p_I > 0.5))
        throw std::domain_error("pec_bounds: precondition p_I > 1/2 violated");
    const auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
    const double bit = r.bit_flip();
    const double phase = r.phase_flip();
    const double rd = static_cast<double>(reps);
    return {clamp01(rd * bit),
            clamp01(std::pow(4.0 * (r.p_I + r.p_z) * bit, rd / 2.0)),
            clamp01(std::exp(-2.0 * rd * (0.5 - phase) * (0.5 - phase)))};
}

// Smallest odd repetition count whose exponential phase bound drops below eta.
inline std::int64_t min_r_for_phase(const PauliRates& r, double eta = kDefaultEta) {
    if (!(eta > 0.0 && eta < 1.0))
        throw std::invalid_argument("min_r_for_phase: eta must lie in (0, 1)");
    const double u = 0.5 - r.phase_flip();
    if (u <= 0.0)
        throw std::domain_error("min_r_for_phase: no solution when p_z + p_y >= 1/2");
    const double need = std::log(1.0 / eta) / (2.0 * u * u);
    if (need >= 9.0e18)
        throw std::overflow_error("min_r_for_phase: required repetition count overflows");
    std::int64_t reps = static_cast<std::int64_t>(std::ceil(need));
    if (reps < 1) reps = 1;
    if (reps % 2 == 0) ++reps;
    return reps;
}

// Convergence test for handing the remaining errors to a classical
// finishing method: the repetition step must leave both detected rates
// below eta.  Majority voting only concentrates when the per-bit phase
// rate is below one half.
inline bool converges(const PauliRates& r, std::int64_t reps, double eta = kDefaultEta) {
    if (reps < 1 || reps % 2 == 0)
        throw std::invalid_argument("converges: reps must be a positive odd integer");
    const double u = 0.5 - r.phase_flip();
    if (u <= 0.0) return false;
    return static_cast<double>(reps) * r.bit_flip() <= eta &&
           std::exp(-2.0 * static_cast<double>(reps) * u * u) <= eta;
}

}  // namespace qpfer
