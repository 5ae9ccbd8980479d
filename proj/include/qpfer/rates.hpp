#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace qpfer {

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kDefaultEta = 0.05;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };
enum class Basis : std::uint8_t { Z = 0, X = 1, Y = 2 };
enum class ProtocolVariant : std::uint8_t { FourState, SixState };

// sigma_y flips both the bit and the phase.
inline bool has_bit_flip(Pauli p) { return p == Pauli::X || p == Pauli::Y; }
inline bool has_phase_flip(Pauli p) { return p == Pauli::Z || p == Pauli::Y; }

inline const char* to_string(Pauli p) {
    switch (p) {
        case Pauli::I: return "I";
        case Pauli::X: return "X";
        case Pauli::Y: return "Y";
        case Pauli::Z: return "Z";
    }
    return "?";
}

inline const char* to_string(Basis b) {
    switch (b) {
        case Basis::Z: return "Z";
        case Basis::X: return "X";
        case Basis::Y: return "Y";
    }
    return "?";
}

inline const char* to_string(ProtocolVariant v) {
    return v == ProtocolVariant::FourState ? "four-state" : "six-state";
}

// Probability vector of a Pauli channel: (p_I, p_x, p_y, p_z).  The same
// type describes the raw-pair error distribution after decoding; the role
// is contextual.
struct PauliRates {
    double p_I{1.0};
    double p_x{0.0};
    double p_y{0.0};
    double p_z{0.0};

    // Detected flip rates; sigma_y contributes to both.
    double bit_flip() const { return p_x + p_y; }
    double phase_flip() const { return p_z + p_y; }

    double component(Pauli p) const {
        switch (p) {
            case Pauli::I: return p_I;
            case Pauli::X: return p_x;
            case Pauli::Y: return p_y;
            case Pauli::Z: return p_z;
        }
        return 0.0;
    }

    bool valid(double tol = kNormTolerance) const {
        return p_I >= -tol && p_x >= -tol && p_y >= -tol && p_z >= -tol &&
               std::fabs(p_I + p_x + p_y + p_z - 1.0) <= tol;
    }
};

inline PauliRates make_rates(double p_I, double p_x, double p_y, double p_z) {
    PauliRates r{p_I, p_x, p_y, p_z};
    if (!r.valid())
        throw std::domain_error(
            "PauliRates: components must be nonnegative and sum to 1 (tolerance 1e-12)");
    return r;
}

inline std::pair<double, double> detected_rates(const PauliRates& r) {
    return {r.bit_flip(), r.phase_flip()};
}

enum class ChannelKind : std::uint8_t { Symmetric, AsymmetricNoY, Explicit };

inline const char* to_string(ChannelKind k) {
    switch (k) {
        case ChannelKind::Symmetric: return "symmetric";
        case ChannelKind::AsymmetricNoY: return "asymmetric-no-y";
        case ChannelKind::Explicit: return "explicit";
    }
    return "?";
}

// One-parameter channel families used for the threshold claims, plus an
// explicit escape hatch for arbitrary Pauli channels.
struct ChannelFamily {
    ChannelKind kind{ChannelKind::Symmetric};
    double q{0.0};
    PauliRates rates{};  // only used when kind == Explicit

    static ChannelFamily symmetric(double q) { return {ChannelKind::Symmetric, q, {}}; }
    static ChannelFamily asymmetric_no_y(double q) { return {ChannelKind::AsymmetricNoY, q, {}}; }
    static ChannelFamily explicit_rates(const PauliRates& r) { return {ChannelKind::Explicit, 0.0, r}; }
};

// Legal q range of a one-parameter family: p_I must stay nonnegative.
inline double family_q_max(ChannelKind kind) {
    switch (kind) {
        case ChannelKind::Symmetric: return 1.0 / 3.0;
        case ChannelKind::AsymmetricNoY: return 0.5;
        case ChannelKind::Explicit: break;
    }
    throw std::invalid_argument("family_q_max: explicit channels have no family parameter");
}

inline PauliRates make_channel(const ChannelFamily& f) {
    switch (f.kind) {
        case ChannelKind::Symmetric: {
            if (f.q < 0.0 || f.q > 1.0 / 3.0 + kNormTolerance)
                throw std::domain_error("make_channel: symmetric family requires q in [0, 1/3]");
            const double p_I = std::max(0.0, 1.0 - 3.0 * f.q);
            return PauliRates{p_I, f.q, f.q, f.q};
        }
        case ChannelKind::AsymmetricNoY: {
            if (f.q < 0.0 || f.q > 0.5 + kNormTolerance)
                throw std::domain_error("make_channel: asymmetric-no-y family requires q in [0, 1/2]");
            const double p_I = std::max(0.0, 1.0 - 2.0 * f.q);
            return PauliRates{p_I, f.q, 0.0, f.q};
        }
        case ChannelKind::Explicit: {
            if (!f.rates.valid())
                throw std::domain_error("make_channel: explicit rates are not a probability vector");
            return f.rates;
        }
    }
    throw std::invalid_argument("make_channel: unknown family kind");
}

// Four-state worst case: sigma_y is undetectable, so assume p_y = 0 with the
// detected flip rates carried entirely by p_x and p_z.  Applied once, right
// after decoding.  The assignment has no valid probability vector when the
// two detected rates sum above 1.
inline PauliRates worst_case_4state(const PauliRates& r) {
    const double bit = r.bit_flip();
    const double phase = r.phase_flip();
    const double p_I = 1.0 - bit - phase;
    if (p_I < -kNormTolerance)
        throw std::domain_error(
            "worst_case_4state: detected bit and phase rates sum above 1; no valid assignment");
    return PauliRates{std::max(0.0, p_I), bit, 0.0, phase};
}

}  // namespace qpfer
