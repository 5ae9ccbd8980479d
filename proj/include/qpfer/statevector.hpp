#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "qpfer/rates.hpp"

namespace qpfer {

inline constexpr double kOracleTolerance = 1e-9;

// Dense amplitudes over 1-3 qubits.  Qubit 0 is the most significant bit of
// the amplitude index; for the encoded EPR state the labels are A = qubit 0,
// B1 = qubit 1, B2 = qubit 2, and for a bare two-qubit code B1 = qubit 0,
// B2 = qubit 1.  Basis convention: |0> = (1, 0), |1> = (0, 1).
class StateVector {
  public:
    using amplitude = std::complex<double>;

    explicit StateVector(int n_qubits) : n_(check_qubits(n_qubits)), amps_(std::size_t{1} << n_) {
        amps_[0] = 1.0;
    }

    static StateVector from_amplitudes(int n_qubits, std::vector<amplitude> amps) {
        StateVector s(n_qubits);
        if (amps.size() != s.amps_.size())
            throw std::invalid_argument("StateVector: amplitude count does not match qubit count");
        s.amps_ = std::move(amps);
        if (std::fabs(s.norm_sq() - 1.0) > kNormTolerance)
            throw std::invalid_argument("StateVector: squared norm must be 1");
        return s;
    }

    int num_qubits() const { return n_; }
    std::size_t dim() const { return amps_.size(); }
    amplitude amp(std::size_t index) const { return amps_.at(index); }
    void set_amp(std::size_t index, amplitude a) { amps_.at(index) = a; }

    double norm_sq() const {
        double s = 0.0;
        for (const amplitude& a : amps_) s += std::norm(a);
        return s;
    }

    void apply_pauli(int qubit, Pauli p) {
        const std::size_t mask = bit_mask(qubit);
        constexpr amplitude i_unit{0.0, 1.0};
        for (std::size_t k = 0; k < amps_.size(); ++k) {
            if (k & mask) continue;
            const std::size_t k1 = k | mask;
            const amplitude a0 = amps_[k], a1 = amps_[k1];
            switch (p) {
                case Pauli::I: break;
                case Pauli::X: amps_[k] = a1; amps_[k1] = a0; break;
                case Pauli::Y: amps_[k] = -i_unit * a1; amps_[k1] = i_unit * a0; break;
                case Pauli::Z: amps_[k1] = -a1; break;
            }
        }
    }

    void apply_hadamard(int qubit) {
        const std::size_t mask = bit_mask(qubit);
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        for (std::size_t k = 0; k < amps_.size(); ++k) {
            if (k & mask) continue;
            const std::size_t k1 = k | mask;
            const amplitude a0 = amps_[k], a1 = amps_[k1];
            amps_[k] = (a0 + a1) * inv_sqrt2;
            amps_[k1] = (a0 - a1) * inv_sqrt2;
        }
    }

    // |<other|this>|^2; global phase drops out.
    double overlap_sq(const StateVector& other) const {
        if (other.n_ != n_) throw std::invalid_argument("overlap_sq: qubit counts differ");
        amplitude s{0.0, 0.0};
        for (std::size_t k = 0; k < amps_.size(); ++k) s += std::conj(other.amps_[k]) * amps_[k];
        return std::norm(s);
    }

  private:
    static int check_qubits(int n) {
        if (n < 1 || n > 3) throw std::invalid_argument("StateVector: supports 1 to 3 qubits");
        return n;
    }
    std::size_t bit_mask(int qubit) const {
        if (qubit < 0 || qubit >= n_) throw std::out_of_range("StateVector: no such qubit");
        return std::size_t{1} << (n_ - 1 - qubit);
    }

    int n_;
    std::vector<amplitude> amps_;
};

inline StateVector apply_pauli(StateVector s, int qubit, Pauli p) {
    s.apply_pauli(qubit, p);
    return s;
}

// Two-qubit code for one prepared bit.  The recorded basis names the basis of
// the *decoded* qubit: codes |00>, |11> decode to the X eigenstates, the
// superposition codes to the Z eigenstates, and the Y codes (bit 0 paired
// with the -i sign) to the sigma_y eigenstates.
inline StateVector encode_code(int bit, Basis basis) {
    if (bit != 0 && bit != 1) throw std::invalid_argument("encode_code: bit must be 0 or 1");
    StateVector s(2);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    switch (basis) {
        case Basis::X:
            s.set_amp(0b00, 0.0);
            s.set_amp(bit == 0 ? 0b00 : 0b11, 1.0);
            break;
        case Basis::Z:
            s.set_amp(0b00, inv_sqrt2);
            s.set_amp(0b11, bit == 0 ? inv_sqrt2 : -inv_sqrt2);
            break;
        case Basis::Y:
            s.set_amp(0b00, inv_sqrt2);
            s.set_amp(0b11, std::complex<double>{0.0, bit == 0 ? -inv_sqrt2 : inv_sqrt2});
            break;
    }
    return s;
}

// Encoded EPR state over (A, B1, B2):
//   (|0>_A (|00> + |11>) + |1>_A (|00> - |11>)) / 2.
inline StateVector encode_epr() {
    StateVector s(3);
    s.set_amp(0b000, 0.5);
    s.set_amp(0b011, 0.5);
    s.set_amp(0b100, 0.5);
    s.set_amp(0b111, -0.5);
    return s;
}

// Bob's parity check and decode on qubits (B1, B2) = the last two qubits.
// Odd Z-parity discards the code.  Even parity: B1 is measured in the X
// basis, B2 gets a Hadamard, and the minus outcome additionally flips B2 in
// the Z basis.  Both measurement branches are returned; for every state the
// protocol produces they agree up to global phase.
struct ParityDecodeResult {
    bool kept{false};
    StateVector plus_branch;   // B1 read as |+>
    StateVector minus_branch;  // B1 read as |->, correction applied
};

namespace detail {

inline StateVector project_b1_x(const StateVector& s, int b1, int sign) {
    const int n = s.num_qubits();
    const int shift = n - 1 - b1;
    const std::size_t low_mask = (std::size_t{1} << shift) - 1;
    std::vector<std::complex<double>> rest(s.dim() / 2, {0.0, 0.0});
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t k = 0; k < s.dim(); ++k) {
        const bool one = (k >> shift) & 1;
        const std::size_t reduced = ((k >> (shift + 1)) << shift) | (k & low_mask);
        rest[reduced] += s.amp(k) * (one ? static_cast<double>(sign) : 1.0) * inv_sqrt2;
    }
    double norm = 0.0;
    for (const auto& a : rest) norm += std::norm(a);
    if (norm < 1e-12)
        throw std::invalid_argument("bob_parity_and_decode: measurement branch has zero weight");
    const double scale = 1.0 / std::sqrt(norm);
    for (auto& a : rest) a *= scale;
    return StateVector::from_amplitudes(n - 1, std::move(rest));
}

}  // namespace detail

inline ParityDecodeResult bob_parity_and_decode(const StateVector& s) {
    const int n = s.num_qubits();
    if (n < 2) throw std::invalid_argument("bob_parity_and_decode: needs qubits B1 and B2");
    if (std::fabs(s.norm_sq() - 1.0) > kOracleTolerance)
        throw std::invalid_argument("bob_parity_and_decode: state must be normalized");

    const int b1 = n - 2, b2 = n - 1;
    const std::size_t m1 = std::size_t{1} << (n - 1 - b1);
    const std::size_t m2 = std::size_t{1} << (n - 1 - b2);
    double p_even = 0.0;
    for (std::size_t k = 0; k < s.dim(); ++k)
        if (static_cast<bool>(k & m1) == static_cast<bool>(k & m2)) p_even += std::norm(s.amp(k));

    if (p_even < kOracleTolerance)
        return {false, StateVector(1), StateVector(1)};
    if (p_even < 1.0 - kOracleTolerance)
        throw std::invalid_argument(
            "bob_parity_and_decode: input is not a Z_B1 Z_B2 parity eigenstate");

    StateVector plus = detail::project_b1_x(s, b1, +1);
    StateVector minus = detail::project_b1_x(s, b1, -1);
    const int b2_after = n - 2;  // B2 is the last qubit of the reduced state
    plus.apply_hadamard(b2_after);
    minus.apply_hadamard(b2_after);
    minus.apply_pauli(b2_after, Pauli::X);
    return {true, std::move(plus), std::move(minus)};
}

enum class BellLabel : std::uint8_t { PhiPlus, PhiMinus, PsiPlus, PsiMinus, NotBell };

inline const char* to_string(BellLabel b) {
    switch (b) {
        case BellLabel::PhiPlus: return "phi+";
        case BellLabel::PhiMinus: return "phi-";
        case BellLabel::PsiPlus: return "psi+";
        case BellLabel::PsiMinus: return "psi-";
        case BellLabel::NotBell: return "not-bell";
    }
    return "?";
}

inline StateVector bell_state(BellLabel label) {
    StateVector s(2);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    s.set_amp(0, 0.0);
    switch (label) {
        case BellLabel::PhiPlus: s.set_amp(0b00, inv_sqrt2); s.set_amp(0b11, inv_sqrt2); break;
        case BellLabel::PhiMinus: s.set_amp(0b00, inv_sqrt2); s.set_amp(0b11, -inv_sqrt2); break;
        case BellLabel::PsiPlus: s.set_amp(0b01, inv_sqrt2); s.set_amp(0b10, inv_sqrt2); break;
        case BellLabel::PsiMinus: s.set_amp(0b01, inv_sqrt2); s.set_amp(0b10, -inv_sqrt2); break;
        case BellLabel::NotBell: throw std::invalid_argument("bell_state: not a Bell label");
    }
    return s;
}

inline BellLabel classify_bell(const StateVector& s) {
    if (s.num_qubits() != 2) throw std::invalid_argument("classify_bell: needs a 2-qubit state");
    for (BellLabel label : {BellLabel::PhiPlus, BellLabel::PhiMinus, BellLabel::PsiPlus,
                            BellLabel::PsiMinus}) {
        if (s.overlap_sq(bell_state(label)) >= 1.0 - kOracleTolerance) return label;
    }
    return BellLabel::NotBell;
}

// The Pauli relating the decoded pair to a perfect one: (I x E)|phi+> = state.
inline Pauli raw_error_of(BellLabel label) {
    switch (label) {
        case BellLabel::PhiPlus: return Pauli::I;
        case BellLabel::PsiPlus: return Pauli::X;
        case BellLabel::PhiMinus: return Pauli::Z;
        case BellLabel::PsiMinus: return Pauli::Y;
        case BellLabel::NotBell: break;
    }
    throw std::invalid_argument("raw_error_of: state is not a Bell state");
}

struct JointErrorRow {
    Pauli e1{Pauli::I}, e2{Pauli::I};
    bool kept{false};
    BellLabel bell{BellLabel::NotBell};  // meaningful only when kept
    Pauli raw_error{Pauli::I};           // meaningful only when kept
};

// Every ordered Pauli pair applied to (B1, B2) of the encoded EPR state, run
// through the parity check and decode.  This is the exhaustive ground truth
// the analytic decode map and the frame rules are checked against.
inline std::array<JointErrorRow, 16> enumerate_joint_errors() {
    std::array<JointErrorRow, 16> rows;
    int idx = 0;
    for (Pauli e1 : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
        for (Pauli e2 : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
            StateVector s = encode_epr();
            s.apply_pauli(1, e1);
            s.apply_pauli(2, e2);
            const ParityDecodeResult d = bob_parity_and_decode(s);
            JointErrorRow& row = rows[idx++];
            row.e1 = e1;
            row.e2 = e2;
            row.kept = d.kept;
            if (d.kept) {
                if (d.plus_branch.overlap_sq(d.minus_branch) < 1.0 - kOracleTolerance)
                    throw std::logic_error("enumerate_joint_errors: decode branches disagree");
                row.bell = classify_bell(d.plus_branch);
                row.raw_error = raw_error_of(row.bell);
            }
        }
    }
    return rows;
}

// The expected table: a code survives exactly when both qubits or neither
// carry a bit-flip component, and the surviving Bell state is fixed by the
// pair.
inline std::array<JointErrorRow, 16> joint_error_reference() {
    std::array<JointErrorRow, 16> rows;
    int idx = 0;
    for (Pauli e1 : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
        for (Pauli e2 : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
            JointErrorRow& row = rows[idx++];
            row.e1 = e1;
            row.e2 = e2;
            row.kept = has_bit_flip(e1) == has_bit_flip(e2);
            if (row.kept) {
                const bool bit = has_phase_flip(e1) != has_phase_flip(e2);
                const bool phase = has_bit_flip(e1) && has_bit_flip(e2);
                row.raw_error = bit ? (phase ? Pauli::Y : Pauli::X) : (phase ? Pauli::Z : Pauli::I);
                switch (row.raw_error) {
                    case Pauli::I: row.bell = BellLabel::PhiPlus; break;
                    case Pauli::X: row.bell = BellLabel::PsiPlus; break;
                    case Pauli::Y: row.bell = BellLabel::PsiMinus; break;
                    case Pauli::Z: row.bell = BellLabel::PhiMinus; break;
                }
            }
        }
    }
    return rows;
}

inline bool rows_equal(const JointErrorRow& a, const JointErrorRow& b) {
    if (a.e1 != b.e1 || a.e2 != b.e2 || a.kept != b.kept) return false;
    return !a.kept || (a.bell == b.bell && a.raw_error == b.raw_error);
}

struct EnumeratedDecode {
    PauliRates rates{};
    double survival{};
};

// Probability-weighted aggregation of the table under an i.i.d. channel on
// the two qubits.  Independent of the analytic decode map; kept that way so
// it can stand as its oracle.
inline EnumeratedDecode decode_rates_via_enumeration(const PauliRates& channel) {
    double mass = 0.0;
    std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
    for (const JointErrorRow& row : enumerate_joint_errors()) {
        if (!row.kept) continue;
        const double w = channel.component(row.e1) * channel.component(row.e2);
        mass += w;
        acc[static_cast<int>(row.raw_error)] += w;
    }
    if (mass <= 0.0)
        throw std::domain_error("decode_rates_via_enumeration: channel keeps nothing");
    return {PauliRates{acc[0] / mass, acc[1] / mass, acc[2] / mass, acc[3] / mass}, mass};
}

inline void write_joint_error_table_csv(std::ostream& os,
                                        const std::array<JointErrorRow, 16>& rows) {
    os << "e1,e2,kept,bell,raw_error\n";
    for (const JointErrorRow& row : rows) {
        os << to_string(row.e1) << ',' << to_string(row.e2) << ',' << (row.kept ? '1' : '0') << ','
           << (row.kept ? to_string(row.bell) : "n/a") << ','
           << (row.kept ? to_string(row.raw_error) : "n/a") << '\n';
    }
}

}  // namespace qpfer
