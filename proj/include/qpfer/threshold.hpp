#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpfer/rate_maps.hpp"
#include "qpfer/rates.hpp"

namespace qpfer {

// A purification plan: g rounds of bit-flip error-rejection followed by one
// [reps,1,reps]_2 phase-error-correction step.  Near threshold the required
// repetition count grows beyond any integer type, so reps is 0 whenever it is
// not exactly representable and log10_reps always carries the value.
struct Schedule {
    int g{0};
    std::uint64_t reps{0};
    double log10_reps{0.0};
};

struct SolverOptions {
    int g_max{40};
    std::uint64_t r_max{0};  // 0 = unbounded repetition count
    double eta{kDefaultEta};
    double tol{1e-4};
    double scan_step{0.005};
    bool odd_reps_only{true};
};

struct ScanPoint {
    double q{};
    bool feasible{};
};

class non_monotone_error : public std::runtime_error {
  public:
    explicit non_monotone_error(std::vector<ScanPoint> scan)
        : std::runtime_error("threshold: feasibility is not antitone in q over the scan grid"),
          scan_(std::move(scan)) {}
    const std::vector<ScanPoint>& scan() const { return scan_; }

  private:
    std::vector<ScanPoint> scan_;
};

struct ThresholdReport {
    ChannelKind family{};
    ProtocolVariant variant{};
    double threshold_bit_flip_rate{};  // detected bit-flip rate of the channel at threshold
    double q_star{};                   // family parameter at threshold
    Schedule witness_schedule{};       // feasible schedule at q_star - tol
    double search_tolerance{};
    std::vector<ScanPoint> scan;       // coarse feasibility pre-scan
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = a > b ? a : b;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Bit-flip rejection drives (p_x+p_y), (p_I-p_z) and (p_x-p_y) to zero
// quadratically, so the trajectory is tracked through their logarithms:
//   b' = b^2/D,  d' = d^2/D,  e' = e^2/D,  0.5 - m' = (d^2 + e^2)/(2D)
// with D = (1-b)^2 + b^2.  This stays exact far past double underflow.
class LogTrajectory {
  public:
    explicit LogTrajectory(const PauliRates& start) {
        const double b = start.bit_flip();
        const double m = start.phase_flip();
        const double d = start.p_I - start.p_z;
        const double e = start.p_x - start.p_y;
        lb_ = b > 0.0 ? std::log(b) : kNegInf;
        ld2_ = d != 0.0 ? 2.0 * std::log(std::fabs(d)) : kNegInf;
        le2_ = e != 0.0 ? 2.0 * std::log(std::fabs(e)) : kNegInf;
        lu_ = m < 0.5 ? std::log(0.5 - m) : kNegInf;
    }

    double log_bit() const { return lb_; }
    double log_u() const { return lu_; }      // u = 0.5 - (p_z + p_y)
    bool phase_below_half() const { return lu_ != kNegInf; }

    void advance() {
        const double b = lb_ > -700.0 ? std::exp(lb_) : 0.0;
        const double ln_d = std::log1p(2.0 * b * b - 2.0 * b);
        lu_ = log_sum_exp(ld2_, le2_) - std::log(2.0) - ln_d;
        lb_ = 2.0 * lb_ - ln_d;
        ld2_ = 2.0 * ld2_ - 2.0 * ln_d;
        le2_ = 2.0 * le2_ - 2.0 * ln_d;
    }

  private:
    double lb_, ld2_, le2_, lu_;
};

struct StageFeasibility {
    bool feasible{false};
    std::uint64_t reps{0};
    double log10_reps{0.0};
};

// Does some repetition count satisfy both convergence inequalities at this
// stage?  Below 1e12 the odd integer is materialized and checked exactly;
// beyond that the rounding to an odd integer is irrelevant and the check
// runs on logarithms.
inline StageFeasibility stage_feasibility(const LogTrajectory& t, const SolverOptions& opt) {
    if (!t.phase_below_half()) return {};
    const double ln_eta = std::log(opt.eta);
    const double l_need = std::log(std::log(1.0 / opt.eta)) - std::log(2.0) - 2.0 * t.log_u();
    if (l_need < std::log(1e12)) {
        const double need = std::exp(l_need);
        std::uint64_t reps = need <= 1.0 ? 1 : static_cast<std::uint64_t>(std::ceil(need));
        if (opt.odd_reps_only && reps % 2 == 0) ++reps;
        if (opt.r_max != 0 && reps > opt.r_max) return {};
        const double bit = t.log_bit() == kNegInf ? 0.0 : std::exp(t.log_bit());
        if (static_cast<double>(reps) * bit > opt.eta) return {};
        return {true, reps, std::log10(static_cast<double>(reps))};
    }
    if (opt.r_max != 0 && l_need > std::log(static_cast<double>(opt.r_max))) return {};
    if (l_need + t.log_bit() > ln_eta) return {};
    return {true, 0, l_need / std::log(10.0)};
}

inline std::optional<Schedule> schedule_search(const PauliRates& start, const SolverOptions& opt) {
    LogTrajectory t(start);
    for (int g = 0;; ++g) {
        const StageFeasibility s = stage_feasibility(t, opt);
        if (s.feasible) return Schedule{g, s.reps, s.log10_reps};
        if (g == opt.g_max) return std::nullopt;
        t.advance();
    }
}

}  // namespace detail

// Smallest g, then smallest odd reps, making the convergence test pass after
// g rounds of bit-flip rejection applied to the post-decode rates.
inline std::optional<Schedule> find_schedule(const PauliRates& post_decode, int g_max,
                                             std::uint64_t r_max, double eta = kDefaultEta) {
    if (g_max < 0) throw std::invalid_argument("find_schedule: g_max must be nonnegative");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("find_schedule: eta must lie in (0, 1)");
    SolverOptions opt;
    opt.g_max = g_max;
    opt.r_max = r_max;
    opt.eta = eta;
    return detail::schedule_search(post_decode, opt);
}

// Channel -> decode -> (four-state worst case) -> g rounds of bit-flip
// rejection.  Survival compounds every stage's kept fraction; each rejection
// round additionally halves the yield because a pair feeds one survivor.
inline MapResult pipeline_rates(const PauliRates& channel, ProtocolVariant variant, int g) {
    if (g < 0) throw std::invalid_argument("pipeline_rates: g must be nonnegative");
    MapResult dec = qpfer_decode_map(channel);
    PauliRates cur = dec.rates;
    double survival = dec.survival;
    if (variant == ProtocolVariant::FourState) cur = worst_case_4state(cur);
    for (int k = 0; k < g; ++k) {
        const MapResult m = bitflip_rejection_map(cur);
        cur = m.rates;
        survival *= 0.5 * m.survival;
    }
    return {cur, survival};
}

namespace detail {

// Rates entering the rejection stage, or nothing when the four-state
// worst case has no valid assignment (detected rates summing above 1).
inline std::optional<PauliRates> start_rates(const PauliRates& channel, ProtocolVariant variant,
                                             bool skip_decode) {
    PauliRates start = skip_decode ? channel : qpfer_decode_map(channel).rates;
    if (variant == ProtocolVariant::FourState) {
        if (start.bit_flip() + start.phase_flip() > 1.0 + kNormTolerance) return std::nullopt;
        start = worst_case_4state(start);
    }
    return start;
}

}  // namespace detail

// Bisection for the supremum feasible q of an arbitrary one-parameter channel
// curve, guarded by a coarse antitonicity pre-scan.
inline ThresholdReport threshold_over(const std::function<PauliRates(double)>& channel_at,
                                      double q_lo, double q_hi, ProtocolVariant variant,
                                      const SolverOptions& opt = {}, bool skip_decode = false) {
    if (!(opt.tol >= 1e-5)) throw std::invalid_argument("threshold: tol must be at least 1e-5");
    if (!(opt.eta > 0.0 && opt.eta < 1.0)) throw std::invalid_argument("threshold: eta must lie in (0, 1)");
    if (!(q_hi > q_lo)) throw std::invalid_argument("threshold: empty search interval");

    const auto schedule_at = [&](double q) -> std::optional<Schedule> {
        const auto start = detail::start_rates(channel_at(q), variant, skip_decode);
        if (!start) return std::nullopt;
        return detail::schedule_search(*start, opt);
    };
    const auto feasible = [&](double q) { return schedule_at(q).has_value(); };

    std::vector<ScanPoint> scan;
    for (double q = q_lo; q < q_hi - 1e-15; q += opt.scan_step)
        scan.push_back({q, feasible(q)});
    scan.push_back({q_hi, feasible(q_hi)});

    bool seen_infeasible = false;
    for (const ScanPoint& p : scan) {
        if (!p.feasible) seen_infeasible = true;
        else if (seen_infeasible) throw non_monotone_error(scan);
    }
    if (!scan.front().feasible)
        throw std::runtime_error("threshold: no feasible region at the low end of the family");

    ThresholdReport rep;
    rep.variant = variant;
    rep.search_tolerance = opt.tol;
    rep.scan = scan;

    double lo = q_lo, hi = q_hi;
    bool have_hi = false;
    for (std::size_t i = 0; i + 1 < scan.size(); ++i) {
        if (scan[i].feasible && !scan[i + 1].feasible) {
            lo = scan[i].q;
            hi = scan[i + 1].q;
            have_hi = true;
            break;
        }
    }
    if (!have_hi) {
        // feasible across the whole family
        rep.q_star = q_hi;
        if (const auto w = schedule_at(q_hi)) rep.witness_schedule = *w;
        return rep;
    }
    while (hi - lo > opt.tol) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) lo = mid;
        else hi = mid;
    }
    rep.q_star = 0.5 * (lo + hi);

    if (const auto w = schedule_at(std::max(q_lo, rep.q_star - opt.tol)))
        rep.witness_schedule = *w;
    return rep;
}

// Threshold of a named one-parameter family, reported as the channel's
// detected bit-flip rate (2q for the symmetric family, q for the
// asymmetric one).
inline ThresholdReport threshold(ChannelKind family, ProtocolVariant variant,
                                 const SolverOptions& opt = {}) {
    if (family == ChannelKind::Explicit)
        throw std::invalid_argument("threshold: thresholds are defined for the one-parameter families only");
    const auto channel_at = [family](double q) {
        return make_channel(ChannelFamily{family, q, {}});
    };
    ThresholdReport rep = threshold_over(channel_at, 0.0, family_q_max(family), variant, opt);
    rep.family = family;
    rep.threshold_bit_flip_rate =
        family == ChannelKind::Symmetric ? 2.0 * rep.q_star : rep.q_star;
    return rep;
}

inline ThresholdReport threshold(ChannelKind family, ProtocolVariant variant, double eta, double tol) {
    SolverOptions opt;
    opt.eta = eta;
    opt.tol = tol;
    return threshold(family, variant, opt);
}

// One row of the solver-parameter sensitivity sweep.
struct SensitivityRow {
    std::uint64_t r_max{};
    int g_max{};
    double eta{};
    bool odd_reps_only{};
    double q_star{};
    double threshold_bit_flip_rate{};
};

// How the reported threshold moves under the search bounds, the convergence
// target and the odd-reps restriction.  r_max = 0 rows are the unbounded
// repetition count used by default.
inline std::vector<SensitivityRow> sensitivity_sweep(ChannelKind family, ProtocolVariant variant,
                                                     const SolverOptions& base = {}) {
    std::vector<SensitivityRow> rows;
    const auto run = [&](SolverOptions opt) {
        const ThresholdReport r = threshold(family, variant, opt);
        rows.push_back({opt.r_max, opt.g_max, opt.eta, opt.odd_reps_only, r.q_star,
                        r.threshold_bit_flip_rate});
    };
    for (std::uint64_t r_max : {std::uint64_t{999}, std::uint64_t{2000001},
                                std::uint64_t{1000000000}, std::uint64_t{0}}) {
        SolverOptions opt = base;
        opt.r_max = r_max;
        run(opt);
    }
    for (int g_max : {5, 10, 20}) {
        SolverOptions opt = base;
        opt.g_max = g_max;
        run(opt);
    }
    for (double eta : {0.01, 0.10}) {
        SolverOptions opt = base;
        opt.eta = eta;
        run(opt);
    }
    {
        SolverOptions opt = base;
        opt.odd_reps_only = false;
        run(opt);
    }
    return rows;
}

// Per-stage view of the analytic pipeline, for the iterate command.
struct IterateRow {
    std::string stage;
    PauliRates rates{};
    double survival{1.0};
    double cumulative_yield{1.0};
};

inline std::vector<IterateRow> iterate_stages(const PauliRates& channel, ProtocolVariant variant,
                                              int g) {
    if (g < 0) throw std::invalid_argument("iterate_stages: g must be nonnegative");
    std::vector<IterateRow> rows;
    const MapResult dec = qpfer_decode_map(channel);
    double yield = dec.survival;
    rows.push_back({"decode", dec.rates, dec.survival, yield});
    PauliRates cur = dec.rates;
    if (variant == ProtocolVariant::FourState) {
        cur = worst_case_4state(cur);
        rows.push_back({"assume_py0", cur, 1.0, yield});
    }
    for (int k = 1; k <= g; ++k) {
        const MapResult m = bitflip_rejection_map(cur);
        cur = m.rates;
        yield *= 0.5 * m.survival;
        rows.push_back({"reject_" + std::to_string(k), cur, m.survival, yield});
    }
    return rows;
}

}  // namespace qpfer
