#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qpfer/frame_sim.hpp"
#include "qpfer/threshold.hpp"

namespace qpfer {

inline constexpr const char* kSpecVersion = "1.0";

// Fixed formatting so identical runs produce byte-identical reports:
// 12 significant digits, scientific notation below 1e-4.
inline std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[48];
    if (std::fabs(v) < 1e-4)
        std::snprintf(buf, sizeof buf, "%.11e", v);
    else
        std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Tiny JSON emitters.  Objects sort their keys on render; arrays keep
// insertion order.  Values arrive pre-rendered, which keeps the float
// format rule in one place.
class JsonArray;

class JsonObject {
  public:
    JsonObject& put_raw(const std::string& key, std::string rendered) {
        fields_.emplace_back(key, std::move(rendered));
        return *this;
    }
    JsonObject& put(const std::string& key, double v) { return put_raw(key, format_double(v)); }
    JsonObject& put(const std::string& key, std::int64_t v) { return put_raw(key, std::to_string(v)); }
    JsonObject& put(const std::string& key, std::uint64_t v) { return put_raw(key, std::to_string(v)); }
    JsonObject& put(const std::string& key, int v) { return put_raw(key, std::to_string(v)); }
    JsonObject& put(const std::string& key, bool v) { return put_raw(key, v ? "true" : "false"); }
    JsonObject& put(const std::string& key, const char* s) { return put_raw(key, quote(s)); }
    JsonObject& put(const std::string& key, const std::string& s) { return put_raw(key, quote(s)); }

    std::string render() const {
        std::vector<std::pair<std::string, std::string>> sorted = fields_;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::string out = "{";
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (i) out += ',';
            out += quote(sorted[i].first);
            out += ':';
            out += sorted[i].second;
        }
        out += '}';
        return out;
    }

    static std::string quote(const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                default: out += c;
            }
        }
        out += '"';
        return out;
    }

  private:
    std::vector<std::pair<std::string, std::string>> fields_;
};

class JsonArray {
  public:
    JsonArray& push_raw(std::string rendered) {
        items_.push_back(std::move(rendered));
        return *this;
    }
    std::string render() const {
        std::string out = "[";
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (i) out += ',';
            out += items_[i];
        }
        out += ']';
        return out;
    }

  private:
    std::vector<std::string> items_;
};

inline std::string rates_json(const PauliRates& r) {
    return JsonObject{}
        .put("p_I", r.p_I)
        .put("p_x", r.p_x)
        .put("p_y", r.p_y)
        .put("p_z", r.p_z)
        .render();
}

inline std::string schedule_json(const Schedule& s) {
    return JsonObject{}
        .put("g", s.g)
        .put("reps", s.reps)
        .put("log10_reps", s.log10_reps)
        .render();
}

inline std::string threshold_report_json(const ThresholdReport& rep, const SolverOptions& opt) {
    JsonArray scan;
    for (const ScanPoint& p : rep.scan)
        scan.push_raw(JsonObject{}.put("q", p.q).put("feasible", p.feasible).render());
    return JsonObject{}
        .put("spec_version", kSpecVersion)
        .put("family", to_string(rep.family))
        .put("variant", to_string(rep.variant))
        .put("q_star", rep.q_star)
        .put("threshold_bit_flip_rate", rep.threshold_bit_flip_rate)
        .put("search_tolerance", rep.search_tolerance)
        .put("eta", opt.eta)
        .put("g_max", opt.g_max)
        .put("r_max", opt.r_max)
        .put_raw("witness_schedule", schedule_json(rep.witness_schedule))
        .put_raw("feasibility_scan", scan.render())
        .render();
}

inline std::string threshold_report_csv(const ThresholdReport& rep) {
    std::ostringstream os;
    os << "family,variant,q_star,threshold_bit_flip_rate,witness_g,witness_reps,witness_log10_reps,"
          "search_tolerance\n";
    os << to_string(rep.family) << ',' << to_string(rep.variant) << ','
       << format_double(rep.q_star) << ',' << format_double(rep.threshold_bit_flip_rate) << ','
       << rep.witness_schedule.g << ',' << rep.witness_schedule.reps << ','
       << format_double(rep.witness_schedule.log10_reps) << ','
       << format_double(rep.search_tolerance) << '\n';
    return os.str();
}

inline std::string sensitivity_csv(const std::vector<SensitivityRow>& rows) {
    std::ostringstream os;
    os << "r_max,g_max,eta,odd_reps_only,q_star,threshold_bit_flip_rate\n";
    for (const SensitivityRow& r : rows) {
        os << r.r_max << ',' << r.g_max << ',' << format_double(r.eta) << ','
           << (r.odd_reps_only ? 1 : 0) << ',' << format_double(r.q_star) << ','
           << format_double(r.threshold_bit_flip_rate) << '\n';
    }
    return os.str();
}

inline std::string iterate_rows_csv(const std::vector<IterateRow>& rows) {
    std::ostringstream os;
    os << "stage,p_I,p_x,p_y,p_z,survival,cumulative_yield\n";
    for (const IterateRow& r : rows) {
        os << r.stage << ',' << format_double(r.rates.p_I) << ',' << format_double(r.rates.p_x)
           << ',' << format_double(r.rates.p_y) << ',' << format_double(r.rates.p_z) << ','
           << format_double(r.survival) << ',' << format_double(r.cumulative_yield) << '\n';
    }
    return os.str();
}

inline std::string sim_config_json(const SimConfig& cfg) {
    return JsonObject{}
        .put_raw("channel", rates_json(cfg.channel))
        .put("variant", to_string(cfg.variant))
        .put("n_codes", cfg.n_codes)
        .put("g", cfg.g)
        .put("reps", cfg.reps)
        .put("seed", cfg.seed)
        .put("check_fraction", cfg.check_fraction)
        .put("abort_threshold", cfg.abort_threshold)
        .put("eta", cfg.eta)
        .render();
}

inline std::string sim_report_json(const SimReport& rep, const SimConfig& cfg) {
    JsonArray rounds;
    for (std::size_t i = 0; i < rep.per_round_empirical.size(); ++i) {
        const RoundStats& r = rep.per_round_empirical[i];
        rounds.push_raw(JsonObject{}
                            .put("round", static_cast<std::int64_t>(i + 1))
                            .put_raw("rates", rates_json(r.rates))
                            .put("survivors", r.survivors)
                            .render());
    }
    return JsonObject{}
        .put("spec_version", kSpecVersion)
        .put_raw("config", sim_config_json(cfg))
        .put("sent", rep.sent)
        .put("kept_after_parity", rep.kept_after_parity)
        .put("sifted", rep.sifted)
        .put("checked", rep.checked)
        .put("check_error_rate", rep.check_error_rate)
        .put("check_error_rate_x", rep.check_error_rate_x)
        .put("check_error_rate_y", rep.check_error_rate_y)
        .put("check_error_rate_z", rep.check_error_rate_z)
        .put("abort_threshold", rep.abort_threshold)
        .put("aborted", rep.aborted)
        .put_raw("post_decode_empirical", rates_json(rep.post_decode_empirical))
        .put("key_bits", rep.key_bits)
        .put_raw("per_round_empirical", rounds.render())
        .put("final_count", rep.final_count)
        .put("final_bit_flip_rate", rep.final_bit_flip_rate)
        .put("final_phase_flip_rate", rep.final_phase_flip_rate)
        .put("yield", rep.yield)
        .put("converged", rep.converged)
        .render();
}

inline std::string per_round_csv(const SimReport& rep) {
    std::ostringstream os;
    os << "round,p_I,p_x,p_y,p_z,survivors\n";
    for (std::size_t i = 0; i < rep.per_round_empirical.size(); ++i) {
        const RoundStats& r = rep.per_round_empirical[i];
        os << (i + 1) << ',' << format_double(r.rates.p_I) << ',' << format_double(r.rates.p_x)
           << ',' << format_double(r.rates.p_y) << ',' << format_double(r.rates.p_z) << ','
           << r.survivors << '\n';
    }
    return os.str();
}

}  // namespace qpfer
