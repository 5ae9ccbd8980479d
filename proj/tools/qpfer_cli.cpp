// Command-line front end: threshold search, analytic iteration tables,
// Monte Carlo protocol runs and the decode-table self check.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpfer/report_io.hpp"
#include "qpfer/statevector.hpp"

namespace {

using nlohmann::json;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return json::parse(in);
}

// Flags override config-file values, which override defaults.
template <typename T>
void merge(const CLI::Option* opt, const json& cfg, const char* key, T& value) {
    if (opt != nullptr && opt->count() > 0) return;
    if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

void emit(const std::string& out_path, const std::string& payload) {
    if (out_path.empty()) {
        std::cout << payload;
        if (payload.empty() || payload.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << payload;
    if (payload.empty() || payload.back() != '\n') out << '\n';
}

qpfer::ChannelKind parse_family(const std::string& s) {
    if (s == "symmetric") return qpfer::ChannelKind::Symmetric;
    if (s == "asymmetric-no-y") return qpfer::ChannelKind::AsymmetricNoY;
    throw std::runtime_error("invalid --family '" + s + "' (symmetric|asymmetric-no-y)");
}

qpfer::ProtocolVariant parse_variant(const std::string& s) {
    if (s == "four-state") return qpfer::ProtocolVariant::FourState;
    if (s == "six-state") return qpfer::ProtocolVariant::SixState;
    throw std::runtime_error("invalid --variant '" + s + "' (four-state|six-state)");
}

qpfer::PauliRates parse_channel_csv(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    if (v.size() != 4)
        throw std::runtime_error("--channel expects four comma-separated values pI,px,py,pz");
    return qpfer::make_rates(v[0], v[1], v[2], v[3]);
}

// A channel comes either as explicit rates or as family + q.
qpfer::PauliRates resolve_channel(const std::string& channel_csv, const std::string& family,
                                  double q, bool q_set) {
    if (!channel_csv.empty()) return parse_channel_csv(channel_csv);
    if (!family.empty()) {
        if (!q_set) throw std::runtime_error("--family requires --q");
        return qpfer::make_channel(qpfer::ChannelFamily{parse_family(family), q, {}});
    }
    throw std::runtime_error("specify a channel via --channel or --family/--q");
}

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::string format = "json";
    std::string variant = "four-state";
    double eta = qpfer::kDefaultEta;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& c, std::vector<std::pair<const CLI::Option*, int>>*) {
    cmd->add_option("--config", c.config_path, "JSON config file; flags override its keys");
    cmd->add_option("--out", c.out_path, "output path (default stdout)");
    cmd->add_option("--format", c.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--variant", c.variant, "four-state|six-state");
    cmd->add_option("--eta", c.eta, "convergence target (default 0.05)");
    cmd->add_option("--seed", c.seed, "RNG seed");
}

int run_threshold(const CommonOpts& common, const json& cfg, std::string family_str,
                  qpfer::SolverOptions opt, bool sensitivity) {
    const qpfer::ChannelKind family = parse_family(family_str);
    const qpfer::ProtocolVariant variant = parse_variant(common.variant);
    opt.eta = common.eta;
    (void)cfg;
    const qpfer::ThresholdReport rep = qpfer::threshold(family, variant, opt);
    std::string payload;
    if (common.format == "csv") {
        payload = qpfer::threshold_report_csv(rep);
        if (sensitivity) payload += qpfer::sensitivity_csv(qpfer::sensitivity_sweep(family, variant, opt));
    } else {
        std::string body = qpfer::threshold_report_json(rep, opt);
        if (sensitivity) {
            qpfer::JsonArray rows;
            for (const qpfer::SensitivityRow& r : qpfer::sensitivity_sweep(family, variant, opt))
                rows.push_raw(qpfer::JsonObject{}
                                  .put("r_max", r.r_max)
                                  .put("g_max", r.g_max)
                                  .put("eta", r.eta)
                                  .put("odd_reps_only", r.odd_reps_only)
                                  .put("q_star", r.q_star)
                                  .put("threshold_bit_flip_rate", r.threshold_bit_flip_rate)
                                  .render());
            body.pop_back();  // strip '}' to append the extra field
            body += ",\"sensitivity\":" + rows.render() + "}";
        }
        payload = body;
    }
    emit(common.out_path, payload);
    return 0;
}

int run_iterate(const CommonOpts& common, const qpfer::PauliRates& channel, int g,
                std::int64_t reps) {
    const qpfer::ProtocolVariant variant = parse_variant(common.variant);
    const auto rows = qpfer::iterate_stages(channel, variant, g);
    if (common.format == "csv") {
        emit(common.out_path, qpfer::iterate_rows_csv(rows));
        return 0;
    }
    qpfer::JsonArray stages;
    for (const qpfer::IterateRow& r : rows)
        stages.push_raw(qpfer::JsonObject{}
                            .put("stage", r.stage)
                            .put_raw("rates", qpfer::rates_json(r.rates))
                            .put("survival", r.survival)
                            .put("cumulative_yield", r.cumulative_yield)
                            .render());
    const qpfer::PauliRates& last = rows.back().rates;
    qpfer::JsonObject obj;
    obj.put("spec_version", qpfer::kSpecVersion)
        .put_raw("channel", qpfer::rates_json(channel))
        .put("variant", to_string(variant))
        .put("g", g)
        .put("reps", reps)
        .put_raw("stages", stages.render())
        .put("converges", qpfer::converges(last, reps, common.eta))
        .put("yield_after_pec", rows.back().cumulative_yield / static_cast<double>(reps));
    if (last.p_I > 0.5) {
        const qpfer::PecBounds b = qpfer::pec_bounds(last, reps);
        obj.put_raw("pec_bounds", qpfer::JsonObject{}
                                      .put("bitphase_bound", b.bitphase_bound)
                                      .put("phase_bound", b.phase_bound)
                                      .put("chernoff_bound", b.chernoff_bound)
                                      .render());
    }
    emit(common.out_path, obj.render());
    return 0;
}

int run_simulate(const CommonOpts& common, qpfer::SimConfig sim, int workers) {
    sim.seed = common.seed;
    sim.eta = common.eta;
    sim.variant = parse_variant(common.variant);
    const qpfer::SimReport rep = qpfer::run_protocol(sim, workers);
    emit(common.out_path,
         common.format == "csv" ? qpfer::per_round_csv(rep) : qpfer::sim_report_json(rep, sim));
    return 0;
}

int run_verify_oracle(const CommonOpts& common) {
    const auto rows = qpfer::enumerate_joint_errors();
    const auto expected = qpfer::joint_error_reference();
    bool pass = true;
    for (int i = 0; i < 16; ++i) pass = pass && qpfer::rows_equal(rows[i], expected[i]);

    std::string payload;
    if (common.format == "csv") {
        std::ostringstream os;
        qpfer::write_joint_error_table_csv(os, rows);
        payload = os.str();
    } else {
        qpfer::JsonArray arr;
        for (const qpfer::JointErrorRow& r : rows) {
            qpfer::JsonObject o;
            o.put("e1", to_string(r.e1)).put("e2", to_string(r.e2)).put("kept", r.kept);
            if (r.kept) o.put("bell", to_string(r.bell)).put("raw_error", to_string(r.raw_error));
            arr.push_raw(o.render());
        }
        payload = qpfer::JsonObject{}
                      .put("spec_version", qpfer::kSpecVersion)
                      .put_raw("rows", arr.render())
                      .put("matches_reference", pass)
                      .render();
    }
    emit(common.out_path, payload);
    std::ostream& log = common.out_path.empty() ? std::cerr : std::cout;
    log << "verify-oracle: " << (pass ? "PASS" : "FAIL") << " (16 rows)\n";
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-qubit phase-flip error-rejection QKD toolkit"};
    app.require_subcommand(1);

    CommonOpts ct, ci, cs, cv;

    // threshold
    CLI::App* th = app.add_subcommand("threshold", "tolerable-error threshold of a channel family");
    add_common(th, ct, nullptr);
    std::string th_family = "symmetric";
    qpfer::SolverOptions th_opt;
    bool th_sensitivity = false;
    const CLI::Option* th_family_o = th->add_option("--family", th_family, "symmetric|asymmetric-no-y");
    const CLI::Option* th_tol_o = th->add_option("--tol", th_opt.tol, "bisection tolerance on q (default 1e-4)");
    const CLI::Option* th_gmax_o = th->add_option("--g-max", th_opt.g_max, "max bit-flip rejection rounds (default 40)");
    const CLI::Option* th_rmax_o = th->add_option("--r-max", th_opt.r_max, "cap on the repetition count; 0 = unbounded (default)");
    th->add_flag("--sensitivity", th_sensitivity, "also emit the solver-parameter sweep");

    // iterate
    CLI::App* it = app.add_subcommand("iterate", "analytic per-stage rate table");
    add_common(it, ci, nullptr);
    std::string it_channel, it_family;
    double it_q = 0.0;
    int it_g = 0;
    std::int64_t it_reps = 1;
    const CLI::Option* it_channel_o = it->add_option("--channel", it_channel, "explicit rates pI,px,py,pz");
    const CLI::Option* it_family_o = it->add_option("--family", it_family, "symmetric|asymmetric-no-y");
    const CLI::Option* it_q_o = it->add_option("--q", it_q, "family parameter");
    const CLI::Option* it_g_o = it->add_option("--g", it_g, "bit-flip rejection rounds");
    const CLI::Option* it_reps_o = it->add_option("--reps", it_reps, "odd repetition count of the phase correction");

    // simulate
    CLI::App* si = app.add_subcommand("simulate", "seeded Monte Carlo protocol run");
    add_common(si, cs, nullptr);
    std::string si_channel, si_family;
    double si_q = 0.0;
    qpfer::SimConfig sim;
    int si_workers = 1;
    const CLI::Option* si_channel_o = si->add_option("--channel", si_channel, "explicit rates pI,px,py,pz");
    const CLI::Option* si_family_o = si->add_option("--family", si_family, "symmetric|asymmetric-no-y");
    const CLI::Option* si_q_o = si->add_option("--q", si_q, "family parameter");
    const CLI::Option* si_n_o = si->add_option("--n-codes", sim.n_codes, "number of transmitted codes");
    const CLI::Option* si_g_o = si->add_option("--g", sim.g, "bit-flip rejection rounds");
    const CLI::Option* si_reps_o = si->add_option("--reps", sim.reps, "odd repetition count");
    const CLI::Option* si_abort_o = si->add_option("--abort-threshold", sim.abort_threshold,
                                                   "abort above this check error rate (0 = auto)");
    const CLI::Option* si_cf_o = si->add_option("--check-fraction", sim.check_fraction,
                                                "extra fraction of leftover Z bits to check");
    si->add_option("--workers", si_workers, "worker threads (result is identical for any count)");

    // verify-oracle
    CLI::App* ve = app.add_subcommand("verify-oracle", "enumerate the decode table and check it");
    add_common(ve, cv, nullptr);

    CLI11_PARSE(app, argc, argv);

    try {
        if (th->parsed()) {
            const json cfg = load_config(ct.config_path);
            merge(th->get_option("--variant"), cfg, "variant", ct.variant);
            merge(th->get_option("--eta"), cfg, "eta", ct.eta);
            merge(th->get_option("--format"), cfg, "format", ct.format);
            merge(th_family_o, cfg, "family", th_family);
            merge(th_tol_o, cfg, "tol", th_opt.tol);
            merge(th_gmax_o, cfg, "g-max", th_opt.g_max);
            merge(th_rmax_o, cfg, "r-max", th_opt.r_max);
            return run_threshold(ct, cfg, th_family, th_opt, th_sensitivity);
        }
        if (it->parsed()) {
            const json cfg = load_config(ci.config_path);
            merge(it->get_option("--variant"), cfg, "variant", ci.variant);
            merge(it->get_option("--eta"), cfg, "eta", ci.eta);
            merge(it->get_option("--format"), cfg, "format", ci.format);
            merge(it_channel_o, cfg, "channel", it_channel);
            merge(it_family_o, cfg, "family", it_family);
            merge(it_q_o, cfg, "q", it_q);
            merge(it_g_o, cfg, "g", it_g);
            merge(it_reps_o, cfg, "reps", it_reps);
            const bool q_set = it_q_o->count() > 0 || cfg.contains("q");
            return run_iterate(ci, resolve_channel(it_channel, it_family, it_q, q_set), it_g, it_reps);
        }
        if (si->parsed()) {
            const json cfg = load_config(cs.config_path);
            merge(si->get_option("--variant"), cfg, "variant", cs.variant);
            merge(si->get_option("--eta"), cfg, "eta", cs.eta);
            merge(si->get_option("--format"), cfg, "format", cs.format);
            merge(si->get_option("--seed"), cfg, "seed", cs.seed);
            merge(si_channel_o, cfg, "channel", si_channel);
            merge(si_family_o, cfg, "family", si_family);
            merge(si_q_o, cfg, "q", si_q);
            merge(si_n_o, cfg, "n-codes", sim.n_codes);
            merge(si_g_o, cfg, "g", sim.g);
            merge(si_reps_o, cfg, "reps", sim.reps);
            merge(si_abort_o, cfg, "abort-threshold", sim.abort_threshold);
            merge(si_cf_o, cfg, "check-fraction", sim.check_fraction);
            const bool q_set = si_q_o->count() > 0 || cfg.contains("q");
            sim.channel = resolve_channel(si_channel, si_family, si_q, q_set);
            return run_simulate(cs, sim, si_workers);
        }
        if (ve->parsed()) {
            return run_verify_oracle(cv);
        }
    } catch (const qpfer::non_monotone_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (const qpfer::ScanPoint& p : e.scan())
            std::cerr << "  q=" << qpfer::format_double(p.q) << " feasible=" << p.feasible << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
