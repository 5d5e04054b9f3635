// beltgap: command-line front end. Every subcommand writes one table as CSV
// (default) or JSON. Exit codes: 0 ok, 2 usage or validation, 3 numerical.

#include "beltgap/beltgap.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace beltgap;
using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

/// Flags that may also come from --config. A flag given on the command line
/// wins over the config value.
class OptionSet {
public:
    explicit OptionSet(CLI::App* app) : app_(app) {}

    CLI::Option* add(const std::string& flag, double& target, const std::string& help) {
        auto* opt = app_->add_option("--" + flag, target, help)->capture_default_str();
        entries_.push_back({flag, key_of(flag),
                            [&target, flag](const std::string& text) { target = detail::parse_number(flag, text); },
                            [&target] { return json(target); }});
        return opt;
    }

    CLI::Option* add(const std::string& flag, int& target, const std::string& help) {
        auto* opt = app_->add_option("--" + flag, target, help)->capture_default_str();
        entries_.push_back({flag, key_of(flag),
                            [&target, flag](const std::string& text) {
                                const double x = detail::parse_number(flag, text);
                                if (x != std::floor(x) || std::abs(x) > 1e9) {
                                    throw InvalidParameter("`" + flag + "` must be an integer");
                                }
                                target = static_cast<int>(x);
                            },
                            [&target] { return json(target); }});
        return opt;
    }

    CLI::Option* add(const std::string& flag, std::string& target, const std::string& help) {
        auto* opt = app_->add_option("--" + flag, target, help)->capture_default_str();
        entries_.push_back({flag, key_of(flag), [&target](const std::string& text) { target = text; },
                            [&target] { return json(target); }});
        return opt;
    }

    CLI::Option* add(const std::string& flag, std::vector<double>& target, const std::string& help) {
        auto* opt = app_->add_option("--" + flag, target, help);
        entries_.push_back({flag, key_of(flag),
                            [&target, flag](const std::string& text) {
                                target.clear();
                                std::stringstream ss(text);
                                std::string item;
                                while (std::getline(ss, item, ',')) {
                                    target.push_back(detail::parse_number(flag, item));
                                }
                            },
                            [&target] { return json(target); }});
        return opt;
    }

    void apply(const ConfigMap& cfg) const {
        for (const auto& e : entries_) {
            if (app_->count("--" + e.flag) > 0) {
                continue;
            }
            if (auto it = cfg.find(e.key); it != cfg.end()) {
                e.set(it->second);
            }
        }
    }

    [[nodiscard]] json echo() const {
        json j = json::object();
        for (const auto& e : entries_) {
            j[e.key] = e.get();
        }
        return j;
    }

private:
    struct Entry {
        std::string flag;
        std::string key;
        std::function<void(const std::string&)> set;
        std::function<json()> get;
    };

    static std::string key_of(std::string flag) {
        for (auto& c : flag) {
            if (c == '-') {
                c = '_';
            }
        }
        return flag;
    }

    CLI::App* app_;
    std::vector<Entry> entries_;
};

/// Model flags, config file and output destination shared by all subcommands.
struct Common {
    CLI::App* app = nullptr;
    BeltParams bp{0.0, 0.0, 0.0, 4};
    std::string config;
    std::string format = "csv";
    std::string out;
    ConfigMap cfg;
    bool model = true;

    void attach(CLI::App* sub, bool with_model = true) {
        app = sub;
        model = with_model;
        if (model) {
            sub->add_option("--v", bp.v, "axial speed / wave speed, 0 <= v < 1")->capture_default_str();
            sub->add_option("--s", bp.s, "foundation stiffness, s >= 0")->capture_default_str();
            sub->add_option("--sigma", bp.sigma, "stiffness modulation, sigma >= 0")->capture_default_str();
            sub->add_option("--M", bp.M, "truncation order (harmonics -M..M)")->capture_default_str();
        }
        sub->add_option("--config", config, "key = value file or a JSON output of this tool");
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        sub->add_option("--out", out, "output file (default: stdout)");
    }

    /// Loads the config and resolves parameters; explicit flags win.
    void resolve(const OptionSet& opts) {
        if (!config.empty()) {
            cfg = load_any_config(config);
        }
        if (!config.empty() && model) {
            const BeltParams flags = bp;
            bp = belt_params_from_config(cfg, BeltParams{0.0, 0.0, 0.0, 4});
            if (app->count("--v") > 0) bp.v = flags.v;
            if (app->count("--s") > 0) bp.s = flags.s;
            if (app->count("--sigma") > 0) bp.sigma = flags.sigma;
            if (app->count("--M") > 0) bp.M = flags.M;
        }
        opts.apply(cfg);
    }
};

json params_json(const BeltParams& bp) {
    return json{{"v", bp.v}, {"s", bp.s}, {"sigma", bp.sigma}, {"M", bp.M}};
}

json tolerance_json(const SpectralTolerances& tol) {
    return json{{"reality", tol.reality}, {"propagating_decay", tol.propagating_decay}, {"fold_guard", tol.fold_guard}};
}

void emit(const Common& c, const OutputTable& t) {
    std::ostringstream os;
    if (c.format == "json") {
        write_json(os, t);
    } else {
        write_csv(os, t);
    }
    if (c.out.empty()) {
        std::cout << os.str();
        std::cout.flush();
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) {
        throw InvalidParameter("cannot open output file " + c.out);
    }
    f << os.str();
    if (!f) {
        throw NumericalError("failed writing " + c.out);
    }
}

void warn_all(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << "\n";
    }
}

bool parse_on_off(const std::string& flag, const std::string& text) {
    if (text == "on" || text == "true" || text == "1") {
        return true;
    }
    if (text == "off" || text == "false" || text == "0") {
        return false;
    }
    throw InvalidParameter("`" + flag + "` must be on or off (got " + text + ")");
}

void add_model_warnings(OutputTable& t, const BeltParams& bp) {
    for (const auto& w : validate(bp).warnings) {
        t.warnings.push_back(w);
    }
}

// ---------------------------------------------------------------------------

struct DispersionCmd {
    Common c;
    double k_min = -0.5;
    double k_max = 0.5;
    int k_steps = 101;
    double omega_max = 1.0;
    OptionSet opts{nullptr};

    void attach(CLI::App* sub) {
        c.attach(sub);
        opts = OptionSet(sub);
        opts.add("k-min", k_min, "lower end of the k grid, >= -0.5");
        opts.add("k-max", k_max, "upper end of the k grid, <= 0.5");
        opts.add("k-steps", k_steps, "number of k samples");
        opts.add("omega-max", omega_max, "largest frequency reported");
    }

    int run() {
        c.resolve(opts);
        require_valid(c.bp);
        if (std::abs(k_min) > 0.5 || std::abs(k_max) > 0.5) {
            throw InvalidParameter("k range [" + format_number(k_min) + ", " + format_number(k_max) +
                                   "] must lie in the first Brillouin zone [-0.5, 0.5]");
        }
        detail::require(k_min < k_max, "k-min must be below k-max");
        detail::require(k_steps >= 2, "k-steps must be at least 2");
        const auto branches = sweep_branches(c.bp, uniform_grid(k_min, k_max, k_steps), omega_max);
        OutputTable t;
        t.command = "dispersion";
        t.parameters = params_json(c.bp);
        t.options = opts.echo();
        t.tolerances = tolerance_json({});
        add_model_warnings(t, c.bp);
        auto& sec = t.add_section("branches", {"k", "branch_id", "omega", "c_g"});
        for (const auto& br : branches) {
            for (const auto& s : br.samples) {
                sec.rows.push_back({s.k, static_cast<long long>(br.label), s.omega, s.group_velocity});
            }
        }
        emit(c, t);
        return 0;
    }
};

struct GapsCmd {
    Common c;
    double omega_max = 1.0;
    int grid = 2000;
    std::string fine_scan = "on";
    OptionSet opts{nullptr};

    void attach(CLI::App* sub) {
        c.attach(sub);
        opts = OptionSet(sub);
        opts.add("omega-max", omega_max, "upper end of the frequency scan");
        opts.add("grid", grid, "coarse grid points on [0, omega-max]");
        opts.add("fine-scan", fine_scan, "on or off: dense scan around crossing frequencies");
    }

    int run() {
        c.resolve(opts);
        GapScanOptions o;
        o.omega_max = omega_max;
        o.grid_points = grid;
        o.fine_scan = parse_on_off("fine-scan", fine_scan);
        fine_scan = o.fine_scan ? "on" : "off";
        const auto scan = detect_gaps(c.bp, o);
        OutputTable t;
        t.command = "gaps";
        t.parameters = params_json(c.bp);
        t.options = opts.echo();
        t.tolerances = tolerance_json(o.tolerances);
        t.tolerances["edge"] = o.edge_tolerance;
        add_model_warnings(t, c.bp);
        t.warnings.insert(t.warnings.end(), scan.warnings.begin(), scan.warnings.end());
        auto& sec = t.add_section("gaps", {"index", "omega_lo", "omega_hi", "width", "min_decay", "edge_method", "narrow"});
        for (const auto& g : scan.gaps) {
            sec.rows.push_back({static_cast<long long>(g.index), g.omega_lo, g.omega_hi, g.width(), g.min_decay_in_gap,
                                std::string(to_string(g.edge_method)),
                                static_cast<long long>(g.below_grid_resolution ? 1 : 0)});
        }
        emit(c, t);
        warn_all(scan.warnings);
        return 0;
    }
};

struct SweepCmd {
    Common c;
    std::string param = "s";
    double from = 0.0;
    double to = 0.0;
    int steps = 20;
    double s_from = 0.01;
    double s_to = 0.5;
    int s_steps = 20;
    double omega_max = 1.0;
    int grid = 2000;
    std::string fine_scan = "on";
    OptionSet opts{nullptr};

    void attach(CLI::App* sub) {
        c.attach(sub);
        opts = OptionSet(sub);
        opts.add("param", param, "s, sigma, v, or vs (closed-form cut-off over a v-s grid)");
        opts.add("from", from, "first parameter value (v for --param vs)");
        opts.add("to", to, "last parameter value (v for --param vs)");
        opts.add("steps", steps, "number of parameter values");
        opts.add("s-from", s_from, "first s value for --param vs");
        opts.add("s-to", s_to, "last s value for --param vs");
        opts.add("s-steps", s_steps, "number of s values for --param vs");
        opts.add("omega-max", omega_max, "upper end of each frequency scan");
        opts.add("grid", grid, "coarse grid points per scan");
        opts.add("fine-scan", fine_scan, "on or off");
    }

    int run() {
        c.resolve(opts);
        detail::require(steps >= 1, "steps must be at least 1");
        OutputTable t;
        t.command = "sweep";
        if (param == "vs") {
            return run_surface(t);
        }
        const SweepParameter which = parse_sweep_parameter(param);
        GapScanOptions o;
        o.omega_max = omega_max;
        o.grid_points = grid;
        o.fine_scan = parse_on_off("fine-scan", fine_scan);
        fine_scan = o.fine_scan ? "on" : "off";
        const auto rows = sweep_parameter(c.bp, which, uniform_grid(from, to, steps), o);
        t.parameters = params_json(c.bp);
        t.options = opts.echo();
        t.tolerances = tolerance_json(o.tolerances);
        t.tolerances["edge"] = o.edge_tolerance;
        auto& sec = t.add_section("gaps", {"param_value", "gap_index", "omega_lo", "omega_hi", "width"});
        int rc = 0;
        for (const auto& r : rows) {
            for (const auto& w : r.warnings) {
                t.warnings.push_back(param + " = " + format_number(r.value) + ": " + w);
            }
            if (!r.error.empty()) {
                t.warnings.push_back("error at " + param + " = " + format_number(r.value) + ": " + r.error);
                std::cerr << "error at " << param << " = " << format_number(r.value) << ": " << r.error << "\n";
                rc = std::max(rc, r.invalid_parameter ? kExitUsage : kExitNumerical);
            }
            for (const auto& g : r.gaps) {
                sec.rows.push_back({r.value, static_cast<long long>(g.index), g.omega_lo, g.omega_hi, g.width()});
            }
        }
        emit(c, t);
        return rc;
    }

    int run_surface(OutputTable& t) {
        detail::require(s_steps >= 1, "s-steps must be at least 1");
        t.parameters = params_json(c.bp);
        t.options = opts.echo();
        auto& sec = t.add_section("cutoff", {"v", "s", "omega_c"});
        for (double v : uniform_grid(from, to, steps)) {
            for (double s : uniform_grid(s_from, s_to, s_steps)) {
                BeltParams bp = c.bp;
                bp.v = v;
                bp.s = s;
                sec.rows.push_back({v, s, first_gap_closed_form(bp).omega_c});
            }
        }
        emit(c, t);
        return 0;
    }
};

struct TuneCmd {
    Common c;
    bool stiffness = true;
    double v1 = 0.0;
    double v2 = 0.0;
    double s1 = 0.1;
    double s2 = 0.1;
    OptionSet opts{nullptr};

    void attach(CLI::App* sub, bool stiff) {
        stiffness = stiff;
        c.attach(sub, false);
        opts = OptionSet(sub);
        if (stiff) {
            opts.add("v1", v1, "initial speed");
            opts.add("v2", v2, "target speed");
            opts.add("s1", s1, "initial stiffness");
        } else {
            opts.add("s1", s1, "initial stiffness");
            opts.add("s2", s2, "target stiffness");
            opts.add("v1", v1, "initial speed");
        }
    }

    int run() {
        c.resolve(opts);
        const TuningResult r = stiffness ? tune_stiffness(v1, v2, s1) : tune_velocity(s1, s2, v1);
        OutputTable t;
        t.command = stiffness ? "tune stiffness" : "tune velocity";
        t.options = opts.echo();
        auto& sec = t.add_section("tuning", {"delta", "new_value", "magnitude", "cutoff_before", "cutoff_after"});
        sec.rows.push_back({r.delta, r.new_value, r.magnitude, r.cutoff_before, r.cutoff_after});
        emit(c, t);
        return 0;
    }
};

struct ModesCmd {
    Common c;
    std::vector<double> omegas;
    int periods = 3;
    int samples_per_period = 64;
    OptionSet opts{nullptr};

    void attach(CLI::App* sub) {
        c.attach(sub);
        opts = OptionSet(sub);
        opts.add("omega", omegas, "frequency (repeatable)");
        opts.add("periods", periods, "foundation periods in each profile");
        opts.add("samples-per-period", samples_per_period, "profile samples per period");
    }

    int run() {
        c.resolve(opts);
        require_valid(c.bp);
        detail::require(!omegas.empty(), "at least one --omega is required");
        OutputTable t;
        t.command = "modes";
        t.parameters = params_json(c.bp);
        t.options = opts.echo();
        t.tolerances = tolerance_json({});
        add_model_warnings(t, c.bp);
        auto& prof = t.add_section("profiles", {"omega", "x", "re_u", "im_u", "abs_u"});
        Section summary{"summary", {"omega", "k_re", "k_im", "decay_rate", "participation", "residual", "degenerate"}, {}};
        for (double w : omegas) {
            const ModeShape ms = mode_at_frequency(c.bp, w);
            const SpatialProfile p = reconstruct(ms, periods, samples_per_period);
            for (std::size_t j = 0; j < p.x.size(); ++j) {
                prof.rows.push_back({w, p.x[j], p.u[j].real(), p.u[j].imag(), p.envelope[j]});
            }
            summary.rows.push_back({w, ms.k.real(), ms.k.imag(), std::abs(ms.k.imag()), participation_ratio(ms),
                                    ms.residual, static_cast<long long>(ms.degenerate ? 1 : 0)});
        }
        t.sections.push_back(std::move(summary));
        emit(c, t);
        return 0;
    }
};

struct TransmitCmd {
    Common c;
    int n_periods = 20;
    double omega_from = 0.05;
    double omega_to = 0.8;
    int omega_steps = 76;
    double dx = 2.0 * std::numbers::pi / 64.0;
    double cfl = 0.9;
    double ramp_cycles = 20.0;
    double measure_cycles = 5.0;
    double sponge_strength = 0.0;
    std::string probe_csv;
    OptionSet opts{nullptr};

    void attach(CLI::App* sub) {
        c.attach(sub);
        opts = OptionSet(sub);
        opts.add("n-periods", n_periods, "foundation periods in the periodic section");
        opts.add("omega-from", omega_from, "first drive frequency");
        opts.add("omega-to", omega_to, "last drive frequency");
        opts.add("omega-steps", omega_steps, "number of drive frequencies");
        opts.add("dx", dx, "grid step, at most 2 pi / 64");
        opts.add("cfl", cfl, "time step safety factor: dt = cfl dx / (1 + v), cfl <= 0.9");
        opts.add("ramp-cycles", ramp_cycles, "source ramp length in drive periods");
        opts.add("measure-cycles", measure_cycles, "measurement window in drive periods");
        opts.add("sponge-strength", sponge_strength, "peak sponge damping");
        sub->add_option("--probe-csv", probe_csv, "write raw probe signals (single frequency only)");
    }

    int run() {
        c.resolve(opts);
        detail::require(omega_steps >= 1, "omega-steps must be at least 1");
        SimConfig base;
        base.bp = c.bp;
        base.n_periods = n_periods;
        base.dx = dx;
        base.cfl = cfl;
        base.ramp_cycles = ramp_cycles;
        base.measure_cycles = measure_cycles;
        base.sponge_strength = sponge_strength;
        base.drive_omega = omega_from;
        validate(base);
        const auto omegas = uniform_grid(omega_from, omega_to, omega_steps);
        std::vector<TransmissionRecord> recs;
        if (!probe_csv.empty()) {
            detail::require(omega_steps == 1, "--probe-csv needs a single frequency (omega-steps 1)");
            std::ofstream f(probe_csv);
            if (!f) {
                throw InvalidParameter("cannot open probe file " + probe_csv);
            }
            recs.push_back(run_transmission(base, &f));
        } else {
            recs = transmission_spectrum(base, omegas);
        }
        OutputTable t;
        t.command = "transmit";
        t.parameters = params_json(c.bp);
        t.options = opts.echo();
        t.tolerances = json{{"convergence", base.convergence_tol}, {"instability_factor", 1e6}};
        auto& sec = t.add_section("transmission",
                                  {"omega", "transmission_db", "amplitude_in", "amplitude_out", "converged"});
        int rc = 0;
        for (const auto& r : recs) {
            for (const auto& w : r.warnings) {
                t.warnings.push_back(w);
            }
            if (!r.error.empty()) {
                t.warnings.push_back("error at omega = " + format_number(r.drive_omega) + ": " + r.error);
                std::cerr << "error at omega = " << format_number(r.drive_omega) << ": " << r.error << "\n";
                rc = std::max(rc, r.invalid_parameter ? kExitUsage : kExitNumerical);
                continue;
            }
            sec.rows.push_back({r.drive_omega, r.transmission_db, r.amplitude_in, r.amplitude_out,
                                static_cast<long long>(r.converged ? 1 : 0)});
        }
        emit(c, t);
        return rc;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Band gaps of an axially moving string on a modulated elastic foundation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("beltgap ") + kVersion);

    DispersionCmd dispersion;
    GapsCmd gaps;
    SweepCmd sweep;
    TuneCmd tune_s;
    TuneCmd tune_v;
    ModesCmd modes;
    TransmitCmd transmit;

    auto* d = app.add_subcommand("dispersion", "real branches omega(k) over the first Brillouin zone");
    dispersion.attach(d);
    auto* g = app.add_subcommand("gaps", "band gaps from the complex-k spectrum");
    gaps.attach(g);
    auto* sw = app.add_subcommand("sweep", "band gaps against s, sigma or v");
    sweep.attach(sw);
    auto* tune = app.add_subcommand("tune", "closed-form cut-off preserving tuning");
    tune->require_subcommand(1);
    auto* ts = tune->add_subcommand("stiffness", "stiffness change for a new speed");
    tune_s.attach(ts, true);
    auto* tv = tune->add_subcommand("velocity", "speed change for a new stiffness");
    tune_v.attach(tv, false);
    auto* m = app.add_subcommand("modes", "mode shapes and participation scores");
    modes.attach(m);
    auto* tr = app.add_subcommand("transmit", "time-domain transmission through a finite array");
    transmit.attach(tr);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (d->parsed()) return dispersion.run();
        if (g->parsed()) return gaps.run();
        if (sw->parsed()) return sweep.run();
        if (ts->parsed()) return tune_s.run();
        if (tv->parsed()) return tune_v.run();
        if (m->parsed()) return modes.run();
        if (tr->parsed()) return transmit.run();
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
