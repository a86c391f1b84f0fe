// bohm_arrival: command-line front end.
//
//   bohm_arrival simulate   --spin updown --omega 500 --L 50 --n 100000 --seed 7 --out run/
//   bohm_arrival analytic   --L 50
//   bohm_arrival limitdist  --L 50
//   bohm_arrival validate
//   bohm_arrival trajectory --spin updown --omega 50 --x0 0.3 --y0 0.1 --z0 0.5
//
// Shared options may also come from a flat `key = value` file given with
// --config; command-line flags win over the file, the file over defaults.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bohm/arrival_stats.hpp"
#include "bohm/limiting.hpp"
#include "bohm/model.hpp"
#include "bohm/trajectories.hpp"
#include "bohm/validation.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kUsageExit = 2;
constexpr int kFailureExit = 1;

struct RunConfig {
    std::string spin = "updown";
    double omega = 500.0;
    double L = 50.0;
    std::size_t n = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out = ".";
    std::string bins = "fd";
    double tol_ode = bohm::Tolerances{}.ode_rtol;
    double tol_quad = bohm::Tolerances{}.quad;

    // analytic / limitdist grids
    std::vector<int> mu = {1, 2};
    std::size_t points = 0;
    double tau_max = 0.0;

    // trajectory
    double x0 = 0.3, y0 = 0.1, z0 = 0.5;
    double t_end = 20.0;

    // validate
    double inject_drift_tol = 0.0;

    bohm::ModelParams params() const {
        bohm::ModelParams p;
        p.omega = omega;
        p.detector_L = L;
        p.tol.ode_rtol = tol_ode;
        p.tol.quad = tol_quad;
        return p;
    }
};

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

void print_error_json(std::string_view kind, std::string_view message) {
    ojson j;
    j["schema"] = 1;
    j["error"] = {{"kind", kind}, {"message", message}};
    std::cerr << j.dump() << '\n';
}

fs::path prepare_out(const RunConfig& c) {
    fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create output directory '" + c.out + "': " + ec.message());
    return dir;
}

void write_json(const fs::path& path, const ojson& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

std::ofstream open_csv(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os.precision(17);
    return os;
}

bohm::HistogramPolicy parse_bins(const std::string& s) {
    if (s == "fd") return bohm::HistogramPolicy::freedman_diaconis();
    try {
        std::size_t pos = 0;
        const long n = std::stol(s, &pos);
        if (pos == s.size() && n >= 1) return bohm::HistogramPolicy::count(static_cast<std::size_t>(n));
    } catch (const std::exception&) {
    }
    throw UsageError("--bins must be 'fd' or a positive bin count, got '" + s + "'");
}

void validate_config(const RunConfig& c) {
    try {
        c.params().validate();
        bohm::parse_spin(c.spin);
    } catch (const bohm::Error& e) {
        throw UsageError(e.what());
    }
    if (c.n == 0) throw UsageError("--n must be >= 1");
    if (!(c.tol_ode > 0.0 && c.tol_ode < 1.0)) throw UsageError("--tol-ode must be in (0, 1)");
    if (!(c.tol_quad > 0.0 && c.tol_quad < 1.0)) throw UsageError("--tol-quad must be in (0, 1)");
    parse_bins(c.bins);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& c) {
    const auto p = c.params();
    const auto spin = bohm::parse_spin(c.spin);
    const fs::path dir = prepare_out(c);
    bohm::EnsembleOptions opt;
    opt.threads = c.threads;
    opt.bins = parse_bins(c.bins);
    int last_decile = -1;
    opt.progress = [&](std::size_t done, std::size_t total) {
        const int decile = static_cast<int>(10 * done / total);
        if (decile != last_decile) {
            last_decile = decile;
            std::cerr << "simulate: " << done << "/" << total << " trajectories\n";
        }
    };
    const auto res = bohm::run_ensemble(spin, c.n, c.seed, p, opt);
    {
        auto os = open_csv(dir / "records.csv");
        bohm::write_records_csv(os, res.records);
    }
    const auto& s = res.summary;
    ojson j;
    j["schema"] = 1;
    j["spin"] = std::string(bohm::to_string(spin));
    j["omega"] = c.omega;
    j["L"] = c.L;
    j["n"] = s.n;
    j["seed"] = s.seed;
    j["mean"] = s.mean_tau;
    j["std"] = s.std_tau;
    j["max"] = s.max_tau;
    j["bound"] = s.bound;
    j["bins"] = s.histogram.edges;
    j["counts"] = s.histogram.counts;
    j["rejected"] = s.rejected;
    j["max_h_drift"] = s.max_h_drift;
    write_json(dir / "summary.json", j);
    std::cout << "mean=" << std::setprecision(17) << s.mean_tau << " std=" << s.std_tau
              << " max=" << s.max_tau << " bound=" << s.bound << '\n';
    return 0;
}

int cmd_analytic(const RunConfig& c) {
    const auto p = c.params();
    const fs::path dir = prepare_out(c);
    ojson j;
    j["schema"] = 1;
    j["L"] = c.L;
    j["lambda0"] = bohm::lambda0(p);
    ojson moments = ojson::object();
    for (int mu : c.mu) moments[std::to_string(mu)] = bohm::moments_up(p, mu);
    j["moments"] = moments;
    j["mean"] = bohm::moments_up(p, 1);
    j["std"] = bohm::std_up(p);
    j["tail_coefficient"] = 4.0 * c.L * c.L * c.L / (bohm::lambda0(p) * std::sqrt(std::numbers::pi));

    // Uniform steps of L/2000 up to 3L, then geometric growth to tau_max.
    const double top = c.tau_max > 0.0 ? c.tau_max : 1e5;
    std::vector<double> grid;
    const double h = c.L / 2000.0;
    for (double t = 0.0; t < std::min(3.0 * c.L, top); t += h) grid.push_back(t);
    for (double t = std::min(3.0 * c.L, top); t < top; t *= 1.0 + h / c.L) grid.push_back(t);
    grid.push_back(top);
    if (c.points > 1) {
        grid.clear();
        for (std::size_t i = 0; i < c.points; ++i) grid.push_back(top * i / (c.points - 1));
    }
    auto os = open_csv(dir / "density.csv");
    os << "tau,density,cdf\n";
    for (double t : grid) os << t << ',' << bohm::pi_up_density(t, p) << ',' << bohm::pi_up_cdf(t, p) << '\n';
    write_json(dir / "summary.json", j);
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_limitdist(const RunConfig& c) {
    const bohm::LimitingDistribution d(c.L, c.tol_quad);
    const fs::path dir = prepare_out(c);
    const double top = c.tau_max > 0.0 ? c.tau_max : 1.05 * d.tau_max();
    const std::size_t pts = c.points > 1 ? c.points : 2001;
    auto os = open_csv(dir / "density.csv");
    os << "tau,pi_s,cdf\n";
    for (std::size_t i = 0; i < pts; ++i) {
        const double t = top * static_cast<double>(i) / static_cast<double>(pts - 1);
        os << t << ',' << d.density(t) << ',' << d.cdf(t) << '\n';
    }
    bohm::ModelParams p = c.params();
    ojson j;
    j["schema"] = 1;
    j["L"] = c.L;
    j["eta"] = d.eta();
    j["tau_max_limit"] = d.tau_max();
    j["gamma_analytic"] = bohm::podal_angle_analytic(p);
    j["mass"] = d.total_mass();
    write_json(dir / "summary.json", j);
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_validate(const RunConfig& c) {
    const fs::path dir = prepare_out(c);
    bohm::ValidationOptions opt;
    opt.seed = c.seed;
    opt.drift_rtol_override = c.inject_drift_tol;
    const auto checks = bohm::run_validation(c.params(), opt);
    std::ofstream os(dir / "validate.txt");
    bohm::write_validation_table(os, checks);
    bohm::write_validation_table(std::cout, checks);
    if (bohm::all_passed(checks)) return 0;
    std::cerr << "validate: failing checks:";
    for (const auto& ch : checks) {
        if (!ch.passed) std::cerr << ' ' << ch.name;
    }
    std::cerr << '\n';
    return kFailureExit;
}

int cmd_trajectory(const RunConfig& c) {
    const auto p = c.params();
    const auto spin = bohm::parse_spin(c.spin);
    if (!(c.z0 > 0.0 && c.z0 < c.L)) throw UsageError("--z0 must satisfy 0 < z0 < L");
    if (!(c.t_end > 0.0)) throw UsageError("--t-max must be > 0");
    const std::size_t pts = c.points > 1 ? c.points : 201;
    std::vector<double> times(pts);
    for (std::size_t i = 0; i < pts; ++i) times[i] = c.t_end * static_cast<double>(i) / static_cast<double>(pts - 1);

    const fs::path dir = prepare_out(c);
    auto os = open_csv(dir / "trajectory.csv");
    os << "t,x,y,z,xi,H\n";
    const bohm::Position3 r0{c.x0, c.y0, c.z0};
    if (spin == bohm::SpinCase::Up) {
        for (double t : times) {
            const auto r = bohm::spin_up_position(r0, t, p);
            const double xi = r.z / std::sqrt(1.0 + t * t);
            const double h = std::log(xi * xi) - xi * xi - p.omega * (r.x * r.x + r.y * r.y);
            os << t << ',' << r.x << ',' << r.y << ',' << r.z << ',' << xi << ',' << h << '\n';
        }
        return 0;
    }
    bohm::UpDownOptions opt;
    opt.rtol = p.tol.ode_rtol;
    opt.count_crossings = false;
    opt.require_crossing = false;
    opt.s_cap = std::asinh(c.t_end);
    for (double t : times) opt.checkpoints.push_back(std::asinh(t));
    const auto res = bohm::integrate_updown(r0, p, opt);
    for (std::size_t i = 0; i < res.checkpoints.size(); ++i) {
        const auto& st = res.checkpoints[i];
        const auto r = st.position();
        os << times[i] << ',' << r.x << ',' << r.y << ',' << r.z << ',' << st.xi << ','
           << bohm::updown_invariant(st.xi, st.y, p.omega) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bohmian arrival times in a harmonic waveguide"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key = value file with option defaults");

    RunConfig c;
    app.add_option("--spin", c.spin, "spin case: up | updown")->check(CLI::IsMember({"up", "updown", "up-down"}));
    app.add_option("--omega", c.omega, "transverse trap frequency");
    app.add_option("--L", c.L, "detector position");
    app.add_option("--n", c.n, "number of trajectories");
    app.add_option("--seed", c.seed, "64-bit seed");
    app.add_option("--threads", c.threads, "worker threads (0 = all cores)")->envname("BOHM_ARRIVAL_THREADS");
    app.add_option("--out", c.out, "output directory");
    app.add_option("--bins", c.bins, "histogram bins: fd | N");
    app.add_option("--tol-ode", c.tol_ode, "integrator relative tolerance");
    app.add_option("--tol-quad", c.tol_quad, "quadrature relative tolerance");
    app.add_option("--points", c.points, "grid points for density / trajectory output");
    app.add_option("--tau-max", c.tau_max, "upper end of the density grid");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble: records.csv, summary.json");
    auto* analytic = app.add_subcommand("analytic", "closed-form spin up law: density.csv, summary.json");
    analytic->add_option("--mu", c.mu, "moment orders to report");
    auto* limitdist = app.add_subcommand("limitdist", "strong-confinement limit: density.csv, summary.json");
    auto* validate = app.add_subcommand("validate", "self-checks: validate.txt");
    validate->add_option("--inject-drift-tol", c.inject_drift_tol)->group("");
    auto* trajectory = app.add_subcommand("trajectory", "one trajectory: trajectory.csv");
    trajectory->add_option("--x0", c.x0);
    trajectory->add_option("--y0", c.y0);
    trajectory->add_option("--z0", c.z0);
    trajectory->add_option("--t-max", c.t_end, "end time");
    for (auto* sub : {simulate, analytic, limitdist, validate, trajectory}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error_json("usage", e.what());
        return kUsageExit;
    }

    try {
        validate_config(c);
        if (simulate->parsed()) return cmd_simulate(c);
        if (analytic->parsed()) return cmd_analytic(c);
        if (limitdist->parsed()) return cmd_limitdist(c);
        if (validate->parsed()) return cmd_validate(c);
        if (trajectory->parsed()) return cmd_trajectory(c);
    } catch (const UsageError& e) {
        print_error_json("usage", e.what());
        return kUsageExit;
    } catch (const bohm::Error& e) {
        print_error_json(e.kind(), e.what());
        return kFailureExit;
    } catch (const std::exception& e) {
        print_error_json("internal", e.what());
        return kFailureExit;
    }
    return kUsageExit;
}
