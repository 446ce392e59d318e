#include "kolmo/tasks.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "kolmo/error.hpp"
#include "kolmo/fdsolver.hpp"
#include "kolmo/kernel.hpp"
#include "kolmo/numio.hpp"
#include "kolmo/scaling.hpp"
#include "kolmo/simulate.hpp"
#include "kolmo/verify.hpp"

namespace kolmo {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void check_task_keys(const RunConfig& cfg, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : cfg.task)
        if (!allowed.count(key))
            throw Error("task '" + cfg.task_name + "': unknown key '" + key + "'");
}

// Registers every path handed out, so a failing task can remove the files
// it already wrote.
struct OutputRegistry {
    const RunConfig& cfg;
    std::vector<std::string> files;

    std::string path(const std::string& name) {
        fs::create_directories(cfg.out_dir);
        std::string p = (fs::path(cfg.out_dir) / name).string();
        files.push_back(p);
        return p;
    }
};

bool wants(const RunConfig& cfg, const std::string& format) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file '" + path + "'");
    out << j.dump(2) << "\n";
}

json report_to_json(const VerificationReport& rep, const std::string& hash) {
    json j;
    j["config_hash"] = hash;
    j["estimate"] = rep.estimate;
    j["constants"] = rep.constants;
    j["probes"] = rep.probes;
    j["n_probes"] = rep.n_probes;
    j["max_residual"] = rep.max_residual;
    j["pass"] = rep.pass;
    j["runtime_ms"] = rep.runtime_ms;
    return j;
}

ProbeGrid probe_grid_from_config(const RunConfig& cfg, int d) {
    ProbeGrid probes;
    probes.T = cfg.get_double("T", 1.0);
    probes.dts = cfg.get_list("dts");
    for (double dt : probes.dts)
        if (!(dt > 0.0) || !(dt <= probes.T))
            throw Error("task: dts entries must lie in (0, T]");
    const Vector lo = cfg.has("probe_lo") ? cfg.get_vector("probe_lo", d)
                                          : Vector::Constant(d, -4.0);
    const Vector hi = cfg.has("probe_hi") ? cfg.get_vector("probe_hi", d)
                                          : Vector::Constant(d, 4.0);
    const int n = static_cast<int>(cfg.get_long("probe_n", 7));
    probes.xs = ProbeGrid::lattice(lo, hi, n);
    probes.ys = probes.xs;
    return probes;
}

Grid grid_from_config(const RunConfig& cfg, int d) {
    Grid g;
    g.xlo = cfg.get_vector("grid_lo", d);
    g.xhi = cfg.get_vector("grid_hi", d);
    const auto n = cfg.get_int_list("grid_n");
    if (static_cast<int>(n.size()) != d)
        throw Error("task: grid_n must have one entry per axis");
    g.n = n;
    g.T = cfg.get_double("T", 1.0);
    g.t_final = cfg.get_double("t_final", 0.0);
    g.dt = cfg.get_double("dt", 0.0); // 0: auto from CFL
    return g;
}

TaskResult task_describe(const RunConfig& cfg, OutputRegistry&) {
    check_task_keys(cfg, {"box_n", "box_t", "box_lo", "box_hi"});
    const OperatorSpec spec = cfg.make_operator();
    const int n = static_cast<int>(cfg.get_long("box_n", 33));
    Box box = Box::standard(spec.dim());
    if (cfg.has("box_lo")) box.xlo = cfg.get_vector("box_lo", spec.dim());
    if (cfg.has("box_hi")) box.xhi = cfg.get_vector("box_hi", spec.dim());
    if (cfg.has("box_t")) {
        const auto ts = cfg.get_list("box_t");
        if (ts.size() != 2) throw Error("describe: box_t must be 'tmin tmax'");
        box.t0 = ts[0];
        box.t1 = ts[1];
    }
    const AssumptionReport rep = check_assumptions(spec, box, n);

    json j;
    j["config_hash"] = cfg.hash;
    j["d"] = spec.dim();
    j["m"] = spec.blocks.m;
    j["Q"] = homogeneous_dimension(spec.blocks.m);
    j["homogeneous"] = spec.B.homogeneous;
    j["hypoelliptic"] = hypoellipticity_check(spec.B.B, spec.m0());
    j["mu_hat"] = rep.mu_hat;
    json bounds;
    bounds["sup_drift"] = std::vector<double>(rep.sup_drift.data(),
                                              rep.sup_drift.data() + rep.sup_drift.size());
    bounds["sup_c"] = rep.sup_c;
    j["bounds"] = bounds;

    TaskResult res;
    res.stdout_text = j.dump(2) + "\n";
    return res;
}

TaskResult task_kernel_eval(const RunConfig& cfg, OutputRegistry& out) {
    check_task_keys(cfg, {"t", "T", "x", "grid_lo", "grid_hi", "grid_n"});
    const OperatorSpec spec = cfg.make_operator();
    const int d = spec.dim();
    const GaussianKernel kernel(spec.B, spec.m0());

    const double t = cfg.get_double("t", 0.0);
    const double T = cfg.get_double("T", 1.0);
    const Vector x = cfg.has("x") ? cfg.get_vector("x", d) : Vector::Zero(d);
    if (!(t < T)) throw Error("kernel-eval: requires t < T");

    const Vector lo = cfg.get_vector("grid_lo", d);
    const Vector hi = cfg.get_vector("grid_hi", d);
    const auto n = cfg.get_int_list("grid_n");
    if (static_cast<int>(n.size()) != d)
        throw Error("kernel-eval: grid_n must have one entry per axis");
    for (int ni : n)
        if (ni < 2) throw Error("kernel-eval: grid_n entries must be >= 2");

    const KernelSlice slice = kernel.at(T - t);
    long total = 1;
    for (int ni : n) total *= ni;
    std::vector<std::vector<double>> rows;
    rows.reserve(total);
    for (long flat = 0; flat < total; ++flat) {
        Vector y(d);
        long rem = flat;
        for (int axis = d - 1; axis >= 0; --axis) {
            const long idx = rem % n[axis];
            rem /= n[axis];
            y[axis] = lo[axis] + (hi[axis] - lo[axis]) * idx / double(n[axis] - 1);
        }
        std::vector<double> row(y.data(), y.data() + d);
        row.push_back(slice.density(x, y));
        rows.push_back(std::move(row));
    }

    TaskResult res;
    std::vector<std::string> columns;
    for (int axis = 0; axis < d; ++axis) columns.push_back("y" + std::to_string(axis + 1));
    columns.push_back("density");
    const std::string path = out.path("kernel_eval.csv");
    write_csv(path, cfg.hash, columns, rows);
    return res;
}

TaskResult task_kernel_ck(const RunConfig& cfg, OutputRegistry& out) {
    check_task_keys(cfg, {"t", "s", "T", "x", "y", "quad_n"});
    const OperatorSpec spec = cfg.make_operator();
    const int d = spec.dim();
    const GaussianKernel kernel(spec.B, spec.m0());

    const double t = cfg.get_double("t", 0.0);
    const double s = cfg.get_double("s", 0.5);
    const double T = cfg.get_double("T", 1.0);
    const Vector x = cfg.has("x") ? cfg.get_vector("x", d) : Vector::Zero(d);
    const Vector y = cfg.has("y") ? cfg.get_vector("y", d) : Vector::Zero(d);
    const int quad_n = static_cast<int>(cfg.get_long("quad_n", 80));

    const double residual = ck_residual(kernel, t, x, s, T, y, quad_n);

    json j;
    j["config_hash"] = cfg.hash;
    j["residual"] = residual;
    j["t"] = t;
    j["s"] = s;
    j["T"] = T;

    TaskResult res;
    if (wants(cfg, "json")) {
        const std::string path = out.path("kernel_ck.json");
        write_json_file(path, j);
        }
    res.stdout_text = j.dump(2) + "\n";
    return res;
}

TaskResult task_sample(const RunConfig& cfg, OutputRegistry& out) {
    check_task_keys(cfg, {"scheme", "t", "x", "T", "n", "steps", "seed"});
    const OperatorSpec spec = cfg.make_operator();
    const int d = spec.dim();

    const std::string scheme = cfg.get_string("scheme", "exact");
    const double t = cfg.get_double("t", 0.0);
    const double T = cfg.get_double("T", 1.0);
    const Vector x = cfg.has("x") ? cfg.get_vector("x", d) : Vector::Zero(d);
    const long n = cfg.get_long("n", 1000);
    if (n < 1) throw Error("sample: n must be >= 1");
    const std::uint64_t seed = cfg.has("seed")
        ? static_cast<std::uint64_t>(cfg.get_long("seed", 0)) : cfg.seed;

    SampleBatch batch;
    if (scheme == "exact") {
        const GaussianKernel kernel(spec.B, spec.m0());
        batch = sample_exact(kernel, t, x, T, static_cast<int>(n), seed);
    } else if (scheme == "euler") {
        const int steps = static_cast<int>(cfg.get_long("steps", 100));
        batch = euler_maruyama(spec, t, x, T, steps, static_cast<int>(n), seed);
    } else {
        throw Error("sample: scheme must be 'exact' or 'euler'");
    }

    std::vector<std::string> columns;
    for (int axis = 0; axis < d; ++axis) columns.push_back("x" + std::to_string(axis + 1));

    TaskResult res;
    const std::string path = out.path("samples.csv");
    write_matrix_csv(path, cfg.hash, columns, batch.points);
    return res;
}

TaskResult task_solve(const RunConfig& cfg, OutputRegistry& out) {
    check_task_keys(cfg, {"phi", "grid_lo", "grid_hi", "grid_n", "t_final", "T", "dt",
                          "csv_stride"});
    const OperatorSpec spec = cfg.make_operator();
    const int d = spec.dim();

    Grid grid = grid_from_config(cfg, d);
    if (grid.dt <= 0.0) grid.dt = cfl_timestep(spec, grid);

    const Expr phi_expr = Expr::parse(cfg.get_string("phi", "1"), d);
    const GridSolution sol = solve_backward(spec, [&phi_expr](const Vector& x) {
        return phi_expr.eval(0.0, x);
    }, grid);

    TaskResult res;
    const std::string bin_path = out.path("solution.bin");
    write_grid_solution_binary(bin_path, fnv1a64(cfg.raw_text), sol);

    if (wants(cfg, "csv")) {
        const int stride = static_cast<int>(cfg.get_long("csv_stride", 1));
        const std::string path = out.path("solution.csv");
        write_grid_solution_csv(path, cfg.hash, sol, stride);
        }
    if (wants(cfg, "json")) {
        json j;
        j["config_hash"] = cfg.hash;
        j["levels"] = sol.times.size();
        j["cfl"] = sol.cfl;
        j["mass_initial"] = sol.mass(0);
        j["mass_final"] = sol.mass(static_cast<int>(sol.times.size()) - 1);
        const std::string path = out.path("solution.json");
        write_json_file(path, j);
        }
    if (wants(cfg, "svg") && d == 2) {
        const std::string path = out.path("solution_final.svg");
        write_svg_heatmap(path, cfg.hash, sol, static_cast<int>(sol.times.size()) - 1);
        }
    return res;
}

TaskResult task_scale(const RunConfig& cfg, OutputRegistry& out) {
    check_task_keys(cfg, {"lambda", "probe_t", "probe_x"});
    const OperatorSpec spec = cfg.make_operator();
    const int d = spec.dim();
    const double lambda = cfg.require_double("lambda");

    const ScaledOperator scaled = scale_operator(spec, lambda);

    std::vector<double> probe_t = cfg.has("probe_t") ? cfg.get_list("probe_t")
                                                     : std::vector<double>{0.0, 0.5, 1.0};
    const Vector px = cfg.has("probe_x") ? cfg.get_vector("probe_x", d) : Vector::Zero(d);

    json j;
    j["config_hash"] = cfg.hash;
    j["lambda"] = lambda;
    json bl = json::array();
    for (int i = 0; i < d; ++i) {
        json row = json::array();
        for (int jj = 0; jj < d; ++jj) row.push_back(scaled.op.B.B(i, jj));
        bl.push_back(row);
    }
    j["B_lambda"] = bl;
    json samples = json::array();
    for (double t : probe_t) {
        const FieldValue v = eval_field(scaled.op.coeffs, t, px);
        json s;
        s["t"] = t;
        json a = json::array();
        for (int i = 0; i < v.a.rows(); ++i)
            for (int jj = 0; jj < v.a.cols(); ++jj) a.push_back(v.a(i, jj));
        s["a"] = a;
        s["drift"] = std::vector<double>(v.drift.data(), v.drift.data() + v.drift.size());
        s["c"] = v.c;
        samples.push_back(s);
    }
    j["samples"] = samples;

    TaskResult res;
    const std::string path = out.path("scale.json");
    write_json_file(path, j);
    res.stdout_text = j.dump(2) + "\n";
    return res;
}

TaskResult emit_report(const RunConfig& cfg, OutputRegistry& out,
                       const VerificationReport& rep, const std::string& stem) {
    TaskResult res;
    if (wants(cfg, "json")) {
        const std::string path = out.path(stem + ".json");
        write_json_file(path, report_to_json(rep, cfg.hash));
        }
    res.stdout_text = rep.to_text();
    res.exit_code = rep.pass ? 0 : 1;
    return res;
}

TaskResult task_verify_nash(const RunConfig& cfg, OutputRegistry& out) {
    check_task_keys(cfg, {"T", "dts", "probe_lo", "probe_hi", "probe_n"});
    const OperatorSpec spec = cfg.make_operator();
    const GaussianKernel kernel(spec.B, spec.m0());
    const ProbeGrid probes = probe_grid_from_config(cfg, spec.dim());
    VerificationReport rep = nash_constant(kernel_density_fn(kernel), kernel.fam(), probes);

    // slope of the on-diagonal power law rides along when the sweep is wide
    double lo = probes.dts.front(), hi = probes.dts.front();
    for (double dt : probes.dts) {
        lo = std::min(lo, dt);
        hi = std::max(hi, dt);
    }
    if (probes.dts.size() >= 2 && std::log10(hi / lo) >= 1.5)
        rep.constants["slope"] = exponent_regression(kernel_density_fn(kernel), probes);

    return emit_report(cfg, out, rep, "verify_nash");
}

TaskResult task_verify_bound(const RunConfig& cfg, OutputRegistry& out) {
    check_task_keys(cfg, {"T", "dts", "probe_lo", "probe_hi", "probe_n", "c_lo", "c_hi"});
    const OperatorSpec spec = cfg.make_operator();
    const GaussianKernel kernel(spec.B, spec.m0());
    const ProbeGrid probes = probe_grid_from_config(cfg, spec.dim());
    const VerificationReport rep =
        fit_gaussian_bound(kernel_density_fn(kernel), spec.B.B, kernel.fam(), probes,
                           cfg.get_double("c_lo", 1e-2), cfg.get_double("c_hi", 1e6));
    return emit_report(cfg, out, rep, "verify_bound");
}

TaskResult task_verify_tail(const RunConfig& cfg, OutputRegistry& out) {
    check_task_keys(cfg, {"t", "x", "eta", "sigmas", "k_cfg", "quad_n"});
    const OperatorSpec spec = cfg.make_operator();
    const int d = spec.dim();
    const GaussianKernel kernel(spec.B, spec.m0());
    const double eta = cfg.get_double("eta", 1.0);
    const double t = cfg.get_double("t", eta - 0.03125);
    const Vector x = cfg.has("x") ? cfg.get_vector("x", d) : Vector::Zero(d);
    const auto sigmas = cfg.get_list("sigmas");
    const VerificationReport rep =
        tail_mass_check(kernel, t, x, eta, sigmas, cfg.get_double("k_cfg", 8.0),
                        static_cast<int>(cfg.get_long("quad_n", 200)));
    return emit_report(cfg, out, rep, "verify_tail");
}

TaskResult task_verify_decay(const RunConfig& cfg, OutputRegistry& out) {
    check_task_keys(cfg, {"y", "sigma", "eta", "taus", "u0", "k_cfg", "quad_n"});
    const OperatorSpec spec = cfg.make_operator();
    const int d = spec.dim();
    const GaussianKernel kernel(spec.B, spec.m0());
    const Vector y = cfg.has("y") ? cfg.get_vector("y", d) : Vector::Zero(d);
    const double sigma = cfg.require_double("sigma");
    const double eta = cfg.get_double("eta", 1.0);
    const auto taus = cfg.get_list("taus");
    const Expr u0_expr = Expr::parse(cfg.get_string("u0", "0"), d);
    const VerificationReport rep = decay_check(
        kernel, y, sigma, eta, taus,
        [&u0_expr](const Vector& xi) { return u0_expr.eval(0.0, xi); },
        cfg.get_double("k_cfg", 8.0), static_cast<int>(cfg.get_long("quad_n", 120)));
    return emit_report(cfg, out, rep, "verify_decay");
}

TaskResult task_moser(const RunConfig& cfg, OutputRegistry& out) {
    check_task_keys(cfg, {"pole_T", "pole_y", "grid_lo", "grid_hi", "grid_n", "t_lo", "t_hi",
                          "dt", "z0_t", "z0_x", "rho", "r", "p"});
    const OperatorSpec spec = cfg.make_operator();
    const int d = spec.dim();
    const GaussianKernel kernel(spec.B, spec.m0());

    const double pole_T = cfg.get_double("pole_T", 1.5);
    const Vector pole_y = cfg.has("pole_y") ? cfg.get_vector("pole_y", d) : Vector::Zero(d);
    const double t_lo = cfg.require_double("t_lo");
    const double t_hi = cfg.require_double("t_hi");
    const double dt = cfg.require_double("dt");
    if (!(t_lo < t_hi && t_hi < pole_T))
        throw Error("moser: need t_lo < t_hi < pole_T");

    GridSolution sol;
    sol.grid.xlo = cfg.get_vector("grid_lo", d);
    sol.grid.xhi = cfg.get_vector("grid_hi", d);
    sol.grid.n = cfg.get_int_list("grid_n");
    sol.grid.T = t_hi;
    sol.grid.t_final = t_lo;
    sol.grid.dt = dt;
    sol.grid.validate();

    // sample the explicit kernel on the grid, marching times downward
    const int nsteps = std::max(1, static_cast<int>(std::ceil((t_hi - t_lo) / dt - 1e-9)));
    const double step = (t_hi - t_lo) / nsteps;
    for (int k = 0; k <= nsteps; ++k) {
        const double t = t_hi - k * step;
        const KernelSlice slice = kernel.at(pole_T - t);
        std::vector<double> level(sol.grid.num_nodes());
        for (long flat = 0; flat < sol.grid.num_nodes(); ++flat)
            level[flat] = slice.density(sol.grid.node(flat), pole_y);
        sol.times.push_back(t);
        sol.values.push_back(std::move(level));
    }

    GroupElement z0{cfg.require_double("z0_t"), cfg.get_vector("z0_x", d)};
    const double r = cfg.require_double("r");
    const auto rhos = cfg.get_list("rho");
    const auto ps = cfg.has("p") ? cfg.get_list("p") : std::vector<double>{1.0};

    json j;
    j["config_hash"] = cfg.hash;
    json checks = json::array();
    for (double p : ps) {
        for (double rho : rhos) {
            const MoserResult m = moser_check(sol, z0, rho, r, p, spec.B.B, kernel.fam());
            json entry;
            entry["p"] = p;
            entry["rho"] = rho;
            entry["r"] = r;
            entry["lhs"] = m.lhs;
            entry["rhs"] = m.rhs;
            entry["ratio"] = m.ratio;
            entry["nodes_inner"] = m.nodes_inner;
            entry["nodes_outer"] = m.nodes_outer;
            checks.push_back(entry);
        }
    }
    j["checks"] = checks;

    TaskResult res;
    const std::string path = out.path("moser.json");
    write_json_file(path, j);
    res.stdout_text = j.dump(2) + "\n";
    return res;
}

} // namespace

std::vector<std::string> known_tasks() {
    return {"describe", "kernel-eval", "kernel-ck", "sample", "solve", "scale",
            "verify-nash", "verify-bound", "verify-tail", "verify-decay", "moser"};
}

TaskResult run_task(const RunConfig& cfg) {
    if (cfg.threads > 0) set_max_threads(cfg.threads);
    OutputRegistry out{cfg, {}};
    TaskResult res;
    try {
        const std::string& name = cfg.task_name;
        if (name == "describe") res = task_describe(cfg, out);
        else if (name == "kernel-eval") res = task_kernel_eval(cfg, out);
        else if (name == "kernel-ck") res = task_kernel_ck(cfg, out);
        else if (name == "sample") res = task_sample(cfg, out);
        else if (name == "solve") res = task_solve(cfg, out);
        else if (name == "scale") res = task_scale(cfg, out);
        else if (name == "verify-nash") res = task_verify_nash(cfg, out);
        else if (name == "verify-bound") res = task_verify_bound(cfg, out);
        else if (name == "verify-tail") res = task_verify_tail(cfg, out);
        else if (name == "verify-decay") res = task_verify_decay(cfg, out);
        else if (name == "moser") res = task_moser(cfg, out);
        else throw Error("unknown task '" + name + "'");
    } catch (...) {
        // task failed: do not leave partial outputs behind
        std::error_code ec;
        for (const auto& f : out.files) std::filesystem::remove(f, ec);
        throw;
    }
    res.files = out.files;
    return res;
}

} // namespace kolmo
