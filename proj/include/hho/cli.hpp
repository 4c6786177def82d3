// Command-line front end: mesh generation and checks, solves, convergence
// studies and verification suites.
//
// Exit codes: 0 success, 2 bad input or configuration, 3 solver failure,
// 4 verification failure.
#pragma once

#include "hho/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

namespace hho {

enum ExitCode : int { exit_ok = 0, exit_error = 1, exit_input = 2, exit_solver = 3, exit_verification = 4 };

namespace detail {

struct FlagBinding {
    std::string key;
    std::string value;
    CLI::Option* option = nullptr;
};

/// Flags mirroring the config keys; set flags override the config file.
class ConfigFlags {
public:
    void attach(CLI::App& app, bool with_mesh, bool with_study, bool with_verify)
    {
        app.add_option("--config", config_file_, "flat key = value config file");
        bind(app, "--output,-o", "output", "output directory");
        bind(app, "--family", "family", "mesh family: triangular, cartesian or hexagonal");
        bind(app, "--level", "level", "mesh refinement level");
        if (with_mesh)
            bind(app, "--mesh", "mesh_file", "mesh file (overrides family and level)");
        bind(app, "--k", "k", "face degree; a list or range like 0..3 for studies and suites");
        bind(app, "--l", "l", "cell degree: k, k+1 or k-1");
        bind(app, "--p", "p", "Sobolev exponent of the p-Laplacian");
        bind(app, "--law", "law", "flux law: plaplace or glacier");
        bind(app, "--alpha", "alpha", "glacier exponent (p = 2 - alpha)");
        bind(app, "--t0", "t0", "glacier parameter T0");
        bind(app, "--bc", "bc", "dirichlet, dirichlet_hom or neumann");
        bind(app, "--solution", "solution", "manufactured solution: exp, sinsin or coscos");
        bind(app, "--tol", "tol", "absolute Newton tolerance");
        bind(app, "--rtol", "rtol", "Newton tolerance relative to the load norm");
        bind(app, "--max-iter", "max_iter", "Newton iterations per continuation stage");
        bind(app, "--continuation", "continuation", "exponent schedule, e.g. [2,3]");
        bind(app, "--condense", "condense", "static condensation: true or false");
        if (with_study || with_verify) {
            bind(app, "--first-level", "first_level", "coarsest level");
            bind(app, "--levels", "levels", "number of levels");
        }
        if (with_verify) {
            bind(app, "--suite", "suite", "projectors, inequalities or all");
            bind(app, "--samples", "samples", "random samples per level");
            bind(app, "--seed", "seed", "probe random seed");
        }
    }

    RunConfig resolve(const std::string& command) const
    {
        RunConfig cfg;
        if (!config_file_.empty())
            cfg = load_config(config_file_);
        cfg.command = command;
        for (const auto& b : bindings_)
            if (b->option->count() > 0)
                cfg.set(b->key, b->value);
        cfg.validate();
        return cfg;
    }

private:
    void bind(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help)
    {
        auto b = std::make_unique<FlagBinding>();
        b->key = key;
        b->option = app.add_option(flag, b->value, help);
        bindings_.push_back(std::move(b));
    }

    std::string config_file_;
    std::vector<std::unique_ptr<FlagBinding>> bindings_;
};

inline std::shared_ptr<const Mesh> config_mesh(const RunConfig& cfg)
{
    if (!cfg.mesh_file.empty()) {
        std::ifstream in(cfg.mesh_file);
        if (!in)
            throw InputError("cannot read mesh file '" + cfg.mesh_file + "'");
        return std::make_shared<const Mesh>(load_mesh(in));
    }
    return std::make_shared<const Mesh>(generate_mesh_family(cfg.mesh_family(), cfg.level));
}

inline nlohmann::json quality_json(const Mesh& mesh)
{
    const MeshQualityReport q = mesh.quality_report();
    return {{"cells", q.n_cells},
            {"faces", q.n_faces},
            {"boundary_faces", q.n_boundary_faces},
            {"h", q.h},
            {"regularity", q.regularity},
            {"max_faces_per_cell", q.max_faces_per_cell},
            {"max_simplices_per_cell", q.max_simplices_per_cell}};
}

inline void print_quality(std::ostream& out, const Mesh& mesh)
{
    const MeshQualityReport q = mesh.quality_report();
    out << "cells " << q.n_cells << ", faces " << q.n_faces << " (" << q.n_boundary_faces << " on the boundary)\n"
        << "h " << q.h << ", regularity " << q.regularity << ", max faces per cell " << q.max_faces_per_cell << '\n';
}

inline double seconds_since(std::chrono::steady_clock::time_point t)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

inline std::string single_exponent_tag(double p) { return format_double(p); }

inline int run_mesh_gen(const RunConfig& cfg, std::ostream& out)
{
    const auto mesh = config_mesh(cfg);
    ensure_directory(cfg.output);
    const std::string path = cfg.output + "/" + cfg.family + "-" + std::to_string(cfg.level) + ".mesh";
    std::ostringstream os;
    mesh->write(os);
    write_file(path, os.str());
    out << "wrote " << path << '\n';
    print_quality(out, *mesh);
    return exit_ok;
}

inline int run_mesh_check(const std::string& file, std::ostream& out)
{
    std::ifstream in(file);
    if (!in)
        throw InputError("cannot read mesh file '" + file + "'");
    const Mesh mesh = load_mesh(in);
    out << file << ": valid mesh\n";
    print_quality(out, mesh);
    return exit_ok;
}

inline int run_solve(const RunConfig& cfg, std::ostream& out)
{
    if (cfg.k.size() != 1)
        throw InputError("solve takes a single degree k");
    const auto start = std::chrono::steady_clock::now();
    const auto mesh = config_mesh(cfg);
    const HhoDegrees deg = cfg.degrees(cfg.k.front());
    const auto space = std::make_shared<const HhoSpace>(mesh, deg);
    const SmoothFunction u = manufactured_solution(cfg.solution);
    const ProblemBuilder build = manufactured_builder(space, u, cfg.boundary(), cfg.law_factory());
    const double p = cfg.target_p();
    ensure_directory(cfg.output);

    nlohmann::json j = report_envelope(cfg);
    j["mesh"] = quality_json(*mesh);
    SolveResult res;
    try {
        res = solve(build, p, cfg.solver());
    }
    catch (const SolverError& e) {
        j["error"] = e.what();
        j["timings"] = {{"total", seconds_since(start)}};
        write_file(cfg.output + "/solve.json", j.dump(2) + "\n");
        throw;
    }
    const DiscreteNorms n = discrete_norms(*space, res.solution, p);
    const double err = gradient_error(*space, res.solution, u.function(), p);
    const double err_exact = gradient_error_exact(*space, res.solution, u, p);
    const double mean = cell_integral(*space, res.solution.coefficients) / mesh->total_area();
    j["norms"] = {{"hybrid", n.hybrid}, {"dg", n.dg}, {"gradient", n.gradient}};
    j["errors"] = {{"err_grad_p", err}, {"err_grad_exact", err_exact}};
    j["mean"] = mean;
    j["newton"] = to_json(res.report);
    j["timings"] = {{"solve", res.report.wall_time}, {"total", seconds_since(start)}};
    write_file(cfg.output + "/solve.json", j.dump(2) + "\n");

    out << "solved p = " << p << ", k = " << deg.k << ", l = " << deg.l << " on " << mesh->n_cells() << " cells: "
        << res.report.total_iterations() << " Newton iterations, residual " << res.report.final_residual() << '\n'
        << "||G_h(u_h - I_h u)||_{L^p} = " << err << ", ||u_h||_{1,p,h} = " << n.hybrid << '\n'
        << "wrote " << cfg.output << "/solve.json\n";
    return exit_ok;
}

inline int run_convergence(const RunConfig& cfg, std::ostream& out)
{
    const auto start = std::chrono::steady_clock::now();
    ensure_directory(cfg.output);
    nlohmann::json j = report_envelope(cfg);
    j["tables"] = nlohmann::json::array();
    nlohmann::json timings = nlohmann::json::object();
    bool failed = false;
    const double p = cfg.target_p();
    std::ostringstream summary;
    summary << "family " << cfg.family << ", p " << p << ", l " << format_offset(cfg.l_offset)
            << ": slope over the last 3 levels\n";
    for (int k : cfg.k) {
        StudyOptions opts;
        opts.family = cfg.mesh_family();
        opts.k = k;
        opts.l = cfg.degrees(k).l;
        opts.p = p;
        opts.first_level = cfg.first_level;
        opts.levels = cfg.levels;
        opts.bc = cfg.boundary();
        opts.solution = cfg.solution;
        opts.law = cfg.law_factory();
        opts.solver = cfg.solver();
        const auto t = std::chrono::steady_clock::now();
        const ConvergenceTable table = convergence_study(opts);
        timings["k" + std::to_string(k)] = seconds_since(t);

        const std::string stem = cfg.output + "/convergence_" + cfg.family + "_p" + single_exponent_tag(p) + "_k" +
                                 std::to_string(k) + (cfg.l_offset ? "_l" + format_offset(cfg.l_offset) : "");
        std::ostringstream csv, dat;
        write_csv(csv, table);
        write_gnuplot(dat, table);
        write_file(stem + ".csv", csv.str());
        write_file(stem + ".dat", dat.str());
        j["tables"].push_back(to_json(table));

        out << "k = " << k << " (l = " << opts.l << ")\n" << csv.str();
        summary << "  k = " << k << ": ";
        if (table.failed) {
            failed = true;
            summary << "FAILED (" << table.failure << ")\n";
        }
        else {
            summary << table.slope() << '\n';
        }
    }
    timings["total"] = seconds_since(start);
    j["timings"] = timings;
    j["failed"] = failed;
    write_file(cfg.output + "/convergence.json", j.dump(2) + "\n");
    out << summary.str() << "wrote " << cfg.output << "/convergence.json\n";
    return failed ? exit_solver : exit_ok;
}

inline int run_verify(const RunConfig& cfg, std::ostream& out)
{
    const auto start = std::chrono::steady_clock::now();
    ensure_directory(cfg.output);
    std::vector<std::string> suites =
        cfg.suite == "all" ? probe_suite_names() : std::vector<std::string>{cfg.suite};
    nlohmann::json j = report_envelope(cfg);
    j["reports"] = nlohmann::json::array();
    std::size_t passed = 0, total = 0;
    for (const auto& suite : suites)
        for (int k : cfg.k) {
            ProbeOptions opts;
            opts.family = cfg.mesh_family();
            opts.k = k;
            opts.p = cfg.target_p();
            opts.first_level = cfg.first_level;
            opts.levels = cfg.levels;
            opts.seed = cfg.seed;
            opts.samples = cfg.samples;
            opts.solver = cfg.solver();
            for (const auto& r : run_probe_suite(suite, opts)) {
                ++total;
                passed += r.passed ? 1 : 0;
                nlohmann::json rj = to_json(r);
                rj["suite"] = suite;
                j["reports"].push_back(rj);
                out << (r.passed ? "PASS " : "FAIL ") << suite << " k=" << k << " p=" << opts.p << ' ' << r.id;
                if (r.kind == ProbeKind::slope)
                    out << " slope " << r.slope << " (expected " << r.expected_slope << " +- " << r.slope_tolerance
                        << ")";
                else if (!r.levels.empty())
                    out << " max ratio " << r.levels.front().max << " -> " << r.levels.back().max;
                if (!r.note.empty())
                    out << " [" << r.note << "]";
                out << '\n';
            }
        }
    j["summary"] = {{"passed", passed}, {"total", total}};
    j["timings"] = {{"total", seconds_since(start)}};
    write_file(cfg.output + "/verify.json", j.dump(2) + "\n");
    out << passed << "/" << total << " probes passed; wrote " << cfg.output << "/verify.json\n";
    return passed == total ? exit_ok : exit_verification;
}

} // namespace detail

/// Runs the CLI on argv and returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    using namespace detail;
    CLI::App app{"Hybrid high-order solver for Leray-Lions problems"};
    app.require_subcommand(1);

    CLI::App* mesh = app.add_subcommand("mesh", "generate or check meshes");
    mesh->require_subcommand(1);
    CLI::App* gen = mesh->add_subcommand("gen", "write a mesh of a generated family");
    ConfigFlags gen_flags;
    gen_flags.attach(*gen, false, false, false);
    CLI::App* check = mesh->add_subcommand("check", "validate a mesh file");
    std::string check_file;
    check->add_option("file", check_file, "mesh file")->required();

    CLI::App* solve_cmd = app.add_subcommand("solve", "solve a manufactured problem on one mesh");
    ConfigFlags solve_flags;
    solve_flags.attach(*solve_cmd, true, false, false);
    CLI::App* conv = app.add_subcommand("convergence", "convergence study over refinement levels");
    ConfigFlags conv_flags;
    conv_flags.attach(*conv, false, true, false);
    CLI::App* verify = app.add_subcommand("verify", "run the projector and inequality probe suites");
    ConfigFlags verify_flags;
    verify_flags.attach(*verify, false, true, true);

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_input;
    }

    try {
        if (check->parsed())
            return run_mesh_check(check_file, out);
        if (gen->parsed())
            return run_mesh_gen(gen_flags.resolve("mesh-gen"), out);
        if (solve_cmd->parsed())
            return run_solve(solve_flags.resolve("solve"), out);
        if (conv->parsed())
            return run_convergence(conv_flags.resolve("convergence"), out);
        if (verify->parsed())
            return run_verify(verify_flags.resolve("verify"), out);
    }
    catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    }
    catch (const GeometryError& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    }
    catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return exit_solver;
    }
    catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_error;
    }
    return exit_input;
}

} // namespace hho
