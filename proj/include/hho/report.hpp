// CSV, gnuplot and JSON output for convergence tables, probe reports and solves.
#pragma once

#include "hho/config.hpp"
#include "hho/probes.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace hho {

inline constexpr const char* hho_version = "1.0.0";

namespace detail {

inline std::string scientific(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12e", x);
    return buf;
}

inline nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

} // namespace detail

/// Columns `level,h,ndof,err_grad_p,order`; the order is blank on the first row.
inline void write_csv(std::ostream& os, const ConvergenceTable& t)
{
    os << "level,h,ndof,err_grad_p,order\n";
    for (const auto& r : t.rows) {
        os << r.level << ',' << detail::scientific(r.h) << ',' << r.ndof << ',' << detail::scientific(r.error) << ',';
        if (std::isfinite(r.order)) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", r.order);
            os << buf;
        }
        os << '\n';
    }
}

/// Two-column `h error` data for log-log plots.
inline void write_gnuplot(std::ostream& os, const ConvergenceTable& t)
{
    os << "# family " << t.family << ", k " << t.k << ", l " << t.l << ", p " << t.p << "\n# h err_grad_p\n";
    for (const auto& r : t.rows)
        os << detail::scientific(r.h) << ' ' << detail::scientific(r.error) << '\n';
}

inline nlohmann::json to_json(const ConvergenceTable& t)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"level", r.level},
                        {"h", r.h},
                        {"ndof", r.ndof},
                        {"err_grad_p", r.error},
                        {"order", detail::finite_or_null(r.order)},
                        {"err_grad_exact", detail::finite_or_null(r.exact_gradient_error)},
                        {"newton_iterations", r.newton_iterations},
                        {"residual", r.residual},
                        {"wall_time", r.wall_time}});
    return {{"family", t.family},     {"k", t.k},
            {"l", t.l},               {"p", t.p},
            {"bc", t.bc},             {"solution", t.solution},
            {"rows", rows},           {"slope", detail::finite_or_null(t.slope())},
            {"failed", t.failed},     {"failure", t.failure}};
}

inline nlohmann::json to_json(const ProbeReport& r)
{
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& l : r.levels)
        levels.push_back({{"level", l.level},
                          {"h", l.h},
                          {"samples", l.samples},
                          {"min", detail::finite_or_null(l.min)},
                          {"max", detail::finite_or_null(l.max)},
                          {"mean", detail::finite_or_null(l.mean)}});
    nlohmann::json j{{"id", r.id},          {"description", r.description},
                     {"kind", to_string(r.kind)}, {"family", r.family},
                     {"k", r.k},            {"p", r.p},
                     {"seed", r.seed},      {"levels", levels},
                     {"passed", r.passed},  {"note", r.note}};
    if (r.kind == ProbeKind::band)
        j["band_factor"] = r.band_factor;
    else {
        j["expected_slope"] = r.expected_slope;
        j["slope"] = detail::finite_or_null(r.slope);
        j["slope_tolerance"] = r.slope_tolerance;
    }
    return j;
}

/// CSV rows of one probe: `level,h,samples,min,max,mean`.
inline void write_csv(std::ostream& os, const ProbeReport& r)
{
    os << "level,h,samples,min,max,mean\n";
    for (const auto& l : r.levels)
        os << l.level << ',' << detail::scientific(l.h) << ',' << l.samples << ',' << detail::scientific(l.min) << ','
           << detail::scientific(l.max) << ',' << detail::scientific(l.mean) << '\n';
}

inline nlohmann::json to_json(const SolveReport& rep)
{
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : rep.stages) {
        nlohmann::json residuals = nlohmann::json::array();
        for (double r : s.residual_history)
            residuals.push_back(r);
        stages.push_back({{"p", s.p},
                          {"iterations", s.iterations},
                          {"line_search_activations", s.line_search_activations},
                          {"converged", s.converged},
                          {"tolerance", s.tolerance},
                          {"regularization", s.regularization},
                          {"noise_floor", s.noise_floor},
                          {"noise_limited", s.noise_limited},
                          {"residuals", residuals}});
    }
    return {{"stages", stages},
            {"total_iterations", rep.total_iterations()},
            {"final_residual", rep.final_residual()},
            {"wall_time", rep.wall_time}};
}

inline nlohmann::json config_json(const RunConfig& cfg)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& key : RunConfig::keys())
        j[key] = cfg.get(key);
    return j;
}

/// Rebuilds a config from the `config` echo of a report.
inline RunConfig config_from_json(const nlohmann::json& j)
{
    RunConfig cfg;
    for (const auto& [key, value] : j.items())
        cfg.set(key, value.get<std::string>());
    return cfg;
}

inline nlohmann::json versions_json()
{
    return {{"hho", hho_version},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", __VERSION__},
            {"cxx", static_cast<long>(__cplusplus)}};
}

/// Common envelope of every JSON artifact.
inline nlohmann::json report_envelope(const RunConfig& cfg)
{
    return {{"config", config_json(cfg)}, {"seed", cfg.seed}, {"versions", versions_json()}};
}

inline void ensure_directory(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw InputError("cannot create output directory '" + dir + "'");
}

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write '" + path + "'");
    out << text;
    if (!out)
        throw InputError("write failed for '" + path + "'");
}

} // namespace hho
