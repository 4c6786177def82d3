// Run configuration: a flat `key = value` text format shared by config files
// and command-line overrides.
#pragma once

#include "hho/analysis.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace hho {

struct RunConfig {
    std::string command; ///< mesh-gen, mesh-check, solve, convergence or verify
    std::string family = "triangular";
    int level = 3;
    /// Mesh file; when set it replaces family and level for mesh-check and solve.
    std::string mesh_file;
    std::vector<int> k{1};
    /// Cell degree relative to k: -1, 0 or +1.
    int l_offset = 0;
    double p = 2.0;
    std::string law = "plaplace";
    double alpha = 0.5; ///< glacier exponent, p = 2 - alpha
    double t0 = 1.0;    ///< glacier parameter
    std::string bc = "dirichlet";
    /// Manufactured solution: source, Dirichlet data and reference.
    std::string solution = "exp";
    int first_level = 1;
    int levels = 5;
    double atol = 1e-12;
    double rtol = 1e-10;
    int max_iter = 100;
    std::vector<double> continuation;
    bool condense = true;
    std::string suite = "all";
    int samples = 5;
    std::uint64_t seed = 20170623;
    std::string output = "out";

    static const std::vector<std::string>& keys()
    {
        static const std::vector<std::string> k{"command", "family", "level", "mesh_file", "k", "l", "p", "law",
                                                "alpha", "t0", "bc", "solution", "first_level", "levels", "tol",
                                                "rtol", "max_iter", "continuation", "condense", "suite", "samples",
                                                "seed", "output"};
        return k;
    }

    /// Sets one key from its text form; throws InputError on a bad key or value.
    void set(const std::string& key, const std::string& raw);
    std::string get(const std::string& key) const;

    /// Canonical text form; parse(serialize()) reproduces the config exactly.
    std::string serialize() const
    {
        std::ostringstream os;
        for (const auto& key : keys())
            os << key << " = " << get(key) << '\n';
        return os.str();
    }

    void validate() const;

    HhoDegrees degrees(int kk) const { return {kk, kk + l_offset}; }
    MeshFamily mesh_family() const { return parse_mesh_family(family); }
    BoundaryKind boundary() const { return parse_boundary_kind(bc); }
    double target_p() const { return law == "glacier" ? 2.0 - alpha : p; }

    SolveOptions solver() const
    {
        SolveOptions o;
        o.atol = atol;
        o.rtol = rtol;
        o.max_iterations = max_iter;
        o.continuation = continuation;
        o.condense = condense;
        return o;
    }

    LawFactory law_factory() const
    {
        if (law == "plaplace")
            return {};
        const double a = alpha, t = t0;
        return [a, t](double) { return make_glacier(a, t); };
    }

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string format_double(double x)
{
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& key, const std::string& s)
{
    const std::string t = trim(s);
    double x = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw InputError("config key '" + key + "': expected a number, got '" + s + "'");
    return x;
}

inline long long parse_integer(const std::string& key, const std::string& s)
{
    const std::string t = trim(s);
    long long x = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw InputError("config key '" + key + "': expected an integer, got '" + s + "'");
    return x;
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep))
        out.push_back(trim(item));
    return out;
}

/// "2", "0..3" or "0,2,3".
inline std::vector<int> parse_int_list(const std::string& key, const std::string& s)
{
    std::vector<int> out;
    for (const auto& item : split(s, ',')) {
        const auto dots = item.find("..");
        if (dots != std::string::npos) {
            const auto a = parse_integer(key, item.substr(0, dots));
            const auto b = parse_integer(key, item.substr(dots + 2));
            if (b < a)
                throw InputError("config key '" + key + "': empty range '" + item + "'");
            for (auto i = a; i <= b; ++i)
                out.push_back(static_cast<int>(i));
        }
        else {
            out.push_back(static_cast<int>(parse_integer(key, item)));
        }
    }
    if (out.empty())
        throw InputError("config key '" + key + "' needs at least one value");
    return out;
}

inline std::string format_int_list(const std::vector<int>& v)
{
    bool contiguous = v.size() > 1;
    for (std::size_t i = 1; i < v.size(); ++i)
        contiguous = contiguous && v[i] == v[i - 1] + 1;
    if (contiguous)
        return std::to_string(v.front()) + ".." + std::to_string(v.back());
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

/// "[2, 3, 4]", "2,3,4" or "[]".
inline std::vector<double> parse_double_list(const std::string& key, const std::string& s)
{
    std::string t = trim(s);
    if (!t.empty() && t.front() == '[') {
        if (t.back() != ']')
            throw InputError("config key '" + key + "': unbalanced brackets");
        t = trim(t.substr(1, t.size() - 2));
    }
    std::vector<double> out;
    if (t.empty())
        return out;
    for (const auto& item : split(t, ','))
        out.push_back(parse_double(key, item));
    return out;
}

inline std::string format_double_list(const std::vector<double>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ", " : "") + format_double(v[i]);
    return s + "]";
}

inline bool parse_bool(const std::string& key, const std::string& s)
{
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes")
        return true;
    if (t == "false" || t == "0" || t == "no")
        return false;
    throw InputError("config key '" + key + "': expected true or false, got '" + s + "'");
}

inline std::string format_offset(int off)
{
    return off == 0 ? "k" : (off > 0 ? "k+" + std::to_string(off) : "k-" + std::to_string(-off));
}

inline int parse_offset(const std::string& key, const std::string& s)
{
    const std::string t = trim(s);
    if (t == "k")
        return 0;
    if (t.size() > 2 && t[0] == 'k' && (t[1] == '+' || t[1] == '-')) {
        if (parse_integer(key, t.substr(2)) == 1)
            return t[1] == '+' ? 1 : -1;
    }
    throw InputError("config key '" + key + "': expected k, k+1 or k-1, got '" + s + "'");
}

} // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& raw)
{
    using namespace detail;
    const std::string v = trim(raw);
    if (key == "command")
        command = v;
    else if (key == "family")
        family = v;
    else if (key == "level")
        level = static_cast<int>(parse_integer(key, v));
    else if (key == "mesh_file")
        mesh_file = v;
    else if (key == "k")
        k = parse_int_list(key, v);
    else if (key == "l")
        l_offset = parse_offset(key, v);
    else if (key == "p")
        p = parse_double(key, v);
    else if (key == "law")
        law = v;
    else if (key == "alpha")
        alpha = parse_double(key, v);
    else if (key == "t0")
        t0 = parse_double(key, v);
    else if (key == "bc")
        bc = v;
    else if (key == "solution")
        solution = v;
    else if (key == "first_level")
        first_level = static_cast<int>(parse_integer(key, v));
    else if (key == "levels")
        levels = static_cast<int>(parse_integer(key, v));
    else if (key == "tol")
        atol = parse_double(key, v);
    else if (key == "rtol")
        rtol = parse_double(key, v);
    else if (key == "max_iter")
        max_iter = static_cast<int>(parse_integer(key, v));
    else if (key == "continuation")
        continuation = parse_double_list(key, v);
    else if (key == "condense")
        condense = parse_bool(key, v);
    else if (key == "suite")
        suite = v;
    else if (key == "samples")
        samples = static_cast<int>(parse_integer(key, v));
    else if (key == "seed") {
        const auto s = parse_integer(key, v);
        if (s < 0)
            throw InputError("config key 'seed' must be non-negative");
        seed = static_cast<std::uint64_t>(s);
    }
    else if (key == "output")
        output = v;
    else
        throw InputError("unknown config key '" + key + "'");
}

inline std::string RunConfig::get(const std::string& key) const
{
    using namespace detail;
    if (key == "command")
        return command;
    if (key == "family")
        return family;
    if (key == "level")
        return std::to_string(level);
    if (key == "mesh_file")
        return mesh_file;
    if (key == "k")
        return format_int_list(k);
    if (key == "l")
        return format_offset(l_offset);
    if (key == "p")
        return format_double(p);
    if (key == "law")
        return law;
    if (key == "alpha")
        return format_double(alpha);
    if (key == "t0")
        return format_double(t0);
    if (key == "bc")
        return bc;
    if (key == "solution")
        return solution;
    if (key == "first_level")
        return std::to_string(first_level);
    if (key == "levels")
        return std::to_string(levels);
    if (key == "tol")
        return format_double(atol);
    if (key == "rtol")
        return format_double(rtol);
    if (key == "max_iter")
        return std::to_string(max_iter);
    if (key == "continuation")
        return format_double_list(continuation);
    if (key == "condense")
        return condense ? "true" : "false";
    if (key == "suite")
        return suite;
    if (key == "samples")
        return std::to_string(samples);
    if (key == "seed")
        return std::to_string(seed);
    if (key == "output")
        return output;
    throw InputError("unknown config key '" + key + "'");
}

inline void RunConfig::validate() const
{
    parse_mesh_family(family);
    parse_boundary_kind(bc);
    manufactured_solution(solution);
    if (law != "plaplace" && law != "glacier")
        throw InputError("unknown flux law '" + law + "' (expected plaplace or glacier)");
    if (law == "plaplace" && !(p > 1.0 && std::isfinite(p)))
        throw InputError("p must be a finite number > 1");
    if (law == "glacier")
        make_glacier(alpha, t0);
    for (int kk : k)
        hho::validate(degrees(kk));
    if (level < 0 || level > max_mesh_level || first_level < 0 || levels < 1 ||
        first_level + levels - 1 > max_mesh_level)
        throw InputError("mesh levels outside [0, " + std::to_string(max_mesh_level) + "]");
    if (suite != "all" && suite != "projectors" && suite != "inequalities")
        throw InputError("unknown verification suite '" + suite + "'");
    if (samples < 1)
        throw InputError("samples must be >= 1");
    solver().validate();
}

/// Parses `key = value` lines; '#' starts a comment.
inline RunConfig parse_config(const std::string& text, RunConfig cfg = {})
{
    std::istringstream is(text);
    int lineno = 0;
    for (std::string line; std::getline(is, line);) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
        cfg.set(detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path, RunConfig cfg = {})
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot read config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str(), std::move(cfg));
}

} // namespace hho
