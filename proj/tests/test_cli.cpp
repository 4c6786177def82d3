#include "hho/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace hho;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = 0;
    std::string out, err;
};

CliRun run(std::vector<std::string> args)
{
    args.insert(args.begin(), "hho");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("hho_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig sample_config()
{
    RunConfig c;
    c.command = "convergence";
    c.family = "hexagonal";
    c.level = 4;
    c.k = {0, 2, 3};
    c.l_offset = 1;
    c.p = 1.75;
    c.law = "glacier";
    c.alpha = 0.3;
    c.t0 = 0.25;
    c.bc = "neumann";
    c.solution = "coscos";
    c.first_level = 2;
    c.levels = 4;
    c.atol = 1e-13;
    c.rtol = 3.5e-11;
    c.max_iter = 40;
    c.continuation = {2.0, 1.9, 1.8};
    c.condense = false;
    c.suite = "projectors";
    c.samples = 7;
    c.seed = 123456789012345ULL;
    c.output = "some dir/out";
    return c;
}

} // namespace

TEST(Config, TextRoundTrip)
{
    const RunConfig c = sample_config();
    EXPECT_EQ(parse_config(c.serialize()), c);
    EXPECT_EQ(parse_config(RunConfig{}.serialize()), RunConfig{});
}

TEST(Config, JsonEchoRoundTrip)
{
    const RunConfig c = sample_config();
    EXPECT_EQ(config_from_json(config_json(c)), c);
    const auto env = report_envelope(c);
    EXPECT_EQ(env["seed"].get<std::uint64_t>(), c.seed);
    EXPECT_TRUE(env["versions"].contains("eigen"));
}

TEST(Config, CommentsAndRanges)
{
    const RunConfig c = parse_config("# study\n\np = 3   # exponent\nk = 0..3\ncontinuation = [2, 2.5, 3]\n");
    EXPECT_EQ(c.p, 3.0);
    EXPECT_EQ(c.k, (std::vector<int>{0, 1, 2, 3}));
    EXPECT_EQ(c.continuation, (std::vector<double>{2.0, 2.5, 3.0}));
}

TEST(Config, ParseErrors)
{
    EXPECT_THROW(parse_config("nonsense = 1\n"), InputError);
    EXPECT_THROW(parse_config("p 3\n"), InputError);
    EXPECT_THROW(parse_config("p = three\n"), InputError);
    EXPECT_THROW(parse_config("level = 2.5\n"), InputError);
    EXPECT_THROW(parse_config("condense = maybe\n"), InputError);
    EXPECT_THROW(parse_config("l = k+2\n"), InputError);
    EXPECT_THROW(load_config("/nonexistent/hho.cfg"), InputError);
    RunConfig bad;
    bad.p = 1.0;
    EXPECT_THROW(bad.validate(), InputError);
}

TEST(Report, CsvLayout)
{
    ConvergenceTable t;
    std::ostringstream empty;
    write_csv(empty, t);
    EXPECT_EQ(empty.str(), "level,h,ndof,err_grad_p,order\n");
    t.add({1, 0.5, 8, 0.1});
    t.add({2, 0.25, 40, 0.025});
    std::ostringstream os;
    write_csv(os, t);
    EXPECT_EQ(os.str(), "level,h,ndof,err_grad_p,order\n"
                        "1,5.000000000000e-01,8,1.000000000000e-01,\n"
                        "2,2.500000000000e-01,40,2.500000000000e-02,2.000000\n");
}

TEST(Cli, MeshGenAndCheck)
{
    const std::string dir = scratch("mesh");
    const CliRun g = run({"mesh", "gen", "--family", "hexagonal", "--level", "2", "-o", dir});
    ASSERT_EQ(g.code, exit_ok) << g.err;
    const std::string file = dir + "/hexagonal-2.mesh";
    ASSERT_TRUE(fs::exists(file));
    EXPECT_EQ(run({"mesh", "check", file}).code, exit_ok);
    std::ifstream in(file);
    EXPECT_EQ(load_mesh(in).n_cells(), generate_mesh_family(MeshFamily::hexagonal, 2).n_cells());
}

TEST(Cli, InvalidMeshIsInputError)
{
    // Face (1,2) would be shared by three cells.
    const std::string dir = scratch("badmesh");
    const std::string file = dir + "/bad.mesh";
    std::ofstream(file) << "DIM 2\nVERTICES 5\n0 0\n1 0\n0 1\n1 1\n0.8 0.8\nCELLS 3\n3 0 1 2\n3 1 3 2\n3 1 4 2\n";
    const CliRun r = run({"mesh", "check", file});
    EXPECT_EQ(r.code, exit_input);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(run({"mesh", "check", dir + "/missing.mesh"}).code, exit_input);
}

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(run({}).code, exit_input);
    EXPECT_EQ(run({"solve", "--bogus"}).code, exit_input);
    EXPECT_EQ(run({"solve", "--p", "0.5"}).code, exit_input);
    EXPECT_EQ(run({"convergence", "--family", "pentagonal"}).code, exit_input);
    EXPECT_EQ(run({"convergence", "--bc", "neumann", "--levels", "2", "-o", scratch("neumann_exp")}).code, exit_input);
    EXPECT_EQ(run({"--help"}).code, exit_ok);
}

TEST(Cli, FlagsOverrideConfigFile)
{
    const std::string dir = scratch("override");
    std::ofstream(dir + "/run.cfg") << "p = 3\nlevel = 1\nk = 0\nfamily = cartesian\noutput = " << dir << "\n";
    const CliRun r = run({"solve", "--config", dir + "/run.cfg", "--p", "2"});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir + "/solve.json"));
    EXPECT_EQ(j["config"]["p"], "2");
    EXPECT_EQ(j["config"]["family"], "cartesian");
    EXPECT_EQ(j["config"]["level"], "1");
    EXPECT_EQ(config_from_json(j["config"]).p, 2.0);
}

TEST(Cli, SolverFailureExitCode)
{
    const std::string dir = scratch("solverfail");
    const CliRun r = run({"solve", "--p", "3", "--level", "1", "--max-iter", "1", "-o", dir});
    EXPECT_EQ(r.code, exit_solver);
    EXPECT_TRUE(fs::exists(dir + "/solve.json"));
    const CliRun c = run({"convergence", "--p", "3", "--k", "0", "--levels", "2", "--max-iter", "1", "-o", dir});
    EXPECT_EQ(c.code, exit_solver);
}

TEST(Cli, VerificationFailureExitCode)
{
    // One Newton iteration cannot reach the tolerance, so the a priori probe fails.
    const std::string dir = scratch("verifyfail");
    const CliRun r = run({"verify", "--suite", "inequalities", "--k", "0", "--p", "3", "--levels", "2", "--max-iter", "1", "-o", dir});
    EXPECT_EQ(r.code, exit_verification);
    EXPECT_NE(r.out.find("FAIL inequalities k=0 p=3 a_priori"), std::string::npos);
    const auto j = nlohmann::json::parse(slurp(dir + "/verify.json"));
    EXPECT_LT(j["summary"]["passed"].get<int>(), j["summary"]["total"].get<int>());
}

TEST(Cli, VerifyProjectorsPassAndRecordSeed)
{
    const std::string dir = scratch("verify");
    const CliRun r = run({"verify", "--suite", "projectors", "--k", "1", "--levels", "3", "--seed", "99", "-o", dir});
    ASSERT_EQ(r.code, exit_ok) << r.out;
    const auto j = nlohmann::json::parse(slurp(dir + "/verify.json"));
    EXPECT_EQ(j["seed"], 99);
    for (const auto& rep : j["reports"])
        EXPECT_EQ(rep["seed"], 99);
}

TEST(Cli, ConvergenceOutputIsDeterministic)
{
    const std::string a = scratch("conv_a"), b = scratch("conv_b");
    for (const auto& dir : {a, b}) {
        const CliRun r = run({"convergence", "--k", "0,1", "--p", "3", "--levels", "3", "-o", dir});
        ASSERT_EQ(r.code, exit_ok) << r.err;
    }
    for (const auto* name : {"/convergence_triangular_p3_k0.csv", "/convergence_triangular_p3_k1.csv"}) {
        const std::string csv = slurp(a + name);
        EXPECT_EQ(csv, slurp(b + name));
        EXPECT_EQ(csv.substr(0, csv.find('\n')), "level,h,ndof,err_grad_p,order");
        EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    }
    EXPECT_TRUE(fs::exists(a + "/convergence_triangular_p3_k0.dat"));
    const auto j = nlohmann::json::parse(slurp(a + "/convergence.json"));
    EXPECT_EQ(j["tables"].size(), 2u);
}

TEST(Parallel, ThreadCountFromEnvironment)
{
    ::setenv("HHO_THREADS", "3", 1);
    EXPECT_EQ(default_thread_count(), 3u);
    ::setenv("HHO_THREADS", "zero", 1);
    EXPECT_GE(default_thread_count(), 1u);
    ::unsetenv("HHO_THREADS");
}
