#include "support.hpp"

#include <projcalc/cli.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace projcalc;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
    Json json() const { return Json::parse(out); }
};

Outcome run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

class Workdir : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() / ("projcalc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) const
    {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

const char* kDini = R"M(# Dini pair
[chart]
coords = x, y
domain = -1:1, -1:1

[construction]
type = dini
X = "3+0.5*sin(x)"
Y = "1+0.5*cos(y)"
)M";

const char* kFlat = R"M([chart]
coords = x1, x2
domain = -1:1, -1:1

[construction]
type = flat
)M";

const char* kBumpy = R"M([chart]
coords = x, y
domain = -1:1, -1:1

[metric g]
11 = "1"
22 = "1"

[metric gbar]
11 = "1 + x^2"
22 = "1 + x^2"
)M";

} // namespace

using Cli = Workdir;

TEST_F(Cli, InvariantsReportMatchesLibrary)
{
    const std::string model = write("dini.model", kDini);
    const Outcome o = run({"invariants", "--model", model, "--at", "0.2,0.1"});
    ASSERT_EQ(o.code, 0) << o.err;
    const Json j = o.json();
    EXPECT_EQ(j["command"], "invariants");
    EXPECT_TRUE(j.contains("seed"));
    EXPECT_EQ(j["model"]["digest"].get<std::string>().rfind("fnv1a:", 0), 0u);
    EXPECT_EQ(j["tolerances"]["flatness"], 1e-9);
    const DiniData d = dini_pair(Chart({"x", "y"}, {{-1, 1}, {-1, 1}}), "3+0.5*sin(x)", "1+0.5*cos(y)");
    const auto k = k_coefficients(christoffel(d.g)).at(std::vector<double>{0.2, 0.1});
    for (int i = 0; i < 4; ++i) EXPECT_EQ(j["results"]["K"]["K" + std::to_string(i)].get<double>(), k[static_cast<std::size_t>(i)]);
    EXPECT_TRUE(j["results"].contains("liouville"));
    EXPECT_FALSE(j["results"]["constant_curvature"]["constant"].get<bool>());
}

TEST_F(Cli, ReportsAreByteIdentical)
{
    const std::string model = write("dini.model", kDini);
    const std::vector<std::string> args{"check-equivalence", "--model", model};
    const Outcome a = run(args), b = run(args);
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    const std::vector<std::string> inv{"invariants", "--model", model, "--at", "-0.3,0.4"};
    EXPECT_EQ(run(inv).out, run(inv).out);
}

TEST_F(Cli, SeedCanBeOverridden)
{
    const std::string model = write("dini.model", kDini);
    const std::vector<std::string> args{"invariants", "--model", model, "--at", "0.1,0.1"};
    const Json plain = run(args).json();
    ::setenv("PROJCALC_SEED", "12345", 1);
    const Json seeded = run(args).json();
    ::unsetenv("PROJCALC_SEED");
    EXPECT_EQ(seeded["seed"], 12345);
    EXPECT_NE(plain["seed"], 12345);
    EXPECT_EQ(seeded["results"]["K"], plain["results"]["K"]);
}

TEST_F(Cli, GeodesicWritesCsvAndTracksIntegrals)
{
    const std::string model = write("dini.model", kDini);
    const std::string csv = path("traj.csv");
    const Outcome o = run({"geodesic", "--model", model, "--metric", "g", "--from", "0.2,0.1", "--dir", "1,0.3", "--tmax", "10",
                           "--step", "1e-3", "--integrals", "painleve,family:0,family:1", "--out", csv});
    ASSERT_EQ(o.code, 0) << o.err;
    const Json j = o.json();
    EXPECT_EQ(j["tolerances"]["relative_drift"], 1e-6);
    ASSERT_EQ(j["integrals"].size(), 3u);
    for (const auto& row : j["integrals"]) {
        EXPECT_TRUE(row["pass"].get<bool>());
        EXPECT_LE(row["max_rel_drift"].get<double>(), 1e-6);
    }
    std::ifstream in(csv);
    std::string header, line;
    std::getline(in, header);
    EXPECT_EQ(header, "t,x1,x2,v1,v2,painleve,family:0,family:1");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
    }
    EXPECT_EQ(rows, j["samples"].get<std::size_t>());
    EXPECT_TRUE(j["left_domain"].get<bool>());
}

TEST_F(Cli, GeodesicDriftAboveToleranceIsACheckFailure)
{
    const std::string model = write("bumpy.model", kBumpy);
    const Outcome o = run({"geodesic", "--model", model, "--pair", "gbar", "--from", "-0.5,0", "--dir", "1,0.3", "--tmax", "1",
                           "--integrals", "painleve,energy"});
    EXPECT_EQ(o.code, 1) << o.err;
    const Json j = o.json();
    EXPECT_FALSE(j["pass"].get<bool>());
    EXPECT_FALSE(j["integrals"][0]["pass"].get<bool>());
    EXPECT_TRUE(j["integrals"][1]["pass"].get<bool>());
}

TEST_F(Cli, MobilityOnFlatModel)
{
    const std::string model = write("flat.model", kFlat);
    const Outcome o = run({"mobility", "--model", model, "--degree", "4", "--grid", "15", "--svtol", "1e-8"});
    ASSERT_EQ(o.code, 0) << o.err;
    const Json j = o.json();
    EXPECT_EQ(j["dimension"], 6);
    EXPECT_EQ(j.at("tolerances").at("singular_value_threshold"), 1e-8);
    EXPECT_GE(j["gap_ratio"].get<double>(), 1e3);
    EXPECT_EQ(j["singular_values"].size(), 45u);
}

TEST_F(Cli, CheckEquivalence)
{
    const Outcome ok = run({"check-equivalence", "--model", write("dini.model", kDini)});
    ASSERT_EQ(ok.code, 0) << ok.err;
    EXPECT_TRUE(ok.json()["equivalent"].get<bool>());
    EXPECT_TRUE(ok.json()["painleve"]["pass"].get<bool>());
    const Outcome bad = run({"check-equivalence", "--model", write("bumpy.model", kBumpy)});
    EXPECT_EQ(bad.code, 1);
    EXPECT_FALSE(bad.json()["equivalent"].get<bool>());
}

TEST_F(Cli, MakeEmitsLoadableModels)
{
    const std::string out = path("made.model");
    const Outcome o = run({"make", "dini", "--set", "X=4+cos(x)", "--set", "Y=2", "--out", out});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(o.json()["written"], out);
    const Model m = load_model(out);
    EXPECT_NE(m.find_metric("g"), nullptr);
    EXPECT_NE(m.find_metric("gbar"), nullptr);
    EXPECT_NEAR(m.metric("g").matrix(std::vector<double>{0, 0})(0, 0), 3.0, 1e-15);

    const Outcome sphere = run({"make", "sphere", "--coords", "u,v", "--domain", "-0.5:0.5,-0.5:0.5"});
    ASSERT_EQ(sphere.code, 0) << sphere.err;
    const Model s = parse_model(sphere.out, "<stdout>");
    EXPECT_TRUE(s.metric("g").matrix(std::vector<double>{0, 0}).isIdentity());

    EXPECT_EQ(run({"make", "dini", "--set", "X=1", "--set", "Y=2"}).code, 2);
    EXPECT_EQ(run({"make", "torus"}).code, 2);
}

TEST_F(Cli, TransformRoundTripKeepsConstantCurvature)
{
    const Outcome made = run({"make", "sphere", "--coords", "u,v", "--domain", "-0.5:0.5,-0.5:0.5", "--out", path("s.model")});
    ASSERT_EQ(made.code, 0) << made.err;
    const Outcome t = run({"transform", "--model", path("s.model"), "--matrix", "1,0.2,0;0,1,0;0.1,0.2,1", "--out", path("t.model")});
    ASSERT_EQ(t.code, 0) << t.err;
    const Model m = load_model(path("t.model"));
    const MetricField& g = m.metric("g");
    const CurvatureFit fit = constant_curvature_test(g, sample_points(g.chart(), 10), 1e-8);
    EXPECT_TRUE(fit.constant);
    EXPECT_NEAR(fit.curvature, 1.0, 1e-8);
    const Outcome inv = run({"invariants", "--model", path("t.model"), "--at", "0.1,0.2"});
    ASSERT_EQ(inv.code, 0) << inv.err;
    EXPECT_LE(std::abs(inv.json()["results"]["liouville"]["L1"].get<double>()), 1e-9);

    EXPECT_EQ(run({"transform", "--model", path("s.model"), "--matrix", "2,0,0;0,1,0;0,0,1"}).code, 2);
}

TEST_F(Cli, InputErrorsExitWithTwo)
{
    const std::string model = write("dini.model", kDini);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"invariants", "--model", path("missing.model"), "--at", "0,0"}).code, 2);
    EXPECT_EQ(run({"invariants", "--model", model, "--at", "0.2,abc"}).code, 2);
    EXPECT_EQ(run({"invariants", "--model", model, "--at", "0.2"}).code, 2);
    EXPECT_EQ(run({"invariants", "--model", model, "--at", "5,0"}).code, 2);
    EXPECT_EQ(run({"invariants", "--model", model, "--at", "0,0", "--bogus"}).code, 2);
    EXPECT_EQ(run({"geodesic", "--model", model, "--dir", "1,0", "--integrals", "nonsense"}).code, 2);
    const Outcome help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("invariants"), std::string::npos);
}

TEST_F(Cli, LoadModelDiagnostics)
{
    const Model m = load_model(write("dini.model", kDini));
    EXPECT_EQ(m.chart.dim(), 2);
    EXPECT_NE(m.find_metric("gbar"), nullptr);
    EXPECT_TRUE(m.a_tensor.has_value());

    const auto message = [&](const std::string& text) {
        try {
            load_model(write("bad.model", text));
        } catch (const InputError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    const std::string missing = message("[chart]\ncoords = x, y\ndomain = -1:1, -1:1\n\n[metric g]\n11 = \"1 + z^2\"\n22 = \"1\"\n");
    EXPECT_NE(missing.find("'z'"), std::string::npos) << missing;
    EXPECT_NE(missing.find("bad.model:6"), std::string::npos) << missing;

    const std::string asym = message("[chart]\ncoords = x, y\ndomain = -1:1, -1:1\n\n[metric g]\n11 = \"1\"\n12 = \"x\"\n21 = \"0\"\n22 = \"1\"\n");
    EXPECT_NE(asym.find("not symmetric"), std::string::npos) << asym;

    const std::string twice = message(std::string(kDini) + "\n[metric g]\n11 = \"1\"\n22 = \"1\"\n");
    EXPECT_NE(twice.find("more than once"), std::string::npos) << twice;
}

#ifdef PROJCALC_TOOL
TEST_F(Cli, InstalledBinaryRuns)
{
    const std::string model = write("flat.model", kFlat);
    const std::string cmd = std::string("\"") + PROJCALC_TOOL + "\" mobility --model \"" + model + "\" --degree 2 --grid 6 > \"" + path("out.json") + "\"";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    std::ifstream in(path("out.json"));
    const Json j = Json::parse(in);
    EXPECT_EQ(j["dimension"], 6);
    const std::string bad = std::string("\"") + PROJCALC_TOOL + "\" invariants --model \"" + path("nope") + "\" --at 0,0 2> /dev/null";
    const int status = std::system(bad.c_str());
    EXPECT_EQ(WEXITSTATUS(status), 2);
}
#endif
