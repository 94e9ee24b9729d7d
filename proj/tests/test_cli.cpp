#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "otom/cli.hpp"
#include "otom/quantum.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = otom::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::vector<std::string> data_lines(const fs::path& p) {
    std::istringstream is(slurp(p));
    std::vector<std::string> lines;
    for (std::string l; std::getline(is, l);)
        if (!l.empty() && l[0] != '#') lines.push_back(l);
    return lines;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("otom_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string sub(const std::string& s) const { return (dir_ / s).string(); }

    fs::path dir_;
};

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

otom::ComplexMatrix matrix_of(const nlohmann::json& j) {
    const auto& rows = j.at("matrix");
    otom::ComplexMatrix m(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows.size(); ++k) m(i, k) = {rows[i][k][0].get<double>(), rows[i][k][1].get<double>()};
    return m;
}

}  // namespace

TEST_F(CliTest, HaarDeterministicAndHeader) {
    for (const char* d : {"a", "b"})
        ASSERT_EQ(run({"haar", "--dims", "2,4,8", "--samples", "5", "--seed", "7", "--threads", "1", "--out-dir", sub(d)})
                      .code,
                  0);
    EXPECT_EQ(slurp(sub("a/haar_scaling.csv")), slurp(sub("b/haar_scaling.csv")));
    EXPECT_EQ(slurp(sub("a/haar_fits.json")), slurp(sub("b/haar_fits.json")));
    const auto lines = data_lines(sub("a/haar_scaling.csv"));
    ASSERT_EQ(lines.size(), 1u + 3 * 6);
    EXPECT_EQ(lines[0], "N,observable,mean,stderr,samples");
    EXPECT_EQ(slurp(sub("a/haar_scaling.csv")).rfind("# ", 0), 0u);
    const auto fits = read_json(sub("a/haar_fits.json"));
    EXPECT_EQ(fits["fits"].size(), 5u);
    EXPECT_TRUE(fits["fits"][0]["constants"].contains("beta"));
    EXPECT_TRUE(fits["metadata"].contains("z_convention"));
}

TEST_F(CliTest, HaarJsonFormatAndThreads) {
    ASSERT_EQ(run({"haar", "--dims", "2,4", "--samples", "3", "--threads", "1", "--format", "json", "--out-dir",
                   sub("a")})
                  .code,
              0);
    ASSERT_EQ(run({"haar", "--dims", "2,4", "--samples", "3", "--threads", "4", "--format", "json", "--out-dir",
                   sub("b")})
                  .code,
              0);
    EXPECT_EQ(slurp(sub("a/haar_scaling.json")), slurp(sub("b/haar_scaling.json")));
    EXPECT_EQ(read_json(sub("a/haar_scaling.json"))["rows"].size(), 12u);
}

TEST_F(CliTest, ValidationExitCodes) {
    auto bad = [&](std::vector<std::string> args, const std::string& flag) {
        const auto r = run(std::move(args));
        EXPECT_EQ(r.code, 2) << flag;
        EXPECT_NE(r.err.find(flag), std::string::npos) << r.err;
    };
    bad({"haar", "--samples", "0", "--out-dir", sub("x")}, "--samples");
    bad({"haar", "--dims", "4,2", "--out-dir", sub("x")}, "--dims");
    bad({"haar", "--format", "xml"}, "--format");
    bad({"qkr", "--window", "4"}, "--window");
    bad({"qkr", "--dim", "7"}, "--dim");
    bad({"qkr", "--v", "1,2"}, "--v");
    bad({"qkr", "--dim", "24", "--targets", "system"}, "--dim");
    bad({"qkr", "--dim", "16", "--system-bit", "4"}, "--system-bit");
    bad({"chirikov", "--iters", "0"}, "--iters");
    bad({"chirikov", "--grid", "4by4"}, "--grid");
    bad({"qkr", "--phi-grid", "0,0.5"}, "--phi-grid");
    bad({"choi", "--process", "haar", "--dim", "6", "--target", "system"}, "--dim");
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"bogus"}).code, 2);
    EXPECT_FALSE(fs::exists(sub("x")));
}

TEST_F(CliTest, QkrEnumeratesFilesAndNonInteractingIsOne) {
    ASSERT_EQ(run({"qkr", "--k", "0.1,1,5", "--kicks", "6", "--dim", "32", "--out-dir", sub("q")}).code, 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(sub("q"))) files += e.path().extension() == ".csv";
    EXPECT_EQ(files, 6u);
    for (const char* name : {"qkr_delta_k0.1_probe.csv", "qkr_delta_k1_system.csv", "qkr_delta_k5_probe.csv"})
        EXPECT_TRUE(fs::exists(sub(std::string("q/") + name))) << name;

    ASSERT_EQ(run({"qkr", "--k", "0", "--v", "0,0,0", "--kicks", "12", "--dim", "32", "--out-dir", sub("z")}).code, 0);
    const auto lines = data_lines(sub("z/qkr_delta_k0_probe.csv"));
    ASSERT_EQ(lines.size(), 13u);
    EXPECT_EQ(lines[0], "t,delta_raw,delta_smoothed");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto c1 = lines[i].find(','), c2 = lines[i].find(',', c1 + 1);
        EXPECT_EQ(std::stoul(lines[i].substr(0, c1)), i);
        EXPECT_NEAR(std::stod(lines[i].substr(c1 + 1, c2 - c1 - 1)), 1.0, 1e-12);
    }
}

TEST_F(CliTest, QkrDeterministicAndConvergenceFile) {
    for (const char* d : {"a", "b"})
        ASSERT_EQ(run({"qkr", "--k", "1", "--kicks", "8", "--dim", "16", "--threads", "1", "--check-convergence",
                       "--out-dir", sub(d)})
                      .code,
                  0);
    for (const char* f : {"qkr_delta_k1_probe.csv", "qkr_delta_k1_system.csv", "qkr_convergence_k1.json"})
        EXPECT_EQ(slurp(sub(std::string("a/") + f)), slurp(sub(std::string("b/") + f))) << f;
    EXPECT_TRUE(read_json(sub("a/qkr_convergence_k1.json")).contains("max_difference"));
}

TEST_F(CliTest, ChirikovRowsAndDeterminism) {
    for (const char* d : {"a", "b"})
        ASSERT_EQ(run({"chirikov", "--k", "0", "--grid", "4x4", "--iters", "10", "--out-dir", sub(d)}).code, 0);
    EXPECT_EQ(slurp(sub("a/chirikov_k0.csv")), slurp(sub("b/chirikov_k0.csv")));
    const auto lines = data_lines(sub("a/chirikov_k0.csv"));
    ASSERT_EQ(lines.size(), 161u);
    EXPECT_EQ(lines[0], "orbit_id,n,theta,p");
    std::map<std::string, std::set<std::string>> p_by_orbit;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto c1 = lines[i].find(','), c3 = lines[i].rfind(',');
        p_by_orbit[lines[i].substr(0, c1)].insert(lines[i].substr(c3 + 1));
    }
    EXPECT_EQ(p_by_orbit.size(), 16u);
    for (const auto& [id, ps] : p_by_orbit) EXPECT_EQ(ps.size(), 1u) << id;
}

TEST_F(CliTest, ChoiDumps) {
    ASSERT_EQ(run({"choi", "--process", "trivial", "--out-dir", sub("t")}).code, 0);
    const auto full = read_json(sub("t/otom_choi.json"));
    EXPECT_EQ(full["wires"], nlohmann::json({"a_i", "b_o", "b_i", "c_o"}));
    const auto psi = otom::bell_state(2).projector();
    EXPECT_LT(otom::max_abs_diff(matrix_of(full), otom::kron(psi, psi)), 1e-15);

    ASSERT_EQ(run({"choi", "--process", "trivial", "--phi", "0", "--out-dir", sub("t")}).code, 0);
    EXPECT_LT(otom::max_abs_diff(matrix_of(read_json(sub("t/conditional_choi.json"))), psi), 1e-15);

    ASSERT_EQ(run({"choi", "--process", "haar", "--dim", "4", "--seed", "3", "--out-dir", sub("h")}).code, 0);
    const auto r = run({"check", sub("h/otom_choi.json")});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("VALID", 0), 0u);

    ASSERT_EQ(run({"choi", "--process", "qkr", "--dim", "16", "--kicks", "3", "--target", "system", "--phi", "0.4",
                   "--out-dir", sub("k")})
                  .code,
              0);
    EXPECT_EQ(run({"check", sub("k/conditional_choi.json")}).code, 0);
    EXPECT_EQ(read_json(sub("k/conditional_choi.json"))["metadata"]["parameters"]["target"], "system0");
}

TEST_F(CliTest, CheckRejectsInvalidMatrices) {
    fs::create_directories(dir_);
    std::ofstream(sub("bad.json")) << R"({"matrix": [[[0.5,0],[0,0]],[[0,0],[-0.5,0]]]})";
    EXPECT_EQ(run({"check", sub("bad.json")}).code, 1);
    std::ofstream(sub("garbage.json")) << "not json";
    EXPECT_EQ(run({"check", sub("garbage.json")}).code, 2);
    EXPECT_EQ(run({"check", sub("missing.json")}).code, 2);
}

TEST_F(CliTest, SelftestDeterministic) {
    const auto a = run({"selftest", "--seed", "11"});
    const auto b = run({"selftest", "--seed", "11"});
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("selftest passed"), std::string::npos);
}

TEST_F(CliTest, ConfigFileAndHelp) {
    fs::create_directories(dir_);
    std::ofstream(sub("run.toml")) << "[chirikov]\nk = [2.5]\ngrid = \"2x3\"\niters = 4\nout-dir = \"" << sub("cfg")
                                  << "\"\n";
    const auto r = run({"--config", sub("run.toml"), "chirikov"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(data_lines(sub("cfg/chirikov_k2.5.csv")).size(), 1u + 6 * 4);
    EXPECT_EQ(run({"--help"}).code, 0);
}
