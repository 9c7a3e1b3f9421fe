/**
 * Copyright 2026 The nmrsim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nmrsim/cli.hpp"

using namespace nmrsim;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "nmrsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("nmrsim_cli_" + std::string(info->name()));
        fs::remove_all(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string out(const std::string& sub = "") const { return (sub.empty() ? dir_ : dir_ / sub).string(); }

    static std::string sample(const std::string& name) { return std::string(NMRSIM_SOURCE_DIR) + "/samples/circuits/" + name; }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    nlohmann::json json(const std::string& name, const std::string& sub = "") const {
        return nlohmann::json::parse(slurp(fs::path(out(sub)) / name));
    }

    fs::path dir_;
};

std::size_t count_files(const fs::path& d) {
    if (!fs::exists(d)) return 0;
    return static_cast<std::size_t>(std::distance(fs::directory_iterator(d), fs::directory_iterator()));
}

}  // namespace

TEST_F(CliTest, SimulateBellOnPulsePath) {
    const auto r = run({"--out", out(), "--path", "pulse", "simulate", "--circuit", sample("bell.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json("simulate.json");
    EXPECT_GE(j["fidelity"].get<double>(), 1.0 - 1e-6);
    EXPECT_EQ(j["path"], "pulse");
    const auto s = json("state.json");
    EXPECT_TRUE(s.contains("n") && s.contains("re") && s.contains("im"));
    EXPECT_EQ(slurp(dir_ / "fid_1H.csv").substr(0, 10), "t_s,re,im\n");
    EXPECT_EQ(slurp(dir_ / "spectrum_31P.csv").rfind("freq_hz,re,im,magnitude\n", 0), 0U);
    EXPECT_NE(r.out.find("simulate.json"), std::string::npos);
    EXPECT_TRUE(r.err.empty());
}

TEST_F(CliTest, GroverTargetThree) {
    const auto r = run({"--out", out(), "algorithm", "grover4", "--target", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json("grover4.json")["probabilities"]["10"].get<double>(), 1.0, 1e-9);
}

TEST_F(CliTest, MissingCircuitIsValidationError) {
    const std::string missing = out() + "/no_such_circuit.json";
    const auto r = run({"--out", out("o"), "simulate", "--circuit", missing});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(missing), std::string::npos);
    EXPECT_EQ(r.err.rfind("nmrsim: error: validation: ", 0), 0U);
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
    EXPECT_EQ(count_files(dir_ / "o"), 0U);
}

TEST_F(CliTest, BadFlagValuesAreValidationErrors) {
    EXPECT_EQ(run({"--path", "fast", "algorithm", "bv"}).code, 2);
    EXPECT_EQ(run({"--out", out(), "algorithm", "sort"}).code, 2);
    EXPECT_EQ(run({"--out", out(), "algorithm", "deutsch", "--case", "f9"}).code, 2);
    EXPECT_EQ(run({"--out", out(), "--machine", "mars", "algorithm", "bv"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(count_files(dir_), 0U);
}

TEST_F(CliTest, FitFailureIsNumericalAndWritesNothing) {
    const auto r = run({"--out", out(), "experiment", "rabi", "--channel", "31P", "--amplitude-hz", "1e3", "--periods",
                        "0.01"});
    EXPECT_EQ(r.code, 2) << r.err;  // too short to span a period
    auto c = gemini();
    c.nuclei[0].polarization = c.nuclei[1].polarization = 0.0;
    fs::create_directories(dir_);
    std::ofstream(dir_ / "flat.json") << to_json(c).dump();
    const auto n = run({"--out", out("o"), "--machine", (dir_ / "flat.json").string(), "experiment", "rabi"});
    EXPECT_EQ(n.code, 3) << n.err;
    EXPECT_EQ(n.err.rfind("nmrsim: error: numerical: ", 0), 0U);
    EXPECT_EQ(count_files(dir_ / "o"), 0U);
}

TEST_F(CliTest, UnwritableOutputIsIoError) {
    fs::create_directories(dir_);
    std::ofstream(dir_ / "file") << "x";
    const auto r = run({"--out", (dir_ / "file" / "sub").string(), "algorithm", "bv"});
    EXPECT_EQ(r.code, 4) << r.err;
    EXPECT_EQ(r.err.rfind("nmrsim: error: io: ", 0), 0U);
}

TEST_F(CliTest, GrapeIsByteIdenticalForEqualSeeds) {
    const std::vector<std::string> common = {"grape", "--segments", "12", "--max-iters", "5", "--dt", "2e-5"};
    auto a = common, b = common;
    a.insert(a.begin(), {"--seed", "9", "--out", out("a")});
    b.insert(b.begin(), {"--seed", "9", "--out", out("b")});
    ASSERT_EQ(run(a).code, 0);
    ASSERT_EQ(run(b).code, 0);
    EXPECT_EQ(slurp(dir_ / "a" / "grape.json"), slurp(dir_ / "b" / "grape.json"));
    EXPECT_EQ(slurp(dir_ / "a" / "grape.csv"), slurp(dir_ / "b" / "grape.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "grape.csv").rfind("segment_index,channel,u_x_hz,u_y_hz\n", 0), 0U);
    const auto meta = json("grape.json", "a");
    for (const char* key : {"iterations", "final_fidelity", "seed", "fidelity_trace"}) EXPECT_TRUE(meta.contains(key));
    EXPECT_EQ(meta["seed"], 9);
}

TEST_F(CliTest, JsonIsCanonical) {
    ASSERT_EQ(run({"--out", out(), "algorithm", "bell", "--path", "pulse"}).code, 0);
    const std::string text = slurp(dir_ / "bell.json");
    EXPECT_EQ(text, dump_json(nlohmann::json::parse(text)));
    EXPECT_EQ(text.back(), '\n');
}

TEST_F(CliTest, ExperimentsWriteScans) {
    ASSERT_EQ(run({"--out", out(), "experiment", "rabi", "--amplitude-hz", "25000"}).code, 0);
    EXPECT_EQ(slurp(dir_ / "rabi.csv").rfind("x,y,fit_y\n", 0), 0U);
    const auto rabi = json("rabi.json");
    EXPECT_NEAR(rabi["t180_s"].get<double>(), 2e-5, 0.005 * 2e-5);
    ASSERT_EQ(run({"--out", out(), "experiment", "t1", "--channel", "31P"}).code, 0);
    EXPECT_NEAR(json("t1.json")["fitted_s"].get<double>(), 8.0, 0.16);
    ASSERT_EQ(run({"--out", out(), "experiment", "t2", "--ensemble-spread-hz", "100"}).code, 0);
    EXPECT_NEAR(json("t2.json")["fitted_s"].get<double>(), 0.5, 0.01);
    ASSERT_EQ(run({"--out", out(), "experiment", "pps"}).code, 0);
    EXPECT_NEAR(json("pps.json")["deviation"]["ZZ"].get<double>(), 0.5, 1e-9);
}

TEST_F(CliTest, EveryAlgorithmKindRuns) {
    for (const std::string kind : {"deutsch", "grover4", "bv", "count", "bell", "qho", "dqc1", "cnot-table"}) {
        const auto r = run({"--out", out(), "algorithm", kind});
        EXPECT_EQ(r.code, 0) << kind << ": " << r.err;
        EXPECT_TRUE(fs::exists(dir_ / (kind + ".json"))) << kind;
    }
    ASSERT_EQ(run({"--out", out(), "algorithm", "count", "--case", "M2", "--l-max", "4"}).code, 0);
    EXPECT_EQ(json("count.json")["derived"]["m_rounded"], 2);
    ASSERT_EQ(run({"--out", out(), "algorithm", "cnot-table", "--direction", "21", "--path", "pulse"}).code, 0);
    EXPECT_EQ(json("cnot-table.json")["rows"][1]["output"], "11");
}

TEST_F(CliTest, CompileAndTomography) {
    ASSERT_EQ(run({"--out", out(), "compile", "--circuit", sample("cnot21_on_01.json")}).code, 0);
    const PulseProgram p = program_from_json(json("program.json"));
    EXPECT_FALSE(p.events.empty());
    ASSERT_EQ(run({"--out", out(), "--path", "pulse", "tomography", "--circuit", sample("bell.json")}).code, 0);
    EXPECT_LE(json("tomography.json")["max_abs_error"].get<double>(), 1e-8);
}

TEST_F(CliTest, BinaryExitCodes) {
    fs::create_directories(dir_);
    const std::string bin = NMRSIM_CLI_PATH;
    const std::string err = (dir_ / "err.txt").string();
    int status = std::system((bin + " --out " + out("ok") + " algorithm bv --secret 11 > /dev/null 2> " + err).c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 0);
    status = std::system((bin + " simulate --circuit " + out("none.json") + " > /dev/null 2> " + err).c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 2);
    const std::string msg = slurp(err);
    EXPECT_EQ(std::count(msg.begin(), msg.end(), '\n'), 1);
    EXPECT_NE(msg.find("none.json"), std::string::npos);
}
