#include <gtest/gtest.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"
#include "wassercalc/io.hpp"
#include "wassercalc/solvers.hpp"

using wassercalc::cli::run;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("wassercalc_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    write("mu.json", R"({"dim": 2, "points": [[0,0],[1,1]], "weights": [0.5,0.5]})");
    write("nu.json", R"({"dim": 2, "points": [[1,0],[0,1]], "weights": [0.5,0.5]})");
    write("nuhat.json", R"({"dim": 1, "points": [[0],[1]], "weights": [0.5,0.5]})");
    write("bad.json", R"({"dim": 1, "points": [[0],[1]], "weights": [0.5,0.3]})");
    write("mv.json", R"({"type":"mean_variance","theta":[1.0],"rho":1.0,"sign":-1})");
    write("lin2.json", R"({"type":"expected_value","V":{"type":"linear","a":[1.0,1.0]}})");
    write("ball.json", R"({"type":"w2ball","ref":"nuhat.json","eps":0.1})");
    write("m2.json", R"({"type":"moment2","eps":1.0})");
  }

  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& text) {
    std::ofstream f(dir_ / name);
    f << text << "\n";
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int invoke(std::vector<std::string> args, std::string* out_text = nullptr,
             std::string* err_text = nullptr) {
    std::ostringstream out, err;
    int code = run(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, OtEmitsPlanJson) {
  std::string out;
  int code = invoke({"ot", "--mu", path("mu.json"), "--nu", path("nu.json"), "--cost",
                     "sqeuclidean"},
                    &out);
  EXPECT_EQ(code, 0);
  Json j = Json::parse(out);
  EXPECT_EQ(j["value"].get<double>(), 1.0);
  EXPECT_TRUE(j.contains("entries"));
  EXPECT_TRUE(j.contains("phi"));
  EXPECT_TRUE(j.contains("psi"));
}

TEST_F(CliTest, MalformedWeightsExitTwo) {
  std::string out, err;
  int code = invoke({"ot", "--mu", path("bad.json"), "--nu", path("nuhat.json")}, &out, &err);
  EXPECT_EQ(code, 2);
  Json j = Json::parse(err);
  EXPECT_EQ(j["code"], "weight_sum");
  EXPECT_NE(j["message"].get<std::string>().find("weights sum"), std::string::npos);
}

TEST_F(CliTest, MissingFileExitTwo) {
  std::string err;
  int code = invoke({"ot", "--mu", path("absent.json"), "--nu", path("nuhat.json")}, nullptr,
                    &err);
  EXPECT_EQ(code, 2);
  EXPECT_EQ(Json::parse(err)["code"], "missing_file");
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  std::string err;
  int code = invoke({"ot", "--mu", path("mu.json")}, nullptr, &err);
  EXPECT_EQ(code, 2);
  EXPECT_EQ(Json::parse(err)["code"], "usage");
}

TEST_F(CliTest, AssertStationaryDrivesExitCode) {
  // closed-form DRO solution passes
  std::string out;
  write("sol.json", R"({"dim": 1, "points": [[-1.0]], "weights": [1.0]})");
  write("linJ.json", R"({"type":"expected_value","V":{"type":"linear","a":[1.0]}})");
  write("m2unit.json", R"({"type":"moment2","eps":1.0})");
  int code = invoke({"residual", "--J", path("linJ.json"), "--C", path("m2unit.json"), "--mu",
                     path("sol.json"), "--assert-stationary"},
                    &out);
  EXPECT_EQ(code, 0);
  Json j = Json::parse(out);
  EXPECT_EQ(j["verdict"], "stationary_within");
  EXPECT_LE(j["residual"].get<double>(), 1e-10);

  // an interior non-stationary point fails with exit 4
  write("interior.json", R"({"dim": 1, "points": [[0.2]], "weights": [1.0]})");
  int code4 = invoke({"residual", "--J", path("linJ.json"), "--C", path("m2unit.json"), "--mu",
                      path("interior.json"), "--assert-stationary"},
                     &out);
  EXPECT_EQ(code4, 4);
}

TEST_F(CliTest, FermatSubcommand) {
  std::string out;
  write("sq.json", R"({"type":"expected_value","V":{"type":"sq_norm_half"}})");
  write("origin.json", R"({"dim": 2, "points": [[0,0]], "weights": [1.0]})");
  int code = invoke({"fermat", "--J", path("sq.json"), "--mu", path("origin.json"),
                     "--assert-stationary"},
                    &out);
  EXPECT_EQ(code, 0);
  EXPECT_EQ(Json::parse(out)["lambda"], 0.0);
}

TEST_F(CliTest, EndToEndDroThenResidual) {
  // solve the DRO problem, write the worst case, then certify it through the
  // independent residual path; the ball spec references its center measure
  // by a relative path
  std::string out;
  int code = invoke({"dro-meanvar", "--theta", "1", "--rho", "1", "--eps", "0.1", "--nuhat",
                     path("nuhat.json")},
                    &out);
  ASSERT_EQ(code, 0);
  Json j = Json::parse(out);
  write("cand.json", j["worst_case"].dump());
  int certify = invoke({"residual", "--J", path("mv.json"), "--C", path("ball.json"), "--mu",
                        path("cand.json"), "--assert-stationary"},
                       &out);
  EXPECT_EQ(certify, 0);
  EXPECT_EQ(Json::parse(out)["verdict"], "stationary_within");
}

TEST_F(CliTest, RoundTripCanonicalEquality) {
  std::string out;
  invoke({"dro-meanvar", "--theta", "1", "--rho", "0.5", "--eps", "0.1", "--nuhat",
          path("nuhat.json")},
         &out);
  Json j = Json::parse(out);
  wassercalc::DiscreteMeasure reparsed = wassercalc::measure_from_json(j["worst_case"]);
  wassercalc::DiscreteMeasure direct = wassercalc::solve_meanvar_dro(
      wassercalc::Vec::Ones(1), 0.5, 0.1, wassercalc::load_measure(path("nuhat.json")))
                                           .worst_case;
  EXPECT_TRUE(wassercalc::canonically_equal(reparsed, direct, 1e-12));
}

TEST_F(CliTest, ByteIdenticalRerunsWithSameSeed) {
  for (std::vector<std::string> args :
       {std::vector<std::string>{"gmm-fit", "--data", path("nuhat.json"), "--m", "1", "--seed",
                                 "5"},
        std::vector<std::string>{"prox", "--V", "catalog:double_well", "--mu", path("nuhat.json"),
                                 "--seed", "9"},
        std::vector<std::string>{"dro-meanvar", "--theta", "1", "--rho", "1", "--eps", "0.1",
                                 "--nuhat", path("nuhat.json")},
        std::vector<std::string>{"tangent-check", "--xi", path("xi.json")}}) {
    if (args[0] == "tangent-check")
      write("xi.json",
            R"({"anchor": {"dim":1,"points":[[0],[1]],"weights":[0.5,0.5]},
                "arrows": [{"k":0,"v":[0.5],"mass":0.5},{"k":1,"v":[0.5],"mass":0.5}]})");
    if (args[0] == "gmm-fit")
      write("pts.json", R"([[0.0],[1.0],[2.5]])");
    if (args[0] == "gmm-fit") args[2] = path("pts.json");
    std::string a, b;
    int ca = invoke(args, &a);
    int cb = invoke(args, &b);
    EXPECT_EQ(ca, cb) << args[0];
    EXPECT_EQ(a, b) << args[0];
  }
}

TEST_F(CliTest, CsvMeasureInputAndCsvOut) {
  write("m.csv", "0.0,0.5\n1.0,0.5\n");
  std::string out;
  int code = invoke({"prox", "--V", "catalog:sq_norm_half", "--mu", path("m.csv"), "--csv-out",
                     path("support.csv")},
                    &out);
  EXPECT_EQ(code, 0);
  std::ifstream f(dir_ / "support.csv");
  std::string line;
  int rows = 0;
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST_F(CliTest, OutFileInsteadOfStdout) {
  std::string out;
  int code = invoke({"ot", "--mu", path("mu.json"), "--nu", path("nu.json"), "--out",
                     path("plan.json")},
                    &out);
  EXPECT_EQ(code, 0);
  EXPECT_TRUE(out.empty());
  Json j = wassercalc::load_json_file(path("plan.json"));
  EXPECT_EQ(j["value"].get<double>(), 1.0);
}

TEST_F(CliTest, TangentCheckSubcommand) {
  write("xi2.json",
        R"({"anchor": {"dim":1,"points":[[0.0],[0.001]],"weights":[0.5,0.5]},
            "arrows": [{"k":0,"v":[1.0],"mass":0.5},{"k":1,"v":[-1.0],"mass":0.5}]})");
  std::string out;
  int code = invoke({"tangent-check", "--xi", path("xi2.json")}, &out);
  EXPECT_EQ(code, 0);
  Json j = Json::parse(out);
  EXPECT_FALSE(j["grid_verified"].get<bool>());
  EXPECT_NE(j["note"].get<std::string>().find("grid-verified"), std::string::npos);
}

TEST_F(CliTest, InputValidationExitTwo) {
  // gmm with more components than distinct points fails fast
  write("tiny.json", R"([[1.0],[1.0]])");
  std::string err;
  int code = invoke({"gmm-fit", "--data", path("tiny.json"), "--m", "2"}, nullptr, &err);
  EXPECT_EQ(code, 2);
  EXPECT_EQ(Json::parse(err)["code"], "degenerate_init");
}

TEST_F(CliTest, TypeErrorsInJsonExitTwo) {
  write("typed.json", R"({"dim": "two", "points": [[0,0]], "weights": [1.0]})");
  std::string err;
  int code = invoke({"ot", "--mu", path("typed.json"), "--nu", path("nu.json")}, nullptr, &err);
  EXPECT_EQ(code, 2);
  EXPECT_EQ(Json::parse(err)["code"], "parse_error");
}

TEST_F(CliTest, SolverFailureExitThree) {
  // mixture density underflows at the far-away sample
  write("far.json", R"([[0.0],[1000000.0]])");
  std::string err;
  int code = invoke({"gmm-fit", "--data", path("far.json"), "--m", "1"}, nullptr, &err);
  EXPECT_EQ(code, 3);
  EXPECT_EQ(Json::parse(err)["code"], "log_of_zero");
}
