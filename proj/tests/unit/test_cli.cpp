#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <algorithm>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "rgcinit/model.hpp"
#include "rgcinit/rgc.hpp"
#include "rgcinit/synth.hpp"
#include "rgcinit/tensor_store.hpp"
#include "test_support.hpp"

namespace rgcinit {
namespace {

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  const std::string cmd = std::string(RGCINIT_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) { return read_text_file(p); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const std::string base = "--classes 4 --dim 6 --seed 3 --cond 10 --mean-scale 1 --out-prefix ";
    ASSERT_EQ(cli("synth --per-class 60 " + base + p("train")).status, 0);
    ASSERT_EQ(cli("synth --per-class 60 --split 1 " + base + p("test")).status, 0);
  }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }
  std::string data(const std::string& prefix = "train") const {
    return "--features " + p(prefix + ".fmat") + " --labels " + p(prefix + ".lvec");
  }
  testing::TempDir dir_;
};

TEST_F(CliTest, SynthIsDeterministic) {
  ASSERT_EQ(cli("synth --classes 4 --dim 6 --per-class 60 --seed 3 --cond 10 --mean-scale 1 "
                "--out-prefix " + p("again")).status, 0);
  EXPECT_EQ(slurp(p("again.fmat")), slurp(p("train.fmat")));
  EXPECT_EQ(slurp(p("again.lvec")), slurp(p("train.lvec")));
  EXPECT_EQ(slurp(p("again.truth.json")), slurp(p("train.truth.json")));
}

TEST_F(CliTest, SynthOneClassIsUsageError) {
  EXPECT_EQ(cli("synth --classes 1 --dim 2 --per-class 5 --out-prefix " + p("bad")).status, 1);
}

TEST_F(CliTest, UnknownFlagOrMissingArgumentIsUsageError) {
  EXPECT_EQ(cli("fit --nonsense").status, 1);
  EXPECT_EQ(cli("").status, 1);
  EXPECT_EQ(cli("fit " + data()).status, 1);  // missing --out
}

TEST_F(CliTest, FitEvalNearBayes) {
  ASSERT_EQ(cli("fit " + data() + " --out " + p("rgc.json")).status, 0);
  ASSERT_EQ(cli("bayes --truth " + p("train.truth.json") + " --out " + p("bayes.json")).status, 0);
  const CliRun a = cli("eval --model " + p("rgc.json") + " " + data("test") + " --out-json " + p("a.json"));
  const CliRun b = cli("eval --model " + p("bayes.json") + " " + data("test") + " --out-json " + p("b.json"));
  ASSERT_EQ(a.status, 0) << a.out;
  ASSERT_EQ(b.status, 0) << b.out;
  auto accuracy = [&](const std::string& f) {
    const auto doc = nlohmann::json::parse(slurp(p(f)));
    return doc.at("accuracy").get<double>();
  };
  EXPECT_NEAR(accuracy("a.json"), accuracy("b.json"), 0.05);
}

TEST_F(CliTest, FitPrintsWallclock) {
  const CliRun r = cli("fit " + data() + " --out " + p("m.json"));
  EXPECT_NE(r.out.find("fit_seconds"), std::string::npos) << r.out;
}

TEST_F(CliTest, NccWarnsAboutEpsilon) {
  const CliRun r = cli("fit --method ncc --epsilon 5 " + data() + " --out " + p("n.json"));
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("warning"), std::string::npos) << r.out;
  EXPECT_EQ(read_model(p("n.json")).metadata.source, ModelSource::kNcc);
}

TEST_F(CliTest, ZeroEpsilonOnSingularDataIsNumericalError) {
  // Two samples per class in 6 dimensions: rank-deficient covariance.
  ASSERT_EQ(cli("synth --classes 2 --dim 6 --per-class 2 --out-prefix " + p("tiny")).status, 0);
  const CliRun r = cli("fit " + data("tiny") + " --epsilon 0 --out " + p("t.json"));
  EXPECT_EQ(r.status, 3) << r.out;
  EXPECT_NE(r.out.find("not positive definite"), std::string::npos) << r.out;
}

TEST_F(CliTest, EvalDimMismatchIsDataError) {
  ASSERT_EQ(cli("synth --classes 4 --dim 3 --per-class 5 --out-prefix " + p("narrow")).status, 0);
  ASSERT_EQ(cli("fit " + data() + " --out " + p("m.json")).status, 0);
  EXPECT_EQ(cli("eval --model " + p("m.json") + " " + data("narrow")).status, 2);
}

TEST_F(CliTest, EvalZeroModelLogK) {
  LinearClassifier z;
  z.weights = Matrix(4, 6);
  z.bias.assign(4, 0.0);
  write_model(z, p("zero.json"));
  const CliRun r = cli("eval --model " + p("zero.json") + " " + data());
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("mean_cross_entropy 1.386294361"), std::string::npos) << r.out;
}

TEST_F(CliTest, MissingFileIsDataError) {
  EXPECT_EQ(cli("eval --model " + p("nope.json") + " " + data()).status, 2);
}

TEST_F(CliTest, CalibrateAgainstItselfAndAsPrinted) {
  ASSERT_EQ(cli("fit " + data() + " --out " + p("m.json")).status, 0);
  const CliRun self = cli("calibrate --model " + p("m.json") + " --reference " + p("m.json") +
                       " --out " + p("c.json"));
  ASSERT_EQ(self.status, 0);
  EXPECT_NE(self.out.find("alpha 1\n"), std::string::npos) << self.out;

  LinearClassifier ref = read_model(p("m.json"));
  for (double& w : ref.weights.data()) w *= 3.0;
  write_model(ref, p("ref.json"));
  const CliRun def = cli("calibrate --model " + p("m.json") + " --reference " + p("ref.json") +
                      " --out " + p("d.json"));
  const CliRun printed = cli("calibrate --model " + p("m.json") + " --reference " + p("ref.json") +
                          " --out " + p("e.json") + " --eq19-as-printed");
  ASSERT_EQ(def.status, 0);
  ASSERT_EQ(printed.status, 0);
  const auto cd = read_model(p("d.json")).metadata.calibration;
  const auto ce = read_model(p("e.json")).metadata.calibration;
  ASSERT_TRUE(cd && ce);
  EXPECT_NEAR(cd->alpha, 3.0, 1e-12);
  EXPECT_NEAR(ce->alpha, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(cd->alternate_alpha, ce->alpha);
  EXPECT_EQ(ce->rule, AlphaRule::kAsPrinted);

  // Held-out predictions unchanged.
  const auto x = read_features(p("test.fmat"));
  EXPECT_EQ(predict(read_model(p("m.json")), x), predict(read_model(p("d.json")), x));
}

TEST_F(CliTest, CalibrateDegenerateIsNumericalError) {
  LinearClassifier flat;
  flat.weights = Matrix(3, 6, 1.0);
  flat.bias.assign(3, 0.0);
  write_model(flat, p("flat.json"));
  ASSERT_EQ(cli("fit " + data() + " --out " + p("m.json")).status, 0);
  EXPECT_EQ(cli("calibrate --model " + p("flat.json") + " --reference " + p("m.json") + " --out " +
                p("x.json")).status, 3);
}

TEST_F(CliTest, TrainZeroItersEqualsInit) {
  ASSERT_EQ(cli("fit " + data() + " --out " + p("m.json")).status, 0);
  ASSERT_EQ(cli("train-lr --init " + p("m.json") + " --iters 0 " + data() + " --out " +
                p("t.json")).status, 0);
  EXPECT_EQ(read_model(p("t.json")), read_model(p("m.json")));
}

TEST_F(CliTest, TraceRowsAndDeterminism) {
  const std::string args = "train-lr --init random --seed 4 --iters 23 --log-every 5 --batch 32 " +
                           data() + " --test-features " + p("test.fmat") + " --test-labels " +
                           p("test.lvec");
  ASSERT_EQ(cli(args + " --trace-out " + p("a.csv") + " --out " + p("a.json")).status, 0);
  ASSERT_EQ(cli(args + " --trace-out " + p("b.csv") + " --out " + p("b.json")).status, 0);
  const std::string trace = slurp(p("a.csv"));
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 1 + 23 / 5 + 1);
  EXPECT_EQ(trace, slurp(p("b.csv")));
  EXPECT_EQ(slurp(p("a.json")), slurp(p("b.json")));
}

TEST_F(CliTest, TrainDivergenceExitsThree) {
  const CliRun r = cli("train-lr --init random --lr 1e300 --iters 5 " + data() + " --out " + p("x.json"));
  EXPECT_EQ(r.status, 3) << r.out;
  EXPECT_NE(r.out.find("iteration"), std::string::npos) << r.out;
}

TEST_F(CliTest, CmdStudyAndErrors) {
  const CliRun ok = cli("cmd-study " + data() + " --pca-dims 2 --out " + p("cmd.json"));
  ASSERT_EQ(ok.status, 0) << ok.out;
  EXPECT_NE(slurp(p("cmd.json")).find("\"kind\": \"cmd-report\""), std::string::npos);
  EXPECT_EQ(cli("cmd-study " + data() + " --pca-dims 7").status, 2);
}

TEST_F(CliTest, BenchReportListsMethodsOnce) {
  const std::string args = "bench " + data() + " --test-features " + p("test.fmat") +
                           " --test-labels " + p("test.lvec") +
                           " --iters 20 --log-every 5 --omit-timing --seed 2 --out ";
  const CliRun r = cli(args + p("b1.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  ASSERT_EQ(cli(args + p("b2.json")).status, 0);
  const std::string rep = slurp(p("b1.json"));
  EXPECT_EQ(rep, slurp(p("b2.json")));
  for (const char* m : {"\"rgc\"", "\"ncc\"", "\"random\""}) {
    const auto first = rep.find(std::string("\"method\": ") + m);
    ASSERT_NE(first, std::string::npos) << m;
    EXPECT_EQ(rep.find(std::string("\"method\": ") + m, first + 1), std::string::npos) << m;
  }
}

TEST_F(CliTest, BenchUnknownMethodIsUsageError) {
  EXPECT_EQ(cli("bench " + data() + " --methods rgc,svm").status, 1);
}

TEST_F(CliTest, CsvFeaturesAccepted) {
  const Matrix x = read_features(p("train.fmat"));
  std::ostringstream csv;
  csv.precision(17);
  csv << "a,b,c,d,e,f\n";
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) csv << (j ? "," : "") << x(i, j);
    csv << "\n";
  }
  write_text_file(p("train.csv"), csv.str());
  ASSERT_EQ(cli("--csv-header fit --features " + p("train.csv") + " --labels " + p("train.lvec") +
                " --out " + p("csv.json")).status, 0);
  ASSERT_EQ(cli("fit " + data() + " --out " + p("bin.json")).status, 0);
  EXPECT_EQ(read_model(p("csv.json")).weights, read_model(p("bin.json")).weights);
}

}  // namespace
}  // namespace rgcinit
