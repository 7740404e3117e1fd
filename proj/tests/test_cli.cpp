#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mns/cli/commands.hpp"
#include "mns/cli/io.hpp"
#include "mns/errors.hpp"

namespace mns::cli {
namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / "mns_cli_tests" / info->name();
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  int run_tool(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  void write(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
  }

  std::string simulate(const std::string& name, const std::string& p = "10") {
    const auto dir = (root_ / name).string();
    EXPECT_EQ(run_tool({"--seed", "7", "--out-dir", dir, "simulate", "--p", p, "--subjects", "4", "--n",
                        "60", "--e-ran", "4"}),
              kExitOk)
        << err_.str();
    return dir;
  }

  fs::path root_;
  std::ostringstream out_;
  std::ostringstream err_;
};

std::map<std::string, std::string> tree_contents(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == kRunManifest) continue;
    files[fs::relative(entry.path(), dir).string()] = read_text(entry.path());
  }
  return files;
}

TEST_F(CliTest, IngestTwoSubjects) {
  write(root_ / "a.csv", "x,y,z\n1,2,3\n4,5,7\n0,1,1\n");
  write(root_ / "b.csv", "x,y,z\n2,2,2\n1,0,3\n");
  write(root_ / "cohort.json",
        R"({"subjects":[{"id":"a","file":"a.csv"},{"id":"b","file":"b.csv"}]})");
  const auto rep = ingest_cohort(root_);
  EXPECT_EQ(rep.cohort.num_subjects(), 2u);
  EXPECT_EQ(rep.cohort.p(), 3);
  EXPECT_EQ(rep.observations, (std::vector<int>{3, 2}));
  EXPECT_EQ(rep.cohort.nodes().label(2), "z");
  EXPECT_NEAR(rep.cohort.subject(0).col(0).sum(), 0.0, 1e-12);
  EXPECT_NEAR(rep.cohort.subject(0)(0, 0), 1.0 - 5.0 / 3.0, 1e-12);
}

TEST_F(CliTest, IngestColumnMismatchNamesBothFiles) {
  write(root_ / "a.csv", "x,y,z\n1,2,3\n4,5,7\n");
  write(root_ / "b.csv", "x,y\n2,2\n1,0\n");
  write(root_ / "cohort.json",
        R"({"subjects":[{"id":"a","file":"a.csv"},{"id":"b","file":"b.csv"}]})");
  try {
    ingest_cohort(root_ / "cohort.json");
    FAIL() << "expected an error";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("a.csv"), std::string::npos) << msg;
    EXPECT_NE(msg.find("b.csv"), std::string::npos) << msg;
  }
}

TEST_F(CliTest, IngestNonNumericCellReportsPosition) {
  write(root_ / "a.csv", "x,y,z\n1,2,3\n4,oops,7\n");
  write(root_ / "cohort.json", R"({"subjects":[{"id":"a","file":"a.csv"}]})");
  try {
    ingest_cohort(root_);
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 2);
    EXPECT_NE(std::string(e.what()).find("a.csv"), std::string::npos);
  }
}

TEST_F(CliTest, IngestDuplicateLabelsRejected) {
  write(root_ / "a.csv", "x,x\n1,2\n4,5\n");
  write(root_ / "cohort.json", R"({"subjects":[{"id":"a","file":"a.csv"}]})");
  EXPECT_THROW(ingest_cohort(root_), Error);
}

TEST_F(CliTest, ExportThenIngestIsIdempotent) {
  write(root_ / "a.csv", "u,v\n1,2\n3,5\n8,1\n");
  write(root_ / "b.csv", "u,v\n0,1\n1,1\n2,4\n5,0\n");
  write(root_ / "cohort.json",
        R"({"subjects":[{"id":"a","file":"a.csv"},{"id":"b","file":"b.csv"}]})");
  const auto first = ingest_cohort(root_);
  export_cohort(root_ / "copy", first.cohort.nodes(), first.cohort.subjects(), first.cohort.subject_ids());
  const auto second = ingest_cohort(root_ / "copy");
  ASSERT_EQ(second.cohort.num_subjects(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LT((second.cohort.subject(i) - first.cohort.subject(i)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(second.cohort.subject_ids()[i], first.cohort.subject_ids()[i]);
  }
  EXPECT_EQ(second.cohort.nodes(), first.cohort.nodes());
}

TEST_F(CliTest, SimulateWritesCohortAndTruth) {
  const auto dir = root_ / "sim";
  ASSERT_EQ(run_tool({"--seed", "7", "--out-dir", dir.string(), "simulate", "--p", "50", "--subjects",
                      "10", "--n", "200", "--e-ran", "20", "--tau", "1"}),
            kExitOk)
      << err_.str();
  int csvs = 0;
  for (const auto& e : fs::directory_iterator(dir)) csvs += e.path().extension() == ".csv";
  EXPECT_EQ(csvs, 10);
  EXPECT_TRUE(fs::exists(dir / "truth" / "e_pop.tsv"));
  EXPECT_TRUE(fs::exists(dir / "truth" / "e_tilde.tsv"));
  EXPECT_TRUE(fs::exists(dir / kRunManifest));
  EXPECT_EQ(ingest_cohort(dir).cohort.num_subjects(), 10u);
}

TEST_F(CliTest, SimulateIsByteIdenticalOnRerun) {
  const auto a = simulate("a");
  const auto b = simulate("b");
  const auto ta = tree_contents(a);
  EXPECT_GT(ta.size(), 5u);
  EXPECT_EQ(ta, tree_contents(b));
}

TEST_F(CliTest, InvalidTauIsUsageError) {
  EXPECT_EQ(run_tool({"--out-dir", (root_ / "x").string(), "simulate", "--tau", "1.5"}), kExitUsage);
  EXPECT_FALSE(err_.str().empty());
}

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run_tool({"frobnicate"}), kExitUsage);
  EXPECT_EQ(run_tool({"fit"}), kExitUsage);
}

TEST_F(CliTest, FitThenEvaluateProducesRoc) {
  const auto sim = simulate("sim");
  const auto fit = (root_ / "fit").string();
  ASSERT_EQ(run_tool({"--out-dir", fit, "fit", "--cohort", sim, "--lambda-grid", "8"}), kExitOk) << err_.str();
  const auto ev = (root_ / "eval").string();
  ASSERT_EQ(run_tool({"--out-dir", ev, "evaluate", "--results", fit, "--truth", sim}), kExitOk) << err_.str();
  const auto roc = read_text(fs::path(ev) / "roc_population.tsv");
  std::istringstream lines(roc);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_GE(rows, 4);
  EXPECT_NE(read_text(fs::path(ev) / "evaluation.json").find("\"auc\""), std::string::npos);
}

TEST_F(CliTest, LambdaGridEmitsOneResultSetPerLevel) {
  const auto sim = simulate("sim");
  const auto fit = root_ / "fit";
  ASSERT_EQ(run_tool({"--out-dir", fit.string(), "fit", "--cohort", sim, "--alpha", "0.25", "--lambda-grid",
                      "25"}),
            kExitOk)
      << err_.str();
  int sets = 0;
  for (const auto& e : fs::directory_iterator(fit))
    if (e.is_directory() && e.path().filename().string().rfind("fit_", 0) == 0) {
      ++sets;
      EXPECT_TRUE(fs::exists(e.path() / "population.tsv"));
    }
  EXPECT_EQ(sets, 25);
}

TEST_F(CliTest, ConflictingPenaltyFlagsAreUsageError) {
  const auto sim = simulate("sim");
  EXPECT_EQ(run_tool({"--out-dir", (root_ / "f").string(), "fit", "--cohort", sim, "--lambda", "0.1",
                      "--lambda-grid", "5"}),
            kExitUsage);
}

TEST_F(CliTest, EvaluateAgainstWrongSizeTruthFails) {
  const auto sim = simulate("sim", "10");
  const auto other = simulate("other", "20");
  const auto fit = (root_ / "fit").string();
  ASSERT_EQ(run_tool({"--out-dir", fit, "fit", "--cohort", sim, "--lambda-grid", "3"}), kExitOk);
  EXPECT_EQ(run_tool({"--out-dir", (root_ / "ev").string(), "evaluate", "--results", fit, "--truth", other}),
            kExitFailure);
  EXPECT_NE(err_.str().find("p="), std::string::npos) << err_.str();
}

TEST_F(CliTest, MissingCohortFails) {
  EXPECT_EQ(run_tool({"--out-dir", (root_ / "f").string(), "fit", "--cohort", (root_ / "none").string()}),
            kExitFailure);
}

TEST_F(CliTest, ReplayReproducesOutputs) {
  const auto sim = simulate("sim");
  const auto fit = (root_ / "fit").string();
  ASSERT_EQ(run_tool({"--out-dir", fit, "fit", "--cohort", sim, "--lambda-grid", "4"}), kExitOk);
  EXPECT_EQ(run_tool({"--out-dir", (root_ / "replayed").string(), "replay", "--manifest",
                      (fs::path(fit) / kRunManifest).string()}),
            kExitOk)
      << err_.str();
  EXPECT_EQ(tree_contents(fit), tree_contents(root_ / "replayed"));
}

TEST_F(CliTest, FitIsIndependentOfThreadCount) {
  const auto sim = simulate("sim");
  const auto a = (root_ / "a").string();
  const auto b = (root_ / "b").string();
  ASSERT_EQ(run_tool({"--threads", "1", "--out-dir", a, "fit", "--cohort", sim, "--lambda-grid", "4"}), kExitOk);
  ASSERT_EQ(run_tool({"--threads", "3", "--out-dir", b, "fit", "--cohort", sim, "--lambda-grid", "4"}), kExitOk);
  EXPECT_EQ(tree_contents(a), tree_contents(b));
}

TEST_F(CliTest, BaselinesAndCvRun) {
  const auto sim = simulate("sim");
  EXPECT_EQ(run_tool({"--out-dir", (root_ / "gl").string(), "glasso", "--cohort", sim, "--lambda-grid", "5"}),
            kExitOk)
      << err_.str();
  EXPECT_EQ(run_tool({"--out-dir", (root_ / "st").string(), "stability", "--cohort", sim, "--B", "10",
                      "--stars-subsamples", "5", "--stars-grid", "5"}),
            kExitOk)
      << err_.str();
  EXPECT_EQ(run_tool({"--out-dir", (root_ / "cv").string(), "cv", "--cohort", sim, "--lambda-grid", "5"}),
            kExitOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(root_ / "st" / "rho_pop.tsv"));
  EXPECT_TRUE(fs::exists(root_ / "cv" / "cv.json"));
}

TEST(CsvIo, RoundTripIsExact) {
  const auto path = fs::temp_directory_path() / "mns_csv_roundtrip.csv";
  Eigen::MatrixXd m(2, 3);
  m << 0.1, -1.0 / 3.0, 1e-300, 12345.678, 2.0, -0.0;
  write_csv(path, {"a", "b", "c"}, m);
  const auto t = read_csv(path);
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(t.values, m);
  fs::remove(path);
}

TEST(CsvIo, AcceptsQuotedHeaderAndCrlf) {
  const auto path = fs::temp_directory_path() / "mns_csv_crlf.csv";
  std::ofstream(path, std::ios::binary) << "\"node, one\",b\r\n1,2\r\n3,4\r\n";
  const auto t = read_csv(path);
  EXPECT_EQ(t.header[0], "node, one");
  EXPECT_EQ(t.values(1, 1), 4.0);
  fs::remove(path);
}

}  // namespace
}  // namespace mns::cli
