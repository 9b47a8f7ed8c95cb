#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>

#include "hdi/csv.hpp"
#include "hdi/inference.hpp"

using namespace hdi;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path("/tmp/hdinfer_test_" + name) {
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_SUITE("cli_format") {

TEST_CASE("csv ingestion: header, order, outcome split") {
  TempFile f("ok.csv",
             "x1,y,x2\n"
             "1.5,0,2.0\n"
             "-0.5,1,0.25\n"
             "0.75,1,-1.5\n"
             "2.25,0,0.5\n");
  const CsvTable t = read_csv(f.path);
  CHECK(t.names == std::vector<std::string>{"x1", "y", "x2"});
  CHECK(t.values.rows() == 4);

  const Dataset d = dataset_from_csv(t, "y", Link::logistic);
  CHECK(d.p() == 2);
  CHECK(d.names() == std::vector<std::string>{"x1", "x2"}); // file order kept
  CHECK(d.X()(0, 1) == 1.5);
  CHECK(d.X()(0, 2) == 2.0);
  CHECK(d.y()[1] == 1.0);

  CHECK_THROWS_AS(dataset_from_csv(t, "nope", Link::identity), invalid_input);
}

TEST_CASE("csv ingestion rejects missing and malformed values") {
  TempFile missing("missing.csv", "a,b\n1.0,\n2.0,3.0\n");
  CHECK_THROWS_AS(read_csv(missing.path), invalid_input);
  TempFile na("na.csv", "a,b\n1.0,NA\n");
  CHECK_THROWS_AS(read_csv(na.path), invalid_input);
  TempFile text("text.csv", "a,b\n1.0,apple\n");
  CHECK_THROWS_AS(read_csv(text.path), invalid_input);
  TempFile ragged("ragged.csv", "a,b\n1.0\n");
  CHECK_THROWS_AS(read_csv(ragged.path), invalid_input);
}

TEST_CASE("multivariate response extraction") {
  TempFile f("multi.csv",
             "y1,x1,y2,x2\n"
             "0.1,1.0,0.2,2.0\n"
             "0.3,0.5,0.4,1.0\n"
             "0.5,-1.0,0.6,0.5\n");
  const auto mr = multiresponse_from_csv(read_csv(f.path), {"y1", "y2"});
  CHECK(mr.Y.cols() == 2);
  CHECK(mr.X.cols() == 3); // intercept + 2 covariates
  CHECK(mr.covariate_names == std::vector<std::string>{"x1", "x2"});
  CHECK(mr.Y(1, 1) == 0.4);
}

TEST_CASE("inference result serializes to the documented schema") {
  InferenceResult r;
  r.estimate = 1.25;
  r.variance = 0.04;
  r.ci_lower = 0.86;
  r.ci_upper = 1.64;
  r.alpha = 0.05;
  r.z_stat = 6.25;
  const nlohmann::json plain = result_to_json(r);
  CHECK(plain["estimate"] == 1.25);
  CHECK(plain["variance"] == 0.04);
  CHECK(plain["ci"][0] == 0.86);
  CHECK(plain["ci"][1] == 1.64);
  CHECK(plain["alpha"] == 0.05);
  CHECK(plain["test"].is_null());

  r.test = TestDecision{2.5, true};
  r.transformed_ci = {0.7, 0.84};
  const nlohmann::json with_test = result_to_json(r);
  CHECK(with_test["test"]["reject"] == true);
  CHECK(with_test["test"]["statistic"] == 2.5);
  CHECK(with_test["transformed_ci"][0] == 0.7);
}

} // TEST_SUITE
