#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "coherit/io.hpp"
#include "coherit/rng.hpp"

using namespace coherit;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "coherit_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("format_double round-trips doubles exactly") {
  RngStream rng(77, 0);
  for (int i = 0; i < 1000; ++i) {
    double x = rng.gaussian() * std::pow(10.0, static_cast<double>(i % 40) - 20.0);
    const double back = parse_double(format_double(x), 1, 1);
    CHECK(back == x);
  }
  CHECK(parse_double(format_double(0.1), 1, 1) == 0.1);
  CHECK(parse_double("17", 1, 1) == 17.0);
}

TEST_CASE("infinities and nan have fixed spellings") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(format_double(inf) == "inf");
  CHECK(format_double(-inf) == "-inf");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(parse_double("inf", 1, 1) == inf);
  CHECK(parse_double("-inf", 1, 1) == -inf);
  CHECK(std::isnan(parse_double("nan", 1, 1)));
}

TEST_CASE("non-numeric cells are rejected with their location") {
  try {
    parse_double("abc", 7, 3);
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(e.row() == 7);
    CHECK(e.col() == 3);
    CHECK(std::string(e.what()).find("abc") != std::string::npos);
  }
}

TEST_CASE("numeric csv write/read round trip is exact") {
  RngStream rng(5, 5);
  Eigen::MatrixXd m(7, 3);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = rng.gaussian() * 1e-3;
  const auto path = temp_file("roundtrip.csv");
  write_numeric_csv(path.string(), {"a", "b", "c"}, m);
  const NumericCsv back = read_numeric_csv(path.string());
  CHECK(back.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(back.values.rows() == 7);
  CHECK((back.values - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("csv reader skips comment lines and validates shape") {
  const auto path = temp_file("comments.csv");
  {
    std::ofstream out(path);
    out << "# provenance line\nm1,m2\n1,2\n# middle comment\n3,4\n";
  }
  const NumericCsv csv = read_numeric_csv(path.string());
  CHECK(csv.values.rows() == 2);
  CHECK(csv.values(1, 1) == 4.0);

  const auto bad = temp_file("badshape.csv");
  {
    std::ofstream out(bad);
    out << "m1,m2\n1,2,3\n";
  }
  CHECK_THROWS_AS(read_numeric_csv(bad.string()), CsvError);

  const auto badcell = temp_file("badcell.csv");
  {
    std::ofstream out(badcell);
    out << "m1,m2\n1,2\n3,oops\n";
  }
  try {
    read_numeric_csv(badcell.string());
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(e.row() == 3);
    CHECK(e.col() == 2);
  }
}

TEST_SUITE_END();
