#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "daeh/cli.hpp"
#include "daeh/report.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = daeh::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("reproduce example 3.7") {
  auto r = run({"reproduce", "example-3-7"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema"] == 1);
  CHECK(j["status"] == "ok");
  CHECK(j["result"]["integral_a_over_b"].get<double>() == doctest::Approx(2 * std::log(3.0)).epsilon(1e-10));
  CHECK(j["result"]["degree"] == 1);
}

TEST_CASE("output is deterministic") {
  auto a = run({"degree", "--builtin", "example-4-6", "--box", "-1.49,5;-1.49,5"});
  auto b = run({"degree", "--builtin", "example-4-6", "--box", "-1.49,5;-1.49,5"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  auto c = run({"degree", "--builtin", "example-4-6", "--box", "-1.49,5;-1.49,5", "--seed", "5"});
  auto ja = nlohmann::json::parse(a.out), jc = nlohmann::json::parse(c.out);
  CHECK(ja["result"]["degree"]["total"] == jc["result"]["degree"]["total"]);
}

TEST_CASE("exit codes") {
  CHECK(run({"zeros", "--builtin", "nope"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"integrate", "--builtin", "reactor", "--x0", "1"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  auto bad = run({"integrate", "--builtin", "example-4-6", "--x0", "9", "--t1", "50"});
  CHECK(bad.code == 1);
  auto j = nlohmann::json::parse(bad.out);
  CHECK(j["status"] == "error");
  CHECK(j["error"]["class"] == "numerical");
}

TEST_CASE("float formatting") {
  daeh::report::Json j;
  j["x"] = 0.1;
  j["n"] = std::nan("");
  j["v"] = daeh::report::vec(std::vector<double>{1.0, 2.0});
  auto s = daeh::report::dump(j);
  CHECK(s.find("1.000000000000e-01") != std::string::npos);
  CHECK(s.find("null") != std::string::npos);
  CHECK(s.find("[1.000000000000e+00, 2.000000000000e+00]") != std::string::npos);
}
