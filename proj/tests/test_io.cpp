#include <filesystem>

#include "test_util.hpp"

using namespace delayvax;
using testutil::code_of;

TEST_CASE("doubles round-trip through their text form") {
  REQUIRE(format_double(0.5) == "0.5");
  REQUIRE(format_double(2.0) == "2");
  REQUIRE(format_double(0.0) == "0");
  for (double x : {0.1, 1.0 / 3.0, 0.1 + 0.2, 4.25, -17.75, 1e-17, 6.02e23}) {
    std::string s = format_double(x);
    REQUIRE(detail::parse_number<double>(s, "value") == x);
  }
}

TEST_CASE("file round trip preserves bytes") {
  namespace fs = std::filesystem;
  fs::path base = fs::temp_directory_path() / "delayvax_io_test";
  fs::remove_all(base);
  std::string payload = "line one\r\nline two\nno trailing newline";
  std::string path = (base / "deep" / "nested" / "file.txt").string();
  write_file(path, payload);
  REQUIRE(read_file(path) == payload);
  write_file(path, "short");  // truncates
  REQUIRE(read_file(path) == "short");
  fs::remove_all(base);
}

TEST_CASE("file errors carry the io code") {
  namespace fs = std::filesystem;
  REQUIRE(code_of([] { read_file("/nonexistent/delayvax/nowhere.txt"); }) == Errc::io_failure);
  fs::path base = fs::temp_directory_path() / "delayvax_io_test2";
  fs::remove_all(base);
  write_file((base / "plain").string(), "x");
  // a regular file cannot serve as a parent directory
  REQUIRE(code_of([&] { write_file((base / "plain" / "y.txt").string(), "x"); }) ==
          Errc::io_failure);
  fs::remove_all(base);
}

TEST_CASE("plan serialization golden form") {
  VaccinationPlan p;
  p.nodes = {1, 3};
  p.gains = {3.5, 0.75};
  REQUIRE(format_plan(p) == "rank,node_id,marginal_gain\n1,1,3.5\n2,3,0.75\n");
  p.notes.push_back("alpha beta");
  REQUIRE(format_plan(p) == "# alpha beta\nrank,node_id,marginal_gain\n1,1,3.5\n2,3,0.75\n");
}

TEST_CASE("plan round trip is exact") {
  RootedTree t = sample_galton_watson(OffspringDistribution::poisson(2.0), 60, 12);
  DelayModel m = DelayModel::exponential_tau(1.0, 0.37);
  VaccinationPlan p = greedy_select(t, 6, m);
  p.notes.push_back("kept for the record");
  VaccinationPlan q = parse_plan(format_plan(p));
  REQUIRE(q.nodes == p.nodes);
  REQUIRE(q.gains == p.gains);  // shortest-form text preserves every bit
  REQUIRE(q.notes == p.notes);
  REQUIRE(q.tree_of.empty());  // tree tags are not part of the format
}

TEST_CASE("plan parsing tolerates blank lines") {
  VaccinationPlan p = parse_plan("rank,node_id,marginal_gain\n\n1,4,0.5\n\n2,2,0.25\n");
  REQUIRE(p.nodes == std::vector<int>{4, 2});
  REQUIRE(p.gains == std::vector<double>{0.5, 0.25});
}

TEST_CASE("plan parsing rejects malformed input") {
  REQUIRE(code_of([] { parse_plan(""); }) == Errc::io_failure);
  REQUIRE(code_of([] { parse_plan("1,1,3.5\n"); }) == Errc::io_failure);
  REQUIRE(code_of([] { parse_plan("rank,node,gain\n"); }) == Errc::io_failure);
  REQUIRE(code_of([] { parse_plan("rank,node_id,marginal_gain\n2,1,3.5\n"); }) ==
          Errc::io_failure);
  REQUIRE(code_of([] { parse_plan("rank,node_id,marginal_gain\n1,x,3.5\n"); }) ==
          Errc::io_failure);
  REQUIRE(code_of([] { parse_plan("rank,node_id,marginal_gain\n1,1\n"); }) == Errc::io_failure);
  REQUIRE(code_of([] { parse_plan("rank,node_id,marginal_gain\n1,1,3.5junk\n"); }) ==
          Errc::io_failure);
}
