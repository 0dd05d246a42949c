#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "chaosbsde/cli.hpp"

using namespace chaosbsde;
using namespace chaosbsde::cli;
using nlohmann::json;

namespace {

RunConfig small(const std::string& problem) {
  RunConfig c = parse_config(json{{"problem", problem}, {"m", 4}, {"M", 3}, {"P", 2}, {"N", 3000}});
  c.threads = 1;
  return c;
}

std::string error_of(const json& j) {
  try {
    parse_config(j, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse_config(json::object());
  EXPECT_EQ(c.scheme, "euler");
  EXPECT_EQ(c.problem.id, "example1");
  EXPECT_EQ(c.m, 20);
  EXPECT_EQ(c.N, 100000u);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(error_of({{"P", -1}}).find("cfg.json: /P"), std::string::npos);
  EXPECT_NE(error_of({{"P", 17}}).find("/P"), std::string::npos);
  EXPECT_NE(error_of({{"N", 1}}).find("/N"), std::string::npos);
  EXPECT_NE(error_of({{"m", "ten"}}).find("/m"), std::string::npos);
  EXPECT_NE(error_of({{"scheme", "rk4"}}).find("/scheme"), std::string::npos);
  EXPECT_NE(error_of({{"banana", 1}}).find("/banana: unknown key"), std::string::npos);
  EXPECT_NE(error_of({{"rho", 2.0}, {"problem", "example3"}}).find("rho"), std::string::npos);
  EXPECT_EQ(error_of({{"P", 16}}), "");
}

TEST(Config, JsonRoundTrip) {
  auto c = small("example2");
  c.seed = 99;
  c.scheme = "picard";
  c.Q = 3;
  const auto back = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, Overrides) {
  auto c = small("example1");
  apply_override(c, "P=1");
  apply_override(c, "problem=vanilla_call");
  EXPECT_EQ(c.P, 1);
  EXPECT_EQ(c.problem.id, "vanilla_call");
  EXPECT_THROW(apply_override(c, "P"), ConfigError);
  EXPECT_THROW(apply_override(c, "P=-3"), ConfigError);
}

TEST(Rows, FormatParseRoundTrip) {
  ResultRow r;
  r.scheme = "euler";
  r.problem = "example3";
  r.m = 50; r.M = 5; r.P = 3; r.N = 100000; r.Q = 0; r.seed = 7; r.run = 2;
  r.y0 = 0.1 + 0.2;
  r.z0 = {1.0 / 3.0, -2.5e-17, 0.0, 1e300, 0.125};
  r.wall_ms = 12.5;
  const auto line = format_row(r);
  const auto back = parse_row(line);
  EXPECT_EQ(back.y0, r.y0);
  EXPECT_EQ(back.z0, r.z0);
  EXPECT_EQ(back.seed, 7u);
  EXPECT_EQ(back.run, 2);
  EXPECT_EQ(format_row(back), line);
  EXPECT_EQ(numeric_part(line), line.substr(0, line.rfind(',')));
  EXPECT_THROW(parse_row("1,euler,x"), ConfigError);
}

TEST(Rows, Header) {
  EXPECT_EQ(csv_header(2), "schema,scheme,problem,m,M,P,N,Q,seed,run,y0,z0_1,z0_2,wall_ms");
}

TEST(Commands, RepeatRowsAreDistinctAndReproducible) {
  auto c = small("example2");
  c.repetitions = 3;
  const auto rows = cmd_repeat(c);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[0].y0, rows[1].y0);
  EXPECT_NE(rows[1].y0, rows[2].y0);
  for (const auto& row : rows) {
    const auto again = execute(config_for_row(c, row), row.run);
    EXPECT_EQ(numeric_part(format_row(again)), numeric_part(format_row(row)));
  }
}

TEST(Commands, SingleRepetitionEqualsRun) {
  auto c = small("example2");
  const auto a = cmd_run(c);
  c.repetitions = 1;
  const auto b = cmd_repeat(c);
  ASSERT_EQ(a.size(), 1u);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(numeric_part(format_row(a[0])), numeric_part(format_row(b[0])));
  c.repetitions = 2;
  EXPECT_THROW(cmd_run(c), ConfigError);
}

TEST(Commands, SingleValueSweep) {
  auto c = small("example2");
  c.sweep_axis = "P";
  c.sweep_values = {2};
  const auto s = cmd_sweep(c);
  const auto r = cmd_run(small("example2"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(numeric_part(format_row(s[0])), numeric_part(format_row(r[0])));
}

TEST(Commands, SweepRows) {
  auto c = small("example2");
  c.sweep_axis = "m";
  c.sweep_values = {2, 3};
  c.repetitions = 2;
  const auto s = cmd_sweep(c);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].m, 2);
  EXPECT_EQ(s[3].m, 3);
}

TEST(Commands, WriteRows) {
  auto c = small("example2");
  std::ostringstream os;
  write_rows(os, cmd_run(c));
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), csv_header(1));
}

TEST(Commands, Paths) {
  auto c = small("bt_squared");
  c.paths = 2;
  const auto t = cmd_paths(c);
  EXPECT_EQ(t.rows.size(), 2u * 5u);
  c.scheme = "picard";
  EXPECT_THROW(cmd_paths(c), ConfigError);
}

TEST(Entry, ExitCodes) {
  std::vector<std::string> args{"chaosbsde", "run", "--set", "P=-1"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  EXPECT_EQ(main_entry(static_cast<int>(argv.size()), argv.data()), 2);
}
