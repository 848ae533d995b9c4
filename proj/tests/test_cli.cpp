#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run sh(const std::string& args) {
  const std::string cmd = std::string(DISTB_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  while (auto n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int st = pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const char* name) {
  auto d = fs::temp_directory_path() / "distb_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d.parent_path());
  return d;
}

// Short config derived from p1.
fs::path short_config(const fs::path& dir) {
  fs::create_directories(dir);
  const auto f = dir / "short.json";
  std::ofstream(f) << R"({"schema":1,"preset":"p1","seed":7,"duration_s":12})";
  return f;
}

}  // namespace

TEST(Cli, RunTwiceIsByteIdentical) {
  const auto base = scratch("twice");
  const auto cfg = short_config(base);
  ASSERT_EQ(sh("run " + cfg.string() + " --seed 7 --out " + (base / "a").string()).code, 0);
  ASSERT_EQ(sh("run " + cfg.string() + " --seed 7 --out " + (base / "b").string()).code, 0);
  ASSERT_EQ(sh("run " + cfg.string() + " --seed 8 --out " + (base / "c").string()).code, 0);
  int files = 0, differ = 0;
  for (const auto& f : fs::directory_iterator(base / "a")) {
    ++files;
    EXPECT_EQ(slurp(f.path()), slurp(base / "b" / f.path().filename())) << f.path().filename();
    differ += slurp(f.path()) != slurp(base / "c" / f.path().filename());
  }
  EXPECT_GE(files, 8);
  EXPECT_GT(differ, 0);
}

TEST(Cli, OpenflowOnlyModeKeepsGenesisChain) {
  const auto base = scratch("ofonly");
  const auto cfg = short_config(base);
  ASSERT_EQ(sh("run " + cfg.string() + " --mode openflow-only --out " + (base / "o").string()).code, 0);
  const auto summary = slurp(base / "o" / "summary.txt");
  EXPECT_NE(summary.find("control_chain_length=1\n"), std::string::npos);
  EXPECT_NE(summary.find("data_chain_length=1\n"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(sh("run /nonexistent/config.json").code, 2);
  EXPECT_EQ(sh("frobnicate").code, 2);
  const auto base = scratch("codes");
  fs::create_directories(base);
  std::ofstream(base / "bad.json") << R"({"schema":1,"duration_s":0})";
  const auto r = sh("run " + (base / "bad.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("duration_s"), std::string::npos);
  EXPECT_EQ(sh("validate /nonexistent/chain.bin").code, 2);
}

TEST(Cli, ValidateFreshAndTruncated) {
  const auto base = scratch("validate");
  const auto cfg = short_config(base);
  ASSERT_EQ(sh("run " + cfg.string() + " --out " + (base / "r").string()).code, 0);
  const auto chain = base / "r" / "data_chain.bin";
  auto ok = sh("validate " + chain.string());
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("valid"), std::string::npos);

  const auto cut = base / "cut.bin";
  fs::copy_file(chain, cut);
  fs::resize_file(cut, fs::file_size(cut) - 5);
  const auto bad = sh("validate " + cut.string());
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("block 2"), std::string::npos) << bad.out;
}

TEST(Cli, ReplayTrace) {
  const auto base = scratch("replay");
  const auto cfg = short_config(base);
  ASSERT_EQ(sh("run " + cfg.string() + " --out " + (base / "r").string()).code, 0);
  const auto r = sh("replay " + (base / "r" / "trace.csv").string() + " --duration 12");
  EXPECT_EQ(r.code, 0) << r.out;
  const auto summary = slurp(base / "r" / "summary.txt");
  const auto key = std::string("throughput_bps=");
  const auto pos = summary.find(key);
  ASSERT_NE(pos, std::string::npos);
  const auto line = summary.substr(pos, summary.find('\n', pos) - pos);
  EXPECT_NE(r.out.find(line), std::string::npos) << r.out;
}
