#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;  // stdout and stderr merged
};

RunResult run(const std::string& cmd) {
  RunResult r;
  FILE* p = popen((cmd + " 2>&1").c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string cli() {
  const char* path = std::getenv("MESHSMITH_CLI");
  REQUIRE_MESSAGE(path != nullptr, "MESHSMITH_CLI must point at the binary");
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double metric_line(const std::string& text, const std::string& key) {
  const std::string needle = key + ",";
  const size_t at = text.find(needle);
  REQUIRE(at != std::string::npos);
  return std::strtod(text.c_str() + at + needle.size(), nullptr);
}

const fs::path kDir = fs::temp_directory_path() / "meshsmith_cli_test";

}  // namespace

TEST_CASE("usage errors exit 1, help exits 0") {
  CHECK(run(cli()).code == 1);
  CHECK(run(cli() + " --help").code == 0);
  CHECK(run(cli() + " frobnicate").code == 1);
  CHECK(run(cli() + " smooth --mesh a --out b").code == 1);  // missing --algo
  CHECK(run(cli() + " bench --mesh a.m2d --algo gmsnet").code == 1);
  CHECK(run(cli() + " smooth --mesh a.m2d --algo nn --out b.m2d").code == 1);
  CHECK(run(cli() + " smooth --mesh a.m2d --algo nosuch --out b.m2d").code == 1);
}

TEST_CASE("data errors exit 2") {
  CHECK(run(cli() + " report --mesh /no/such/mesh.m2d").code == 2);
  CHECK(run(cli() + " smooth --mesh /no/such.m2d --algo laplacian --out /tmp/x.m2d").code == 2);
  CHECK(run(cli() + " train --dataset /no/such.json --out /tmp/x.json").code == 2);
}

TEST_CASE("generate, smooth, report, bench, render round trip") {
  fs::remove_all(kDir);
  fs::create_directories(kDir);
  const std::string ds = (kDir / "ds").string();

  const RunResult gen = run(cli() + " generate --out " + ds +
                            " --count 5 --nodes-min 40 --nodes-max 90 "
                            "--side-min 1 --side-max 3 --seed 3");
  CHECK(gen.code == 0);
  CHECK(fs::exists(ds + "/dataset.json"));
  CHECK(fs::exists(ds + "/train_000.m2d"));
  CHECK(fs::exists(ds + "/val_000.m2d"));
  CHECK(fs::exists(ds + "/test_000.m2d"));

  const std::string mesh = ds + "/train_000.m2d";
  const RunResult before = run(cli() + " report --mesh " + mesh);
  CHECK(before.code == 0);

  const std::string smoothed = (kDir / "smoothed.m2d").string();
  CHECK(run(cli() + " smooth --mesh " + mesh + " --algo smart-laplacian --out " +
            smoothed).code == 0);
  const RunResult after = run(cli() + " report --mesh " + smoothed);
  CHECK(after.code == 0);
  CHECK(metric_line(after.out, "weighted_quality") >
        metric_line(before.out, "weighted_quality"));

  const RunResult bench = run(cli() + " bench --mesh " + mesh +
                              " --algo laplacian --csv " +
                              (kDir / "bench.csv").string());
  CHECK(bench.code == 0);
  CHECK(bench.out.find("mesh,algo,min_angle_min") != std::string::npos);
  CHECK(bench.out.find("laplacian") != std::string::npos);
  CHECK(fs::exists(kDir / "bench.csv"));

  const std::string svg = (kDir / "mesh.svg").string();
  CHECK(run(cli() + " render --mesh " + mesh + " --out " + svg).code == 0);
  CHECK(slurp(svg).substr(0, 5) == "<?xml");
}

TEST_CASE("train writes a loadable checkpoint and a trace") {
  // depends on the dataset from the round-trip case
  const std::string ds = (kDir / "ds/dataset.json").string();
  REQUIRE(fs::exists(ds));
  const std::string ck = (kDir / "gm.json").string();
  const RunResult tr = run(cli() + " train --dataset " + ds +
                           " --epochs 3 --hidden 8 --batch 6 --seed 2 --out " + ck);
  CHECK(tr.code == 0);
  CHECK(fs::exists(ck));
  const std::string trace = slurp(kDir / "gm.json.trace.csv");
  CHECK(trace.substr(0, 40) == "epoch,train_loss,val_loss,lr,truncations");

  // the checkpoint drives the gmsnet smoother
  const std::string out = (kDir / "gm_smoothed.m2d").string();
  CHECK(run(cli() + " smooth --mesh " + (kDir / "ds/train_000.m2d").string() +
            " --algo gmsnet --model " + ck + " --out " + out).code == 0);
  CHECK(fs::exists(out));
}

TEST_CASE("MESHSMITH_SEED stands in for --seed") {
  const std::string a = (kDir / "env_a").string();
  const std::string b = (kDir / "env_b").string();
  const std::string flags = " --count 3 --nodes-min 30 --nodes-max 50";
  CHECK(run("MESHSMITH_SEED=99 " + cli() + " generate --out " + a + flags).code == 0);
  CHECK(run(cli() + " generate --out " + b + flags + " --seed 99").code == 0);
  CHECK(slurp(a + "/train_000.m2d") == slurp(b + "/train_000.m2d"));
  CHECK(slurp(a + "/dataset.json") == slurp(b + "/dataset.json"));
}
