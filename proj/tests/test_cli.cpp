#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "epifilm/experiment.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::path(EPIFILM_TEST_WORK_DIR) / "cli";
const fs::path kConfigs = fs::path(EPIFILM_SOURCE_DIR) / "configs";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << text;
  return p;
}

struct Result {
  int status;
  std::string err;
};

/// Runs the CLI with `args`, capturing stderr.
Result cli(const std::string& args, const std::string& tag) {
  fs::create_directories(kWork);
  const fs::path err = kWork / (tag + ".stderr");
  const std::string cmd =
      std::string("\"") + EPIFILM_CLI_PATH + "\" " + args + " >/dev/null 2>\"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

std::string out_dir(const std::string& tag) {
  const fs::path d = kWork / tag;
  fs::remove_all(d);
  return d.string();
}

}  // namespace

TEST_CASE("solve writes artifacts whose hashes match the manifest") {
  const auto dir = out_dir("solve");
  const auto r = cli("solve --config " + (kConfigs / "solve_flat.cfg").string() + " --out " + dir +
                         " --refine 8",
                     "solve");
  REQUIRE(r.status == 0);
  const auto energy = slurp(fs::path(dir) / "energy.csv");
  CHECK(energy.find("total,2.33333333333") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(fs::path(dir) / "manifest.json"));
  CHECK(manifest["mode"] == "solve");
  CHECK(manifest["status"] == 0);
  CHECK(manifest["parameters"]["mesh.refine"] == "8");
  REQUIRE(manifest["files"].size() == 5);
  for (const auto& f : manifest["files"]) {
    const auto bytes = slurp(fs::path(dir) / f["name"].get<std::string>());
    CHECK(f["bytes"] == bytes.size());
    CHECK(f["sha256"] == epifilm::sha256_hex(bytes));
  }
}

TEST_CASE("configuration errors exit with status 2") {
  const auto missing = cli("solve --config " + (kConfigs / "missing_e0.cfg").string() + " --out " +
                               out_dir("missing"),
                           "missing");
  CHECK(missing.status == 2);
  CHECK(missing.err.find("model.e0: required field missing") != std::string::npos);

  const auto unknown = write_config("unknown.cfg", "model.e0 = 1\nmodel.gama = 1\n");
  const auto u = cli("solve --config " + unknown.string() + " --out " + out_dir("unknown"), "unknown");
  CHECK(u.status == 2);
  CHECK(u.err.find("unknown.cfg:2:") != std::string::npos);

  const auto malformed = write_config("malformed.cfg", "model.e0 1\n");
  CHECK(cli("solve --config " + malformed.string() + " --out " + out_dir("malformed"), "malformed").status ==
        2);
  CHECK(cli("solve --config /nonexistent/file.cfg", "nofile").status == 2);
  CHECK(cli("fly --config " + unknown.string(), "badmode").status == 2);
  CHECK(cli("solve", "noconfig").status == 2);
  CHECK(cli("solve --config " + unknown.string() + " --refine 1", "badrefine").status == 2);
}

TEST_CASE("failed oracle checks exit with status 3") {
  const auto cfg = write_config("coarse_validate.cfg", "model.e0 = 1\nvalidate.tiny = false\n");
  const auto dir = out_dir("validate");
  const auto r = cli("validate --config " + cfg.string() + " --out " + dir + " --refine 4", "validate");
  CHECK(r.status == 3);
  const auto manifest = nlohmann::json::parse(slurp(fs::path(dir) / "manifest.json"));
  CHECK(manifest["status"] == 3);
  CHECK(slurp(fs::path(dir) / "validation.csv").find(",0\n") != std::string::npos);
}

TEST_CASE("corner mode succeeds and lists roots") {
  const auto dir = out_dir("corner");
  const auto r = cli("corner --config " + (kConfigs / "corner.cfg").string() + " --out " + dir, "corner");
  CHECK(r.status == 0);
  CHECK(fs::exists(fs::path(dir) / "corner_roots.csv"));
  CHECK(fs::exists(fs::path(dir) / "corner_counts.csv"));
}

TEST_CASE("minimize reruns are byte identical") {
  const auto cfg = (kConfigs / "minimize.cfg").string();
  const auto a = out_dir("min_a"), b = out_dir("min_b");
  REQUIRE(cli("minimize --config " + cfg + " --out " + a + " --refine 8", "min_a").status == 0);
  REQUIRE(cli("minimize --config " + cfg + " --out " + b + " --refine 8", "min_b").status == 0);
  for (const char* f : {"trace.csv", "energy.csv", "final_profile.json", "el_residual.csv"}) {
    INFO(f);
    const auto x = slurp(fs::path(a) / f);
    CHECK_FALSE(x.empty());
    CHECK(x == slurp(fs::path(b) / f));
  }
}
