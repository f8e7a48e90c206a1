#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "skeldiff_cli/cli.hpp"

namespace fs = std::filesystem;
using skeldiff::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("skeldiff_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path synth_bundle(const std::string& name, std::vector<std::string> extra = {}) {
  const auto dir = fresh_dir(name);
  std::vector<std::string> args{"synth", "--out", dir.string(), "--seed", "5",
                                "--n-videos", "6", "--train-videos", "3",
                                "--frames-per-video", "96"};
  args.insert(args.end(), extra.begin(), extra.end());
  const auto r = invoke(args);
  REQUIRE(r.code == 0);
  return dir;
}

}  // namespace

TEST_CASE("synth writes a loadable bundle") {
  const auto dir = synth_bundle("synth", {"--oracle", "perfect"});
  for (const char* f : {"tracklets.tsv", "labels.csv", "manifest.json", "synth.json", "scores.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto r = invoke({"validate", "--data", dir.string(), "--out", dir.string()});
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "validation.json"));
  CHECK(doc["fatal"].empty());
}

TEST_CASE("sdom writes delta_n, delta_a and sdom") {
  const auto dir = synth_bundle("sdom");
  const auto r = invoke({"sdom", "--data", dir.string(), "--out", dir.string(), "--feature", "traj"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "sdom_traj.json"));
  for (const char* key : {"delta_n", "delta_a", "sdom"}) CHECK(doc.contains(key));
  CHECK(doc["sdom"].get<double>() ==
        doctest::Approx(doc["delta_a"].get<double>() - doc["delta_n"].get<double>()));
}

TEST_CASE("window file feeds sdom and dist-hist") {
  const auto dir = synth_bundle("windows");
  REQUIRE(invoke({"windows", "--data", dir.string(), "--out", dir.string(), "--feature", "pose"})
              .code == 0);
  const auto windows = (dir / "windows_pose.tsv").string();
  const auto out = fresh_dir("windows_out");
  CHECK(invoke({"sdom", "--windows", windows, "--out", out.string()}).code == 0);
  CHECK(invoke({"dist-hist", "--windows", windows, "--out", out.string(), "--binning", "count:8"})
            .code == 0);
  for (const char* f : {"sdom_pose.json", "dist_pose.csv", "hist_pose.csv", "box_pose.json"}) {
    CHECK(fs::exists(out / f));
  }
  // the window file carries its own feature type
  const auto r = invoke({"sdom", "--windows", windows, "--feature", "traj", "--out", out.string()});
  CHECK(r.code == 1);
}

TEST_CASE("perfect oracle scores give auc_roc 1") {
  const auto dir = synth_bundle("metrics", {"--oracle", "perfect"});
  const auto r = invoke({"metrics", "--data", dir.string(), "--scores",
                         (dir / "scores.csv").string(), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "metrics.json"));
  CHECK(doc["auc_roc"].get<double>() == 1.0);
  CHECK(doc["eer"].get<double>() == 0.0);
  CHECK(fs::exists(dir / "roc.csv"));
  CHECK(fs::exists(dir / "pr.csv"));

  // normality polarity flips the ranking
  const auto flipped = fresh_dir("metrics_flipped");
  REQUIRE(invoke({"metrics", "--data", dir.string(), "--scores", (dir / "scores.csv").string(),
                  "--polarity", "normality", "--out", flipped.string()})
              .code == 0);
  CHECK(nlohmann::json::parse(slurp(flipped / "metrics.json"))["auc_roc"].get<double>() == 0.0);
}

TEST_CASE("report passes its schema check") {
  const auto dir = synth_bundle("report");
  const auto r = invoke({"report", "--data", dir.string(), "--out", dir.string(), "--features",
                         "pose,traj,social"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(doc["features"].size() == 3);
  CHECK(doc["ranking"].size() == 3);
}

TEST_CASE("usage errors exit 1 with JSON on stderr") {
  auto r = invoke({});
  CHECK(r.code == 1);
  CHECK(nlohmann::json::parse(r.err)["error"] == "usage");

  r = invoke({"sdom", "--feature", "hands"});
  CHECK(r.code == 1);

  const auto dir = synth_bundle("conflict");
  r = invoke({"dist-hist", "--data", dir.string(), "--feature", "pose", "--embeddings",
              (dir / "labels.csv").string()});
  CHECK(r.code == 1);
  CHECK(nlohmann::json::parse(r.err)["error"] == "usage");

  r = invoke({"sdom", "--data", dir.string(), "--t", "0"});
  CHECK(r.code == 1);

  r = invoke({"synth", "--out", dir.string(), "--anomaly", "teleport:3"});
  CHECK(r.code == 1);

  r = invoke({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("metrics") != std::string::npos);
}

TEST_CASE("bad input exits 2 and leaves outputs untouched") {
  const auto dir = synth_bundle("bad_input");
  const auto out = fresh_dir("bad_input_out");
  {
    std::ofstream f(dir / "tracklets.tsv", std::ios::app);
    f << "synth_0000\t1\t0\tnot-a-number\n";
  }
  const auto r = invoke({"report", "--data", dir.string(), "--out", out.string()});
  CHECK(r.code == 2);
  const auto err = nlohmann::json::parse(r.err);
  CHECK(err["error"] == "parse");
  CHECK(err.contains("line"));
  CHECK(fs::is_empty(out));
}

TEST_CASE("capacity overflow in social windows is a bad-input error") {
  const auto dir = synth_bundle("crowd", {"--persons", "4"});
  const auto out = fresh_dir("crowd_out");
  auto r = invoke({"windows", "--data", dir.string(), "--out", out.string(), "--feature", "social",
                   "--nodes", "3"});
  CHECK(r.code == 2);
  CHECK(fs::is_empty(out));
  r = invoke({"windows", "--data", dir.string(), "--out", out.string(), "--feature", "social",
              "--nodes", "3", "--truncate-social"});
  CHECK(r.code == 0);
}

TEST_CASE("repeated runs give identical bytes") {
  const auto a = synth_bundle("repeat_a", {"--oracle", "random"});
  const auto b = synth_bundle("repeat_b", {"--oracle", "random"});
  for (const auto& dir : {a, b}) {
    REQUIRE(invoke({"report", "--data", dir.string(), "--out", dir.string()}).code == 0);
  }
  for (const char* f : {"tracklets.tsv", "labels.csv", "manifest.json", "scores.csv", "report.json"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

#ifdef SKELDIFF_CLI_PATH
TEST_CASE("installed binary runs") {
  const auto dir = fresh_dir("binary");
  const std::string cmd = std::string(SKELDIFF_CLI_PATH) + " synth --out " + dir.string() +
                          " --n-videos 2 --train-videos 1 --frames-per-video 48 > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "manifest.json"));
}
#endif
