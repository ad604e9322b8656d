// End-to-end checks of the command-line binary: exit codes, output files,
// byte-level reproducibility. Paths come in via compile definitions.

#include "doctest.h"

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef CASCADIA_CLI_PATH
#define CASCADIA_CLI_PATH "cascadia"
#endif

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string command = std::string(CASCADIA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cascadia_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("cli exit codes") {
  TempDir tmp;
  const fs::path graph = tmp.path / "g.json";
  write(graph, "{\"nodes\":2,\"edges\":[[2,1]]}");

  CHECK(run("repro-example") == 0);
  CHECK(run("repro-example --corrupt-fixture") == 4);
  CHECK(run("repro-example --regime high-emergency --lambda-star 0.7") == 0);
  CHECK(run("definitely-not-a-command") == 1);
  CHECK(run("opf-solve --graph " + graph.string()) == 1);  // missing --demand
  CHECK(run("opf-solve --graph " + graph.string() + " --demand 1,0 --lambda 1.5") == 2);

  const fs::path disconnected = tmp.path / "d.json";
  write(disconnected, "{\"nodes\":4,\"edges\":[[1,2],[3,4]]}");
  CHECK(run("opf-solve --graph " + disconnected.string() + " --demand 1,0,0,0") == 2);

  const fs::path selfloop = tmp.path / "s.json";
  write(selfloop, "{\"nodes\":3,\"edges\":[[1,1]]}");
  CHECK(run("cascade --graph " + selfloop.string() + " --demand 1,0,0 --first-edge 1") == 2);
}

TEST_CASE("cascade emits one JSONL line per demand vector") {
  TempDir tmp;
  const fs::path graph = tmp.path / "g.json";
  write(graph, "{\"nodes\":2,\"edges\":[[2,1]]}");
  const fs::path demands = tmp.path / "demands.txt";
  write(demands, "1, 0.001\n2, 0.004\n");
  const fs::path out = tmp.path / "traces.jsonl";

  CHECK(run("cascade --graph " + graph.string() + " --demand @" + demands.string() +
            " --first-edge 1 --lambda 0.5 --out " + out.string()) == 0);
  const std::string text = slurp(out);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.find("\"failure_size\"") != std::string::npos);
}

TEST_CASE("tail runs are byte-identical and manifests replay") {
  TempDir tmp;
  const fs::path graph = tmp.path / "g.json";
  write(graph, "{\"nodes\":2,\"edges\":[[2,1]]}");
  const std::string base = "tail --graph " + graph.string() +
                           " --replicas 3000 --seed 11 --partition-replicas 50";

  CHECK(run(base + " --threads 2 --out " + (tmp.path / "a").string()) == 0);
  CHECK(run(base + " --threads 1 --out " + (tmp.path / "b").string()) == 0);
  for (const char* name : {"survival.csv", "summary.json", "scenarios.csv"}) {
    CHECK(slurp(tmp.path / "a" / name) == slurp(tmp.path / "b" / name));
  }
  CHECK(fs::exists(tmp.path / "a" / "manifest.json"));

  // Replaying from the manifest reproduces the outputs.
  CHECK(run("tail --graph " + graph.string() + " --config " +
            (tmp.path / "a" / "manifest.json").string() + " --out " +
            (tmp.path / "c").string()) == 0);
  CHECK(slurp(tmp.path / "a" / "summary.json") == slurp(tmp.path / "c" / "summary.json"));
}

TEST_CASE("config file values lose to explicit flags and reject unknown keys") {
  TempDir tmp;
  const fs::path graph = tmp.path / "g.json";
  write(graph, "{\"nodes\":2,\"edges\":[[2,1]]}");
  const fs::path config = tmp.path / "config.json";
  write(config, "{\"replicas\": 2000, \"seed\": 5}");

  CHECK(run("tail --graph " + graph.string() + " --config " + config.string() +
            " --replicas 100 --partition-replicas 20 --out " + (tmp.path / "o").string()) == 0);
  const std::string summary = slurp(tmp.path / "o" / "summary.json");
  CHECK(summary.find("\"replicas\": 100") != std::string::npos);  // flag wins
  CHECK(summary.find("\"seed\": 5") != std::string::npos);        // file applies

  const fs::path bad = tmp.path / "bad.json";
  write(bad, "{\"not_a_key\": 1}");
  CHECK(run("tail --graph " + graph.string() + " --config " + bad.string() + " --out " +
            (tmp.path / "x").string()) == 1);
}

TEST_CASE("conjecture writes a report") {
  TempDir tmp;
  CHECK(run("conjecture --max-nodes 3 --gammas 2 --seed 2 --out " +
            (tmp.path / "cj").string()) == 0);
  const std::string report = slurp(tmp.path / "cj" / "report.json");
  CHECK(report.find("\"counterexample_count\": 0") != std::string::npos);
  CHECK(fs::exists(tmp.path / "cj" / "manifest.json"));
}
