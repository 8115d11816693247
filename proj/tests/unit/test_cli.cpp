#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "denovo_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(DENOVO_CLI_PATH) + " " + args + " >" + (kWork / "out.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("end to end through the command line") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  const std::string dir = kWork.string();
  write(kWork / "cfg.json",
        R"({"synth": {"count": 120}, "model": {"model_dim": 16, "heads": 2, "encoder_layers": 1,
            "ar_layers": 1, "ds_dim": 8, "dm_layers": 1}, "train": {"epochs": 1}})");
  const std::string cfg = "--config " + dir + "/cfg.json";

  REQUIRE(run("synth " + cfg + " --out " + dir + "/a") == 0);
  REQUIRE(run("synth " + cfg + " --out " + dir + "/b") == 0);
  for (const char* f : {"train.mgf", "val.mgf", "test.mgf", "manifest.json"})
    CHECK(slurp(kWork / "a" / f) == slurp(kWork / "b" / f));
  CHECK(fs::file_size(kWork / "a" / "train.mgf") > 5 * fs::file_size(kWork / "a" / "test.mgf"));

  REQUIRE(run("train " + cfg + " --train " + dir + "/a/train.mgf --val " + dir + "/a/val.mgf --checkpoint " + dir +
              "/ar.ckpt") == 0);
  CHECK(fs::exists(kWork / "ar.ckpt.history.jsonl"));
  REQUIRE(run("predict " + cfg + " --checkpoint " + dir + "/ar.ckpt --mgf " + dir + "/a/test.mgf --out " + dir +
              "/p.tsv --decoder knapsack-beam --jobs 2") == 0);
  CHECK(slurp(kWork / "out.txt").find("s per spectrum") != std::string::npos);
  REQUIRE(run("evaluate " + cfg + " --predictions " + dir + "/p.tsv --mgf " + dir + "/a/test.mgf --out " + dir +
              "/r.tsv") == 0);
  REQUIRE(run("compare " + cfg + " " + dir + "/r.tsv " + dir + "/r.tsv") == 0);
  const std::string cmp = slurp(kWork / "out.txt");
  CHECK(cmp.find("undefined") != std::string::npos);
  CHECK(cmp.find("+0.000 | +0.000 | +0.000 | +0.000") != std::string::npos);

  // Categorized failures.
  CHECK(run("predict " + cfg + " --checkpoint " + dir + "/ar.ckpt --mgf " + dir + "/a/test.mgf --out " + dir +
            "/p2.tsv --decoder diffusion") == 14);
  write(kWork / "bad.json", R"({"synth": {"min_length": 4, "max_length": 2}})");
  CHECK(run("synth --config " + dir + "/bad.json --out " + dir + "/c") == 14);
  CHECK_FALSE(fs::exists(kWork / "c" / "train.mgf"));
  write(kWork / "broken.mgf", "BEGIN IONS\nTITLE=x\nCHARGE=2\n100.0 1.0\nEND IONS\n");
  CHECK(run("evaluate " + cfg + " --predictions " + dir + "/p.tsv --mgf " + dir + "/broken.mgf --out " + dir +
            "/r2.tsv") == 12);
  write(kWork / "other.tsv", slurp(kWork / "r.tsv").substr(0, slurp(kWork / "r.tsv").find("#summary")));
  {
    // Drop one record so the id sets differ.
    std::string text = slurp(kWork / "other.tsv");
    const auto last = text.rfind('\n', text.size() - 2);
    write(kWork / "other.tsv", text.substr(0, last + 1));
  }
  CHECK(run("compare " + cfg + " " + dir + "/r.tsv " + dir + "/other.tsv") == 11);
  CHECK(run("frobnicate") != 0);
  fs::remove_all(kWork);
}
