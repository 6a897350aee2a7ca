#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dart/checkpoint.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("dart_cli_" + std::to_string(getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run_cli(const std::string& args, const std::string& env = "") {
  const fs::path out = scratch_dir() / "stdout.txt";
  const fs::path err = scratch_dir() / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + DART_CLI_PATH +
                          " " + args + " > " + out.string() + " 2> " +
                          err.string();
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out);
  result.err = slurp(err);
  return result;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  out << text;
}

std::string pretrain_config_json(const fs::path& dir, int steps,
                                 uint64_t seed) {
  std::ostringstream ss;
  ss << "{\n"
     << "  \"schema_version\": 1,\n"
     << "  \"seed\": " << seed << ",\n"
     << "  \"model\": {\"d_model\": 32, \"n_layers\": 1, \"n_heads\": 4, "
        "\"l_max\": 32, \"reserved_tokens\": 16},\n"
     << "  \"corpus\": {\"sentences\": 400},\n"
     << "  \"train\": {\"steps\": " << steps << ", \"batch\": 8, "
        "\"lr\": 0.002},\n"
     << "  \"outputs\": {\"checkpoint\": \"" << (dir / "model.ckpt").string()
     << "\", \"metrics\": \"" << (dir / "metrics.csv").string()
     << "\", \"manifest\": \"" << (dir / "manifest.json").string() << "\"}\n"
     << "}\n";
  return ss.str();
}

// Shared pretrained checkpoint for the finetune / sweep / analyze tests.
const fs::path& shared_checkpoint() {
  static const fs::path ckpt = [] {
    const fs::path dir = scratch_dir() / "shared";
    write_file(dir / "pretrain.json", pretrain_config_json(dir, 120, 17));
    CliResult r =
        run_cli("pretrain --config " + (dir / "pretrain.json").string());
    REQUIRE(r.exit_code == 0);
    return dir / "model.ckpt";
  }();
  return ckpt;
}

const std::string kTinyTrainConfig =
    "{\"schema_version\": 1, \"epochs_joint\": 2, \"epochs_full\": 1, "
    "\"batch\": 8, \"patience\": 4}\n";

}  // namespace

TEST_CASE("pretrain with zero steps writes an untouched checkpoint") {
  const fs::path dir = scratch_dir() / "zero";
  write_file(dir / "config.json", pretrain_config_json(dir, 0, 5));
  CliResult r = run_cli("pretrain --config " + (dir / "config.json").string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "model.ckpt"));
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(slurp(dir / "metrics.csv") == "step,train_loss\n");
  CHECK_NOTHROW(dart::load_checkpoint((dir / "model.ckpt").string()));
}

TEST_CASE("missing required field exits 2 naming the field") {
  const fs::path dir = scratch_dir() / "missing";
  write_file(dir / "config.json",
             "{\"schema_version\": 1, \"seed\": 1, \"outputs\": "
             "{\"checkpoint\": \"" + (dir / "x.ckpt").string() + "\"}}\n");
  CliResult r = run_cli("pretrain --config " + (dir / "config.json").string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("train.steps") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected") {
  const fs::path dir = scratch_dir() / "unknown";
  std::string config = pretrain_config_json(dir, 0, 5);
  config.insert(config.find("\"seed\""), "\"typo_key\": 1, ");
  write_file(dir / "config.json", config);
  CliResult r = run_cli("pretrain --config " + (dir / "config.json").string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("typo_key") != std::string::npos);
}

TEST_CASE("identical config and seed give byte-identical metrics") {
  const fs::path dir1 = scratch_dir() / "det1";
  const fs::path dir2 = scratch_dir() / "det2";
  write_file(dir1 / "config.json", pretrain_config_json(dir1, 30, 9));
  write_file(dir2 / "config.json", pretrain_config_json(dir2, 30, 9));
  CHECK(run_cli("pretrain --config " + (dir1 / "config.json").string())
            .exit_code == 0);
  CHECK(run_cli("pretrain --config " + (dir2 / "config.json").string())
            .exit_code == 0);
  const std::string m1 = slurp(dir1 / "metrics.csv");
  CHECK(!m1.empty());
  CHECK(m1 == slurp(dir2 / "metrics.csv"));
  CHECK(slurp(dir1 / "model.ckpt") == slurp(dir2 / "model.ckpt"));
}

TEST_CASE("DART_SEED env var overrides the config seed") {
  const fs::path dir1 = scratch_dir() / "env1";
  const fs::path dir2 = scratch_dir() / "env2";
  // Different config seeds, same override: identical metrics.
  write_file(dir1 / "config.json", pretrain_config_json(dir1, 25, 100));
  write_file(dir2 / "config.json", pretrain_config_json(dir2, 25, 200));
  CHECK(run_cli("pretrain --config " + (dir1 / "config.json").string(),
                "DART_SEED=7")
            .exit_code == 0);
  CHECK(run_cli("pretrain --config " + (dir2 / "config.json").string(),
                "DART_SEED=7")
            .exit_code == 0);
  CHECK(slurp(dir1 / "metrics.csv") == slurp(dir2 / "metrics.csv"));
}

TEST_CASE("finetune emits per-seed rows, aggregate, history, checkpoint") {
  const fs::path ckpt = shared_checkpoint();
  const fs::path dir = scratch_dir() / "finetune";
  write_file(dir / "train.json", kTinyTrainConfig);

  CliResult r = run_cli("finetune --checkpoint " + ckpt.string() +
                        " --task easy --method dart --k 8 --seeds 2 " +
                        "--config " + (dir / "train.json").string() +
                        " --out-dir " + dir.string());
  CHECK(r.exit_code == 0);

  const std::string report = slurp(dir / "report.csv");
  CHECK(report.find("method,task,k,seed,metric,config_json") == 0);
  int rows = -1;  // header line discounted
  for (char c : report) rows += c == '\n';
  CHECK(rows == 2);
  CHECK(fs::exists(dir / "aggregate.json"));
  CHECK(fs::exists(dir / "best.ckpt"));
  CHECK(fs::exists(dir / "manifest.json"));

  // The saved best model keeps its prompt spec for later analysis.
  auto loaded = dart::load_checkpoint((dir / "best.ckpt").string());
  CHECK(loaded.prompt_spec.has_value());

  // --k 32 is also accepted.
  CliResult r32 = run_cli("finetune --checkpoint " + ckpt.string() +
                          " --task easy --method dart --k 32 --seeds 1 " +
                          "--config " + (dir / "train.json").string() +
                          " --out-dir " + (dir / "k32").string());
  CHECK(r32.exit_code == 0);
}

TEST_CASE("finetune --no-fluency zeroes the history fluency column") {
  const fs::path ckpt = shared_checkpoint();
  const fs::path dir = scratch_dir() / "no_fluency";
  write_file(dir / "train.json", kTinyTrainConfig);
  CliResult r = run_cli("finetune --checkpoint " + ckpt.string() +
                        " --task easy --method dart --k 4 --seeds 1 " +
                        "--no-fluency --config " +
                        (dir / "train.json").string() + " --out-dir " +
                        dir.string());
  CHECK(r.exit_code == 0);
  std::ifstream in(dir / "history_seed0.csv");
  std::string line;
  std::getline(in, line);  // header
  REQUIRE(line.find("fluency_loss") != std::string::npos);
  int data_rows = 0;
  while (std::getline(in, line)) {
    const size_t comma = line.rfind(',');
    CHECK(line.substr(comma + 1) == "0");
    ++data_rows;
  }
  CHECK(data_rows > 0);
}

TEST_CASE("finetune determinism: identical runs give identical reports") {
  const fs::path ckpt = shared_checkpoint();
  const fs::path dir1 = scratch_dir() / "ft_det1";
  const fs::path dir2 = scratch_dir() / "ft_det2";
  write_file(dir1 / "train.json", kTinyTrainConfig);
  write_file(dir2 / "train.json", kTinyTrainConfig);
  const std::string common = "finetune --checkpoint " + ckpt.string() +
                             " --task easy --method dart --k 4 --seeds 1 ";
  CHECK(run_cli(common + "--config " + (dir1 / "train.json").string() +
                " --out-dir " + dir1.string())
            .exit_code == 0);
  CHECK(run_cli(common + "--config " + (dir2 / "train.json").string() +
                " --out-dir " + dir2.string())
            .exit_code == 0);
  const std::string r1 = slurp(dir1 / "report.csv");
  CHECK(!r1.empty());
  CHECK(r1 == slurp(dir2 / "report.csv"));
  CHECK(slurp(dir1 / "history_seed0.csv") == slurp(dir2 / "history_seed0.csv"));
}

TEST_CASE("sweep accepts the paper-style learning-rate axis") {
  const fs::path ckpt = shared_checkpoint();
  const fs::path dir = scratch_dir() / "sweep";
  write_file(dir / "grid.json",
             "{\"schema_version\": 1, \"lr_full\": [1e-5, 5e-5, 1e-4, 2e-4], "
             "\"epochs\": [1]}\n");
  CliResult r = run_cli("sweep --checkpoint " + ckpt.string() +
                        " --task easy --grid " + (dir / "grid.json").string() +
                        " --method dart --k 2 --seeds 1 --jobs 2 --out-dir " +
                        dir.string());
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.find("seed,dev_metric,test_metric,config_json") == 0);
  CHECK(csv.find("\"{") != std::string::npos);  // per-seed best config JSON
  CHECK(fs::exists(dir / "sweep.json"));
}

TEST_CASE("empty grid axis exits 2") {
  const fs::path ckpt = shared_checkpoint();
  const fs::path dir = scratch_dir() / "sweep_empty";
  write_file(dir / "grid.json",
             "{\"schema_version\": 1, \"lr_full\": []}\n");
  CliResult r = run_cli("sweep --checkpoint " + ckpt.string() +
                        " --task easy --grid " + (dir / "grid.json").string() +
                        " --out-dir " + dir.string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("analyze: rd rows, neighbors from a finetuned checkpoint, export") {
  const fs::path ckpt = shared_checkpoint();
  const fs::path dir = scratch_dir() / "analyze";

  CliResult rd = run_cli("analyze --checkpoint " + ckpt.string() +
                         " --task easy --what rd --steps 1,2 --k 4 --seed 3" +
                         " --out-dir " + dir.string());
  CHECK(rd.exit_code == 0);
  const std::string rd_csv = slurp(dir / "rd.csv");
  CHECK(rd_csv.find("step,rd") == 0);
  int rd_rows = -1;
  for (char c : rd_csv) rd_rows += c == '\n';
  CHECK(rd_rows == 2);

  // Capture steps far beyond the training length: empty export, exit 0.
  CliResult exp = run_cli("analyze --checkpoint " + ckpt.string() +
                          " --task easy --what export --steps 99999 --k 2" +
                          " --seed 3 --out-dir " + (dir / "empty").string());
  CHECK(exp.exit_code == 0);
  CHECK(slurp(dir / "empty" / "states.csv").rfind("step,class", 0) == 0);

  // neighbors requires a prompt spec: the pretrained checkpoint lacks one.
  CliResult bad = run_cli("analyze --checkpoint " + ckpt.string() +
                          " --what neighbors --out-dir " + dir.string());
  CHECK(bad.exit_code == 4);

  const fs::path ft = scratch_dir() / "analyze_ft";
  write_file(ft / "train.json", kTinyTrainConfig);
  CHECK(run_cli("finetune --checkpoint " + ckpt.string() +
                " --task easy --method dart --k 4 --seeds 1 --config " +
                (ft / "train.json").string() + " --out-dir " + ft.string())
            .exit_code == 0);
  CliResult nb = run_cli("analyze --checkpoint " +
                         (ft / "best.ckpt").string() +
                         " --what neighbors --top-k 3 --out-dir " +
                         dir.string());
  CHECK(nb.exit_code == 0);
  const std::string neighbors = slurp(dir / "neighbors.json");
  CHECK(neighbors.find("\"slot_id\"") != std::string::npos);
  CHECK(neighbors.find("\"similarity\"") != std::string::npos);
}

TEST_CASE("unknown analysis kind and bad checkpoint map to stable exit codes") {
  const fs::path ckpt = shared_checkpoint();
  CliResult r = run_cli("analyze --checkpoint " + ckpt.string() +
                        " --what nonsense --out-dir " +
                        (scratch_dir() / "x").string());
  CHECK(r.exit_code == 2);

  const fs::path garbage = scratch_dir() / "garbage.ckpt";
  write_file(garbage, "definitely not a checkpoint");
  CliResult g = run_cli("finetune --checkpoint " + garbage.string() +
                        " --task easy --out-dir " +
                        (scratch_dir() / "y").string());
  CHECK(g.exit_code == 4);
}
