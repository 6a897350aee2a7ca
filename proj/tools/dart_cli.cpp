// dart: pre-train the toy MLM, run DART / baseline few-shot protocols,
// sweep hyperparameters, and export the analysis artifacts.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dart/analysis.hpp"
#include "dart/checkpoint.hpp"
#include "dart/corpus.hpp"
#include "dart/errors.hpp"
#include "dart/fewshot.hpp"
#include "dart/model.hpp"
#include "dart/objectives.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitArtifact = 4;
constexpr const char* kCodeVersion = "dart-0.1.0";

// ---------------------------------------------------------------------------
// strict config parsing
// ---------------------------------------------------------------------------

// Unknown keys are rejected (fail-fast over silent drift). `schema` maps each
// allowed key to either null (leaf) or a nested object of allowed keys.
void check_unknown_keys(const json& config, const json& schema,
                        const std::string& prefix) {
  for (auto it = config.begin(); it != config.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!schema.contains(it.key())) {
      throw dart::ConfigError("unknown config key: " + path);
    }
    if (schema.at(it.key()).is_object() && it.value().is_object()) {
      check_unknown_keys(it.value(), schema.at(it.key()), path);
    }
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dart::ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw dart::ConfigError("malformed JSON in " + path + ": " + e.what());
  }
}

template <typename T>
T require_field(const json& j, const std::string& path) {
  const json* cur = &j;
  std::istringstream ss(path);
  std::string key;
  while (std::getline(ss, key, '.')) {
    if (!cur->contains(key)) {
      throw dart::ConfigError("missing required config field: " + path);
    }
    cur = &cur->at(key);
  }
  try {
    return cur->get<T>();
  } catch (const json::exception&) {
    throw dart::ConfigError("config field has wrong type: " + path);
  }
}

template <typename T>
T field_or(const json& j, const std::string& path, T fallback) {
  const json* cur = &j;
  std::istringstream ss(path);
  std::string key;
  while (std::getline(ss, key, '.')) {
    if (!cur->contains(key)) return fallback;
    cur = &cur->at(key);
  }
  try {
    return cur->get<T>();
  } catch (const json::exception&) {
    throw dart::ConfigError("config field has wrong type: " + path);
  }
}

void require_schema_version(const json& config) {
  if (require_field<int>(config, "schema_version") != 1) {
    throw dart::ConfigError("unsupported schema_version (expected 1)");
  }
}

std::optional<uint64_t> env_seed_override() {
  const char* v = std::getenv("DART_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    return std::stoull(v);
  } catch (...) {
    throw dart::ConfigError("DART_SEED is not an integer");
  }
}

// ---------------------------------------------------------------------------
// files
// ---------------------------------------------------------------------------

void write_text_file(const std::string& path, const std::string& text) {
  if (fs::path(path).has_parent_path()) {
    fs::create_directories(fs::path(path).parent_path());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw dart::IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw dart::IoError("write failed: " + path);
}

// Written before training starts so a crashed run still leaves its recipe.
void write_run_manifest(const std::string& path, const json& config,
                        uint64_t seed, const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs) {
  json manifest;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(
                    dart::fnv1a64(config.dump())));
  manifest["config_hash"] = hash;
  manifest["seed"] = seed;
  manifest["code_version"] = kCodeVersion;
  manifest["inputs"] = inputs;
  manifest["outputs"] = outputs;
  manifest["created_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  write_text_file(path, manifest.dump(2) + "\n");
}

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// pretrain
// ---------------------------------------------------------------------------

int cmd_pretrain(const std::string& config_path) {
  const json config = load_json_file(config_path);
  const json schema = {
      {"schema_version", nullptr},
      {"seed", nullptr},
      {"model",
       {{"d_model", nullptr},
        {"n_layers", nullptr},
        {"n_heads", nullptr},
        {"l_max", nullptr},
        {"init_std", nullptr},
        {"reserved_tokens", nullptr}}},
      {"corpus", {{"sentences", nullptr}}},
      {"train",
       {{"steps", nullptr},
        {"batch", nullptr},
        {"lr", nullptr},
        {"mask_prob", nullptr},
        {"weight_decay", nullptr},
        {"lr_schedule", nullptr}}},
      {"outputs",
       {{"checkpoint", nullptr}, {"metrics", nullptr}, {"manifest", nullptr}}},
  };
  check_unknown_keys(config, schema, "");
  require_schema_version(config);

  uint64_t seed = require_field<uint64_t>(config, "seed");
  if (auto env = env_seed_override()) seed = *env;

  dart::ModelConfig model_config;
  model_config.d_model = field_or(config, "model.d_model", 64);
  model_config.n_layers = field_or(config, "model.n_layers", 2);
  model_config.n_heads = field_or(config, "model.n_heads", 4);
  model_config.l_max = field_or(config, "model.l_max", 64);
  model_config.init_std = field_or(config, "model.init_std", 0.1f);
  const int reserved = field_or(config, "model.reserved_tokens", 16);

  dart::PretrainConfig pretrain_config;
  pretrain_config.steps = require_field<int>(config, "train.steps");
  pretrain_config.batch = field_or(config, "train.batch", 16);
  pretrain_config.lr = field_or(config, "train.lr", 1e-3f);
  pretrain_config.mask_prob = field_or(config, "train.mask_prob", 0.15f);
  pretrain_config.weight_decay = field_or(config, "train.weight_decay", 0.01f);
  pretrain_config.lr_schedule = field_or(config, "train.lr_schedule", true);
  pretrain_config.seed = seed;

  const int corpus_sentences = field_or(config, "corpus.sentences", 4000);
  const std::string ckpt_path =
      require_field<std::string>(config, "outputs.checkpoint");
  const std::string metrics_path =
      field_or<std::string>(config, "outputs.metrics", ckpt_path + ".metrics.csv");
  const std::string manifest_path = field_or<std::string>(
      config, "outputs.manifest", ckpt_path + ".manifest.json");

  write_run_manifest(manifest_path, config, seed, {config_path},
                     {ckpt_path, metrics_path});

  dart::Vocabulary vocab = dart::build_sentiment_vocab(reserved);
  dart::Rng init_rng = dart::derive_stream(seed, "model.init");
  dart::ToyMlmModel model =
      dart::ToyMlmModel::init(model_config, std::move(vocab), init_rng);

  dart::Rng corpus_rng = dart::derive_stream(seed, "corpus");
  dart::Corpus corpus =
      dart::generate_sentiment_corpus(model.vocab, corpus_sentences, corpus_rng);

  dart::PretrainHistory history = dart::pretrain(model, corpus, pretrain_config);

  std::ostringstream metrics;
  metrics << "step,train_loss\n";
  for (size_t i = 0; i < history.step_loss.size(); ++i) {
    metrics << i << "," << format_float(double(history.step_loss[i])) << "\n";
  }
  write_text_file(metrics_path, metrics.str());
  if (fs::path(ckpt_path).has_parent_path()) {
    fs::create_directories(fs::path(ckpt_path).parent_path());
  }
  dart::save_checkpoint(ckpt_path, model);

  std::cout << "pretrained " << pretrain_config.steps << " steps, held-out"
            << " loss " << format_float(double(history.heldout_loss_initial))
            << " -> " << format_float(double(history.heldout_loss_final))
            << "\ncheckpoint: " << ckpt_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// shared finetune/sweep plumbing
// ---------------------------------------------------------------------------

dart::TrainConfig train_config_from_json(const json& config) {
  dart::TrainConfig tc;
  tc.lambda = field_or(config, "lambda", 1.0f);
  tc.epochs_joint = field_or(config, "epochs_joint", 16);
  tc.epochs_full = field_or(config, "epochs_full", 8);
  tc.batch = field_or(config, "batch", 8);
  tc.lr_prompt = field_or(config, "lr_prompt", 3e-2f);
  tc.lr_full = field_or(config, "lr_full", 1e-3f);
  tc.weight_decay = field_or(config, "weight_decay", 0.01f);
  tc.patience = field_or(config, "patience", 6);
  tc.grad_accum = field_or(config, "grad_accum", 1);
  return tc;
}

const json kTrainSchema = {
    {"schema_version", nullptr}, {"lambda", nullptr},
    {"epochs_joint", nullptr},   {"epochs_full", nullptr},
    {"batch", nullptr},          {"lr_prompt", nullptr},
    {"lr_full", nullptr},        {"weight_decay", nullptr},
    {"patience", nullptr},       {"grad_accum", nullptr},
};

std::vector<uint64_t> seed_list(uint64_t base, int count) {
  std::vector<uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(base + uint64_t(i));
  return seeds;
}

dart::GridSpace::Point default_point(const dart::TrainConfig& tc) {
  return dart::GridSpace::Point{tc.lr_full, tc.lr_prompt, tc.weight_decay,
                                tc.lambda,  tc.batch,     0};
}

// ---------------------------------------------------------------------------
// finetune
// ---------------------------------------------------------------------------

int cmd_finetune(const std::string& ckpt_path, const std::string& task_name,
                 const std::string& method_name, int k, int n_seeds,
                 uint64_t seed_base, bool no_fluency, bool fixed_template,
                 bool fixed_label, const std::string& config_path,
                 const std::string& out_dir) {
  json config = json::object();
  if (!config_path.empty()) {
    config = load_json_file(config_path);
    check_unknown_keys(config, kTrainSchema, "");
    require_schema_version(config);
  }
  if (auto env = env_seed_override()) seed_base = *env;

  dart::LoadedCheckpoint loaded = dart::load_checkpoint(ckpt_path);
  dart::Task task = dart::build_task(loaded.model.vocab, task_name,
                                     /*seed=*/7);

  dart::MethodSpec method;
  if (method_name == "dart") {
    method.kind = dart::MethodKind::Dart;
  } else if (method_name == "head") {
    method.kind = dart::MethodKind::HeadFt;
  } else if (method_name == "fixed") {
    method.kind = dart::MethodKind::FixedPrompt;
  } else {
    throw dart::ConfigError("unknown method: " + method_name +
                            " (expected dart, head, or fixed)");
  }
  method.fluency = !no_fluency;
  method.diff_template = !fixed_template;
  method.diff_label = !fixed_label;

  dart::ProtocolConfig protocol;
  protocol.train = train_config_from_json(config);
  if (no_fluency) protocol.train.fluency = false;

  dart::GridSpace grid;  // singleton grid: the configured defaults
  const auto point = default_point(protocol.train);
  grid.lr_full = {point.lr_full};
  grid.lr_prompt = {point.lr_prompt};
  grid.weight_decay = {point.weight_decay};
  grid.lambda = {point.lambda};
  grid.batch = {point.batch};
  grid.epochs = {0};

  const std::vector<uint64_t> seeds = seed_list(seed_base, n_seeds);
  const std::string report_path = out_dir + "/report.csv";
  const std::string aggregate_path = out_dir + "/aggregate.json";
  const std::string best_ckpt_path = out_dir + "/best.ckpt";
  const std::string history_path = out_dir + "/history_seed0.csv";
  write_run_manifest(out_dir + "/manifest.json", config, seed_base,
                     {ckpt_path},
                     {report_path, aggregate_path, best_ckpt_path});

  dart::RunReport report = dart::run_protocol(loaded.model, task, k, seeds,
                                              method, grid, protocol);

  // Best seed's model is re-trained for the saved checkpoint; histories are
  // deterministic so this reproduces the protocol run exactly.
  size_t best_seed_idx = 0;
  for (size_t i = 1; i < report.per_seed.size(); ++i) {
    if (report.per_seed[i].test_metric >
        report.per_seed[best_seed_idx].test_metric) {
      best_seed_idx = i;
    }
  }
  dart::EpisodeDataset episode =
      dart::sample_k_shot(task, k, report.per_seed[best_seed_idx].seed);
  dart::ProtocolConfig best_config = protocol;
  best_config.train.seed = report.per_seed[best_seed_idx].seed;
  dart::TrainedMethod best_run =
      dart::run_single(loaded.model, task, episode, method,
                       report.per_seed[best_seed_idx].chosen, best_config);
  std::optional<dart::PromptSpec> saved_spec;
  if (method.kind == dart::MethodKind::Dart &&
      (method.diff_template || method.diff_label)) {
    dart::PromptSpec spec = dart::build_prompt_spec(
        loaded.model.vocab, int(task.base_template_ids.size()), task.n_classes,
        task.base_mask_index);
    saved_spec = spec;
  }
  fs::create_directories(out_dir);
  dart::save_checkpoint(best_ckpt_path, best_run.model, saved_spec);
  write_text_file(history_path, best_run.history.to_csv());

  write_text_file(report_path,
                  dart::RunReport::csv_header() + report.to_csv_rows());
  write_text_file(aggregate_path, dart::aggregate_reports_json({report}) + "\n");

  std::printf("%s on %s (K=%d): mean %.4f (%.4f) over %d seeds\n",
              report.method.c_str(), report.task.c_str(), report.k,
              report.mean, report.stddev, int(report.per_seed.size()));
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

int cmd_sweep(const std::string& ckpt_path, const std::string& task_name,
              const std::string& grid_path, const std::string& method_name,
              int k, int n_seeds, uint64_t seed_base, int jobs,
              const std::string& out_dir) {
  const json grid_json = load_json_file(grid_path);
  const json grid_schema = {
      {"schema_version", nullptr}, {"lr_full", nullptr},
      {"lr_prompt", nullptr},      {"weight_decay", nullptr},
      {"lambda", nullptr},         {"batch", nullptr},
      {"epochs", nullptr},
  };
  check_unknown_keys(grid_json, grid_schema, "");
  require_schema_version(grid_json);
  if (auto env = env_seed_override()) seed_base = *env;

  dart::GridSpace grid;
  grid.lr_full = field_or(grid_json, "lr_full", grid.lr_full);
  grid.lr_prompt = field_or(grid_json, "lr_prompt", grid.lr_prompt);
  grid.weight_decay = field_or(grid_json, "weight_decay", grid.weight_decay);
  grid.lambda = field_or(grid_json, "lambda", grid.lambda);
  grid.batch = field_or(grid_json, "batch", grid.batch);
  grid.epochs = field_or(grid_json, "epochs", grid.epochs);
  const auto points = grid.enumerate();  // validates non-empty axes

  dart::LoadedCheckpoint loaded = dart::load_checkpoint(ckpt_path);
  dart::Task task = dart::build_task(loaded.model.vocab, task_name, 7);

  dart::MethodSpec method;
  if (method_name == "dart") method.kind = dart::MethodKind::Dart;
  else if (method_name == "head") method.kind = dart::MethodKind::HeadFt;
  else if (method_name == "fixed") method.kind = dart::MethodKind::FixedPrompt;
  else throw dart::ConfigError("unknown method: " + method_name);

  dart::ProtocolConfig protocol;
  protocol.train = train_config_from_json(json::object());

  const std::vector<uint64_t> seeds = seed_list(seed_base, n_seeds);
  write_run_manifest(out_dir + "/manifest.json", grid_json, seed_base,
                     {ckpt_path, grid_path}, {out_dir + "/sweep.csv"});

  std::ostringstream csv;
  csv << "seed,dev_metric,test_metric,config_json\n";
  json aggregate = json::array();

  for (uint64_t seed : seeds) {
    dart::EpisodeDataset episode = dart::sample_k_shot(task, k, seed);
    dart::ProtocolConfig seed_config = protocol;
    seed_config.train.seed = seed;

    // Grid points fan out to a bounded worker pool; results land in
    // preallocated slots so the selection order stays deterministic.
    std::vector<dart::TrainedMethod> runs(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    std::atomic<size_t> next{0};
    const int workers =
        std::max(1, std::min<int>(jobs, int(points.size())));
    auto worker = [&] {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= points.size()) break;
        try {
          runs[i] = dart::run_single(loaded.model, task, episode, method,
                                     points[i], seed_config);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    size_t best = 0;
    for (size_t i = 1; i < runs.size(); ++i) {
      if (runs[i].dev_metric > runs[best].dev_metric) best = i;
    }
    const float test_metric =
        runs[best].evaluate(episode.test_set(), task.metric);
    std::string config = points[best].to_json();
    std::string quoted = "\"";
    for (char c : config) quoted += (c == '"') ? std::string("\"\"")
                                               : std::string(1, c);
    quoted += "\"";
    csv << seed << "," << format_float(double(runs[best].dev_metric)) << ","
        << format_float(double(test_metric)) << "," << quoted << "\n";
    aggregate.push_back({{"seed", seed},
                         {"dev_metric", runs[best].dev_metric},
                         {"test_metric", test_metric},
                         {"config", json::parse(config)}});
  }

  write_text_file(out_dir + "/sweep.csv", csv.str());
  write_text_file(out_dir + "/sweep.json", aggregate.dump(2) + "\n");
  std::cout << "sweep complete: " << points.size() << " grid points x "
            << seeds.size() << " seeds -> " << out_dir << "/sweep.csv\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

int cmd_analyze(const std::string& ckpt_path, const std::string& task_name,
                const std::string& what, const std::string& steps_arg,
                int top_k, int k, uint64_t seed, const std::string& out_dir) {
  if (auto env = env_seed_override()) seed = *env;
  dart::LoadedCheckpoint loaded = dart::load_checkpoint(ckpt_path);

  if (what == "neighbors") {
    if (!loaded.prompt_spec) {
      throw dart::ArtifactError(
          "checkpoint has no prompt spec; run finetune with --method dart "
          "first");
    }
    dart::NeighborReport report = dart::nearest_labels(
        loaded.model, loaded.prompt_spec->label_slot_ids, top_k);
    write_text_file(out_dir + "/neighbors.json",
                    report.to_json(loaded.model.vocab) + "\n");
    std::cout << "wrote " << out_dir << "/neighbors.json\n";
    return 0;
  }

  std::vector<int> steps;
  {
    std::istringstream ss(steps_arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) steps.push_back(std::stoi(item));
    }
    if (steps.empty()) throw dart::ConfigError("no capture steps given");
  }

  dart::Task task = dart::build_task(loaded.model.vocab, task_name, 7);
  dart::EpisodeDataset episode = dart::sample_k_shot(task, k, seed);
  dart::ProtocolConfig protocol;
  protocol.train = train_config_from_json(json::object());
  protocol.train.seed = seed;
  protocol.capture_steps = steps;

  dart::MethodSpec method;  // full DART
  dart::LabeledStates states;
  dart::run_single(loaded.model, task, episode, method,
                   default_point(protocol.train), protocol, &states);

  if (what == "rd") {
    std::ostringstream csv;
    csv << "step,rd\n";
    for (int step : states.captured_steps) {
      const double rd =
          dart::rd_ratio(states.vectors_at(step), states.labels_at(step));
      csv << step << "," << format_float(rd) << "\n";
    }
    write_text_file(out_dir + "/rd.csv", csv.str());
    std::cout << "wrote " << out_dir << "/rd.csv\n";
    return 0;
  }
  if (what == "export") {
    fs::create_directories(out_dir);
    dart::export_states_csv(states, out_dir + "/states.csv");
    std::cout << "wrote " << out_dir << "/states.csv\n";
    return 0;
  }
  throw dart::ConfigError("unknown analysis kind: " + what +
                          " (expected rd, neighbors, or export)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DART toy engine: differentiable prompt and label optimization "
               "for few-shot masked-language-model classification"};
  app.require_subcommand(1);

  std::string config_path;
  auto* pretrain = app.add_subcommand("pretrain", "pre-train the toy MLM");
  pretrain->add_option("--config", config_path, "pretrain config JSON")
      ->required();

  std::string ckpt, task_name = "easy", method = "dart", ft_config, out_dir;
  int k = 16, n_seeds = 5, jobs = 1, top_k = 3;
  uint64_t seed_base = 1;
  bool no_fluency = false, fixed_template = false, fixed_label = false;

  auto* finetune =
      app.add_subcommand("finetune", "few-shot protocol for one method");
  finetune->add_option("--checkpoint", ckpt, "pretrained checkpoint")
      ->required();
  finetune->add_option("--task", task_name, "easy | hard | many");
  finetune->add_option("--method", method, "dart | head | fixed");
  finetune->add_option("--k", k, "examples per class");
  finetune->add_option("--seeds", n_seeds, "number of sampled splits");
  finetune->add_option("--seed-base", seed_base, "first split seed");
  finetune->add_flag("--no-fluency", no_fluency, "ablation: lambda = 0");
  finetune->add_flag("--fixed-template", fixed_template,
                     "ablation: natural-token template");
  finetune->add_flag("--fixed-label", fixed_label,
                     "ablation: natural-word labels");
  finetune->add_option("--config", ft_config, "training config JSON");
  finetune->add_option("--out-dir", out_dir, "output directory")->required();

  std::string grid_path;
  auto* sweep = app.add_subcommand("sweep", "grid search per seed");
  sweep->add_option("--checkpoint", ckpt, "pretrained checkpoint")->required();
  sweep->add_option("--task", task_name, "easy | hard | many");
  sweep->add_option("--grid", grid_path, "grid JSON file")->required();
  sweep->add_option("--method", method, "dart | head | fixed");
  sweep->add_option("--k", k, "examples per class");
  sweep->add_option("--seeds", n_seeds, "number of sampled splits");
  sweep->add_option("--seed-base", seed_base, "first split seed");
  sweep->add_option("--jobs", jobs, "parallel grid workers");
  sweep->add_option("--out-dir", out_dir, "output directory")->required();

  std::string what = "rd", steps_arg = "10,30,50,70";
  auto* analyze = app.add_subcommand("analyze", "R_D / neighbors / exports");
  analyze->add_option("--checkpoint", ckpt, "checkpoint")->required();
  analyze->add_option("--task", task_name, "easy | hard | many");
  analyze->add_option("--what", what, "rd | neighbors | export");
  analyze->add_option("--steps", steps_arg, "capture steps, comma separated");
  analyze->add_option("--top-k", top_k, "neighbors per label slot");
  analyze->add_option("--k", k, "examples per class");
  analyze->add_option("--seed", seed_base, "episode seed");
  analyze->add_option("--out-dir", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (pretrain->parsed()) return cmd_pretrain(config_path);
    if (finetune->parsed()) {
      return cmd_finetune(ckpt, task_name, method, k, n_seeds, seed_base,
                          no_fluency, fixed_template, fixed_label, ft_config,
                          out_dir);
    }
    if (sweep->parsed()) {
      return cmd_sweep(ckpt, task_name, grid_path, method, k, n_seeds,
                       seed_base, jobs, out_dir);
    }
    if (analyze->parsed()) {
      return cmd_analyze(ckpt, task_name, what, steps_arg, top_k, k,
                         seed_base, out_dir);
    }
  } catch (const dart::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const dart::ArtifactError& e) {
    std::cerr << "artifact mismatch: " << e.what() << "\n";
    return kExitArtifact;
  } catch (const dart::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
