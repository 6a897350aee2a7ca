#include "dart/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dart/errors.hpp"

namespace dart {

std::vector<std::vector<float>> LabeledStates::vectors_at(int step) const {
  std::vector<std::vector<float>> out;
  for (const auto& e : entries)
    if (e.step == step) out.push_back(e.state);
  return out;
}

std::vector<int> LabeledStates::labels_at(int step) const {
  std::vector<int> out;
  for (const auto& e : entries)
    if (e.step == step) out.push_back(e.label);
  return out;
}

double rd_ratio(const std::vector<std::vector<float>>& vectors,
                const std::vector<int>& labels) {
  if (vectors.size() != labels.size() || vectors.empty()) {
    throw ValidationError("rd_ratio: vectors/labels mismatch or empty");
  }
  std::map<int, std::vector<const std::vector<float>*>> by_class;
  for (size_t i = 0; i < vectors.size(); ++i) {
    by_class[labels[i]].push_back(&vectors[i]);
  }
  const int c = int(by_class.size());
  if (c < 2) {
    throw ValidationError(
        "rd_ratio: inter-class distance undefined with a single class");
  }

  auto dist = [](const std::vector<float>& a, const std::vector<float>& b) {
    double sq = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      const double d = double(a[i]) - double(b[i]);
      sq += d * d;
    }
    return std::sqrt(sq);
  };

  double intra = 0.0;
  for (const auto& [cls, vs] : by_class) {
    const size_t n = vs.size();
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) sum += dist(*vs[i], *vs[j]);
    intra += sum / (double(n) * double(n));
  }
  intra /= double(c);

  double inter = 0.0;
  for (const auto& [c1, vs1] : by_class) {
    for (const auto& [c2, vs2] : by_class) {
      if (c1 == c2) continue;
      double sum = 0.0;
      for (const auto* a : vs1)
        for (const auto* b : vs2) sum += dist(*a, *b);
      inter += sum / (double(vs1.size()) * double(vs2.size()));
    }
  }
  inter /= double(c) * double(c - 1);

  if (inter == 0.0) {
    throw NumericError("rd_ratio: zero inter-class distance");
  }
  return intra / inter;
}

MaskStateCapture::MaskStateCapture(std::vector<int> steps,
                                   std::vector<Example> capture_set,
                                   PromptPlan plan)
    : steps_(std::move(steps)),
      capture_set_(std::move(capture_set)),
      plan_(std::move(plan)) {
  std::sort(steps_.begin(), steps_.end());
}

StepHook MaskStateCapture::hook() {
  return [this](int step, const ToyMlmModel& model) {
    if (std::find(steps_.begin(), steps_.end(), step) == steps_.end()) return;
    capture_now(model, plan_, capture_set_, step, states_);
    states_.captured_steps.push_back(step);
  };
}

LabeledStates MaskStateCapture::take(int last_step_trained) {
  for (int s : steps_) {
    if (s > last_step_trained) {
      states_.skipped_steps.push_back(s);
      std::cerr << "warning: capture step " << s
                << " beyond training length (" << last_step_trained
                << " steps), skipped\n";
    }
  }
  return std::move(states_);
}

void capture_now(const ToyMlmModel& model, const PromptPlan& plan,
                 const std::vector<Example>& data, int step_tag,
                 LabeledStates& out) {
  out.dim = model.config.d_model;
  for (const auto& ex : data) {
    EncodedPrompt prompt =
        assemble_plan(ex.x_in, plan, model.vocab, model.config.l_max);
    Graph g;
    ForwardResult fwd = model.forward_states(g, prompt.ids);
    TensorPtr row = g.slice_rows(fwd.hidden, prompt.mask_position, 1);
    LabeledStates::Entry entry;
    entry.step = step_tag;
    entry.label = ex.label;
    entry.state = row->data;
    out.entries.push_back(std::move(entry));
  }
}

NeighborReport nearest_labels(const ToyMlmModel& model,
                              const std::vector<int>& label_slot_ids, int k) {
  if (k < 1) throw ValidationError("nearest_labels: k must be >= 1");
  NeighborReport report;
  const int d = model.config.d_model;
  for (int slot : label_slot_ids) {
    NeighborReport::Slot out;
    out.slot_id = slot;
    const std::vector<float> row = model.embedding_row(slot);
    double row_norm = 0.0;
    for (float x : row) row_norm += double(x) * x;
    row_norm = std::sqrt(row_norm);
    if (row_norm == 0.0) {
      out.degenerate = true;
      report.slots.push_back(std::move(out));
      continue;
    }
    std::vector<std::pair<int, float>> sims;
    for (int id = 0; id < model.config.vocab_size; ++id) {
      if (!model.vocab.is_natural(id)) continue;
      const float* cand = model.embedding->data.data() + size_t(id) * d;
      double dot = 0.0, norm = 0.0;
      for (int j = 0; j < d; ++j) {
        dot += double(row[size_t(j)]) * cand[j];
        norm += double(cand[j]) * cand[j];
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) continue;
      sims.emplace_back(id, float(dot / (row_norm * norm)));
    }
    std::stable_sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (int(sims.size()) > k) sims.resize(size_t(k));
    out.neighbors = std::move(sims);
    report.slots.push_back(std::move(out));
  }
  return report;
}

std::string NeighborReport::to_json(const Vocabulary& vocab) const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& slot : slots) {
    nlohmann::json js;
    js["slot_id"] = slot.slot_id;
    js["slot_token"] = vocab.token_of(slot.slot_id);
    js["degenerate"] = slot.degenerate;
    nlohmann::json neighbors = nlohmann::json::array();
    for (const auto& [id, sim] : slot.neighbors) {
      neighbors.push_back({{"token", vocab.token_of(id)},
                           {"id", id},
                           {"similarity", sim}});
    }
    js["neighbors"] = neighbors;
    j.push_back(js);
  }
  return j.dump(2);
}

void export_states_csv(const LabeledStates& states, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "step,class";
  for (int j = 0; j < states.dim; ++j) out << ",h" << j;
  out << "\n";
  char buf[32];
  for (const auto& e : states.entries) {
    out << e.step << "," << e.label;
    for (float v : e.state) {
      std::snprintf(buf, sizeof(buf), ",%.9g", double(v));
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace dart
