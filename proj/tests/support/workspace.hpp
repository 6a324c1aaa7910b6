#pragma once

// A scratch directory holding the synthetic bilingual corpus and a run
// config with a small model, for end-to-end tests of the commands.

#include <json.hpp>

#include "scratch.hpp"
#include "synthetic.hpp"

namespace workspace {

// Small enough that a k=2 ensemble trains in a few seconds.
inline nlohmann::ordered_json tiny_config(const std::string& task, std::size_t epochs = 4) {
  nlohmann::ordered_json c;
  c["data"] = {{"paths", {{"en", "train.en.jsonl"}, {"ar", "train.ar.jsonl"}}},
               {"format", "jsonl"},
               {"languages", {"en", "ar"}}};
  c["model"] = {{"d_model", 16}, {"n_layers", 1}, {"n_heads", 2}, {"d_ff", 32}, {"max_seq_len", 64},
                {"dropout_rate", 0.1}};
  c["train"] = {{"epochs", epochs}, {"peak_lr", 3e-3}, {"micro_batch_size", 8}, {"seed", 42}};
  c["cv"] = {{"k", 2}, {"seeds", {42}}};
  c["task"] = {{"kind", task}};
  c["output"] = {{"dir", "runs/" + task}};
  return c;
}

inline void write_config(const std::filesystem::path& path, const nlohmann::ordered_json& config) {
  std::ofstream(path) << config.dump(2) << "\n";
}

struct Workspace {
  explicit Workspace(const std::string& tag, std::size_t n = 16, std::uint64_t seed = 11) : dir(tag) {
    synthetic::write_corpus(dir.path(), n, seed);
  }
  std::filesystem::path path() const { return dir.path(); }
  std::filesystem::path operator/(const std::string& p) const { return dir / p; }

  // Writes <name> with the given config and returns its path.
  std::filesystem::path config(const nlohmann::ordered_json& c, const std::string& name = "config.json") const {
    write_config(dir / name, c);
    return dir / name;
  }

  scratch::Dir dir;
};

}  // namespace workspace
