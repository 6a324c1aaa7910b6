#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ironbench {

enum class Language { en, ar };

std::string_view to_string(Language language) noexcept;
Language parse_language(std::string_view name);

inline constexpr std::size_t kNumSublabels = 6;
inline constexpr std::array<std::string_view, kNumSublabels> kSublabelNames = {
    "sarcasm", "irony", "satire", "understatement", "overstatement", "rhetorical_question"};

using Sublabels = std::array<std::uint8_t, kNumSublabels>;

struct TextExample {
  std::string id;
  Language language = Language::en;
  std::string text;
  std::optional<int> sarcastic;
  std::optional<Sublabels> sublabels;
  std::optional<std::string> rephrase;

  bool operator==(const TextExample&) const = default;
};

// label 0: text_a is the sarcastic sentence, label 1: text_b is.
struct PairExample {
  std::string id;
  Language language = Language::en;
  std::string text_a;
  std::string text_b;
  int label = 0;

  bool operator==(const PairExample&) const = default;
};

enum class DataFormat { jsonl, isarcasm_csv, pairs_jsonl, pairs_csv };

std::string_view to_string(DataFormat format) noexcept;
DataFormat parse_data_format(std::string_view name);
bool is_pair_format(DataFormat format) noexcept;

/// Collapses runs of spaces, tabs and line breaks to one space and trims both
/// ends. Every other byte is kept as is. Throws EmptyText (naming `id`) if
/// nothing is left.
std::string normalize_text(std::string_view raw, std::string_view id = {});

/// Reads a single-sentence dataset. Rows keep file order; a row without an id
/// gets "<language>-<row index>".
std::vector<TextExample> load_dataset(const std::filesystem::path& path, DataFormat format,
                                      Language language);

/// Reads a sentence-pair dataset (pairs_jsonl or pairs_csv).
std::vector<PairExample> load_pairs(const std::filesystem::path& path, DataFormat format,
                                    Language language);

void validate(const TextExample& example);
void validate(const PairExample& example);

/// One pair per example with a seeded coin flip deciding which side the
/// sarcastic text goes on. With augment_both_orders every example yields both
/// orders, ids suffixed "#0" / "#1".
std::vector<PairExample> build_pairs(std::span<const TextExample> examples, bool augment_both_orders,
                                     std::uint64_t seed);

// The id an augmented pair was derived from ("x#1" -> "x").
std::string_view pair_group_id(std::string_view pair_id) noexcept;

struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> ids;  // input order
  std::unordered_map<std::string, int> assignments;

  int fold(const std::string& id) const;
  std::vector<std::string> eval_ids(int fold_index) const;
  std::vector<std::string> train_ids(int fold_index) const;
  std::vector<std::size_t> fold_sizes() const;
};

/// Seeded shuffle then contiguous slices, so fold sizes differ by at most one.
/// When `strata` is given (parallel to ids) the shuffled members of each
/// stratum are concatenated and dealt round-robin instead.
FoldPlan kfold_split(std::span<const std::string> ids, int k, std::uint64_t seed,
                     std::span<const int> strata = {});

struct CorpusStats {
  std::size_t examples = 0;
  std::map<std::string, std::size_t> per_language;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t total = 0;  // labelled examples
  std::size_t with_sublabels = 0;
  std::array<std::size_t, kNumSublabels> sublabel_counts{};
  std::size_t with_rephrase = 0;
};

CorpusStats corpus_stats(std::span<const TextExample> examples);

// Published counts of the English training release.
struct ReferenceCounts {
  std::size_t total = 3468;
  std::size_t positives = 867;
  std::size_t negatives = 2601;
  std::array<std::size_t, kNumSublabels> sublabels = {713, 155, 25, 10, 40, 101};
};

/// Lists every field that differs from the reference counts; empty means the
/// file matches.
std::vector<std::string> check_against_reference(const CorpusStats& stats,
                                                 const ReferenceCounts& reference = {});

}  // namespace ironbench
