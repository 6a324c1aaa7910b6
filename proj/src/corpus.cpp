#include "ironbench/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ironbench/error.hpp"
#include "ironbench/seed.hpp"
#include "ironbench/utf8.hpp"

namespace ironbench {

using json = nlohmann::json;

std::string_view to_string(Language language) noexcept {
  return language == Language::en ? "en" : "ar";
}

Language parse_language(std::string_view name) {
  if (name == "en") return Language::en;
  if (name == "ar") return Language::ar;
  fail(Errc::config, "unknown language '" + std::string(name) + "'");
}

std::string_view to_string(DataFormat format) noexcept {
  switch (format) {
    case DataFormat::jsonl: return "jsonl";
    case DataFormat::isarcasm_csv: return "isarcasm_csv";
    case DataFormat::pairs_jsonl: return "pairs_jsonl";
    case DataFormat::pairs_csv: return "pairs_csv";
  }
  return "jsonl";
}

DataFormat parse_data_format(std::string_view name) {
  for (auto f : {DataFormat::jsonl, DataFormat::isarcasm_csv, DataFormat::pairs_jsonl, DataFormat::pairs_csv})
    if (to_string(f) == name) return f;
  fail(Errc::config, "unknown data format '" + std::string(name) + "'");
}

bool is_pair_format(DataFormat format) noexcept {
  return format == DataFormat::pairs_jsonl || format == DataFormat::pairs_csv;
}

namespace {

bool is_collapsible(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

[[noreturn]] void parse_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  fail(Errc::parse, path.string() + ":" + std::to_string(line) + ": " + what);
}

int parse_bit_json(const json& value, const std::string& field, std::size_t line) {
  if (value.is_boolean()) return value.get<bool>() ? 1 : 0;
  if (!value.is_number_integer())
    fail(Errc::label, "line " + std::to_string(line) + ": " + field + " is not an integer");
  const auto v = value.get<long long>();
  if (v != 0 && v != 1) fail(Errc::label, "line " + std::to_string(line) + ": " + field + " = " + std::to_string(v));
  return static_cast<int>(v);
}

int parse_bit_text(std::string_view text, const std::string& field, std::size_t line) {
  std::string t(text);
  while (!t.empty() && is_collapsible(t.back())) t.pop_back();
  if (t == "0" || t == "0.0") return 0;
  if (t == "1" || t == "1.0") return 1;
  fail(Errc::label, "line " + std::to_string(line) + ": " + field + " = '" + t + "'");
}

struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// RFC 4180: quoted fields may hold separators, doubled quotes and line breaks.
std::vector<CsvRecord> parse_csv(const std::string& data, const std::filesystem::path& path) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  std::size_t line = 1;
  current.line = 1;
  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{};
    current.line = line;
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty() || field_quoted) parse_error(path, line, "unexpected quote");
      in_quotes = true;
      field_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      ++line;
      end_record();
    } else if (c == '\r') {
      if (i + 1 >= data.size() || data[i + 1] != '\n') field.push_back(c);
    } else {
      if (field_quoted) parse_error(path, line, "text after closing quote");
      field.push_back(c);
    }
  }
  if (in_quotes) parse_error(path, current.line, "unterminated quoted field");
  if (!field.empty() || !current.fields.empty() || field_quoted) end_record();
  return records;
}

std::string checked_utf8(std::string text, const std::filesystem::path& path, std::size_t line) {
  if (!is_valid_utf8(text)) parse_error(path, line, "invalid UTF-8");
  return text;
}

std::string default_id(Language language, std::size_t row) {
  return std::string(to_string(language)) + "-" + std::to_string(row);
}

TextExample text_from_json(const json& obj, Language language, std::size_t row, std::size_t line,
                           const std::filesystem::path& path) {
  static const std::set<std::string> known = {"id", "language", "text", "sarcastic", "sublabels", "rephrase"};
  if (!obj.is_object()) parse_error(path, line, "expected a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!known.count(key)) parse_error(path, line, "unknown key '" + key + "'");
  if (!obj.contains("text") || !obj["text"].is_string()) parse_error(path, line, "missing string field 'text'");

  TextExample ex;
  ex.language = language;
  if (obj.contains("language")) {
    if (!obj["language"].is_string()) parse_error(path, line, "'language' must be a string");
    ex.language = parse_language(obj["language"].get<std::string>());
  }
  if (obj.contains("id")) {
    const auto& id = obj["id"];
    if (id.is_string()) ex.id = id.get<std::string>();
    else if (id.is_number_integer()) ex.id = std::to_string(id.get<long long>());
    else parse_error(path, line, "'id' must be a string or integer");
  } else {
    ex.id = default_id(ex.language, row);
  }
  ex.text = normalize_text(checked_utf8(obj["text"].get<std::string>(), path, line), ex.id);
  if (obj.contains("sarcastic") && !obj["sarcastic"].is_null())
    ex.sarcastic = parse_bit_json(obj["sarcastic"], "sarcastic", line);
  if (obj.contains("sublabels") && !obj["sublabels"].is_null()) {
    const auto& arr = obj["sublabels"];
    if (!arr.is_array() || arr.size() != kNumSublabels) parse_error(path, line, "'sublabels' must hold 6 values");
    Sublabels labels{};
    for (std::size_t j = 0; j < kNumSublabels; ++j)
      labels[j] = static_cast<std::uint8_t>(parse_bit_json(arr[j], std::string(kSublabelNames[j]), line));
    ex.sublabels = labels;
  }
  if (obj.contains("rephrase") && !obj["rephrase"].is_null()) {
    if (!obj["rephrase"].is_string()) parse_error(path, line, "'rephrase' must be a string");
    ex.rephrase = normalize_text(checked_utf8(obj["rephrase"].get<std::string>(), path, line), ex.id);
  }
  return ex;
}

PairExample pair_from_json(const json& obj, Language language, std::size_t row, std::size_t line,
                           const std::filesystem::path& path) {
  static const std::set<std::string> known = {"id", "language", "text_a", "text_b", "label"};
  if (!obj.is_object()) parse_error(path, line, "expected a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!known.count(key)) parse_error(path, line, "unknown key '" + key + "'");
  for (const char* key : {"text_a", "text_b"})
    if (!obj.contains(key) || !obj[key].is_string()) parse_error(path, line, std::string("missing string field '") + key + "'");
  PairExample ex;
  ex.language = obj.contains("language") ? parse_language(obj["language"].get<std::string>()) : language;
  if (obj.contains("id"))
    ex.id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
  else
    ex.id = default_id(ex.language, row);
  ex.text_a = normalize_text(checked_utf8(obj["text_a"].get<std::string>(), path, line), ex.id);
  ex.text_b = normalize_text(checked_utf8(obj["text_b"].get<std::string>(), path, line), ex.id);
  ex.label = obj.contains("label") ? parse_bit_json(obj["label"], "label", line) : 0;
  return ex;
}

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_error(path, line_no, e.what());
    }
    fn(obj, row++, line_no);
  }
}

std::vector<std::string> trimmed_header(std::vector<std::string> header) {
  for (auto& h : header) {
    if (h.size() >= 3 && static_cast<unsigned char>(h[0]) == 0xEF && static_cast<unsigned char>(h[1]) == 0xBB &&
        static_cast<unsigned char>(h[2]) == 0xBF)
      h.erase(0, 3);
    while (!h.empty() && is_collapsible(h.back())) h.pop_back();
  }
  return header;
}

std::optional<std::size_t> column(const std::vector<std::string>& header, std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

}  // namespace

std::string normalize_text(std::string_view raw, std::string_view id) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (const char c : raw) {
    if (is_collapsible(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  if (out.empty()) fail(Errc::empty_text, "text of '" + std::string(id) + "' is empty after normalization");
  return out;
}

void validate(const TextExample& ex) {
  require(!ex.text.empty(), Errc::empty_text, "text of '" + ex.id + "' is empty");
  if (ex.sarcastic) require(*ex.sarcastic == 0 || *ex.sarcastic == 1, Errc::label, ex.id + ": sarcastic not in {0,1}");
  if (ex.sublabels) {
    require(ex.sarcastic.has_value(), Errc::label, ex.id + ": sublabels without a sarcastic label");
    require(ex.language == Language::en, Errc::label, ex.id + ": sublabels are English-only");
    for (auto b : *ex.sublabels) require(b <= 1, Errc::label, ex.id + ": sublabel not in {0,1}");
  }
  if (ex.rephrase) require(ex.sarcastic == 1, Errc::label, ex.id + ": rephrase on a non-sarcastic text");
}

void validate(const PairExample& ex) {
  require(ex.label == 0 || ex.label == 1, Errc::label, ex.id + ": pair label not in {0,1}");
  require(ex.text_a != ex.text_b, Errc::label, ex.id + ": pair texts are identical");
}

std::vector<TextExample> load_dataset(const std::filesystem::path& path, DataFormat format, Language language) {
  std::vector<TextExample> out;
  if (format == DataFormat::jsonl) {
    for_each_jsonl(path, [&](const json& obj, std::size_t row, std::size_t line) {
      out.push_back(text_from_json(obj, language, row, line, path));
      try {
        validate(out.back());
      } catch (const Error& e) {
        fail(e.code(), "line " + std::to_string(line) + ": " + e.what());
      }
    });
    return out;
  }
  if (format != DataFormat::isarcasm_csv)
    fail(Errc::config, "load_dataset cannot read " + std::string(to_string(format)));

  const auto records = parse_csv(read_file(path), path);
  if (records.empty()) return out;
  const auto header = trimmed_header(records[0].fields);
  const auto text_col = column(header, "tweet");
  if (!text_col) parse_error(path, records[0].line, "header has no 'tweet' column");
  const auto id_col = column(header, "id");
  const auto sarcastic_col = column(header, "sarcastic");
  const auto rephrase_col = column(header, "rephrase");
  std::array<std::optional<std::size_t>, kNumSublabels> sub_cols;
  bool has_sub_cols = true;
  for (std::size_t j = 0; j < kNumSublabels; ++j) {
    sub_cols[j] = column(header, kSublabelNames[j]);
    has_sub_cols = has_sub_cols && sub_cols[j].has_value();
  }

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size())
      parse_error(path, rec.line,
                  "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(rec.fields.size()));
    TextExample ex;
    ex.language = language;
    ex.id = (id_col && !rec.fields[*id_col].empty()) ? rec.fields[*id_col] : default_id(language, r - 1);
    ex.text = normalize_text(checked_utf8(rec.fields[*text_col], path, rec.line), ex.id);
    if (sarcastic_col && !rec.fields[*sarcastic_col].empty())
      ex.sarcastic = parse_bit_text(rec.fields[*sarcastic_col], "sarcastic", rec.line);
    if (has_sub_cols) {
      bool all_present = true;
      for (const auto& c : sub_cols) all_present = all_present && !rec.fields[*c].empty();
      if (all_present) {
        Sublabels labels{};
        for (std::size_t j = 0; j < kNumSublabels; ++j)
          labels[j] = static_cast<std::uint8_t>(
              parse_bit_text(rec.fields[*sub_cols[j]], std::string(kSublabelNames[j]), rec.line));
        ex.sublabels = labels;
      }
    }
    if (rephrase_col) {
      const auto& raw = rec.fields[*rephrase_col];
      if (raw.find_first_not_of(" \t\r\n") != std::string::npos)
        ex.rephrase = normalize_text(checked_utf8(raw, path, rec.line), ex.id);
    }
    try {
      validate(ex);
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(rec.line) + ": " + e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<PairExample> load_pairs(const std::filesystem::path& path, DataFormat format, Language language) {
  std::vector<PairExample> out;
  auto checked = [&](PairExample ex, std::size_t line) {
    try {
      validate(ex);
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(line) + ": " + e.what());
    }
    out.push_back(std::move(ex));
  };
  if (format == DataFormat::pairs_jsonl) {
    for_each_jsonl(path, [&](const json& obj, std::size_t row, std::size_t line) {
      checked(pair_from_json(obj, language, row, line, path), line);
    });
    return out;
  }
  if (format != DataFormat::pairs_csv) fail(Errc::config, "load_pairs cannot read " + std::string(to_string(format)));

  const auto records = parse_csv(read_file(path), path);
  if (records.empty()) return out;
  const auto header = trimmed_header(records[0].fields);
  const auto a_col = column(header, "text_0");
  const auto b_col = column(header, "text_1");
  const auto label_col = column(header, "label");
  const auto id_col = column(header, "id");
  if (!a_col || !b_col) parse_error(path, records[0].line, "header needs 'text_0' and 'text_1'");
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size())
      parse_error(path, rec.line,
                  "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(rec.fields.size()));
    PairExample ex;
    ex.language = language;
    ex.id = (id_col && !rec.fields[*id_col].empty()) ? rec.fields[*id_col] : default_id(language, r - 1);
    ex.text_a = normalize_text(checked_utf8(rec.fields[*a_col], path, rec.line), ex.id);
    ex.text_b = normalize_text(checked_utf8(rec.fields[*b_col], path, rec.line), ex.id);
    ex.label = (label_col && !rec.fields[*label_col].empty()) ? parse_bit_text(rec.fields[*label_col], "label", rec.line)
                                                              : 0;
    checked(std::move(ex), rec.line);
  }
  return out;
}

std::vector<PairExample> build_pairs(std::span<const TextExample> examples, bool augment_both_orders,
                                     std::uint64_t seed) {
  std::vector<PairExample> pairs;
  pairs.reserve(examples.size() * (augment_both_orders ? 2 : 1));
  std::mt19937_64 rng(seed);
  for (const auto& ex : examples) {
    if (!ex.rephrase) fail(Errc::missing_rephrase, ex.id + " has no rephrase");
    const PairExample forward{ex.id, ex.language, ex.text, *ex.rephrase, 0};
    const PairExample swapped{ex.id, ex.language, *ex.rephrase, ex.text, 1};
    if (augment_both_orders) {
      pairs.push_back(forward);
      pairs.back().id += "#0";
      pairs.push_back(swapped);
      pairs.back().id += "#1";
    } else {
      const bool flip = (rng() >> 63) != 0;
      pairs.push_back(flip ? swapped : forward);
    }
  }
  return pairs;
}

std::string_view pair_group_id(std::string_view pair_id) noexcept {
  if (pair_id.size() >= 2 && pair_id[pair_id.size() - 2] == '#' &&
      (pair_id.back() == '0' || pair_id.back() == '1'))
    return pair_id.substr(0, pair_id.size() - 2);
  return pair_id;
}

int FoldPlan::fold(const std::string& id) const {
  const auto it = assignments.find(id);
  if (it == assignments.end()) fail(Errc::schema, "id '" + id + "' is not in the fold plan");
  return it->second;
}

std::vector<std::string> FoldPlan::eval_ids(int fold_index) const {
  std::vector<std::string> out;
  for (const auto& id : ids)
    if (assignments.at(id) == fold_index) out.push_back(id);
  return out;
}

std::vector<std::string> FoldPlan::train_ids(int fold_index) const {
  std::vector<std::string> out;
  for (const auto& id : ids)
    if (assignments.at(id) != fold_index) out.push_back(id);
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (const auto& [_, f] : assignments) ++sizes[static_cast<std::size_t>(f)];
  return sizes;
}

FoldPlan kfold_split(std::span<const std::string> ids, int k, std::uint64_t seed, std::span<const int> strata) {
  if (k < 2) fail(Errc::invalid_fold_count, "k = " + std::to_string(k) + " (need k >= 2)");
  if (static_cast<std::size_t>(k) > ids.size())
    fail(Errc::invalid_fold_count, "k = " + std::to_string(k) + " exceeds " + std::to_string(ids.size()) + " ids");
  if (!strata.empty() && strata.size() != ids.size()) fail(Errc::schema, "strata length differs from ids");

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.ids.assign(ids.begin(), ids.end());
  plan.assignments.reserve(ids.size());

  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n = ids.size();
  const auto folds = static_cast<std::size_t>(k);
  if (strata.empty()) {
    const std::size_t base = n / folds;
    const std::size_t extra = n % folds;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < folds; ++f) {
      const std::size_t size = base + (f < extra ? 1 : 0);
      for (std::size_t j = 0; j < size; ++j, ++pos) plan.assignments.emplace(ids[order[pos]], static_cast<int>(f));
    }
  } else {
    std::vector<std::size_t> dealt;
    dealt.reserve(n);
    std::vector<int> classes(strata.begin(), strata.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    for (int c : classes)
      for (auto i : order)
        if (strata[i] == c) dealt.push_back(i);
    for (std::size_t pos = 0; pos < n; ++pos) plan.assignments.emplace(ids[dealt[pos]], static_cast<int>(pos % folds));
  }
  if (plan.assignments.size() != n) fail(Errc::schema, "duplicate ids passed to kfold_split");
  return plan;
}

CorpusStats corpus_stats(std::span<const TextExample> examples) {
  CorpusStats stats;
  stats.examples = examples.size();
  for (const auto& ex : examples) {
    ++stats.per_language[std::string(to_string(ex.language))];
    if (ex.sarcastic) {
      ++stats.total;
      if (*ex.sarcastic == 1) ++stats.positives;
      else ++stats.negatives;
    }
    if (ex.sublabels) {
      ++stats.with_sublabels;
      for (std::size_t j = 0; j < kNumSublabels; ++j) stats.sublabel_counts[j] += (*ex.sublabels)[j];
    }
    if (ex.rephrase) ++stats.with_rephrase;
  }
  return stats;
}

std::vector<std::string> check_against_reference(const CorpusStats& stats, const ReferenceCounts& reference) {
  std::vector<std::string> mismatches;
  auto check = [&](const std::string& field, std::size_t got, std::size_t want) {
    if (got != want)
      mismatches.push_back(field + ": " + std::to_string(got) + " (reference " + std::to_string(want) + ")");
  };
  check("total", stats.total, reference.total);
  check("positives", stats.positives, reference.positives);
  check("negatives", stats.negatives, reference.negatives);
  for (std::size_t j = 0; j < kNumSublabels; ++j)
    check(std::string(kSublabelNames[j]), stats.sublabel_counts[j], reference.sublabels[j]);
  return mismatches;
}

}  // namespace ironbench
