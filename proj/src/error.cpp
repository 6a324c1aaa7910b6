#include "ironbench/error.hpp"

#include <iostream>
#include <mutex>

namespace ironbench {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::empty_text: return "EmptyText";
    case Errc::parse: return "ParseError";
    case Errc::label: return "LabelError";
    case Errc::missing_rephrase: return "MissingRephrase";
    case Errc::invalid_fold_count: return "InvalidFoldCount";
    case Errc::config: return "ConfigError";
    case Errc::empty_batch: return "EmptyBatch";
    case Errc::decode: return "DecodeError";
    case Errc::vocab: return "VocabError";
    case Errc::numerics: return "NumericsError";
    case Errc::state: return "StateError";
    case Errc::schema: return "SchemaError";
    case Errc::io: return "IoError";
    case Errc::missing_artifact: return "MissingArtifact";
  }
  return "Error";
}

void warn(const std::string& message) {
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  std::cerr << "warning: " << message << '\n';
}

}  // namespace ironbench
