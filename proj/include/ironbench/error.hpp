#pragma once

#include <stdexcept>
#include <string>

namespace ironbench {

enum class Errc {
  empty_text,
  parse,
  label,
  missing_rephrase,
  invalid_fold_count,
  config,
  empty_batch,
  decode,
  vocab,
  numerics,
  state,
  schema,
  io,
  missing_artifact,
};

const char* errc_name(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above; the C
// API maps them onto its status values.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, Errc code, const std::string& message) {
  if (!condition) fail(code, message);
}

void warn(const std::string& message);

}  // namespace ironbench
