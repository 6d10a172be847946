// Error taxonomy shared by the library and the CLI exit-code mapping.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selpref {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or unwritable files, missing paths. CLI exit code 1.
struct io_error : error {
  using error::error;
};

// Bad configuration, flags, or argument contract violations. CLI exit code 2.
struct config_error : error {
  using error::error;
};

// Malformed or inconsistent data content. CLI exit code 3.
struct data_error : error {
  using error::error;
};

// Recoverable per-line parse failure; carries the 1-based line number.
struct parse_error : data_error {
  parse_error(std::size_t line, const std::string& msg)
      : data_error("line " + std::to_string(line) + ": " + msg), line_no(line) {}
  std::size_t line_no;
};

// Model file failures, each distinct so callers can tell them apart.
struct model_io_error : data_error {
  using data_error::data_error;
};
struct model_version_error : model_io_error {
  using model_io_error::model_io_error;
};
struct model_truncation_error : model_io_error {
  using model_io_error::model_io_error;
};
struct model_checksum_error : model_io_error {
  using model_io_error::model_io_error;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int input = 1;
inline constexpr int config = 2;
inline constexpr int data = 3;
}  // namespace exit_code

}  // namespace selpref
