// Shared test helpers: fixture paths, scratch directories, and running the
// CLI binary.
#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testutil {

inline std::string data_path(const std::string& name) {
  return std::string(SELPREF_TEST_DATA_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Fresh scratch directory per test binary run.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("selpref_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

struct CommandResult {
  int exit_code = -1;
  std::string out;  // stdout only; stderr goes to the log file
};

#ifdef SELPREF_BIN
// Runs the CLI with stdout captured and stderr appended to a per-run log.
inline CommandResult run_cli(const std::string& args) {
  std::string log = (std::filesystem::temp_directory_path() / "selpref_cli_test.log").string();
  std::string cmd = std::string(SELPREF_BIN) + " " + args + " 2>>" + log;
  CommandResult res;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return res;
  char buf[4096];
  std::size_t n;
  while ((n = ::fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, n);
  int status = ::pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}
#endif

}  // namespace testutil
