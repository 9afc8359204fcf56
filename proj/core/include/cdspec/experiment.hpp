#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdspec/cdmatrix.hpp"
#include "cdspec/types.hpp"

namespace cdspec {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key/value configuration with dotted keys for nesting:
//   experiment = stability
//   instance.family = exp_toeplitz
//   stability.q = 0.5, 1, inf
// '#' starts a comment; values keep internal spaces.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // comma separated doubles; "inf" allowed
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  const std::map<std::string, std::string>& items() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

// One experiment cell produces ordered rows for the result table; cells run
// in a work pool and are merged in cell order so output is deterministic.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::string> column_docs;
};

std::string format_double(double v);

struct ExperimentOutcome {
  int exit_code = 0;           // 0 ok, 2 config error, 3 numerical failure
  std::string failure;         // set on numerical failure
  std::vector<std::string> artifacts;
};

// Runs the experiment named in `config` ("experiment" key), writing
// results.csv, manifest.json and, where applicable, certificate.json and
// matrix/envelope dumps under out_dir.
ExperimentOutcome run_experiment(const Config& config, const std::string& out_dir);

// Work pool used for parameter-grid cells.
void run_cells(int threads, std::vector<std::function<void()>>& cells);

}  // namespace cdspec
