#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace exclab {

// One acceptance-style assertion: value against bound, with the standard
// error when the value is a Monte-Carlo estimate.
struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  double se = 0.0;
  bool pass = false;
};

struct CheckList {
  std::vector<Check> checks;

  Check& add(const std::string& name, double value, double bound, double se,
             bool pass) {
    checks.push_back({name, value, bound, se, pass});
    return checks.back();
  }

  bool all_pass() const {
    for (const Check& c : checks)
      if (!c.pass) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const Check& c : checks)
      arr.push_back({{"name", c.name},
                     {"value", c.value},
                     {"bound", c.bound},
                     {"se", c.se},
                     {"pass", c.pass}});
    return arr;
  }
};

// Fixed-format floating point for byte-stable CSV output.
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::string>& columns) {
    std::filesystem::create_directories(path.parent_path());
    out_.open(path);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_value(values[i]);
    }
    out_ << '\n';
  }

  void raw_row(const std::vector<std::string>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << values[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path,
                       const nlohmann::json& j) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

}  // namespace exclab
