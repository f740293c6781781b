#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "exclab/kernel.hpp"
#include "exclab/testfn.hpp"

namespace exclab {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error("config error at '" + path + "': " + what) {}
};

struct TestFunctionSpec {
  std::string family;  // gaussian | hermite
  double center = 0.0;
  double width = 0.3;
  int order = 0;
};

struct KernelConfig {
  std::string family = "nearest_neighbor";  // nearest_neighbor | power_law | table
  double C = 1.0;
  double beta = 3.0;
  int zmax = 16;
  std::vector<std::pair<int, double>> s_entries;
  std::vector<std::pair<int, double>> a_entries;
};

struct SimConfig {
  std::vector<long> n_list{64};
  int macro_length = 4;
  double b = 1.0;
  double t_max = 1.0;
  std::vector<double> checkpoints;
};

struct FieldsConfig {
  std::vector<TestFunctionSpec> test_functions;
  std::vector<double> eps_list;
  std::vector<int> ell_list;
};

struct RunConfig {
  int replicas = 100;
  int threads = 0;  // 0 = hardware concurrency
  std::uint64_t master_seed = 1;
  std::string out = "out";
};

struct SbeConfig {
  int cells = 256;
  double dt = 1e-4;
  double t_max = 1.0;
  std::vector<double> eps_list;
  std::optional<double> sigma2;
  std::optional<double> b;
  std::optional<double> m;
  std::string scheme = "spectral";
  bool dealias = true;
};

struct CompareConfig {
  std::vector<double> t_list{0.1, 0.5, 1.0};
};

struct ExperimentConfig {
  std::string suite;
  KernelConfig kernel;
  SimConfig sim;
  FieldsConfig fields;
  RunConfig run;
  SbeConfig sbe;
  CompareConfig compare;
  bool has_kernel = false;

  static ExperimentConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str());
  }

  static ExperimentConfig parse_string(const std::string& text);

  RateKernel build_kernel() const {
    if (!has_kernel) throw ConfigError("kernel", "missing kernel block");
    if (kernel.family == "nearest_neighbor") return nearest_neighbor_kernel();
    if (kernel.family == "power_law")
      return power_law_kernel(kernel.beta, kernel.zmax);
    if (kernel.family == "table") {
      std::map<int, double> s(kernel.s_entries.begin(),
                              kernel.s_entries.end());
      std::map<int, double> a(kernel.a_entries.begin(),
                              kernel.a_entries.end());
      return validate_kernel(s, a, kernel.C);
    }
    throw ConfigError("kernel.family", "unknown family " + kernel.family);
  }

  std::vector<TestFunction> build_test_functions() const {
    std::vector<TestFunction> fs;
    const double length = static_cast<double>(sim.macro_length);
    for (const TestFunctionSpec& spec : fields.test_functions) {
      if (spec.family == "gaussian")
        fs.push_back(TestFunction::gaussian(length, spec.center, spec.width));
      else if (spec.family == "hermite")
        fs.push_back(TestFunction::hermite(length, spec.center, spec.width,
                                           spec.order));
      else
        throw ConfigError("fields.test_function",
                          "unknown family " + spec.family);
    }
    if (fs.empty())
      fs.push_back(TestFunction::gaussian(length, length / 2.0, 0.3));
    return fs;
  }
};

namespace detail {

struct RawBlock {
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;
};

inline double parse_real(const std::string& path, const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path, "expected a number, got '" + tok + "'");
  }
}

inline long parse_int(const std::string& path, const std::string& tok) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path, "expected an integer, got '" + tok + "'");
  }
}

inline void expect_count(const std::string& path,
                         const std::vector<std::string>& vals,
                         std::size_t count) {
  if (vals.size() != count)
    throw ConfigError(path, "expected " + std::to_string(count) +
                                " value(s), got " +
                                std::to_string(vals.size()));
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::parse_string(
    const std::string& text) {
  using detail::RawBlock;
  std::map<std::string, RawBlock> blocks;
  RawBlock top;

  std::istringstream in(text);
  std::string line;
  std::string open_block;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;
    if (toks.size() == 2 && toks[1] == "{") {
      if (!open_block.empty())
        throw ConfigError(toks[0], "nested blocks are not supported");
      open_block = toks[0];
      blocks[open_block];
      continue;
    }
    if (toks.size() == 1 && toks[0] == "}") {
      if (open_block.empty())
        throw ConfigError("line " + std::to_string(lineno), "stray '}'");
      open_block.clear();
      continue;
    }
    const std::string key = toks[0];
    toks.erase(toks.begin());
    if (open_block.empty())
      top.entries.emplace_back(key, toks);
    else
      blocks[open_block].entries.emplace_back(key, toks);
  }
  if (!open_block.empty())
    throw ConfigError(open_block, "unterminated block");

  ExperimentConfig cfg;
  for (const auto& [key, vals] : top.entries) {
    if (key == "suite") {
      detail::expect_count("suite", vals, 1);
      cfg.suite = vals[0];
    } else {
      throw ConfigError(key, "unknown top-level key");
    }
  }

  for (const auto& [name, block] : blocks) {
    if (name == "kernel") {
      cfg.has_kernel = true;
      for (const auto& [key, vals] : block.entries) {
        const std::string path = "kernel." + key;
        if (key == "family") {
          detail::expect_count(path, vals, 1);
          cfg.kernel.family = vals[0];
        } else if (key == "C") {
          detail::expect_count(path, vals, 1);
          cfg.kernel.C = detail::parse_real(path, vals[0]);
        } else if (key == "beta") {
          detail::expect_count(path, vals, 1);
          cfg.kernel.beta = detail::parse_real(path, vals[0]);
        } else if (key == "zmax") {
          detail::expect_count(path, vals, 1);
          cfg.kernel.zmax = static_cast<int>(detail::parse_int(path, vals[0]));
        } else if (key == "s" || key == "a") {
          detail::expect_count(path, vals, 2);
          const int z = static_cast<int>(detail::parse_int(path, vals[0]));
          const double v = detail::parse_real(path, vals[1]);
          (key == "s" ? cfg.kernel.s_entries : cfg.kernel.a_entries)
              .emplace_back(z, v);
        } else {
          throw ConfigError(path, "unknown key");
        }
      }
    } else if (name == "sim") {
      for (const auto& [key, vals] : block.entries) {
        const std::string path = "sim." + key;
        if (key == "n") {
          detail::expect_count(path, vals, 1);
          cfg.sim.n_list = {detail::parse_int(path, vals[0])};
        } else if (key == "n_list") {
          cfg.sim.n_list.clear();
          for (const auto& v : vals)
            cfg.sim.n_list.push_back(detail::parse_int(path, v));
        } else if (key == "L") {
          detail::expect_count(path, vals, 1);
          cfg.sim.macro_length =
              static_cast<int>(detail::parse_int(path, vals[0]));
        } else if (key == "b") {
          detail::expect_count(path, vals, 1);
          cfg.sim.b = detail::parse_real(path, vals[0]);
        } else if (key == "t_max") {
          detail::expect_count(path, vals, 1);
          cfg.sim.t_max = detail::parse_real(path, vals[0]);
        } else if (key == "checkpoints") {
          cfg.sim.checkpoints.clear();
          for (const auto& v : vals)
            cfg.sim.checkpoints.push_back(detail::parse_real(path, v));
        } else {
          throw ConfigError(path, "unknown key");
        }
      }
      for (std::size_t i = 1; i < cfg.sim.n_list.size(); ++i)
        if (cfg.sim.n_list[i] <= cfg.sim.n_list[i - 1])
          throw ConfigError("sim.n_list", "must be strictly ascending");
    } else if (name == "fields") {
      for (const auto& [key, vals] : block.entries) {
        const std::string path = "fields." + key;
        if (key == "test_function") {
          if (vals.empty()) throw ConfigError(path, "missing family");
          TestFunctionSpec spec;
          spec.family = vals[0];
          if (spec.family == "gaussian") {
            detail::expect_count(path, vals, 3);
            spec.center = detail::parse_real(path, vals[1]);
            spec.width = detail::parse_real(path, vals[2]);
          } else if (spec.family == "hermite") {
            detail::expect_count(path, vals, 4);
            spec.center = detail::parse_real(path, vals[1]);
            spec.width = detail::parse_real(path, vals[2]);
            spec.order = static_cast<int>(detail::parse_int(path, vals[3]));
          } else {
            throw ConfigError(path, "unknown family " + spec.family);
          }
          cfg.fields.test_functions.push_back(spec);
        } else if (key == "eps_list") {
          cfg.fields.eps_list.clear();
          for (const auto& v : vals)
            cfg.fields.eps_list.push_back(detail::parse_real(path, v));
        } else if (key == "ell_list") {
          cfg.fields.ell_list.clear();
          for (const auto& v : vals)
            cfg.fields.ell_list.push_back(
                static_cast<int>(detail::parse_int(path, v)));
        } else {
          throw ConfigError(path, "unknown key");
        }
      }
    } else if (name == "run") {
      for (const auto& [key, vals] : block.entries) {
        const std::string path = "run." + key;
        detail::expect_count(path, vals, 1);
        if (key == "replicas")
          cfg.run.replicas = static_cast<int>(detail::parse_int(path, vals[0]));
        else if (key == "threads")
          cfg.run.threads = static_cast<int>(detail::parse_int(path, vals[0]));
        else if (key == "master_seed")
          cfg.run.master_seed =
              static_cast<std::uint64_t>(detail::parse_int(path, vals[0]));
        else if (key == "out")
          cfg.run.out = vals[0];
        else
          throw ConfigError(path, "unknown key");
      }
      if (cfg.run.replicas < 1)
        throw ConfigError("run.replicas", "must be >= 1");
    } else if (name == "sbe") {
      for (const auto& [key, vals] : block.entries) {
        const std::string path = "sbe." + key;
        if (key == "eps_list") {
          cfg.sbe.eps_list.clear();
          for (const auto& v : vals)
            cfg.sbe.eps_list.push_back(detail::parse_real(path, v));
          continue;
        }
        detail::expect_count(path, vals, 1);
        if (key == "M")
          cfg.sbe.cells = static_cast<int>(detail::parse_int(path, vals[0]));
        else if (key == "dt")
          cfg.sbe.dt = detail::parse_real(path, vals[0]);
        else if (key == "t_max")
          cfg.sbe.t_max = detail::parse_real(path, vals[0]);
        else if (key == "sigma2")
          cfg.sbe.sigma2 = detail::parse_real(path, vals[0]);
        else if (key == "b")
          cfg.sbe.b = detail::parse_real(path, vals[0]);
        else if (key == "m")
          cfg.sbe.m = detail::parse_real(path, vals[0]);
        else if (key == "scheme")
          cfg.sbe.scheme = vals[0];
        else if (key == "dealias")
          cfg.sbe.dealias = vals[0] == "on" || vals[0] == "true" ||
                            vals[0] == "1";
        else
          throw ConfigError(path, "unknown key");
      }
    } else if (name == "compare") {
      for (const auto& [key, vals] : block.entries) {
        const std::string path = "compare." + key;
        if (key == "t_list") {
          cfg.compare.t_list.clear();
          for (const auto& v : vals)
            cfg.compare.t_list.push_back(detail::parse_real(path, v));
        } else {
          throw ConfigError(path, "unknown key");
        }
      }
    } else {
      throw ConfigError(name, "unknown block");
    }
  }
  return cfg;
}

}  // namespace exclab
