#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rinst/prior_net.hpp"
#include "rinst/solver.hpp"

namespace rinst {

/// Flat `dotted.key = value` configuration. `#` starts a comment; lists are
/// comma separated. Reads are recorded so callers can reject typos via
/// unused_keys().
class Config {
 public:
  static Config parse(std::string_view text, const std::string& source = "<string>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);
  void erase(const std::string& key);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key,
                                     const std::vector<std::size_t>& fallback) const;

  std::vector<std::string> keys() const;
  std::vector<std::string> unused_keys() const;
  /// Canonical text: sorted `key = value` lines. parse(dump()) == *this.
  std::string dump() const;

  bool operator==(const Config& other) const { return values_ == other.values_; }

 private:
  const std::string* find(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
  std::string source_;
  mutable std::set<std::string> used_;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Keys under `net.` and `solver.` override fields of `base`.
NetConfig net_config_from(const Config& cfg, NetConfig base = {});
SolverConfig solver_config_from(const Config& cfg, SolverConfig base = {});
void write_config(const NetConfig& net, Config& out);
void write_config(const SolverConfig& solver, Config& out);

}  // namespace rinst
