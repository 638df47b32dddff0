#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rydchirp/couplings.hpp"
#include "rydchirp/model.hpp"

namespace rydchirp {

// Receives non-fatal diagnostics (cache rebuilds and the like). Defaults to stderr.
using WarningSink = std::function<void(const std::string&)>;
WarningSink stderr_warnings();

// Which couplings a table holds.
struct TableScope {
  enum class Kind { Chain, Basis };
  Kind kind = Kind::Chain;
  int n_min = 1;   // Basis only
  int max_nl = 6;  // Basis only: largest n - l kept

  static TableScope chain() { return {}; }
  static TableScope basis(int n_min, int max_nl) { return {Kind::Basis, n_min, max_nl}; }
  std::string tag() const;
};

class CouplingTable {
 public:
  static constexpr int kFormatVersion = 1;

  CouplingTable() = default;

  int q() const { return q_; }
  int n0() const { return n0_; }
  int m() const { return m_; }
  int n_max() const { return n_max_; }
  const TableScope& scope() const { return scope_; }
  double c0() const { return c0_; }  // units of a0/2
  unsigned precision_bits() const { return precision_bits_; }

  // Raw matrix element (units a0/2); key may be given in either orientation.
  std::optional<double> element(const CouplingKey& key) const;
  // Normalized coupling element / c0. Forbidden keys give 0; allowed keys missing
  // from the table are an error.
  double normalized(const CouplingKey& key) const;

  const std::map<CouplingKey, double>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::string content_hash() const;
  std::string serialize() const;
  static CouplingTable deserialize(const std::string& text);  // throws IoError on any defect

  void write_csv(const std::string& path) const;
  std::string to_csv() const;

  // Chain couplings c_k for (n0+kq, n0-1+k) -> (n0+(k+1)q, n0+k), k = 0.. while n0+(k+1)q <= n_max.
  std::vector<double> chain_couplings() const;

  friend CouplingTable compute_table(const ProblemSpec& spec, int n_max, const TableScope& scope,
                                     unsigned precision_bits);

 private:
  int q_ = 1;
  int n0_ = 1;
  int m_ = 0;
  int n_max_ = 1;
  TableScope scope_{};
  unsigned precision_bits_ = kDefaultPrecisionBits;
  double c0_ = 1.0;
  std::map<CouplingKey, double> entries_;
};

// Keys covered by a scope (canonical orientation).
std::vector<CouplingKey> table_keys(const ProblemSpec& spec, int n_max, const TableScope& scope);

CouplingTable compute_table(const ProblemSpec& spec, int n_max, const TableScope& scope = TableScope::chain(),
                            unsigned precision_bits = kDefaultPrecisionBits);

// Loads from cache_dir when a valid file exists, otherwise computes and writes it.
// An empty cache_dir disables persistence. Corrupt caches are rebuilt with a warning.
CouplingTable build_table(const ProblemSpec& spec, int n_max, const TableScope& scope = TableScope::chain(),
                          const std::string& cache_dir = "", const WarningSink& warn = stderr_warnings());

std::string cache_file_name(const ProblemSpec& spec, int n_max, const TableScope& scope);

}  // namespace rydchirp
