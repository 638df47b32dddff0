#include "rydchirp/coupling_table.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rydchirp/errors.hpp"

namespace rydchirp {

WarningSink stderr_warnings() {
  return [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
}

std::string TableScope::tag() const {
  if (kind == Kind::Chain) return "chain";
  return "basis_nmin" + std::to_string(n_min) + "_nl" + std::to_string(max_nl);
}

std::optional<double> CouplingTable::element(const CouplingKey& key) const {
  auto it = entries_.find(key.canonical());
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double CouplingTable::normalized(const CouplingKey& key) const {
  if (!key.allowed()) return 0.0;
  const auto v = element(key);
  if (!v) {
    throw DomainError("coupling (" + std::to_string(key.n) + "," + std::to_string(key.l) + ")->(" +
                      std::to_string(key.n_prime) + "," + std::to_string(key.l_prime) + ") not in table");
  }
  return *v / c0_;
}

std::vector<double> CouplingTable::chain_couplings() const {
  std::vector<double> c;
  for (int k = 0;; ++k) {
    const int n = n0_ + k * q_;
    if (n + q_ > n_max_) break;
    c.push_back(normalized({n, n0_ - 1 + k, m_, n + q_, n0_ + k}));
  }
  return c;
}

namespace {

std::string entry_lines(const std::map<CouplingKey, double>& entries) {
  std::string out;
  for (const auto& [k, v] : entries) {
    out += std::to_string(k.n) + ' ' + std::to_string(k.l) + ' ' + std::to_string(k.m) + ' ' +
           std::to_string(k.n_prime) + ' ' + std::to_string(k.l_prime) + ' ' + format_double(v) + '\n';
  }
  return out;
}

}  // namespace

std::string CouplingTable::content_hash() const {
  const std::string header = std::to_string(q_) + ' ' + std::to_string(n0_) + ' ' + std::to_string(m_) + ' ' +
                             std::to_string(n_max_) + ' ' + scope_.tag() + ' ' + format_double(c0_) + '\n';
  return hex64(fnv1a64(header + entry_lines(entries_)));
}

std::string CouplingTable::serialize() const {
  std::ostringstream out;
  out << "# rydchirp coupling table\n";
  out << "format " << kFormatVersion << '\n';
  out << "formula laguerre-exact-rational\n";
  out << "precision_bits " << precision_bits_ << '\n';
  out << "q " << q_ << '\n' << "n0 " << n0_ << '\n' << "m " << m_ << '\n' << "n_max " << n_max_ << '\n';
  out << "scope " << scope_.tag() << ' ' << static_cast<int>(scope_.kind) << ' ' << scope_.n_min << ' '
      << scope_.max_nl << '\n';
  out << "c0 " << format_double(c0_) << '\n';
  out << "entries " << entries_.size() << '\n';
  out << entry_lines(entries_);
  out << "hash " << content_hash() << '\n';
  return out.str();
}

CouplingTable CouplingTable::deserialize(const std::string& text) {
  std::istringstream in(text);
  auto expect = [&](const std::string& word) {
    std::string w;
    if (!(in >> w) || w != word) throw IoError("coupling table: expected '" + word + "'");
  };
  std::string line;
  std::getline(in, line);
  if (line.rfind("# rydchirp coupling table", 0) != 0) throw IoError("coupling table: bad magic line");
  CouplingTable t;
  int version = 0;
  expect("format");
  in >> version;
  if (version != kFormatVersion) throw IoError("coupling table: unsupported format version");
  expect("formula");
  std::string formula;
  in >> formula;
  if (formula != "laguerre-exact-rational") throw IoError("coupling table: unknown formula tag");
  expect("precision_bits");
  in >> t.precision_bits_;
  expect("q");
  in >> t.q_;
  expect("n0");
  in >> t.n0_;
  expect("m");
  in >> t.m_;
  expect("n_max");
  in >> t.n_max_;
  expect("scope");
  std::string tag;
  int kind = 0;
  in >> tag >> kind >> t.scope_.n_min >> t.scope_.max_nl;
  t.scope_.kind = kind == 0 ? TableScope::Kind::Chain : TableScope::Kind::Basis;
  expect("c0");
  std::string c0_text;
  in >> c0_text;
  expect("entries");
  std::size_t count = 0;
  in >> count;
  if (!in) throw IoError("coupling table: truncated header");
  try {
    t.c0_ = std::stod(c0_text);
    for (std::size_t i = 0; i < count; ++i) {
      CouplingKey k;
      std::string v;
      if (!(in >> k.n >> k.l >> k.m >> k.n_prime >> k.l_prime >> v)) throw IoError("coupling table: truncated entries");
      t.entries_[k] = std::stod(v);
    }
  } catch (const std::invalid_argument&) {
    throw IoError("coupling table: malformed number");
  } catch (const std::out_of_range&) {
    throw IoError("coupling table: number out of range");
  }
  expect("hash");
  std::string hash;
  in >> hash;
  if (!in || hash != t.content_hash()) throw IoError("coupling table: content hash mismatch");
  return t;
}

std::string CouplingTable::to_csv() const {
  std::string out = "n,l,m,n_prime,l_prime,value\n";
  for (const auto& [k, v] : entries_) {
    out += std::to_string(k.n) + ',' + std::to_string(k.l) + ',' + std::to_string(k.m) + ',' +
           std::to_string(k.n_prime) + ',' + std::to_string(k.l_prime) + ',' + format_double(v) + '\n';
  }
  return out;
}

void CouplingTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_csv();
  if (!out) throw IoError("write failed: " + path);
}

std::vector<CouplingKey> table_keys(const ProblemSpec& spec, int n_max, const TableScope& scope) {
  std::vector<CouplingKey> keys;
  const int m = spec.m;
  if (scope.kind == TableScope::Kind::Chain) {
    for (int k = 0;; ++k) {
      const int n = spec.n0 + k * spec.q;
      if (n + spec.q > n_max) break;
      keys.push_back({n, spec.n0 - 1 + k, m, n + spec.q, spec.n0 + k});
    }
    return keys;
  }
  // Every Delta l = +1 pair inside the truncated basis.
  const int n_lo = std::max(scope.n_min, std::abs(m) + 1);
  auto in_basis = [&](int n, int l) { return n >= n_lo && n <= n_max && l >= std::abs(m) && l <= n - 1 && n - l <= scope.max_nl; };
  for (int n = n_lo; n <= n_max; ++n) {
    for (int l = std::max(std::abs(m), n - scope.max_nl); l <= n - 1; ++l) {
      for (int n2 = std::max(n_lo, l + 2); n2 <= n_max; ++n2) {
        if (in_basis(n2, l + 1)) keys.push_back({n, l, m, n2, l + 1});
      }
    }
  }
  return keys;
}

CouplingTable compute_table(const ProblemSpec& spec, int n_max, const TableScope& scope, unsigned precision_bits) {
  spec.validate();
  if (n_max < spec.n0 + spec.q) throw InvalidParameter("n_max must be at least n0 + q");
  CouplingTable t;
  t.q_ = spec.q;
  t.n0_ = spec.n0;
  t.m_ = spec.m;
  t.n_max_ = n_max;
  t.scope_ = scope;
  t.precision_bits_ = precision_bits;
  const CouplingKey root{spec.n0, spec.n0 - 1, spec.m, spec.n0 + spec.q, spec.n0};
  const double root_value = dipole_element(root, precision_bits).get_d();
  t.c0_ = std::fabs(root_value);
  t.entries_[root] = root_value;
  for (const auto& key : table_keys(spec, n_max, scope)) {
    if (t.entries_.count(key)) continue;
    t.entries_[key] = dipole_element(key, precision_bits).get_d();
  }
  return t;
}

std::string cache_file_name(const ProblemSpec& spec, int n_max, const TableScope& scope) {
  return "couplings_q" + std::to_string(spec.q) + "_n0" + std::to_string(spec.n0) + "_m" + std::to_string(spec.m) +
         "_nmax" + std::to_string(n_max) + "_" + scope.tag() + ".tbl";
}

CouplingTable build_table(const ProblemSpec& spec, int n_max, const TableScope& scope, const std::string& cache_dir,
                          const WarningSink& warn) {
  if (cache_dir.empty()) return compute_table(spec, n_max, scope);
  namespace fs = std::filesystem;
  const fs::path path = fs::path(cache_dir) / cache_file_name(spec, n_max, scope);
  if (fs::exists(path)) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
      CouplingTable t = CouplingTable::deserialize(buffer.str());
      if (t.q() == spec.q && t.n0() == spec.n0 && t.m() == spec.m && t.n_max() == n_max &&
          t.scope().tag() == scope.tag()) {
        return t;
      }
      if (warn) warn("coupling cache " + path.string() + " describes a different table; recomputing");
    } catch (const IoError& e) {
      if (warn) warn("coupling cache " + path.string() + " is corrupt (" + e.what() + "); recomputing");
    }
  }
  CouplingTable t = compute_table(spec, n_max, scope);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write coupling cache " + path.string());
  out << t.serialize();
  return t;
}

}  // namespace rydchirp
