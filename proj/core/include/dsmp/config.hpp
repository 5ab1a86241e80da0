// Flat key=value experiment configuration. Unknown keys are rejected against
// the schema supplied by the consumer; '#' starts a comment.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dsmp {

class Config {
public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_text(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  // Throws std::invalid_argument naming the first key not in `known`.
  void require_known_keys(const std::set<std::string>& known) const;

  // FNV-1a over the canonical (sorted key=value) text; stable across runs.
  // Keys that only describe the run environment (out_dir, threads) are
  // excluded so relocated reruns hash identically.
  std::uint64_t hash() const;
  std::string canonical_text() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

private:
  std::map<std::string, std::string> kv_;
};

}  // namespace dsmp
