#pragma once

#include <map>
#include <string>
#include <vector>

namespace toda {

enum class ValueType { Int, Double, Bool, String, IntList, DoubleList };

struct KeySpec {
  std::string name;  // section.key
  ValueType type;
  std::string fallback;  // default text; empty lists allowed
  std::vector<std::string> choices;  // allowed strings, empty for free text
  std::string doc;
};

/// Every accepted key, in rendering order.
const std::vector<KeySpec>& config_schema();

/// Flat key = value configuration with [sections]. Values are validated
/// against the schema and stored in canonical text form.
class RunConfig {
 public:
  /// Throws Error(Config) naming the line on unknown sections or keys,
  /// duplicates, malformed lines and values of the wrong type.
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  /// Explicitly set keys only, or the effective configuration with defaults.
  std::string render(bool with_defaults = false) const;
  /// Hash of the effective configuration.
  std::string hash() const;

  void set(const std::string& name, const std::string& value);
  bool has(const std::string& name) const;

  long get_int(const std::string& name) const;
  double get_double(const std::string& name) const;
  bool get_bool(const std::string& name) const;
  std::string get_string(const std::string& name) const;
  std::vector<long> get_int_list(const std::string& name) const;
  std::vector<double> get_double_list(const std::string& name) const;

  bool operator==(const RunConfig& o) const { return values_ == o.values_; }

 private:
  std::string text_of(const std::string& name) const;
  std::map<std::string, std::string> values_;
};

}  // namespace toda
