#pragma once

#include <map>
#include <string>
#include <vector>

namespace scmgame::config {

// Minimal TOML-style config: [section] headers, key = value lines, where a
// value is a number, a quoted string, true/false, or a flat array of numbers.
// Comments start with '#'. That subset covers every config file in this repo.
struct Value {
    enum class Kind { Number, String, Bool, Array } kind = Kind::Number;
    double number = 0.0;
    std::string str;
    bool boolean = false;
    std::vector<double> array;
};

class File {
  public:
    static File parse(const std::string& text);
    static File load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key, double fallback) const;
    double require_number(const std::string& section, const std::string& key) const;
    std::string str(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    std::vector<double> array(const std::string& section, const std::string& key,
                              const std::vector<double>& fallback) const;

    // All keys of one section, in file order.
    std::vector<std::string> keys(const std::string& section) const;

  private:
    const Value* find(const std::string& section, const std::string& key) const;

    std::map<std::string, std::vector<std::pair<std::string, Value>>> sections_;
};

}  // namespace scmgame::config
