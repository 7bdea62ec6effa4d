#include "config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scmgame::config {

static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

static Value parse_value(const std::string& raw, int lineno) {
    Value v;
    std::string s = trim(raw);
    if (s.empty()) throw std::runtime_error("config line " + std::to_string(lineno) + ": empty value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated string");
        v.kind = Value::Kind::String;
        v.str = s.substr(1, s.size() - 2);
        return v;
    }
    if (s == "true" || s == "false") {
        v.kind = Value::Kind::Bool;
        v.boolean = (s == "true");
        return v;
    }
    if (s.front() == '[') {
        if (s.back() != ']')
            throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated array");
        v.kind = Value::Kind::Array;
        std::string body = s.substr(1, s.size() - 2);
        std::istringstream in(body);
        std::string item;
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            v.array.push_back(std::stod(item));
        }
        return v;
    }
    v.kind = Value::Kind::Number;
    try {
        std::size_t pos = 0;
        v.number = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
        throw std::runtime_error("config line " + std::to_string(lineno) + ": bad number '" + s + "'");
    }
    return v;
}

File File::parse(const std::string& text) {
    File f;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            f.sections_[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        f.sections_[section].emplace_back(key, parse_value(line.substr(eq + 1), lineno));
    }
    return f;
}

File File::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const Value* File::find(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return nullptr;
    for (const auto& [k, v] : it->second)
        if (k == key) return &v;
    return nullptr;
}

bool File::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

double File::number(const std::string& section, const std::string& key, double fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::Number)
        throw std::runtime_error("config: " + section + "." + key + " is not a number");
    return v->number;
}

double File::require_number(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) throw std::runtime_error("config: missing " + section + "." + key);
    if (v->kind != Value::Kind::Number)
        throw std::runtime_error("config: " + section + "." + key + " is not a number");
    return v->number;
}

std::string File::str(const std::string& section, const std::string& key,
                      const std::string& fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::String)
        throw std::runtime_error("config: " + section + "." + key + " is not a string");
    return v->str;
}

std::vector<double> File::array(const std::string& section, const std::string& key,
                                const std::vector<double>& fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::Array)
        throw std::runtime_error("config: " + section + "." + key + " is not an array");
    return v->array;
}

std::vector<std::string> File::keys(const std::string& section) const {
    std::vector<std::string> out;
    auto it = sections_.find(section);
    if (it == sections_.end()) return out;
    for (const auto& [k, v] : it->second) out.push_back(k);
    return out;
}

}  // namespace scmgame::config
