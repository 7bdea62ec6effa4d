#include "manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace scmgame {

using nlohmann::json;

std::uint64_t fnv1a(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t fnv1a_text(const std::string& text) { return fnv1a(text.data(), text.size()); }

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const auto n = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    return hash;
}

void RunManifest::add_input(const std::string& name, const std::string& path) {
    inputs[name] = path;
    input_hashes[name] = fnv1a_file(path);
}

void RunManifest::add_output(const std::string& name, const std::string& path) {
    outputs[name] = path;
    output_hashes[name] = fnv1a_file(path);
}

void RunManifest::stamp_time() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", utc.tm_year + 1900,
                  utc.tm_mon + 1, utc.tm_mday, utc.tm_hour, utc.tm_min, utc.tm_sec);
    timestamp = buf;
}

std::vector<std::string> RunManifest::verify_outputs() const {
    std::vector<std::string> stale;
    for (const auto& [name, path] : outputs)
        if (fnv1a_file(path) != output_hashes.at(name)) stale.push_back(path);
    return stale;
}

std::string RunManifest::to_json() const {
    json j;
    j["version"] = version;
    j["command"] = command;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    j["timestamp"] = timestamp;
    j["inputs"] = inputs;
    j["input_hashes"] = input_hashes;
    j["outputs"] = outputs;
    j["output_hashes"] = output_hashes;
    return j.dump(2);
}

RunManifest RunManifest::from_json_text(const std::string& text) {
    json j = json::parse(text);
    RunManifest m;
    m.version = j.at("version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_hash = j.at("config_hash").get<std::uint64_t>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.input_hashes = j.at("input_hashes").get<std::map<std::string, std::uint64_t>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.output_hashes = j.at("output_hashes").get<std::map<std::string, std::uint64_t>>();
    return m;
}

void RunManifest::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot open " + path);
    out << to_json() << "\n";
}

RunManifest RunManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

}  // namespace scmgame
