#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace scmgame {

// FNV-1a 64-bit content hashes used to chain pipeline stages.
std::uint64_t fnv1a(const void* data, std::size_t size);
std::uint64_t fnv1a_text(const std::string& text);
std::uint64_t fnv1a_file(const std::string& path);

// One manifest per pipeline stage: what ran, on which inputs (with hashes),
// producing which outputs (with hashes). Downstream stages re-hash their
// inputs against the upstream manifest before trusting them.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::string timestamp;  // ISO 8601 UTC, informational only
    std::string version = "run-manifest-v1";
    std::map<std::string, std::string> inputs;    // name -> path
    std::map<std::string, std::uint64_t> input_hashes;
    std::map<std::string, std::string> outputs;
    std::map<std::string, std::uint64_t> output_hashes;

    void add_input(const std::string& name, const std::string& path);
    void add_output(const std::string& name, const std::string& path);
    void stamp_time();

    // Paths whose current content no longer matches the recorded hash.
    std::vector<std::string> verify_outputs() const;

    std::string to_json() const;
    static RunManifest from_json_text(const std::string& text);
    void save(const std::string& path) const;
    static RunManifest load(const std::string& path);
};

}  // namespace scmgame
