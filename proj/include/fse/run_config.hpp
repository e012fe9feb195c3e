#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace fse {

/// Merged key=value configuration: defaults, then config file, then flag
/// overrides. Unknown keys are rejected. The resolved map is serialized into
/// every output directory for provenance.
class RunConfig {
public:
    RunConfig();  // populates defaults

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    std::string get_str(const std::string& key) const { return get(key); }
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;

    /// Writes resolved key=value lines sorted by key.
    void save(const std::string& path) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace fse
