#include "fse/run_config.hpp"

#include <fstream>

#include "fse/errors.hpp"

namespace fse {

RunConfig::RunConfig() {
    values_ = {
        {"category", "table"},
        {"objects", "10"},
        {"seed", "0"},
        {"tau", "0.05"},
        {"dim", "16"},
        {"points", "1024"},
        {"mode", "ranking"},
        {"alpha", "0.05"},
        {"epochs", "200"},
        {"batch", "8"},
        {"batches_per_epoch", "0"},
        {"lr", "0.001"},
        {"lr_decay", "0.7"},
        {"lr_decay_steps", "200000"},
        {"beta1", "0.9"},
        {"beta2", "0.999"},
        {"eps", "1e-8"},
        {"eval_every", "0"},
        {"checkpoint_every", "0"},
        {"max_partials", "4096"},
        {"k", "5"},
        {"threads", "1"},
        {"dataset_dir", ""},
        {"out_dir", ""},
        {"checkpoint", ""},
    };
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown configuration key '" + key + "'");
    it->second = value;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("config file not found: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown configuration key '" + key + "'");
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::exception&) {
        throw UsageError("configuration key '" + key + "' is not a number: " + get(key));
    }
}

int RunConfig::get_int(const std::string& key) const {
    try {
        return std::stoi(get(key));
    } catch (const std::exception&) {
        throw UsageError("configuration key '" + key + "' is not an integer: " + get(key));
    }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    try {
        return std::stoull(get(key));
    } catch (const std::exception&) {
        throw UsageError("configuration key '" + key + "' is not an integer: " + get(key));
    }
}

void RunConfig::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write config: " + path);
    for (const auto& [k, v] : values_) os << k << "=" << v << "\n";
}

}  // namespace fse
