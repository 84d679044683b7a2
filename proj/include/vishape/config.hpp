#ifndef VISHAPE_CONFIG_HPP
#define VISHAPE_CONFIG_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace vishape {

// Flat INI-style configuration: [section] headers, key = value lines,
// comments with '#' or ';'. Keys are addressed as "section.key".
class Config {
public:
    static Config parse(const std::string& text);
    static Config parse_file(const std::string& path);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<double> get_list(const std::string& key) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// Raised for malformed files or missing/invalid keys; the CLI maps it to
// exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace vishape

#endif
