#pragma once
// Line-oriented "key = value" text files, used for run configs, maze
// configs and goal files. '#' starts a comment; keys are dotted paths.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mazemind {

class KvFile {
  public:
    KvFile() = default;

    static KvFile parse(std::istream& in) {
        KvFile kv;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
            std::string key = trim(trimmed.substr(0, eq));
            std::string val = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
            kv.values_[key] = val;
        }
        return kv;
    }

    static KvFile load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open config file: " + path);
        return parse(f);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_str(const std::string& key, const std::string& dflt) const {
        auto it = values_.find(key);
        return it == values_.end() ? dflt : it->second;
    }

    double get_num(const std::string& key, double dflt) const {
        auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        try {
            size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw std::runtime_error("config field '" + key + "': not a number: " + it->second);
        }
    }

    long get_int(const std::string& key, long dflt) const {
        double v = get_num(key, static_cast<double>(dflt));
        long r = static_cast<long>(v);
        if (static_cast<double>(r) != v)
            throw std::runtime_error("config field '" + key + "': expected integer");
        return r;
    }

    void set(const std::string& key, const std::string& val) { values_[key] = val; }

    const std::map<std::string, std::string>& all() const { return values_; }

  private:
    static std::string trim(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        size_t b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> values_;
};

}  // namespace mazemind
