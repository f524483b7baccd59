#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "carleman/experiment.hpp"

namespace carleman {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

}  // namespace detail

/// Flat key = value configuration, one [section] per module:
///
///   [grid]        N, M
///   [problem]     nonlinearity = s1 | s2 | zero
///   [functional]  beta, lambda_list = 0,1,3
///   [noise]       level, seed
///   [optimizer]   method = cg | gp, gamma, iters, R (number or inf)
///   [experiment]  starts = zero,quad,sinsq
///   [output]      slice_x, dir
///
/// Lines starting with '#' or ';' are comments. Unknown sections or keys
/// are configuration errors.
inline std::map<std::string, std::string> parse_config_text(std::istream& in,
                                                            const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                            ": malformed section header");
            section = detail::trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string val = detail::trim(s.substr(eq + 1));
        if (section.empty())
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": key outside of a [section]");
        kv[section + "." + key] = val;
    }
    return kv;
}

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    return parse_config_text(f, path);
}

/// Applies parsed keys on top of cfg. Values are validated here so a bad
/// config surfaces as a configuration error before any numerics run.
inline void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
    auto to_int = [](const std::string& k, const std::string& v) {
        try {
            std::size_t pos = 0;
            const int x = std::stoi(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (...) {
            throw std::invalid_argument("config key " + k + ": not an integer: " + v);
        }
    };
    auto to_double = [](const std::string& k, const std::string& v) {
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (...) {
            throw std::invalid_argument("config key " + k + ": not a number: " + v);
        }
    };
    for (const auto& [key, val] : kv) {
        if (key == "grid.N") cfg.N = to_int(key, val);
        else if (key == "grid.M") cfg.M = to_int(key, val);
        else if (key == "problem.nonlinearity") cfg.nonlinearity = nonlinearity_from_name(val);
        else if (key == "functional.beta") cfg.beta = to_double(key, val);
        else if (key == "functional.lambda_list") {
            cfg.lambda_list.clear();
            for (const std::string& item : detail::split_list(val))
                cfg.lambda_list.push_back(to_double(key, item));
            if (cfg.lambda_list.empty())
                throw std::invalid_argument("config key " + key + ": empty list");
        } else if (key == "noise.level") cfg.noise_level = to_double(key, val);
        else if (key == "noise.seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(val));
        else if (key == "optimizer.method") {
            if (val == "cg") cfg.method = OptMethod::FixedStepCG;
            else if (val == "gp") cfg.method = OptMethod::GradientProjection;
            else throw std::invalid_argument("config key optimizer.method: want cg or gp, got " + val);
        } else if (key == "optimizer.gamma") cfg.gamma = to_double(key, val);
        else if (key == "optimizer.iters") cfg.iters = to_int(key, val);
        else if (key == "optimizer.R") {
            cfg.R = (val == "inf") ? std::numeric_limits<double>::infinity() : to_double(key, val);
        } else if (key == "experiment.starts") {
            cfg.starts.clear();
            for (const std::string& item : detail::split_list(val))
                cfg.starts.push_back(start_from_name(item));
            if (cfg.starts.empty())
                throw std::invalid_argument("config key " + key + ": empty list");
        } else if (key == "output.slice_x") cfg.slice_x = to_double(key, val);
        else if (key == "output.dir") cfg.output_dir = val;
        else throw std::invalid_argument("unknown config key: " + key);
    }
}

}  // namespace carleman
