#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace test {

inline std::string source_path(const std::string& rel) { return std::string(HFTX_SOURCE_DIR) + "/" + rel; }

inline std::string catalog_path() { return source_path("data/catalog.txt"); }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Seeded generator so property tests are reproducible.
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(unsigned long long seed) : gen(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
};

inline double rel_err(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace test
