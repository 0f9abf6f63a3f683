#pragma once

// File outputs: deterministic CSV formatting, PGM heatmap export, and a
// little-endian binary stream for checkpoints. All numeric formatting is
// locale independent so reruns are byte identical.

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "refsim/raytrace.hpp"

namespace refsim {

inline std::string fmt_double(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline void ensure_parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

// Header row of x coordinates, first column y coordinates, cells in dBm with
// two decimals.
inline void write_heatmap_csv(const Heatmap& hm, const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "y\\x";
    for (double x : hm.xs) f << "," << fmt_double(x, 3);
    f << "\n";
    for (std::size_t iy = 0; iy < hm.ys.size(); ++iy) {
        f << fmt_double(hm.ys[iy], 3);
        for (std::size_t ix = 0; ix < hm.xs.size(); ++ix) {
            f << "," << fmt_double(hm.at(iy, ix), 2);
        }
        f << "\n";
    }
}

// 8-bit binary PGM scaled over [min_dbm, max_dbm].
inline void write_heatmap_pgm(const Heatmap& hm, const std::string& path, double min_dbm,
                              double max_dbm) {
    if (!(max_dbm > min_dbm)) throw std::invalid_argument("write_heatmap_pgm: bad dBm range");
    ensure_parent_dir(path);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "P5\n" << hm.xs.size() << " " << hm.ys.size() << "\n255\n";
    for (std::size_t iy = 0; iy < hm.ys.size(); ++iy) {
        for (std::size_t ix = 0; ix < hm.xs.size(); ++ix) {
            const double t = (hm.at(iy, ix) - min_dbm) / (max_dbm - min_dbm);
            const int g = std::clamp(static_cast<int>(std::lround(t * 255.0)), 0, 255);
            f.put(static_cast<char>(g));
        }
    }
}

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) {
        ensure_parent_dir(path);
        f_.open(path, std::ios::binary);
        if (!f_) throw std::runtime_error("cannot write " + path);
    }

    void u64(std::uint64_t v) { f_.write(reinterpret_cast<const char*>(&v), sizeof(v)); }
    void i64(std::int64_t v) { f_.write(reinterpret_cast<const char*>(&v), sizeof(v)); }
    void f64(double v) { f_.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

    void str(const std::string& s) {
        u64(s.size());
        f_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    void doubles(const double* p, std::size_t n) {
        u64(n);
        f_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    }

    void matrix(const Eigen::MatrixXd& m) {
        i64(m.rows());
        i64(m.cols());
        doubles(m.data(), static_cast<std::size_t>(m.size()));
    }

    void vector(const Eigen::VectorXd& v) { doubles(v.data(), static_cast<std::size_t>(v.size())); }
    void array(const Eigen::ArrayXd& a) { doubles(a.data(), static_cast<std::size_t>(a.size())); }

private:
    std::ofstream f_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) {
        f_.open(path, std::ios::binary);
        if (!f_) throw std::runtime_error("cannot read " + path);
    }

    std::uint64_t u64() {
        std::uint64_t v = 0;
        read(&v, sizeof(v));
        return v;
    }
    std::int64_t i64() {
        std::int64_t v = 0;
        read(&v, sizeof(v));
        return v;
    }
    double f64() {
        double v = 0;
        read(&v, sizeof(v));
        return v;
    }

    std::string str() {
        std::string s(u64(), '\0');
        read(s.data(), s.size());
        return s;
    }

    std::vector<double> doubles() {
        std::vector<double> v(u64());
        read(v.data(), v.size() * sizeof(double));
        return v;
    }

    Eigen::MatrixXd matrix() {
        const auto rows = i64();
        const auto cols = i64();
        const auto d = doubles();
        if (static_cast<std::int64_t>(d.size()) != rows * cols) {
            throw std::runtime_error("checkpoint: matrix size mismatch");
        }
        Eigen::MatrixXd m(rows, cols);
        std::copy(d.begin(), d.end(), m.data());
        return m;
    }

    Eigen::VectorXd vector() {
        const auto d = doubles();
        Eigen::VectorXd v(d.size());
        std::copy(d.begin(), d.end(), v.data());
        return v;
    }

    Eigen::ArrayXd array() {
        const auto d = doubles();
        Eigen::ArrayXd a(d.size());
        std::copy(d.begin(), d.end(), a.data());
        return a;
    }

private:
    void read(void* p, std::size_t n) {
        f_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!f_) throw std::runtime_error("checkpoint: truncated file");
    }

    std::ifstream f_;
};

}  // namespace refsim
