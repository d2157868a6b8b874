#pragma once

#include "lbm/kernels.hpp"
#include "lbm/lattice.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>

namespace lbm::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("lbm_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// D2Q37 table whose momentum response is amplified 1000x, so any flow grows
// without bound within a few hundred steps.
inline void write_unstable_table(const std::filesystem::path& path)
{
    const auto vs = build_velocity_set(Model::D2Q37);
    const auto base = EquilibriumModel::synthetic_hermite(vs);
    std::stringstream table;
    base.write_hermite(table);
    std::string header;
    std::getline(table, header);
    std::ofstream out(path);
    out << header << '\n' << std::setprecision(17);
    for (int l = 0; l < 37; ++l) {
        for (int k = 0; k < kHermiteCoefficients; ++k) {
            double a = base.coefficients()[static_cast<std::size_t>(l * kHermiteCoefficients + k)];
            if (k == 1 || k == 2) {
                a *= 1000.0;
            }
            out << (k ? " " : "") << a;
        }
        out << '\n';
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream(path) << text;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace lbm::test
