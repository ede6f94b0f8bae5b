#include <charconv>
#include <fstream>

#include "conet/cli.hpp"

namespace conet::cli {

std::string format_double(double value)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj, std::size_t eta_stride)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    const Index n = traj.rho.empty() ? 0 : traj.rho.front().size();
    const bool with_eta = eta_stride > 0 && !traj.eta.empty();

    out << "t";
    for (Index i = 0; i < n; ++i) out << ",rho_" << i + 1;
    if (with_eta)
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) out << ",eta_" << i + 1 << '_' << j + 1;
    out << '\n';

    for (std::size_t k = 0; k < traj.samples(); ++k) {
        out << format_double(traj.times[k]);
        for (Index i = 0; i < n; ++i) out << ',' << format_double(traj.rho[k](i));
        if (with_eta) {
            // Off-stride rows keep the column count with empty cells.
            const bool snap = k % eta_stride == 0 || k + 1 == traj.samples();
            for (Index i = 0; i < n; ++i)
                for (Index j = 0; j < n; ++j) {
                    out << ',';
                    if (snap) out << format_double(traj.eta[k](i, j));
                }
        }
        out << '\n';
    }
    if (!out) throw Error("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& doc)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace conet::cli
