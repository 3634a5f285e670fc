#include "snav/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace snav::io {

namespace {
constexpr char kMagic[8] = {'S', 'N', 'A', 'V', 'W', '0', '0', '1'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_checkpoint(const std::string& path, std::uint32_t kind,
                      const std::vector<Eigen::MatrixXd>& matrices) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_checkpoint: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    auto put_u32 = [&](std::uint32_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    put_u32(kVersion);
    put_u32(kind);
    put_u32(static_cast<std::uint32_t>(matrices.size()));
    for (const auto& m : matrices) {
        put_u32(static_cast<std::uint32_t>(m.rows()));
        put_u32(static_cast<std::uint32_t>(m.cols()));
        // Row-major layout.
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                const double v = m(r, c);
                out.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
        }
    }
    if (!out) throw std::runtime_error("write_checkpoint: write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 8) != std::string(kMagic, 8))
        throw std::runtime_error("read_checkpoint: bad magic in " + path);
    auto get_u32 = [&]() {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    };
    const std::uint32_t version = get_u32();
    if (version != kVersion)
        throw std::runtime_error("read_checkpoint: unsupported version");
    Checkpoint ck;
    ck.kind = get_u32();
    const std::uint32_t count = get_u32();
    ck.matrices.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t rows = get_u32();
        const std::uint32_t cols = get_u32();
        Eigen::MatrixXd m(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r) {
            for (std::uint32_t c = 0; c < cols; ++c) {
                double v = 0.0;
                in.read(reinterpret_cast<char*>(&v), sizeof(v));
                m(r, c) = v;
            }
        }
        ck.matrices[i] = std::move(m);
    }
    if (!in) throw std::runtime_error("read_checkpoint: truncated file " + path);
    return ck;
}

}  // namespace snav::io
