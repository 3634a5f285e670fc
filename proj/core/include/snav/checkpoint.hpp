#ifndef SNAV_CHECKPOINT_HPP
#define SNAV_CHECKPOINT_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace snav::io {

/// Versioned binary checkpoint: magic, format version, a kind tag, then a
/// list of row-major double matrices with their dimensions. Shared by the
/// RNN and DQN weight files.
void write_checkpoint(const std::string& path, std::uint32_t kind,
                      const std::vector<Eigen::MatrixXd>& matrices);

struct Checkpoint {
    std::uint32_t kind = 0;
    std::vector<Eigen::MatrixXd> matrices;
};

Checkpoint read_checkpoint(const std::string& path);

constexpr std::uint32_t kKindRnn = 1;
constexpr std::uint32_t kKindDqn = 2;
constexpr std::uint32_t kKindDataset = 3;

}  // namespace snav::io

#endif
