#pragma once

#include "tslam/loop/bow.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace tslam::loop {

/// Hierarchical binary vocabulary (k-medians tree). Nodes are stored
/// breadth-first; leaves are words.
class Vocabulary {
 public:
  struct Node {
    Descriptor center{};
    std::uint32_t first_child = kNone;
    std::uint32_t child_count = 0;
    std::int32_t word = -1;  // leaf only
  };
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;
  static constexpr std::uint32_t kFormatVersion = 1;

  Vocabulary() = default;

  /// Trains a k^L tree on per-image descriptor sets; idf = log(N / n_w)
  /// where n_w counts training images containing word w.
  [[nodiscard]] static Vocabulary train(const std::vector<std::vector<Descriptor>>& images,
                                        int branching, int depth, std::uint64_t seed);

  [[nodiscard]] std::uint32_t quantize(const Descriptor& d) const;
  /// L1-normalized tf-idf vector; zero-weight words are dropped.
  [[nodiscard]] BowVector transform(const std::vector<Descriptor>& descriptors) const;

  [[nodiscard]] std::size_t word_count() const { return idf_.size(); }
  [[nodiscard]] int branching() const { return branching_; }
  [[nodiscard]] int depth() const { return depth_; }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
  [[nodiscard]] double idf(std::uint32_t word) const { return idf_.at(word); }
  [[nodiscard]] bool empty() const { return nodes_.empty(); }

  /// Binary file: "TSLAMVOC" magic, u32 version, u32 branching, u32 depth,
  /// u32 node count, u32 word count, then per node (breadth-first)
  /// u32 first_child, u32 child_count, i32 word, f64 idf, 32 descriptor bytes.
  /// Little-endian throughout.
  void save(std::ostream& os) const;
  void save(const std::filesystem::path& path) const;
  [[nodiscard]] static Vocabulary load(std::istream& is);
  [[nodiscard]] static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary&) const;

 private:
  int branching_ = 0;
  int depth_ = 0;
  std::vector<Node> nodes_;
  std::vector<double> idf_;  // by word id
};

}  // namespace tslam::loop
