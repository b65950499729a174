#include "tslam/loop/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>

namespace tslam::loop {

namespace {

// Bitwise majority of the given descriptors.
Descriptor median(const std::vector<Descriptor>& all, const std::vector<std::uint32_t>& members) {
  std::array<std::uint32_t, 256> ones{};
  for (std::uint32_t m : members) {
    const Descriptor& d = all[m];
    for (int b = 0; b < 256; ++b) ones[b] += (d[b / 64] >> (b % 64)) & 1u;
  }
  Descriptor out{};
  for (int b = 0; b < 256; ++b) {
    if (2 * ones[b] > members.size()) out[b / 64] |= std::uint64_t{1} << (b % 64);
  }
  return out;
}

// k-medians with k-means++ seeding under Hamming distance.
std::vector<std::vector<std::uint32_t>> cluster(const std::vector<Descriptor>& all,
                                                const std::vector<std::uint32_t>& members, int k,
                                                std::mt19937_64& rng,
                                                std::vector<Descriptor>& centers) {
  centers.clear();
  std::uniform_int_distribution<std::size_t> first(0, members.size() - 1);
  centers.push_back(all[members[first(rng)]]);
  std::vector<double> d2(members.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const double d = hamming(all[members[i]], centers.back());
      d2[i] = std::min(d2[i], d * d);
      total += d2[i];
    }
    if (total <= 0.0) break;  // fewer distinct descriptors than k
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t pick = members.size() - 1;
    for (std::size_t i = 0; i < members.size(); ++i) {
      target -= d2[i];
      if (target <= 0.0 && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(all[members[pick]]);
  }

  std::vector<std::vector<std::uint32_t>> groups;
  std::vector<std::size_t> assignment(members.size(), 0);
  for (int it = 0; it < 10; ++it) {
    groups.assign(centers.size(), {});
    bool changed = false;
    for (std::size_t i = 0; i < members.size(); ++i) {
      std::size_t best = 0;
      int best_d = 257;
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const int d = hamming(all[members[i]], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (it == 0 || assignment[i] != best) changed = true;
      assignment[i] = best;
      groups[best].push_back(members[i]);
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (!groups[c].empty()) centers[c] = median(all, groups[c]);
    }
    if (!changed) break;
  }
  // Drop empty clusters.
  std::vector<std::vector<std::uint32_t>> kept;
  std::vector<Descriptor> kept_centers;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty()) continue;
    kept.push_back(std::move(groups[c]));
    kept_centers.push_back(centers[c]);
  }
  centers = std::move(kept_centers);
  return kept;
}

template <typename T>
void put(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));  // host is little-endian (checked below)
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw std::runtime_error("vocabulary: truncated file");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

constexpr char kMagic[8] = {'T', 'S', 'L', 'A', 'M', 'V', 'O', 'C'};

static_assert(std::endian::native == std::endian::little,
              "vocabulary I/O assumes a little-endian host");

}  // namespace

Vocabulary Vocabulary::train(const std::vector<std::vector<Descriptor>>& images, int branching,
                             int depth, std::uint64_t seed) {
  if (branching < 2 || depth < 1) throw std::invalid_argument("vocabulary: bad tree shape");
  std::vector<Descriptor> all;
  std::vector<std::uint32_t> owner;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (const auto& d : images[i]) {
      all.push_back(d);
      owner.push_back(static_cast<std::uint32_t>(i));
    }
  }
  if (all.empty()) throw std::invalid_argument("vocabulary: no training descriptors");

  Vocabulary voc;
  voc.branching_ = branching;
  voc.depth_ = depth;
  std::mt19937_64 rng(seed);

  struct Pending {
    std::uint32_t node;
    int level;
    std::vector<std::uint32_t> members;
  };
  std::vector<std::uint32_t> root_members(all.size());
  for (std::uint32_t i = 0; i < root_members.size(); ++i) root_members[i] = i;
  voc.nodes_.push_back(Node{});
  std::queue<Pending> queue;
  queue.push({0, 0, std::move(root_members)});
  std::vector<std::vector<std::uint32_t>> leaf_members;

  while (!queue.empty()) {
    Pending p = std::move(queue.front());
    queue.pop();
    const bool leaf = p.level == depth || p.members.size() <= 1;
    if (leaf) {
      voc.nodes_[p.node].word = static_cast<std::int32_t>(leaf_members.size());
      leaf_members.push_back(std::move(p.members));
      continue;
    }
    std::vector<Descriptor> centers;
    auto groups = cluster(all, p.members, branching, rng, centers);
    if (groups.size() == 1) {
      // Identical descriptors: stop splitting here.
      voc.nodes_[p.node].word = static_cast<std::int32_t>(leaf_members.size());
      leaf_members.push_back(std::move(p.members));
      continue;
    }
    const auto first = static_cast<std::uint32_t>(voc.nodes_.size());
    voc.nodes_[p.node].first_child = first;
    voc.nodes_[p.node].child_count = static_cast<std::uint32_t>(groups.size());
    for (std::size_t c = 0; c < groups.size(); ++c) {
      Node child;
      child.center = centers[c];
      voc.nodes_.push_back(child);
      queue.push({first + static_cast<std::uint32_t>(c), p.level + 1, std::move(groups[c])});
    }
  }

  const double n_images = static_cast<double>(std::max<std::size_t>(images.size(), 1));
  voc.idf_.resize(leaf_members.size());
  for (std::size_t w = 0; w < leaf_members.size(); ++w) {
    std::set<std::uint32_t> seen;
    for (std::uint32_t m : leaf_members[w]) seen.insert(owner[m]);
    voc.idf_[w] = std::log(n_images / static_cast<double>(seen.size()));
  }
  return voc;
}

std::uint32_t Vocabulary::quantize(const Descriptor& d) const {
  if (nodes_.empty()) throw std::logic_error("vocabulary: empty");
  std::uint32_t node = 0;
  while (nodes_[node].word < 0) {
    const Node& n = nodes_[node];
    std::uint32_t best = n.first_child;
    int best_d = 257;
    for (std::uint32_t c = n.first_child; c < n.first_child + n.child_count; ++c) {
      const int dist = hamming(d, nodes_[c].center);
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    node = best;
  }
  return static_cast<std::uint32_t>(nodes_[node].word);
}

BowVector Vocabulary::transform(const std::vector<Descriptor>& descriptors) const {
  BowVector v;
  if (descriptors.empty()) return v;
  const double tf = 1.0 / static_cast<double>(descriptors.size());
  for (const auto& d : descriptors) {
    const std::uint32_t w = quantize(d);
    if (idf_[w] > 0.0) v[w] += tf * idf_[w];
  }
  l1_normalize(v);
  return v;
}

void Vocabulary::save(std::ostream& os) const {
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kFormatVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(branching_));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(depth_));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(nodes_.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(idf_.size()));
  for (const Node& n : nodes_) {
    put<std::uint32_t>(os, n.first_child);
    put<std::uint32_t>(os, n.child_count);
    put<std::int32_t>(os, n.word);
    put<double>(os, n.word >= 0 ? idf_[static_cast<std::size_t>(n.word)] : 0.0);
    for (std::uint64_t part : n.center) put<std::uint64_t>(os, part);
  }
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  save(os);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Vocabulary Vocabulary::load(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("vocabulary: bad magic");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kFormatVersion) {
    throw std::runtime_error("vocabulary: unsupported version " + std::to_string(version));
  }
  Vocabulary voc;
  voc.branching_ = static_cast<int>(get<std::uint32_t>(is));
  voc.depth_ = static_cast<int>(get<std::uint32_t>(is));
  const auto node_count = get<std::uint32_t>(is);
  const auto word_count = get<std::uint32_t>(is);
  voc.nodes_.resize(node_count);
  voc.idf_.assign(word_count, 0.0);
  for (std::uint32_t i = 0; i < node_count; ++i) {
    Node& n = voc.nodes_[i];
    n.first_child = get<std::uint32_t>(is);
    n.child_count = get<std::uint32_t>(is);
    n.word = get<std::int32_t>(is);
    const double idf = get<double>(is);
    for (auto& part : n.center) part = get<std::uint64_t>(is);
    if (n.word >= 0) {
      if (static_cast<std::uint32_t>(n.word) >= word_count) {
        throw std::runtime_error("vocabulary: word id out of range at node " + std::to_string(i));
      }
      voc.idf_[static_cast<std::size_t>(n.word)] = idf;
    } else if (n.first_child == kNone || n.first_child + n.child_count > node_count ||
               n.child_count == 0) {
      throw std::runtime_error("vocabulary: broken child link at node " + std::to_string(i));
    }
  }
  return voc;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return load(is);
}

bool Vocabulary::operator==(const Vocabulary& o) const {
  if (branching_ != o.branching_ || depth_ != o.depth_ || idf_ != o.idf_ ||
      nodes_.size() != o.nodes_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& a = nodes_[i];
    const Node& b = o.nodes_[i];
    if (a.center != b.center || a.first_child != b.first_child ||
        a.child_count != b.child_count || a.word != b.word) {
      return false;
    }
  }
  return true;
}

}  // namespace tslam::loop
