#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "perco/lattice.hpp"

namespace perco {

// Occupancy field over a window, bit-packed into 64-bit words and immutable
// after construction; shared read-only across workers.
class Config {
 public:
  Config(Window window, std::vector<std::uint64_t> words, std::string model_tag, std::uint64_t seed);

  static Config from_bits(Window window, const std::vector<std::uint8_t>& bits, std::string model_tag,
                          std::uint64_t seed);
  static Config constant(Window window, bool value, std::string model_tag, std::uint64_t seed);

  const Window& window() const { return window_; }
  const std::string& model_tag() const { return model_tag_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& words() const { return words_; }

  bool occupied(SiteIndex s) const {
    return (words_[static_cast<std::size_t>(s >> 6)] >> (s & 63)) & 1u;
  }
  bool occupied_at(const Point& p) const { return occupied(window_.index_of(p)); }
  std::int64_t occupied_count() const;

  bool same_occupancy(const Config& o) const { return window_ == o.window_ && words_ == o.words_; }

  // Binary layout: magic "PRC1", then little-endian u32 d, u8 geometry,
  // i64 anchor[d], i64 sides[d], u32 tag length, tag bytes, u64 seed, then
  // ceil(sites/64) little-endian 64-bit occupancy words (site s is bit s%64
  // of word s/64, row-major site order).
  void save(std::ostream& out) const;
  static Config load(std::istream& in);
  void save_file(const std::string& path) const;
  static Config load_file(const std::string& path);

 private:
  Window window_;
  std::vector<std::uint64_t> words_;
  std::string model_tag_;
  std::uint64_t seed_;
};

// Scratch bit vector used while a sampler fills occupancy.
class OccupancyBuffer {
 public:
  explicit OccupancyBuffer(std::int64_t num_sites, bool value = false);
  void set(SiteIndex s, bool v);
  bool get(SiteIndex s) const {
    return (words_[static_cast<std::size_t>(s >> 6)] >> (s & 63)) & 1u;
  }
  Config freeze(Window window, std::string model_tag, std::uint64_t seed) &&;

 private:
  std::int64_t num_sites_;
  std::vector<std::uint64_t> words_;
};

}  // namespace perco
