#include "perco/config.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace perco {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'C', '1'};

std::size_t word_count(std::int64_t sites) {
  return static_cast<std::size_t>((sites + 63) / 64);
}

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  auto u = static_cast<std::uint64_t>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error("truncated config stream");
  std::uint64_t u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(u);
}

}  // namespace

Config::Config(Window window, std::vector<std::uint64_t> words, std::string model_tag, std::uint64_t seed)
    : window_(std::move(window)), words_(std::move(words)), model_tag_(std::move(model_tag)), seed_(seed) {
  if (words_.size() != word_count(window_.num_sites())) {
    throw std::invalid_argument("occupancy length does not match window");
  }
  // Zero the tail bits so occupancy comparisons and serialization are canonical.
  int tail = static_cast<int>(window_.num_sites() & 63);
  if (tail != 0 && !words_.empty()) {
    words_.back() &= (~std::uint64_t{0}) >> (64 - tail);
  }
}

Config Config::from_bits(Window window, const std::vector<std::uint8_t>& bits, std::string model_tag,
                         std::uint64_t seed) {
  if (static_cast<std::int64_t>(bits.size()) != window.num_sites()) {
    throw std::invalid_argument("occupancy length does not match window");
  }
  std::vector<std::uint64_t> words(word_count(window.num_sites()), 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) words[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
  return Config(std::move(window), std::move(words), std::move(model_tag), seed);
}

Config Config::constant(Window window, bool value, std::string model_tag, std::uint64_t seed) {
  std::vector<std::uint64_t> words(word_count(window.num_sites()), value ? ~std::uint64_t{0} : 0);
  return Config(std::move(window), std::move(words), std::move(model_tag), seed);
}

std::int64_t Config::occupied_count() const {
  std::int64_t n = 0;
  for (std::uint64_t w : words_) n += std::popcount(w);
  return n;
}

void Config::save(std::ostream& out) const {
  out.write(kMagic, 4);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(window_.dim()));
  write_le<std::uint8_t>(out, static_cast<std::uint8_t>(window_.geometry()));
  for (Coord a : window_.anchor()) write_le<std::int64_t>(out, a);
  for (Coord s : window_.sides()) write_le<std::int64_t>(out, s);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model_tag_.size()));
  out.write(model_tag_.data(), static_cast<std::streamsize>(model_tag_.size()));
  write_le<std::uint64_t>(out, seed_);
  for (std::uint64_t w : words_) write_le<std::uint64_t>(out, w);
}

Config Config::load(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || magic[0] != 'P' || magic[1] != 'R' || magic[2] != 'C' || magic[3] != '1') {
    throw std::runtime_error("bad config magic");
  }
  auto d = read_le<std::uint32_t>(in);
  if (d < 2 || d > 20) throw std::runtime_error("bad config dimension");
  auto geom = static_cast<Geometry>(read_le<std::uint8_t>(in));
  Point anchor(d);
  std::vector<Coord> sides(d);
  for (auto& a : anchor) a = read_le<std::int64_t>(in);
  for (auto& s : sides) s = read_le<std::int64_t>(in);
  auto tag_len = read_le<std::uint32_t>(in);
  std::string tag(tag_len, '\0');
  in.read(tag.data(), tag_len);
  auto seed = read_le<std::uint64_t>(in);
  Window w(geom, std::move(anchor), std::move(sides));
  std::vector<std::uint64_t> words(word_count(w.num_sites()));
  for (auto& word : words) word = read_le<std::uint64_t>(in);
  return Config(std::move(w), std::move(words), std::move(tag), seed);
}

void Config::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save(out);
}

Config Config::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Config::load(in);
}

OccupancyBuffer::OccupancyBuffer(std::int64_t num_sites, bool value)
    : num_sites_(num_sites), words_(word_count(num_sites), value ? ~std::uint64_t{0} : 0) {}

void OccupancyBuffer::set(SiteIndex s, bool v) {
  std::uint64_t mask = std::uint64_t{1} << (s & 63);
  if (v) {
    words_[static_cast<std::size_t>(s >> 6)] |= mask;
  } else {
    words_[static_cast<std::size_t>(s >> 6)] &= ~mask;
  }
}

Config OccupancyBuffer::freeze(Window window, std::string model_tag, std::uint64_t seed) && {
  if (window.num_sites() != num_sites_) throw std::invalid_argument("window/buffer size mismatch");
  return Config(std::move(window), std::move(words_), std::move(model_tag), seed);
}

}  // namespace perco
