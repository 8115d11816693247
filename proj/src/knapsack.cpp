#include "denovo/knapsack.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "denovo/errors.hpp"

namespace denovo {

namespace {

constexpr char kMagic[8] = {'D', 'N', 'K', 'N', 'A', 'P', 'S', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError("truncated knapsack cache", 0);
  return v;
}

}  // namespace

KnapsackTable KnapsackTable::build(const Vocabulary& vocab, double resolution, double max_mass) {
  if (!(resolution > 0.0)) throw DomainError("knapsack resolution must be positive");
  if (resolution > kCoarsestResolution) throw DomainError("knapsack resolution must be <= 0.01 Da");
  double largest = 0.0;
  for (TokenId id : vocab.residue_ids()) largest = std::max(largest, vocab.residue_mass(id));
  if (max_mass < largest) throw DomainError("knapsack max_mass below the largest residue mass");

  KnapsackTable t;
  t.resolution_ = resolution;
  t.max_mass_ = max_mass;
  t.vocab_hash_ = vocab.hash();
  t.cells_ = static_cast<std::size_t>(std::floor(max_mass / resolution)) + 1;
  for (TokenId id : vocab.residue_ids()) {
    const auto c = static_cast<std::int64_t>(std::llround(vocab.residue_mass(id) / resolution));
    // Every residue spans at least one full word at <= 0.01 Da, so each
    // word only reads strictly earlier, already final words.
    if (c < 64) throw DomainError("knapsack: residue narrower than one bitset word");
    t.residue_cells_.push_back(c);
  }
  const std::size_t n_words = (t.cells_ + 63) / 64;
  t.words_.assign(n_words, 0);
  t.words_[0] = 1;
  for (std::size_t w = 0; w < n_words; ++w) {
    std::uint64_t acc = t.words_[w];
    const auto base = static_cast<std::int64_t>(w) * 64;
    for (std::int64_t c : t.residue_cells_) {
      const std::int64_t s = base - c;  // first source bit
      if (s + 63 < 0) continue;
      if (s < 0) {
        acc |= t.words_[0] << (-s);
        continue;
      }
      const auto q = static_cast<std::size_t>(s / 64);
      const auto r = static_cast<unsigned>(s % 64);
      std::uint64_t v = t.words_[q] >> r;
      if (r != 0) v |= t.words_[q + 1] << (64 - r);
      acc |= v;
    }
    t.words_[w] = acc;
  }
  const std::size_t tail = t.cells_ % 64;
  if (tail != 0) t.words_.back() &= (std::uint64_t{1} << tail) - 1;
  return t;
}

bool KnapsackTable::feasible_cell(std::size_t cell) const {
  if (cell >= cells_) return false;
  return (words_[cell / 64] >> (cell % 64)) & 1U;
}

bool KnapsackTable::any_in_cells(std::int64_t lo, std::int64_t hi) const {
  lo = std::max<std::int64_t>(lo, 0);
  hi = std::min<std::int64_t>(hi, static_cast<std::int64_t>(cells_) - 1);
  if (lo > hi) return false;
  auto wlo = static_cast<std::size_t>(lo / 64), whi = static_cast<std::size_t>(hi / 64);
  for (std::size_t w = wlo; w <= whi; ++w) {
    std::uint64_t m = words_[w];
    if (w == wlo) m &= ~std::uint64_t{0} << (lo % 64);
    if (w == whi && hi % 64 != 63) m &= (std::uint64_t{1} << (hi % 64 + 1)) - 1;
    if (m) return true;
  }
  return false;
}

bool KnapsackTable::feasible(double mass, double tolerance) const {
  if (mass + tolerance < 0.0) return false;
  const auto lo = static_cast<std::int64_t>(std::floor((mass - tolerance) / resolution_));
  const auto hi = static_cast<std::int64_t>(std::ceil((mass + tolerance) / resolution_));
  return any_in_cells(lo, hi);
}

void KnapsackTable::save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put(out, resolution_);
  put(out, max_mass_);
  put(out, vocab_hash_);
  put(out, static_cast<std::uint64_t>(cells_));
  put(out, static_cast<std::uint64_t>(residue_cells_.size()));
  for (auto c : residue_cells_) put(out, c);
  put(out, static_cast<std::uint64_t>(words_.size()));
  out.write(reinterpret_cast<const char*>(words_.data()), static_cast<std::streamsize>(words_.size() * 8));
  if (!out) throw IoError("failed writing knapsack cache");
}

KnapsackTable KnapsackTable::load(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw ParseError("not a knapsack cache", 0);
  if (get<std::uint32_t>(in) != kVersion) throw ParseError("unsupported knapsack cache version", 0);
  KnapsackTable t;
  t.resolution_ = get<double>(in);
  t.max_mass_ = get<double>(in);
  t.vocab_hash_ = get<std::uint64_t>(in);
  t.cells_ = get<std::uint64_t>(in);
  const auto n_res = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n_res; ++i) t.residue_cells_.push_back(get<std::int64_t>(in));
  const auto n_words = get<std::uint64_t>(in);
  if (n_words != (t.cells_ + 63) / 64) throw ParseError("knapsack cache word count mismatch", 0);
  t.words_.resize(n_words);
  if (!in.read(reinterpret_cast<char*>(t.words_.data()), static_cast<std::streamsize>(n_words * 8)))
    throw ParseError("truncated knapsack cache", 0);
  return t;
}

std::string KnapsackTable::cache_file_name(const Vocabulary& vocab, double resolution, double max_mass) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "knapsack-%016llx-%.6f-%.1f.bin",
                static_cast<unsigned long long>(vocab.hash()), resolution, max_mass);
  return buf;
}

KnapsackTable KnapsackTable::load_or_build(const std::string& cache_dir, const Vocabulary& vocab, double resolution,
                                           double max_mass) {
  namespace fs = std::filesystem;
  const fs::path path = fs::path(cache_dir) / cache_file_name(vocab, resolution, max_mass);
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    try {
      KnapsackTable t = load(in);
      if (t.vocab_hash_ == vocab.hash() && t.resolution_ == resolution && t.max_mass_ == max_mass) return t;
    } catch (const ParseError&) {
      // Stale or corrupt cache: rebuild below.
    }
  }
  KnapsackTable t = build(vocab, resolution, max_mass);
  std::error_code ec;
  fs::create_directories(cache_dir, ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (out) t.save(out);
  }
  fs::rename(tmp, path, ec);
  return t;
}

}  // namespace denovo
