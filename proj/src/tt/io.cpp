#include "ttergodic/tt/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ttergodic/errors.hpp"

namespace ttergodic::tt {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary TT format assumes a little-endian host");

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("truncated TT header");
  return v;
}

// Guards against absurd headers before any allocation happens.
constexpr std::uint64_t kMaxDim = 1u << 20;

}  // namespace

void write_tt(std::ostream& out, const TtTensor& t) {
  put_u64(out, t.order());
  for (Index n : t.mode_sizes()) put_u64(out, static_cast<std::uint64_t>(n));
  for (Index r : t.ranks()) put_u64(out, static_cast<std::uint64_t>(r));
  for (const Core& c : t.cores()) {
    for (Index a = 0; a < c.left_rank(); ++a) {
      for (Index b = 0; b < c.right_rank(); ++b) {
        for (Index k = 0; k < c.mode_size(); ++k) put_f64(out, c(a, b, k));
      }
    }
  }
  if (!out) throw Error("failed writing TT tensor");
}

TtTensor read_tt(std::istream& in) {
  const std::uint64_t d = get_u64(in);
  if (d == 0 || d > 4096) throw ParseError("TT header: bad order " + std::to_string(d));
  std::vector<Index> modes(d);
  std::vector<Index> ranks(d + 1);
  for (auto& n : modes) {
    const auto v = get_u64(in);
    if (v == 0 || v > kMaxDim) throw ParseError("TT header: bad mode size");
    n = static_cast<Index>(v);
  }
  for (auto& r : ranks) {
    const auto v = get_u64(in);
    if (v == 0 || v > kMaxDim) throw ParseError("TT header: bad rank");
    r = static_cast<Index>(v);
  }
  if (ranks.front() != 1 || ranks.back() != 1) throw ParseError("TT header: boundary ranks must be 1");
  std::vector<Core> cores;
  cores.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    Core c(ranks[i], ranks[i + 1], modes[i]);
    for (Index a = 0; a < c.left_rank(); ++a) {
      for (Index b = 0; b < c.right_rank(); ++b) {
        for (Index k = 0; k < c.mode_size(); ++k) {
          double v = 0.0;
          if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("truncated TT cores");
          c(a, b, k) = v;
        }
      }
    }
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

void save_tt(const std::filesystem::path& path, const TtTensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_tt(out, t);
}

TtTensor load_tt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_tt(in);
}

}  // namespace ttergodic::tt
