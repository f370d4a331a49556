#include "fleetsim/error.hpp"
#include "fleetsim/random.hpp"

namespace fleetsim {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
    case ErrorKind::layout: return "layout";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t master, std::string_view stream) {
  // FNV-1a over the stream name, then mixed with the master seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(master ^ splitmix64(h));
}

}  // namespace fleetsim
