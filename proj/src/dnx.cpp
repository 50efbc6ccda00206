#include "squatscan/dnx.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>

#include "squatscan/util.hpp"

namespace squatscan::dnx {
namespace {

constexpr std::uint64_t kEmbedSeed = 0x53515541544C4E58ULL;  // fixed hash seed

void accumulate_grams(std::string_view padded, std::size_t n, std::vector<double>& acc) {
  if (padded.size() < n) return;
  for (std::size_t i = 0; i + n <= padded.size(); ++i) {
    std::uint64_t h = fnv1a64(padded.substr(i, n), kEmbedSeed);
    std::size_t bucket = static_cast<std::size_t>(h % LocalNgramEmbedder::kDimension);
    double sign = ((h >> 8) & 1) ? 1.0 : -1.0;
    acc[bucket] += sign;
  }
}

}  // namespace

EmbeddingVector LocalNgramEmbedder::embed(std::string_view text) const {
  std::string padded = "^" + std::string(text) + "$";
  EmbeddingVector acc(kDimension, 0.0);
  accumulate_grams(padded, 2, acc);
  accumulate_grams(padded, 3, acc);
  double norm_sq = 0.0;
  for (double v : acc) norm_sq += v * v;
  if (norm_sq == 0.0) {
    acc[0] = 1.0;
    return acc;
  }
  double inv = 1.0 / std::sqrt(norm_sq);
  for (double& v : acc) v *= inv;
  return acc;
}

std::string embedding_text(const Fqdn& fqdn) {
  return fqdn.s.empty() ? fqdn.d : fqdn.s + "." + fqdn.d;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot;
}

ReferenceIndex ReferenceIndex::build(const std::vector<std::pair<std::uint32_t, std::string>>& ranked,
                                     const Embedder& embedder, const SuffixRuleSet& psl,
                                     unsigned jobs) {
  if (ranked.empty()) throw ParseError("reference list is empty");
  ReferenceIndex idx;
  idx.embedder_id_ = embedder.id();
  idx.dimension_ = embedder.dimension();

  std::uint32_t last_rank = 0;
  bool first = true;
  for (const auto& [rank, domain] : ranked) {
    if (!first && rank <= last_rank) throw ParseError("reference ranks must be strictly increasing");
    first = false;
    last_rank = rank;
    std::string norm;
    try {
      norm = normalize(domain);
      Fqdn f = parse_fqdn(norm, psl);
      norm = registrable(f);
    } catch (const ParseError&) {
      continue;  // zone apexes and malformed entries are skipped
    }
    if (idx.by_domain_.count(norm)) continue;
    idx.by_domain_.emplace(norm, idx.entries_.size());
    idx.entries_.push_back({norm, rank, {}});
  }
  if (idx.entries_.empty()) throw ParseError("reference list has no usable entries");

  parallel_for(idx.entries_.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      IndexEntry& e = idx.entries_[i];
      std::size_t dot = e.domain.find('.');
      e.vec = embedder.embed(e.domain.substr(0, dot));
    }
  });
  return idx;
}

void ReferenceIndex::rebuild_lookup() {
  by_domain_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) by_domain_.emplace(entries_[i].domain, i);
}

bool ReferenceIndex::contains_domain(std::string_view domain) const {
  return by_domain_.count(std::string(domain)) > 0;
}

std::optional<std::uint32_t> ReferenceIndex::rank_of(std::string_view domain) const {
  auto it = by_domain_.find(std::string(domain));
  if (it == by_domain_.end()) return std::nullopt;
  return entries_[it->second].rank;
}

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("index sidecar truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t lo = get_u32(in);
  std::uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

}  // namespace

void ReferenceIndex::save(const std::filesystem::path& path) const {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write index sidecar: " + tmp.string());
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(embedder_id_.size()));
    out.write(embedder_id_.data(), static_cast<std::streamsize>(embedder_id_.size()));
    put_u32(out, static_cast<std::uint32_t>(dimension_));
    put_u64(out, entries_.size());
    std::size_t name_width = 0;
    for (const auto& e : entries_) name_width = std::max(name_width, e.domain.size());
    put_u32(out, static_cast<std::uint32_t>(name_width));
    std::string pad(name_width, '\0');
    for (const auto& e : entries_) {
      std::memcpy(pad.data(), e.domain.data(), e.domain.size());
      std::memset(pad.data() + e.domain.size(), 0, name_width - e.domain.size());
      out.write(pad.data(), static_cast<std::streamsize>(name_width));
      put_u32(out, e.rank);
      for (double v : e.vec) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        put_u64(out, bits);
      }
    }
    if (!out) throw IoError("failed writing index sidecar");
  }
  std::filesystem::rename(tmp, path);
}

ReferenceIndex ReferenceIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open index sidecar: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad index sidecar magic");
  if (get_u32(in) != kVersion) throw IoError("unsupported index sidecar version");
  std::uint32_t id_len = get_u32(in);
  if (id_len > 4096) throw IoError("bad index sidecar header");
  ReferenceIndex idx;
  idx.embedder_id_.resize(id_len);
  in.read(idx.embedder_id_.data(), id_len);
  idx.dimension_ = get_u32(in);
  std::uint64_t count = get_u64(in);
  std::uint32_t name_width = get_u32(in);
  if (!in || idx.dimension_ == 0 || idx.dimension_ > 65536 || name_width > 253) {
    throw IoError("bad index sidecar header");
  }
  idx.entries_.reserve(count);
  std::string name(name_width, '\0');
  for (std::uint64_t i = 0; i < count; ++i) {
    in.read(name.data(), name_width);
    if (!in) throw IoError("index sidecar truncated");
    IndexEntry e;
    e.domain = name.substr(0, name.find('\0') == std::string::npos ? name_width : name.find('\0'));
    e.rank = get_u32(in);
    e.vec.resize(idx.dimension_);
    for (std::size_t d = 0; d < idx.dimension_; ++d) {
      std::uint64_t bits = get_u64(in);
      double v;
      std::memcpy(&v, &bits, sizeof(v));
      e.vec[d] = v;
    }
    idx.entries_.push_back(std::move(e));
  }
  idx.rebuild_lookup();
  return idx;
}

std::vector<std::pair<const IndexEntry*, double>> ReferenceIndex::nearest(
    const EmbeddingVector& query, std::size_t k) const {
  if (k == 0 || query.size() != dimension_) {
    throw ParseError("nearest: bad k or query dimension");
  }
  k = std::min(k, entries_.size());

  // (similarity desc, rank asc, domain asc)
  auto better = [](const std::pair<const IndexEntry*, double>& a,
                   const std::pair<const IndexEntry*, double>& b) {
    if (a.second != b.second) return a.second > b.second;
    if (a.first->rank != b.first->rank) return a.first->rank < b.first->rank;
    return a.first->domain < b.first->domain;
  };

  std::vector<std::pair<const IndexEntry*, double>> heap;  // worst element on top
  heap.reserve(k + 1);
  auto worse = [&](const auto& a, const auto& b) { return better(a, b); };
  for (const auto& e : entries_) {
    double sim = cosine(query, e.vec);
    std::pair<const IndexEntry*, double> item{&e, sim};
    if (heap.size() < k) {
      heap.push_back(item);
      std::push_heap(heap.begin(), heap.end(), worse);
    } else if (better(item, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), worse);
      heap.back() = item;
      std::push_heap(heap.begin(), heap.end(), worse);
    }
  }
  std::sort(heap.begin(), heap.end(), better);
  return heap;
}

std::vector<DomainPair> pair_inputs(const std::vector<Fqdn>& inputs, const ReferenceIndex& index,
                                    const Embedder& embedder, unsigned jobs) {
  std::vector<Fqdn> sorted_inputs = inputs;
  std::sort(sorted_inputs.begin(), sorted_inputs.end(),
            [](const Fqdn& a, const Fqdn& b) { return a.raw < b.raw; });

  std::vector<DomainPair> out(sorted_inputs.size());
  parallel_for(sorted_inputs.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      EmbeddingVector q = embedder.embed(embedding_text(sorted_inputs[i]));
      auto top = index.nearest(q, 1);
      out[i] = DomainPair{sorted_inputs[i], top.front().first->domain, top.front().second};
    }
  });
  return out;
}

std::vector<Chunk> sort_and_chunk(std::vector<DomainPair> pairs, std::size_t chunk_size) {
  if (chunk_size == 0) throw ParseError("chunk_size must be >= 1");
  std::sort(pairs.begin(), pairs.end(), [](const DomainPair& a, const DomainPair& b) {
    if (a.proximate != b.proximate) return a.proximate < b.proximate;
    return a.input.raw < b.input.raw;
  });
  std::vector<Chunk> chunks;
  for (std::size_t off = 0; off < pairs.size(); off += chunk_size) {
    Chunk c;
    c.id = chunks.size();
    std::size_t end = std::min(pairs.size(), off + chunk_size);
    c.pairs.assign(pairs.begin() + static_cast<long>(off), pairs.begin() + static_cast<long>(end));
    chunks.push_back(std::move(c));
  }
  return chunks;
}

}  // namespace squatscan::dnx
