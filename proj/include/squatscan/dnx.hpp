#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "squatscan/domain.hpp"

namespace squatscan::dnx {

using EmbeddingVector = std::vector<double>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

// Character n-gram hashing embedder: all 2- and 3-grams of "^" + text + "$"
// are hashed with a fixed seeded 64-bit hash into 256 signed buckets, then
// L2-normalized. Deterministic and platform-stable.
class LocalNgramEmbedder : public Embedder {
 public:
  static constexpr std::size_t kDimension = 256;
  std::string id() const override { return "ngram-v1-256"; }
  std::size_t dimension() const override { return kDimension; }
  EmbeddingVector embed(std::string_view text) const override;
};

// Text embedded for a name: subdomain and registrable label with the suffix
// dropped and dots retained, so TLD variation cannot dominate similarity.
std::string embedding_text(const Fqdn& fqdn);

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct IndexEntry {
  std::string domain;  // registrable reference domain
  std::uint32_t rank;
  EmbeddingVector vec;
};

// Exact-search reference index over ranked registrable domains. Immutable
// after build; lookups are freely concurrent.
class ReferenceIndex {
 public:
  static ReferenceIndex build(const std::vector<std::pair<std::uint32_t, std::string>>& ranked,
                              const Embedder& embedder, const SuffixRuleSet& psl, unsigned jobs = 0);

  // Versioned binary sidecar keyed by embedder identity.
  void save(const std::filesystem::path& path) const;
  static ReferenceIndex load(const std::filesystem::path& path);

  const std::string& embedder_id() const { return embedder_id_; }
  std::size_t dimension() const { return dimension_; }
  const std::vector<IndexEntry>& entries() const { return entries_; }
  bool contains_domain(std::string_view domain) const;
  std::optional<std::uint32_t> rank_of(std::string_view domain) const;

  // Exact top-k by cosine similarity, descending; ties broken by ascending
  // rank then lexicographic domain. k larger than the index returns all.
  std::vector<std::pair<const IndexEntry*, double>> nearest(const EmbeddingVector& query,
                                                            std::size_t k) const;

 private:
  std::string embedder_id_;
  std::size_t dimension_ = 0;
  std::vector<IndexEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_domain_;

  void rebuild_lookup();
};

// An input joined to its most similar reference domain.
struct DomainPair {
  Fqdn input;
  std::string proximate;
  double similarity;
};

// Ordered batch of pairs submitted to the model in one request.
struct Chunk {
  std::size_t id;
  std::vector<DomainPair> pairs;
};

// Pairs every input with its nearest reference domain. Output is sorted by
// input name, so the result is independent of input order and thread count.
std::vector<DomainPair> pair_inputs(const std::vector<Fqdn>& inputs, const ReferenceIndex& index,
                                    const Embedder& embedder, unsigned jobs = 0);

// Global sort by (proximate, input raw) then consecutive slices. The final
// chunk may be smaller; ids are consecutive from 0.
std::vector<Chunk> sort_and_chunk(std::vector<DomainPair> pairs, std::size_t chunk_size = 100);

}  // namespace squatscan::dnx
