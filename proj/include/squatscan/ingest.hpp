#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "squatscan/domain.hpp"

namespace squatscan::ingest {

enum class FeedSource { CtLog, Pdns, Zone };

enum class RrType : std::uint8_t { Ns = 1, A = 2, Aaaa = 4 };

struct RrSet {
  std::uint8_t bits = 0;
  void add(RrType t) { bits |= static_cast<std::uint8_t>(t); }
  bool has(RrType t) const { return bits & static_cast<std::uint8_t>(t); }
  void merge(RrSet other) { bits |= other.bits; }
};

struct FeedRecord {
  std::string fqdn;  // normalized
  FeedSource source;
  RrSet rr_types;
  std::int64_t observed_at = 0;
};

// Per-stream accounting. Every consumed line is either accepted or skipped:
// ok + skipped == lines always holds. One accepted CT line can fan out into
// several records and zone lines merge per name, so record counts are not
// line counts.
struct FeedStats {
  std::uint64_t lines = 0;
  std::uint64_t ok = 0;
  std::uint64_t skipped = 0;
};

// JSON lines with `all_domains` and `timestamp`; wildcard prefixes are
// stripped. Malformed lines are counted, never fatal.
std::vector<FeedRecord> parse_ct_stream(std::istream& in, FeedStats& stats);

// DNS master-file subset: `name [TTL] [class] type rdata` with "@", relative
// names and "$ORIGIN". NS/A/AAAA accumulate per name; other types skip.
std::vector<FeedRecord> parse_zone_stream(std::istream& in, std::string origin, FeedStats& stats,
                                          std::int64_t observed_at = 0);

// Tab-separated: fqdn, rrtype, rdata, timestamp.
std::vector<FeedRecord> parse_pdns_stream(std::istream& in, FeedStats& stats);

// Names whose merged evidence has NS and (A or AAAA). NS evidence on a name
// or any ancestor within the same registrable domain counts for that name;
// address evidence must be on the name itself. Output sorted by name.
std::vector<Fqdn> filter_active(const std::vector<FeedRecord>& records, const SuffixRuleSet& psl);

// Earliest observation timestamp per normalized name.
std::map<std::string, std::int64_t> first_seen_times(const std::vector<FeedRecord>& records);

// Persistent first-seen set backed by a sorted `fqdn<TAB>first_seen` text
// file. Insertion is monotone; rewrites are atomic (temp file + rename), so
// a failed write leaves both file and memory untouched.
class ObservationStore {
 public:
  explicit ObservationStore(std::filesystem::path file);

  // Returns the subset of `current` never seen before, sorted, and records
  // it with the supplied first-seen timestamps.
  std::vector<std::string> new_observed(const std::map<std::string, std::int64_t>& current);

  bool contains(const std::string& fqdn) const { return seen_.count(fqdn) > 0; }
  std::size_t size() const { return seen_.size(); }

 private:
  void save(const std::map<std::string, std::int64_t>& merged) const;

  std::filesystem::path file_;
  std::map<std::string, std::int64_t> seen_;
};

}  // namespace squatscan::ingest
