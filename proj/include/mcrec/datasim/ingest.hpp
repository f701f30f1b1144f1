#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "mcrec/datasim/synthetic.hpp"
#include "mcrec/datasim/types.hpp"

namespace mcrec::datasim {

enum class Protocol { MovielensLike, AmazonLike };

Protocol protocol_from_name(const std::string& name);

struct IngestOptions {
  Protocol protocol = Protocol::MovielensLike;
  std::optional<std::size_t> min_interactions;  // default 20 (movielens-like) or 10 (amazon-like)
  std::size_t test_items = 5;
  std::size_t session_size = 5;  // pseudo-session length for the session split
  std::size_t train_negatives = 4;
  std::size_t test_negatives = 100;
  std::size_t max_history = 50;
  std::uint64_t seed = 0;

  std::size_t threshold() const;
};

struct IngestStats {
  std::size_t rows = 0;
  std::size_t users_seen = 0;
  std::size_t users_dropped = 0;   // below the interaction threshold
  std::size_t users_skipped = 0;   // passed the threshold but had fewer than test_items + 1 interactions
  std::size_t users_kept = 0;
  std::size_t short_negative_sets = 0;  // candidate sets with fewer negatives than requested
};

struct IngestResult {
  EventLog log;                          // dense ids, kept users only, ordinal timestamps
  std::vector<CandidateSet> train;       // one set per training positive, positives.size() == 1
  std::vector<CandidateSet> test;        // one set per held-out positive
  std::size_t vocab_size = 0;
  std::vector<std::string> user_names;   // original ids of kept users, by dense id
  std::vector<std::string> item_names;   // original ids, by dense id
  IngestStats stats;
};

// Delimited rows of `user, item, rating-or-flag, timestamp`; the delimiter
// (`::`, tab or comma) is detected from the first data row. Rows with a
// rating/flag <= 0 are ignored as non-interactions.
IngestResult ingest_interactions(std::istream& in, const IngestOptions& options);
IngestResult ingest_interactions(const std::filesystem::path& path, const IngestOptions& options);

// Distributes the held-out cases of an ingested log into a corpus. All train
// sets feed the recommenders; test cases are split by user over treatment
// arms, CATE test arms and the CTR test block in the plan's proportions.
Corpus corpus_from_ingest(const IngestResult& data, const RolePlan& plan, std::uint64_t seed);

}  // namespace mcrec::datasim
