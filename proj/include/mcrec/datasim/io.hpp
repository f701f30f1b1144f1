#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "mcrec/datasim/types.hpp"

namespace mcrec::datasim {

// Event log: one `user \t item \t label \t timestamp \t session` record per line.
void write_event_log(std::ostream& out, const EventLog& log);
EventLog read_event_log(std::istream& in);
void write_event_log(const std::filesystem::path& path, const EventLog& log);
EventLog read_event_log(const std::filesystem::path& path);

// Snapshot payload: {"u","s","hc","ha","sc","sd"}.
nlohmann::json snapshot_to_json(const HistorySnapshot& snap);
HistorySnapshot snapshot_from_json(const nlohmann::json& j);

// Treatment dataset: `snapshot-json \t t \t o` per line.
void write_treatments(std::ostream& out, const TreatmentDataset& data);
TreatmentDataset read_treatments(std::istream& in);
void write_treatments(const std::filesystem::path& path, const TreatmentDataset& data);
TreatmentDataset read_treatments(const std::filesystem::path& path);

// Corpus: a `vocab \t N` header, then `kind \t arm \t snapshot-json \t positives \t negatives`
// where kind is one of train / treatment / cate / test and the id lists are comma separated.
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
Corpus read_corpus(const std::filesystem::path& path);

// Whole-file helpers that fail with the offending path in the message.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mcrec::datasim
