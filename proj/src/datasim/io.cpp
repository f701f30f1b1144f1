#include "mcrec/datasim/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mcrec::datasim {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(std::string("bad ") + what + " '" + std::string(field) + "'", line);
  }
  return value;
}

std::string join_ids(const std::vector<ItemId>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(ids[i]);
  }
  return s;
}

std::vector<ItemId> parse_ids(std::string_view field, std::size_t line) {
  std::vector<ItemId> ids;
  if (field.empty()) return ids;
  std::size_t start = 0;
  while (true) {
    const auto pos = field.find(',', start);
    const auto tok = field.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    ids.push_back(parse_number<ItemId>(tok, line, "item id"));
    if (pos == std::string_view::npos) return ids;
    start = pos + 1;
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::vector<float> to_vec(const SideFeatures& f) { return {f.begin(), f.end()}; }

SideFeatures from_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<float>>();
  if (v.size() != kSideDim) throw std::invalid_argument("side feature block must have 8 entries");
  SideFeatures f{};
  std::copy(v.begin(), v.end(), f.begin());
  return f;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_event_log(std::ostream& out, const EventLog& log) {
  for (const auto& e : log) {
    out << e.user << '\t' << e.item << '\t' << e.label << '\t' << e.timestamp << '\t' << e.session << '\n';
  }
}

EventLog read_event_log(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 5) throw ParseError("expected 5 tab-separated fields, got " + std::to_string(f.size()), n);
    Interaction e;
    e.user = parse_number<UserId>(f[0], n, "user id");
    e.item = parse_number<ItemId>(f[1], n, "item id");
    e.label = parse_number<int>(f[2], n, "label");
    e.timestamp = parse_number<std::int64_t>(f[3], n, "timestamp");
    e.session = parse_number<std::uint32_t>(f[4], n, "session");
    if (e.label != 0 && e.label != 1) throw ParseError("label must be 0 or 1", n);
    log.push_back(e);
  }
  return log;
}

void write_event_log(const std::filesystem::path& path, const EventLog& log) {
  std::ostringstream ss;
  write_event_log(ss, log);
  write_text_file(path, ss.str());
}

EventLog read_event_log(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_event_log(in);
}

nlohmann::json snapshot_to_json(const HistorySnapshot& s) {
  return nlohmann::json{{"u", s.user},           {"s", s.session},
                        {"hc", s.cloud_history}, {"ha", s.in_session},
                        {"sc", to_vec(s.side_cloud)}, {"sd", to_vec(s.side_device)}};
}

HistorySnapshot snapshot_from_json(const nlohmann::json& j) {
  HistorySnapshot s;
  s.user = j.at("u").get<UserId>();
  s.session = j.at("s").get<std::uint32_t>();
  s.cloud_history = j.at("hc").get<std::vector<ItemId>>();
  s.in_session = j.at("ha").get<std::vector<ItemId>>();
  s.side_cloud = from_vec(j.at("sc"));
  s.side_device = from_vec(j.at("sd"));
  return s;
}

void write_treatments(std::ostream& out, const TreatmentDataset& data) {
  for (const auto& r : data) {
    out << snapshot_to_json(r.snapshot).dump() << '\t' << index_of(r.treatment) << '\t' << r.outcome << '\n';
  }
}

TreatmentDataset read_treatments(std::istream& in) {
  TreatmentDataset data;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 3) throw ParseError("expected snapshot, t and o columns", n);
    TreatmentSample r;
    try {
      r.snapshot = snapshot_from_json(nlohmann::json::parse(f[0]));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad snapshot payload: ") + e.what(), n);
    }
    const auto t = parse_number<std::size_t>(f[1], n, "treatment");
    if (t >= kNumMechanisms) throw ParseError("treatment must be 0, 1 or 2", n);
    r.treatment = mechanism_from_index(t);
    r.outcome = parse_number<int>(f[2], n, "outcome");
    if (r.outcome != 0 && r.outcome != 1) throw ParseError("outcome must be 0 or 1", n);
    data.push_back(std::move(r));
  }
  return data;
}

void write_treatments(const std::filesystem::path& path, const TreatmentDataset& data) {
  std::ostringstream ss;
  write_treatments(ss, data);
  write_text_file(path, ss.str());
}

TreatmentDataset read_treatments(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_treatments(in);
}

void write_corpus(const std::filesystem::path& path, const Corpus& c) {
  std::ostringstream ss;
  ss << "vocab\t" << c.vocab_size << '\n';
  const auto emit = [&](const char* kind, int arm, const CandidateSet& cs) {
    ss << kind << '\t' << arm << '\t' << snapshot_to_json(cs.snapshot).dump() << '\t' << join_ids(cs.positives) << '\t'
       << join_ids(cs.negatives) << '\n';
  };
  for (const auto& cs : c.ctr_train) emit("train", -1, cs);
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    for (const auto& cs : c.treatment[t]) emit("treatment", static_cast<int>(t), cs);
  }
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    for (const auto& cs : c.cate_test[t]) emit("cate", static_cast<int>(t), cs);
  }
  for (const auto& cs : c.ctr_test) emit("test", -1, cs);
  write_text_file(path, ss.str());
}

Corpus read_corpus(const std::filesystem::path& path) {
  auto in = open_in(path);
  Corpus c;
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (!header) {
      if (f.size() != 2 || f[0] != "vocab") throw ParseError("corpus must start with a vocab header", n);
      c.vocab_size = parse_number<std::size_t>(f[1], n, "vocab size");
      header = true;
      continue;
    }
    if (f.size() != 5) throw ParseError("expected 5 corpus columns", n);
    CandidateSet cs;
    try {
      cs.snapshot = snapshot_from_json(nlohmann::json::parse(f[2]));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad snapshot payload: ") + e.what(), n);
    }
    cs.positives = parse_ids(f[3], n);
    cs.negatives = parse_ids(f[4], n);
    const int arm = parse_number<int>(f[1], n, "arm");
    const auto arm_slot = [&]() {
      if (arm < 0 || arm >= static_cast<int>(kNumMechanisms)) throw ParseError("arm out of range", n);
      return static_cast<std::size_t>(arm);
    };
    if (f[0] == "train") {
      c.ctr_train.push_back(std::move(cs));
    } else if (f[0] == "treatment") {
      c.treatment[arm_slot()].push_back(std::move(cs));
    } else if (f[0] == "cate") {
      c.cate_test[arm_slot()].push_back(std::move(cs));
    } else if (f[0] == "test") {
      c.ctr_test.push_back(std::move(cs));
    } else {
      throw ParseError("unknown record kind '" + std::string(f[0]) + "'", n);
    }
  }
  if (!header) throw ParseError("empty corpus file", n);
  return c;
}

}  // namespace mcrec::datasim
