#include "mcrec/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "mcrec/datasim/io.hpp"

namespace mcrec::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  if (!text.empty() && text.back() == ',') out.push_back("");
  return out;
}

double to_real(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end) throw std::invalid_argument("'" + s + "' is not a number");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end) throw std::invalid_argument("'" + s + "' is not a non-negative integer");
  return v;
}

// Typed access to one section; every failure names the file, line and key.
class Section {
 public:
  Section(ConfigFile& file, std::string name) : file_(file), name_(std::move(name)) {}

  template <class F>
  void read(const std::string& key, F&& apply) {
    const auto* e = file_.take(name_, key);
    if (!e) return;
    try {
      apply(e->value);
    } catch (const std::exception& ex) {
      throw ConfigError(file_.origin() + ":" + std::to_string(e->line) + ": " + label(key) + ": " + ex.what());
    }
  }

  void size(const std::string& key, std::size_t& out) {
    read(key, [&](const std::string& v) { out = static_cast<std::size_t>(to_u64(v)); });
  }
  void u64(const std::string& key, std::uint64_t& out) {
    read(key, [&](const std::string& v) { out = to_u64(v); });
  }
  void real(const std::string& key, double& out) {
    read(key, [&](const std::string& v) { out = to_real(v); });
  }
  void flag(const std::string& key, bool& out) {
    read(key, [&](const std::string& v) {
      if (v == "true" || v == "yes" || v == "1") {
        out = true;
      } else if (v == "false" || v == "no" || v == "0") {
        out = false;
      } else {
        throw std::invalid_argument("expected true or false, got '" + v + "'");
      }
    });
  }
  void sizes(const std::string& key, std::vector<std::size_t>& out) {
    read(key, [&](const std::string& v) {
      out.clear();
      for (const auto& item : split_list(v)) out.push_back(static_cast<std::size_t>(to_u64(item)));
    });
  }
  void reals(const std::string& key, std::vector<double>& out) {
    read(key, [&](const std::string& v) { out = parse_real_list(v); });
  }
  void triple(const std::string& key, std::array<double, 3>& out) {
    read(key, [&](const std::string& v) {
      const auto xs = parse_real_list(v);
      if (xs.size() != 3) throw std::invalid_argument("expected three comma-separated numbers");
      std::copy(xs.begin(), xs.end(), out.begin());
    });
  }

 private:
  std::string label(const std::string& key) const { return name_.empty() ? key : "[" + name_ + "] " + key; }

  ConfigFile& file_;
  std::string name_;
};

double budget_from(const std::string& v) {
  const double eps = to_real(v);
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("a refresh budget must lie in (0, 1], got '" + v + "'");
  return eps;
}

seqmodel::Activation activation_from(const std::string& v) {
  if (v == "tanh") return seqmodel::Activation::Tanh;
  if (v == "relu") return seqmodel::Activation::Relu;
  throw std::invalid_argument("expected tanh or relu, got '" + v + "'");
}

seqmodel::OutputKind output_from(const std::string& v) {
  if (v == "logistic") return seqmodel::OutputKind::Logistic;
  if (v == "softmax") return seqmodel::OutputKind::Softmax;
  throw std::invalid_argument("expected logistic or softmax, got '" + v + "'");
}

void read_ctr(Section s, recommenders::CtrHyperParams& hp) {
  s.size("item_dim", hp.item_dim);
  s.size("attn_dim", hp.attn_dim);
  s.size("max_len", hp.max_len);
  s.sizes("hidden", hp.hidden);
  s.read("activation", [&](const std::string& v) { hp.activation = activation_from(v); });
  s.read("output", [&](const std::string& v) { hp.output = output_from(v); });
  s.size("epochs", hp.epochs);
  s.size("batch_size", hp.batch_size);
  s.real("lr", hp.adam.lr);
}

void read_snapshot_net(Section& s, uplift::SnapshotNetParams& hp, bool& warm) {
  s.size("item_dim", hp.item_dim);
  s.size("attn_dim", hp.attn_dim);
  s.size("max_len", hp.max_len);
  s.sizes("hidden", hp.hidden);
  s.read("activation", [&](const std::string& v) { hp.activation = activation_from(v); });
  s.size("epochs", hp.epochs);
  s.size("batch_size", hp.batch_size);
  s.real("lr", hp.adam.lr);
  s.flag("warm_start", warm);
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile f;
  f.origin_ = origin;
  f.sections_[""];
  std::istringstream in(text);
  std::string raw, section;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    ++n;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(n) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + "empty section name");
      if (f.section_lines_.count(section)) throw ConfigError(where + "section [" + section + "] repeated");
      f.section_lines_[section] = n;
      f.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + "missing key before '='");
    auto& sec = f.sections_[section];
    if (sec.count(key)) throw ConfigError(where + "key '" + key + "' repeated");
    sec[key] = Entry{trim(line.substr(eq + 1)), n, false};
  }
  return f;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse(datasim::read_text_file(path), path.string());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

const ConfigFile::Entry* ConfigFile::take(const std::string& section, const std::string& key) {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto e = s->second.find(key);
  if (e == s->second.end()) return nullptr;
  e->second.used = true;
  return &e->second;
}

void ConfigFile::reject_unused() const {
  static const std::set<std::string> known{"", "data", "pipeline", "ctr.cloud", "ctr.device", "surrogate", "meta", "eval"};
  for (const auto& [name, line] : section_lines_) {
    if (!known.count(name)) throw ConfigError(origin_ + ":" + std::to_string(line) + ": unknown section [" + name + "]");
  }
  // Report in file order so the first typo is the one named.
  const Entry* first = nullptr;
  std::string first_key, first_section;
  for (const auto& [name, entries] : sections_) {
    for (const auto& [key, e] : entries) {
      if (!e.used && (!first || e.line < first->line)) {
        first = &e;
        first_key = key;
        first_section = name;
      }
    }
  }
  if (first) {
    const std::string where = first_section.empty() ? "top level" : "[" + first_section + "]";
    throw ConfigError(origin_ + ":" + std::to_string(first->line) + ": unknown key '" + first_key + "' in " + where);
  }
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_real(item));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

MechanismMask parse_mechanisms(const std::string& text) {
  MechanismMask m;
  m.allowed = {false, false, false};
  for (const auto& name : split_list(text)) {
    bool found = false;
    for (std::size_t t = 0; t < kNumMechanisms; ++t) {
      if (name == mechanism_name(mechanism_from_index(t))) {
        if (m.allowed[t]) throw std::invalid_argument("mechanism '" + name + "' listed twice");
        m.allowed[t] = true;
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("unknown mechanism '" + name + "' (expected cloud, device or refresh)");
  }
  if (m.count() < 2) throw std::invalid_argument("need at least two mechanisms");
  return m;
}

std::uint64_t PipelineConfig::require_seed() const {
  if (!seed) throw ConfigError("no seed: set 'seed = <u64>' at the top of the config or pass --seed");
  return *seed;
}

PipelineConfig pipeline_config_from(ConfigFile& file) {
  PipelineConfig cfg;
  {
    Section top(file, "");
    top.read("seed", [&](const std::string& v) { cfg.seed = to_u64(v); });
  }
  {
    Section s(file, "data");
    auto& w = cfg.data.world;
    auto& r = cfg.data.roles;
    s.read("source", [&](const std::string& v) {
      if (v == "synthetic") {
        cfg.data.source = DataSource::Synthetic;
      } else if (v == "ingest") {
        cfg.data.source = DataSource::Ingest;
      } else {
        throw std::invalid_argument("expected synthetic or ingest, got '" + v + "'");
      }
    });
    s.size("users", cfg.data.users);
    s.size("catalog_size", w.catalog_size);
    s.size("latent_dim", w.latent_dim);
    s.size("topics", w.topics);
    s.real("item_noise", w.item_noise);
    s.size("sessions_per_user", w.sessions_per_user);
    s.size("exposures_per_session", w.exposures_per_session);
    s.size("decision_offset", w.decision_offset);
    s.size("session_length", w.session_length);
    s.size("cache_size", w.cache_size);
    s.size("max_history", w.max_history);
    s.triple("regime_weights", w.regime_weights);
    s.triple("drift", w.drift);
    s.real("click_scale", w.click_scale);
    s.real("click_bias", w.click_bias);
    s.real("relevant_share", w.relevant_share);
    s.real("exposure_temperature", w.exposure_temperature);
    s.real("rec_train_share", r.rec_train_share);
    s.real("treatment_share", r.treatment_share);
    s.real("cate_share", r.cate_share);
    s.real("ctr_test_share", r.ctr_test_share);
    s.triple("treatment_skew", r.treatment_skew);
    s.size("train_negatives", r.train_negatives);
    s.size("test_negatives", r.test_negatives);
    s.read("path", [&](const std::string& v) { cfg.data.path = v; });
    s.read("protocol", [&](const std::string& v) { cfg.data.ingest.protocol = datasim::protocol_from_name(v); });
    s.read("min_interactions", [&](const std::string& v) { cfg.data.ingest.min_interactions = to_u64(v); });
    s.size("test_items", cfg.data.ingest.test_items);
    s.size("session_size", cfg.data.ingest.session_size);
  }
  cfg.data.ingest.train_negatives = cfg.data.roles.train_negatives;
  cfg.data.ingest.test_negatives = cfg.data.roles.test_negatives;
  cfg.data.ingest.max_history = cfg.data.world.max_history;
  {
    Section s(file, "pipeline");
    s.read("mechanisms", [&](const std::string& v) { cfg.mechanisms = parse_mechanisms(v); });
    s.read("outcome_rule", [&](const std::string& v) {
      if (v == "any-click") {
        cfg.outcome_rule = datasim::OutcomeRule::AnyClickWithinL;
      } else if (v == "ranked-first") {
        cfg.outcome_rule = datasim::OutcomeRule::PositiveRankedFirst;
      } else {
        throw std::invalid_argument("expected any-click or ranked-first, got '" + v + "'");
      }
    });
  }
  read_ctr(Section(file, "ctr.cloud"), cfg.cloud);
  read_ctr(Section(file, "ctr.device"), cfg.device);
  {
    Section s(file, "surrogate");
    read_snapshot_net(s, cfg.surrogate, cfg.surrogate_warm_start);
  }
  {
    Section s(file, "meta");
    read_snapshot_net(s, cfg.meta.net, cfg.meta_warm_start);
    s.real("holdout_share", cfg.meta.holdout_share);
    s.flag("stop_under_budget", cfg.meta.stop_under_budget);
    s.size("min_epochs", cfg.meta.min_epochs);
    s.read("epsilon", [&](const std::string& v) { cfg.smoothing.epsilon = budget_from(v); });
    s.read("lambda", [&](const std::string& v) {
      const auto xs = parse_real_list(v);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] >= 0.0 && xs[i] < 1.0)) throw std::invalid_argument("lambda values must lie in [0, 1)");
        if (i > 0 && xs[i] <= xs[i - 1]) throw std::invalid_argument("a lambda grid must be strictly ascending");
      }
      if (xs.size() == 1) {
        cfg.smoothing.lambda = xs[0];
        cfg.lambda_grid.clear();
      } else {
        cfg.lambda_grid = xs;
      }
    });
    s.read("estimator", [&](const std::string& v) {
      if (v == "per-batch") {
        cfg.smoothing.estimator = metacontroller::RatioEstimator::PerBatch;
      } else if (v == "ema") {
        cfg.smoothing.estimator = metacontroller::RatioEstimator::Ema;
      } else {
        throw std::invalid_argument("expected per-batch or ema, got '" + v + "'");
      }
    });
    s.read("ema_decay", [&](const std::string& v) {
      cfg.smoothing.ema_decay = to_real(v);
      if (!(cfg.smoothing.ema_decay > 0.0 && cfg.smoothing.ema_decay < 1.0)) {
        throw std::invalid_argument("ema_decay must lie in (0, 1)");
      }
    });
    s.read("smoothing_target", [&](const std::string& v) {
      if (v == "second-largest") {
        cfg.smoothing.target = metacontroller::SmoothingTarget::SecondLargest;
      } else if (v == "best-alternative") {
        cfg.smoothing.target = metacontroller::SmoothingTarget::BestAlternative;
      } else {
        throw std::invalid_argument("expected second-largest or best-alternative, got '" + v + "'");
      }
    });
    s.flag("hard_cap", cfg.hard_cap);
  }
  {
    Section s(file, "eval");
    s.sizes("ks", cfg.eval.ks);
    s.size("percentiles", cfg.eval.percentiles);
    s.size("random_shuffles", cfg.eval.random_shuffles);
    s.read("sweep_epsilons", [&](const std::string& v) {
      cfg.eval.sweep_epsilons.clear();
      for (const auto& item : split_list(v)) cfg.eval.sweep_epsilons.push_back(budget_from(item));
      if (cfg.eval.sweep_epsilons.empty()) throw std::invalid_argument("empty list");
    });
    s.size("trace_sessions", cfg.eval.trace_sessions);
  }
  file.reject_unused();

  if (cfg.eval.ks.empty() || std::find(cfg.eval.ks.begin(), cfg.eval.ks.end(), 0) != cfg.eval.ks.end()) {
    throw ConfigError(file.origin() + ": [eval] ks must list positive cutoffs");
  }
  if (cfg.data.source == DataSource::Synthetic) cfg.data.world.validate();
  cfg.data.roles.validate();
  cfg.smoothing.allowed = cfg.mechanisms;
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  auto file = ConfigFile::load(path);
  return pipeline_config_from(file);
}

}  // namespace mcrec::cli
