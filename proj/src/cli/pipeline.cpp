#include "mcrec/cli/pipeline.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "mcrec/datasim/io.hpp"
#include "mcrec/eval/ctr_eval.hpp"
#include "mcrec/eval/metrics.hpp"
#include "mcrec/recommenders/ranking.hpp"

namespace mcrec::cli {

namespace fs = std::filesystem;
using datasim::Corpus;
using datasim::TreatmentDataset;
using recommenders::CtrModel;

namespace artifact {
std::string treatments(Mechanism m) { return std::string("treatments_") + mechanism_name(m) + ".tsv"; }
std::string cate(Mechanism m) { return std::string("cate_") + mechanism_name(m) + ".tsv"; }
}  // namespace artifact

MissingArtifact::MissingArtifact(const fs::path& path, const std::string& producer)
    : std::runtime_error("missing " + path.string() + "; run 'metactl " + producer +
                         "' with the same --config and --out first"),
      path_(path),
      producer_(producer) {}

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
  return s;
}

// Tab-separated table with a header row.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : width_(header.size()) { add(std::move(header)); }
  void add(std::vector<std::string> row) {
    if (row.size() != width_) throw std::logic_error("table row has the wrong width");
    for (std::size_t i = 0; i < row.size(); ++i) text_ += (i ? "\t" : "") + row[i];
    text_ += '\n';
  }
  const std::string& text() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

std::string curve(const std::vector<std::pair<double, double>>& points) {
  std::string s;
  for (const auto& [x, y] : points) s += fmt(x) + '\t' + fmt(y) + '\n';
  return s;
}

std::vector<Mechanism> allowed_list(MechanismMask m) {
  std::vector<Mechanism> out;
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    if (m.allowed[t]) out.push_back(mechanism_from_index(t));
  }
  return out;
}

std::string mask_names(MechanismMask m) {
  std::string s;
  for (Mechanism x : allowed_list(m)) s += (s.empty() ? "" : ",") + std::string(mechanism_name(x));
  return s;
}

}  // namespace

std::size_t thread_cap_from_env() {
  const char* v = std::getenv("METACTL_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(v, &end, 10);
  if (!std::isdigit(static_cast<unsigned char>(v[0])) || *end != '\0' || n == 0) {
    throw std::invalid_argument(std::string("METACTL_THREADS must be a positive integer, got '") + v + "'");
  }
  return static_cast<std::size_t>(n);
}

Pipeline::Pipeline(PipelineConfig cfg, fs::path out, std::ostream& log)
    : cfg_(std::move(cfg)), out_(std::move(out)), log_(log) {
  cfg_.require_seed();
  cfg_.smoothing.allowed = cfg_.mechanisms;
}

fs::path Pipeline::need(const std::string& name, const std::string& producer) const {
  const auto p = at(name);
  if (!fs::exists(p)) throw MissingArtifact(p, producer);
  return p;
}

std::uint64_t Pipeline::seed(const std::string& stage) const { return derive_seed(cfg_.require_seed(), stage); }

const std::vector<std::string>& Pipeline::stage_names() {
  static const std::vector<std::string> names{"gen-data",   "train-ctr", "collect-treatments", "train-surrogates",
                                              "build-meta", "train-meta", "evaluate",          "sweep",
                                              "trace",      "run-all"};
  return names;
}

void Pipeline::run(const std::string& stage, const StageOverrides& o) {
  if (stage == "gen-data") return gen_data();
  if (stage == "train-ctr") return train_ctr();
  if (stage == "collect-treatments") return collect_treatments();
  if (stage == "train-surrogates") return train_surrogates();
  if (stage == "build-meta") return build_meta();
  if (stage == "train-meta") return train_meta(o);
  if (stage == "evaluate") return evaluate();
  if (stage == "sweep") return sweep();
  if (stage == "trace") return trace();
  if (stage == "run-all") return run_all(o);
  throw std::invalid_argument("unknown stage '" + stage + "'");
}

void Pipeline::run_all(const StageOverrides& o) {
  gen_data();
  train_ctr();
  collect_treatments();
  train_surrogates();
  build_meta();
  train_meta(o);
  evaluate();
  sweep();
  trace();
}

void Pipeline::gen_data() {
  fs::create_directories(out_);
  const auto& plan = cfg_.data.roles;
  Table report({"key", "value"});
  Corpus corpus;
  if (cfg_.data.source == DataSource::Synthetic) {
    const auto world = datasim::generate_synthetic(cfg_.data.world, cfg_.data.users, seed("gen-data.world"));
    const auto roles = datasim::assign_roles(cfg_.data.users, plan, seed("gen-data.roles"));
    corpus = datasim::build_synthetic_corpus(world, roles, plan, seed("gen-data.corpus"));
    datasim::write_world(at(artifact::kWorld), world);
    datasim::write_event_log(at(artifact::kEvents), world.log);

    std::array<std::size_t, 3> regimes{};
    for (const auto& u : world.users) ++regimes[static_cast<int>(u.regime)];
    std::size_t clicks = 0;
    for (const auto& e : world.log) clicks += e.label;
    report.add({"source", "synthetic"});
    report.add({"users", std::to_string(world.users.size())});
    report.add({"events", std::to_string(world.log.size())});
    report.add({"clicks", std::to_string(clicks)});
    for (int r = 0; r < 3; ++r) {
      report.add({std::string("regime_") + datasim::regime_name(static_cast<datasim::Regime>(r)),
                  std::to_string(regimes[r])});
    }
    // Ground-truth best mechanism over all treatment points, as a sanity check
    // that every mechanism wins somewhere.
    std::vector<datasim::CandidateSet> points;
    for (const auto& arm : corpus.treatment) points.insert(points.end(), arm.begin(), arm.end());
    if (!points.empty()) {
      const datasim::LatentOracleServer oracle(world);
      const auto best = datasim::oracle_assignment(world, points, oracle);
      std::array<double, kNumMechanisms> share{};
      for (Mechanism m : best) share[index_of(m)] += 1.0 / static_cast<double>(best.size());
      for (std::size_t t = 0; t < kNumMechanisms; ++t) {
        report.add({std::string("oracle_best_") + mechanism_name(mechanism_from_index(t)), fmt(share[t])});
      }
    }
  } else {
    if (cfg_.data.path.empty()) throw ConfigError("[data] source = ingest needs 'path = <interaction file>'");
    if (!fs::exists(cfg_.data.path)) throw ConfigError("interaction file not found: " + cfg_.data.path.string());
    auto opts = cfg_.data.ingest;
    opts.seed = seed("gen-data.ingest");
    const auto data = datasim::ingest_interactions(cfg_.data.path, opts);
    corpus = datasim::corpus_from_ingest(data, plan, seed("gen-data.corpus"));
    datasim::write_event_log(at(artifact::kEvents), data.log);
    std::string users, items;
    for (std::size_t i = 0; i < data.user_names.size(); ++i) users += std::to_string(i) + '\t' + data.user_names[i] + '\n';
    for (std::size_t i = 0; i < data.item_names.size(); ++i) items += std::to_string(i) + '\t' + data.item_names[i] + '\n';
    datasim::write_text_file(at(artifact::kUserNames), users);
    datasim::write_text_file(at(artifact::kItemNames), items);
    const auto& st = data.stats;
    report.add({"source", "ingest"});
    report.add({"rows", std::to_string(st.rows)});
    report.add({"users_seen", std::to_string(st.users_seen)});
    report.add({"users_dropped", std::to_string(st.users_dropped)});
    report.add({"users_skipped", std::to_string(st.users_skipped)});
    report.add({"users_kept", std::to_string(st.users_kept)});
    report.add({"events", std::to_string(data.log.size())});
    report.add({"short_negative_sets", std::to_string(st.short_negative_sets)});
  }
  report.add({"vocab_size", std::to_string(corpus.vocab_size)});
  report.add({"ctr_train_sets", std::to_string(corpus.ctr_train.size())});
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    report.add({std::string("treatment_points_") + mechanism_name(mechanism_from_index(t)),
                std::to_string(corpus.treatment[t].size())});
  }
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    report.add({std::string("cate_points_") + mechanism_name(mechanism_from_index(t)),
                std::to_string(corpus.cate_test[t].size())});
  }
  report.add({"ctr_test_cases", std::to_string(corpus.ctr_test.size())});
  datasim::write_corpus(at(artifact::kCorpus), corpus);
  datasim::write_text_file(at(artifact::kDataReport), report.text());
  log_ << "[gen-data] " << corpus.ctr_train.size() << " training sets, " << corpus.ctr_test.size()
       << " CTR test cases -> " << out_.string() << '\n';
}

void Pipeline::train_ctr() {
  const auto corpus = datasim::read_corpus(need(artifact::kCorpus, "gen-data"));
  auto hc = cfg_.cloud;
  hc.seed = seed("train-ctr.cloud");
  auto hd = cfg_.device;
  hd.seed = seed("train-ctr.device");
  recommenders::CtrReport rc, rd;
  log_ << "[train-ctr] cloud model on " << corpus.ctr_train.size() << " sets\n";
  const auto cloud = recommenders::train_ctr_model(corpus.ctr_train, recommenders::Schema::Cloud, hc, &rc);
  log_ << "[train-ctr] device model\n";
  const auto device = recommenders::train_ctr_model(corpus.ctr_train, recommenders::Schema::Device, hd, &rd, &cloud);
  recommenders::save_model(at(artifact::kCloud), cloud);
  recommenders::save_model(at(artifact::kDevice), device);

  Table report({"model", "examples", "skipped", "train_auc", "train_accuracy", "epoch_loss"});
  for (const auto& [name, r] : {std::pair{"cloud", &rc}, std::pair{"device", &rd}}) {
    report.add({name, std::to_string(r->examples), std::to_string(r->skipped), fmt(r->train_auc),
                fmt(r->train_accuracy), join(r->epoch_loss)});
  }
  datasim::write_text_file(at(artifact::kCtrTrainReport), report.text());
  log_ << "[train-ctr] train AUC cloud " << fmt(rc.train_auc, 4) << ", device " << fmt(rd.train_auc, 4) << '\n';
}

void Pipeline::collect_treatments() {
  const auto corpus = datasim::read_corpus(need(artifact::kCorpus, "gen-data"));
  const auto cloud = recommenders::load_model(need(artifact::kCloud, "train-ctr"));
  const auto device = recommenders::load_model(need(artifact::kDevice, "train-ctr"));
  const recommenders::ModelServer server(&cloud, &device, cfg_.data.world.cache_size);
  const bool synthetic = cfg_.data.source == DataSource::Synthetic;
  if (synthetic && cfg_.outcome_rule != datasim::OutcomeRule::AnyClickWithinL) {
    throw ConfigError("synthetic data draws clicks from the world; use outcome_rule = any-click");
  }
  std::optional<datasim::SyntheticWorld> world;
  if (synthetic) {
    world = datasim::read_world(need(artifact::kWorld, "gen-data"),
                                datasim::read_event_log(need(artifact::kEvents, "gen-data")));
  }
  const auto simulate = [&](const std::vector<datasim::CandidateSet>& pts, Mechanism m, const std::string& stream) {
    if (synthetic) return datasim::simulate_with_mechanism(*world, pts, m, server, seed(stream));
    return datasim::simulate_with_mechanism(pts, m, server, cfg_.outcome_rule, cfg_.data.world.session_length);
  };
  for (Mechanism m : allowed_list(cfg_.mechanisms)) {
    const std::size_t t = index_of(m);
    const auto d = simulate(corpus.treatment[t], m, std::string("collect-treatments.treatment.") + mechanism_name(m));
    const auto c = simulate(corpus.cate_test[t], m, std::string("collect-treatments.cate.") + mechanism_name(m));
    datasim::write_treatments(at(artifact::treatments(m)), d);
    datasim::write_treatments(at(artifact::cate(m)), c);
    double rate = 0.0;
    for (const auto& s : d) rate += s.outcome;
    log_ << "[collect-treatments] " << mechanism_name(m) << ": " << d.size() << " samples, outcome rate "
         << fmt(d.empty() ? 0.0 : rate / static_cast<double>(d.size()), 4) << '\n';
  }
}

void Pipeline::train_surrogates() {
  std::array<TreatmentDataset, kNumMechanisms> d;
  for (Mechanism m : allowed_list(cfg_.mechanisms)) {
    d[index_of(m)] = datasim::read_treatments(need(artifact::treatments(m), "collect-treatments"));
  }
  const auto cloud = recommenders::load_model(need(artifact::kCloud, "train-ctr"));
  auto hp = cfg_.surrogate;
  hp.seed = seed("train-surrogates");
  hp.vocab_size = cloud.net.config().encoder.vocab_size;
  if (cfg_.surrogate_warm_start) hp.warm_item_embedding = cloud.net.encoder().item_embedding().value;
  uplift::SurrogateReport rep;
  const auto model = uplift::train_surrogates(d[0], d[1], d[2], hp, &rep, cfg_.mechanisms);
  uplift::save_surrogates(at(artifact::kSurrogates), model);
  Table report({"head", "samples", "epoch_loss"});
  for (Mechanism m : allowed_list(cfg_.mechanisms)) {
    const std::size_t t = index_of(m);
    report.add({mechanism_name(m), std::to_string(rep.samples[t]), join(rep.head_loss[t])});
  }
  datasim::write_text_file(at(artifact::kSurrogateReport), report.text());
  log_ << "[train-surrogates] " << rep.batches << " batches\n";
}

void Pipeline::build_meta() {
  const auto model = uplift::load_surrogates(need(artifact::kSurrogates, "train-surrogates"));
  if (mask_to_string(model.trained) != mask_to_string(cfg_.mechanisms)) {
    throw std::runtime_error("surrogates were trained for mechanisms {" + mask_names(model.trained) +
                             "} but the config selects {" + mask_names(cfg_.mechanisms) +
                             "}; re-run 'metactl train-surrogates'");
  }
  std::array<TreatmentDataset, kNumMechanisms> d;
  for (Mechanism m : allowed_list(cfg_.mechanisms)) {
    d[index_of(m)] = datasim::read_treatments(need(artifact::treatments(m), "collect-treatments"));
  }
  const auto data = uplift::build_meta_dataset(model, d[0], d[1], d[2], cfg_.mechanisms);
  uplift::write_meta_dataset(at(artifact::kMetaData), data);
  std::array<std::size_t, kNumMechanisms> counts{};
  for (const auto& s : data) ++counts[index_of(s.label)];
  Table report({"label", "count", "share"});
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    report.add({mechanism_name(mechanism_from_index(t)), std::to_string(counts[t]),
                fmt(data.empty() ? 0.0 : static_cast<double>(counts[t]) / static_cast<double>(data.size()))});
  }
  datasim::write_text_file(at(artifact::kMetaDataReport), report.text());
  log_ << "[build-meta] " << data.size() << " counterfactual samples, refresh share "
       << fmt(data.empty() ? 0.0 : static_cast<double>(counts[2]) / static_cast<double>(data.size()), 4) << '\n';
}

namespace {

metacontroller::MetaParams meta_params(const PipelineConfig& cfg, const CtrModel& cloud, std::uint64_t seed) {
  auto hp = cfg.meta;
  hp.net.seed = seed;
  hp.net.vocab_size = cloud.net.config().encoder.vocab_size;
  if (cfg.meta_warm_start) hp.net.warm_item_embedding = cloud.net.encoder().item_embedding().value;
  return hp;
}

}  // namespace

void Pipeline::train_meta(const StageOverrides& o) {
  const auto data = uplift::read_meta_dataset(need(artifact::kMetaData, "build-meta"));
  const auto cloud = recommenders::load_model(need(artifact::kCloud, "train-ctr"));
  const auto hp = meta_params(cfg_, cloud, seed("train-meta"));
  auto smoothing = cfg_.smoothing;
  auto grid = cfg_.lambda_grid;
  if (o.epsilon) smoothing.epsilon = *o.epsilon;
  if (o.lambda) {
    const auto xs = parse_real_list(*o.lambda);
    grid.clear();
    if (xs.size() == 1) {
      smoothing.lambda = xs[0];
    } else {
      grid = xs;
    }
  }
  smoothing.validate();

  metacontroller::MetaModel model;
  metacontroller::MetaReport rep;
  bool satisfied = rep.holdout_ratio <= smoothing.epsilon;
  if (grid.empty()) {
    model = metacontroller::train_meta(data, smoothing, hp, &rep);
    satisfied = rep.holdout_ratio <= smoothing.epsilon;
  } else {
    const auto search = metacontroller::lambda_search(data, smoothing.epsilon, grid, hp, &model, &rep, smoothing);
    smoothing.lambda = search.lambda;
    satisfied = search.satisfied;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < search.ratios.size(); ++i) pts.emplace_back(search.grid[i], search.ratios[i]);
    datasim::write_text_file(at(artifact::kLambdaCurve), curve(pts));
  }
  metacontroller::save_meta(at(artifact::kMeta), model);

  Table report({"key", "value"});
  report.add({"epsilon", fmt(smoothing.epsilon)});
  report.add({"lambda", fmt(smoothing.lambda)});
  report.add({"lambda_grid", join(grid)});
  report.add({"budget_satisfied", satisfied ? "true" : "false"});
  report.add({"train_size", std::to_string(rep.train_size)});
  report.add({"holdout_size", std::to_string(rep.holdout_size)});
  report.add({"epochs_run", std::to_string(rep.epochs_run)});
  report.add({"stopped_early", rep.stopped_early ? "true" : "false"});
  report.add({"batches", std::to_string(rep.batches)});
  report.add({"smoothed_batches", std::to_string(rep.smoothed_batches)});
  report.add({"smoothed_labels", std::to_string(rep.smoothed_labels)});
  report.add({"holdout_invoking_ratio", fmt(rep.holdout_ratio)});
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    report.add({std::string("holdout_share_") + mechanism_name(mechanism_from_index(t)), fmt(rep.decision_share[t])});
  }
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    report.add({std::string("label_share_") + mechanism_name(mechanism_from_index(t)), fmt(rep.label_share[t])});
  }
  report.add({"epoch_loss", join(rep.epoch_loss)});
  report.add({"epoch_invoking_ratio", join(rep.epoch_ratio)});
  datasim::write_text_file(at(artifact::kMetaReport), report.text());
  log_ << "[train-meta] epsilon " << fmt(smoothing.epsilon, 2) << " lambda " << fmt(smoothing.lambda, 2)
       << ": held-out invoking ratio " << fmt(rep.holdout_ratio, 4) << (satisfied ? "" : " (budget NOT met)") << '\n';
}

void Pipeline::evaluate() {
  const auto corpus = datasim::read_corpus(need(artifact::kCorpus, "gen-data"));
  const auto cloud = recommenders::load_model(need(artifact::kCloud, "train-ctr"));
  const auto device = recommenders::load_model(need(artifact::kDevice, "train-ctr"));
  const auto meta = metacontroller::load_meta(need(artifact::kMeta, "train-meta"));
  const auto surrogates = uplift::load_surrogates(need(artifact::kSurrogates, "train-surrogates"));
  if (corpus.ctr_test.empty()) throw std::runtime_error("the corpus has no CTR test cases");

  const auto cases = eval::score_cases(corpus.ctr_test, cloud, device);
  metacontroller::ServingOptions opt;
  opt.allowed = cfg_.mechanisms;
  opt.hard_cap = cfg_.hard_cap;
  const auto& ks = cfg_.eval.ks;
  std::vector<eval::CtrMetrics> rows;
  rows.push_back(eval::evaluate_policy("CRec", cases, eval::constant_policy(cases.size(), Mechanism::Cloud), ks));
  rows.push_back(eval::evaluate_policy("ORec", cases, eval::constant_policy(cases.size(), Mechanism::Device), ks));
  rows.push_back(eval::evaluate_policy("CRRec", cases, eval::constant_policy(cases.size(), Mechanism::Refresh), ks));
  const auto mc = eval::evaluate_policy("MCRec", cases, eval::meta_policy(meta, cases, opt), ks);
  rows.push_back(
      eval::evaluate_policy("RMixRec", cases, eval::random_mixture(cases.size(), mc.share, seed("evaluate.rmix")), ks));
  rows.push_back(mc);

  std::vector<std::string> header{"method"};
  for (auto k : ks) header.push_back("hitrate@" + std::to_string(k));
  for (auto k : ks) header.push_back("ndcg@" + std::to_string(k));
  for (const char* h : {"auc", "invoking_ratio", "share_cloud", "share_device", "share_refresh", "cases", "excluded"}) {
    header.push_back(h);
  }
  Table ctr(header);
  for (const auto& r : rows) {
    std::vector<std::string> row{r.method};
    for (double v : r.hitrate) row.push_back(fmt(v));
    for (double v : r.ndcg) row.push_back(fmt(v));
    row.push_back(fmt(r.auc));
    row.push_back(fmt(r.refresh_ratio));
    for (double s : r.share) row.push_back(fmt(s));
    row.push_back(std::to_string(r.cases));
    row.push_back(std::to_string(r.excluded));
    ctr.add(row);
    log_ << "[evaluate] " << r.method << " AUC " << fmt(r.auc, 4) << '\n';
  }
  datasim::write_text_file(at(artifact::kCtrReport), ctr.text());

  // Uplift of every allowed mechanism over the cheapest allowed one.
  const auto allowed = allowed_list(cfg_.mechanisms);
  const Mechanism control = allowed.front();
  const auto control_set = datasim::read_treatments(need(artifact::cate(control), "collect-treatments"));
  Table uplift({"treatment", "control", "treated", "controls", "auuc", "qini"});
  for (std::size_t i = 1; i < allowed.size(); ++i) {
    const Mechanism m = allowed[i];
    const auto treated = datasim::read_treatments(need(artifact::cate(m), "collect-treatments"));
    std::vector<eval::ScoredOutcome> pool;
    const auto score = [&](const datasim::HistorySnapshot& h) {
      const auto g = surrogates.outcomes(h);
      return g[index_of(m)] - g[index_of(control)];
    };
    for (const auto& s : treated) pool.push_back({score(s.snapshot), true, s.outcome});
    for (const auto& s : control_set) pool.push_back({score(s.snapshot), false, s.outcome});
    if (treated.empty() || control_set.empty()) {
      throw std::runtime_error(std::string("no CATE test samples for ") + mechanism_name(treated.empty() ? m : control));
    }
    const double a = eval::auuc(pool, cfg_.eval.percentiles);
    const double q = eval::qini(pool, cfg_.eval.percentiles, cfg_.eval.random_shuffles,
                                seed(std::string("evaluate.qini.") + mechanism_name(m)));
    uplift.add({mechanism_name(m), mechanism_name(control), std::to_string(treated.size()),
                std::to_string(control_set.size()), fmt(a), fmt(q)});
    log_ << "[evaluate] uplift " << mechanism_name(m) << " vs " << mechanism_name(control) << ": AUUC " << fmt(a, 4)
         << " QINI " << fmt(q, 4) << '\n';
  }
  datasim::write_text_file(at(artifact::kUpliftReport), uplift.text());
}

void Pipeline::sweep() {
  const auto data = uplift::read_meta_dataset(need(artifact::kMetaData, "build-meta"));
  const auto corpus = datasim::read_corpus(need(artifact::kCorpus, "gen-data"));
  const auto cloud = recommenders::load_model(need(artifact::kCloud, "train-ctr"));
  const auto device = recommenders::load_model(need(artifact::kDevice, "train-ctr"));
  if (cfg_.lambda_grid.empty()) throw ConfigError("sweep needs a lambda grid: set '[meta] lambda = 0, 0.2, ...'");
  const auto hp = meta_params(cfg_, cloud, seed("train-meta"));
  const auto cases = eval::score_cases(corpus.ctr_test, cloud, device);
  metacontroller::ServingOptions opt;
  opt.allowed = cfg_.mechanisms;
  opt.hard_cap = cfg_.hard_cap;
  const auto rows = eval::tradeoff_sweep(data, hp, cfg_.lambda_grid, cfg_.eval.sweep_epsilons, cases, opt, cfg_.smoothing);

  Table table({"epsilon", "lambda", "budget_satisfied", "hitrate@1", "ndcg@5", "auc", "invoking_ratio",
               "holdout_invoking_ratio", "grid_holdout_ratios"});
  std::vector<std::pair<double, double>> auc, hr, ndcg, ratio, lambda;
  for (const auto& r : rows) {
    table.add({fmt(r.epsilon), fmt(r.lambda), r.satisfied ? "true" : "false", fmt(r.hitrate1), fmt(r.ndcg5), fmt(r.auc),
               fmt(r.invoking_ratio), fmt(r.holdout_ratio), join(r.grid_ratios)});
    auc.emplace_back(r.epsilon, r.auc);
    hr.emplace_back(r.epsilon, r.hitrate1);
    ndcg.emplace_back(r.epsilon, r.ndcg5);
    ratio.emplace_back(r.epsilon, r.invoking_ratio);
    lambda.emplace_back(r.epsilon, r.lambda);
    log_ << "[sweep] epsilon " << fmt(r.epsilon, 2) << ": lambda " << fmt(r.lambda, 2) << ", AUC " << fmt(r.auc, 4)
         << ", invoking ratio " << fmt(r.invoking_ratio, 4) << '\n';
  }
  datasim::write_text_file(at(artifact::kSweep), table.text());
  datasim::write_text_file(at("sweep_auc.tsv"), curve(auc));
  datasim::write_text_file(at("sweep_hitrate1.tsv"), curve(hr));
  datasim::write_text_file(at("sweep_ndcg5.tsv"), curve(ndcg));
  datasim::write_text_file(at("sweep_invoking_ratio.tsv"), curve(ratio));
  datasim::write_text_file(at("sweep_lambda.tsv"), curve(lambda));
}

void Pipeline::trace() {
  const auto corpus = datasim::read_corpus(need(artifact::kCorpus, "gen-data"));
  const auto cloud = recommenders::load_model(need(artifact::kCloud, "train-ctr"));
  const auto device = recommenders::load_model(need(artifact::kDevice, "train-ctr"));
  const auto surrogates = uplift::load_surrogates(need(artifact::kSurrogates, "train-surrogates"));
  const auto meta = metacontroller::load_meta(need(artifact::kMeta, "train-meta"));
  const recommenders::ModelServer server(&cloud, &device, cfg_.data.world.cache_size);
  const bool synthetic = cfg_.data.source == DataSource::Synthetic;

  Table table({"user", "session", "cloud_history", "in_session", "recent_items", "g_cloud", "g_device", "g_refresh",
               "tau_device", "tau_refresh", "p_cloud", "p_device", "p_refresh", "decision", "served"});
  const auto& cases = corpus.ctr_test;
  const std::size_t n = std::min(cfg_.eval.trace_sessions, cases.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& cs = cases[k * cases.size() / n];  // evenly spread over the test block
    const auto& h = cs.snapshot;
    const auto g = surrogates.outcomes(h);
    const auto tau = uplift::cate_from_outcomes(g);
    const auto p = meta.predict(h);
    const Mechanism t = metacontroller::select_mechanism(p, cfg_.mechanisms);
    std::vector<ItemId> pool;
    if (synthetic) {
      pool = datasim::serving_pool(h, corpus.vocab_size, t);
    } else {
      pool = cs.positives;
      pool.insert(pool.end(), cs.negatives.begin(), cs.negatives.end());
      std::sort(pool.begin(), pool.end());
    }
    const auto served = server.serve(h, t, pool, cfg_.data.world.session_length);
    const auto hist = h.device_history();
    std::string recent, served_s;
    for (std::size_t i = hist.size() > 3 ? hist.size() - 3 : 0; i < hist.size(); ++i) {
      recent += (recent.empty() ? "" : ",") + std::to_string(hist[i]);
    }
    for (ItemId i : served) served_s += (served_s.empty() ? "" : ",") + std::to_string(i);
    table.add({std::to_string(h.user), std::to_string(h.session), std::to_string(h.cloud_history.size()),
               std::to_string(h.in_session.size()), recent, fmt(g[0], 4), fmt(g[1], 4), fmt(g[2], 4),
               fmt(tau.tau[1], 4), fmt(tau.tau[2], 4), fmt(p[0], 4), fmt(p[1], 4), fmt(p[2], 4), mechanism_name(t),
               served_s});
  }
  datasim::write_text_file(at(artifact::kTrace), table.text());
  log_ << "[trace] " << n << " sessions -> " << at(artifact::kTrace).string() << '\n';
}

}  // namespace mcrec::cli
