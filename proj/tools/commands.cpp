// Copyright 2026 The occlunet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "occlunet/gradsuite.hpp"
#include "occlunet/serialize.hpp"
#include "run_config.hpp"

namespace occlunet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

inline constexpr int kFileFormat = 1;

std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

RunConfig base_config(const std::string& path) {
  if (path.empty()) {
    RunConfig cfg;
    cfg.finalize();
    return cfg;
  }
  return load_run_config(path);
}

// "-" means stdin / stdout.
std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text << std::flush;
    return;
  }
  write_file_atomic(path, text);
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

std::vector<json> parse_jsonl(const std::string& text, const std::string& what) {
  std::vector<json> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(parse_json(line, what));
  if (lines.empty()) throw FormatError(what + ": missing header line");
  return lines;
}

void check_header(const json& h, const std::string& kind, const std::string& what) {
  if (!h.is_object() || h.value("format", 0) != kFileFormat || h.value("kind", "") != kind)
    throw FormatError(what + ": expected a format-1 '" + kind + "' header");
}

ClassMap class_map_from(const json& names) {
  if (!names.is_array() || names.empty()) throw FormatError("class list missing");
  return names.size() == 1 ? ClassMap::single_class() : ClassMap::occlusion_types();
}

json detection_to_json(const Detection& d) {
  return {{"frame", d.frame_index}, {"cx", d.cx}, {"cy", d.cy}, {"w", d.w}, {"h", d.h},
          {"conf", d.confidence},   {"class", d.class_id}, {"anchor", d.anchor}};
}

Detection detection_from_json(const json& j) {
  Detection d;
  try {
    d.frame_index = j.at("frame").get<int>();
    d.cx = j.at("cx").get<double>();
    d.cy = j.at("cy").get<double>();
    d.w = j.at("w").get<double>();
    d.h = j.at("h").get<double>();
    d.confidence = j.at("conf").get<double>();
    d.class_id = j.at("class").get<int>();
    d.anchor = j.value("anchor", 0);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad detection record: ") + e.what());
  }
  return d;
}

json metrics_to_json(const ClassMetrics& m) {
  return {{"samples", m.samples}, {"instances", m.instances}, {"tp", m.tp},
          {"fp", m.fp},           {"fn", m.fn},               {"precision", m.precision()},
          {"recall", m.recall()}};
}

json optional_int(const std::optional<int>& v) { return v ? json(*v) : json(); }

std::optional<int> optional_int_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<int>();
}

struct OutcomeSet {
  std::vector<std::string> classes;
  std::vector<SequenceOutcome> outcomes;
  std::vector<char> ambiguous;
};

json report_json(const OutcomeSet& set) {
  const auto report = aggregate(set.outcomes);
  json per_class = json::object();
  for (const auto& [cls, m] : report.per_class)
    per_class[set.classes.at(static_cast<std::size_t>(cls))] = metrics_to_json(m);
  json outcomes = json::array();
  std::vector<SequenceOutcome> amb;
  for (std::size_t i = 0; i < set.outcomes.size(); ++i) {
    const auto& o = set.outcomes[i];
    outcomes.push_back({{"sequence", o.sequence_id},
                        {"gt_class", optional_int(o.gt_class)},
                        {"pred_class", optional_int(o.pred_class)},
                        {"result", to_string(o.result)},
                        {"correct", is_correct(o.result)},
                        {"ambiguous", static_cast<bool>(set.ambiguous[i])}});
    if (set.ambiguous[i]) amb.push_back(o);
  }
  return {{"format", kFileFormat},
          {"kind", "report"},
          {"classes", set.classes},
          {"all", metrics_to_json(report.all)},
          {"per_class", per_class},
          {"ambiguous", metrics_to_json(aggregate(amb).all)},
          {"outcomes", outcomes}};
}

// Reads either an eval report or a bare outcome list with the same records.
OutcomeSet outcomes_from_json(const json& j, const std::string& what) {
  OutcomeSet set;
  try {
    if (j.value("format", 0) != kFileFormat) throw FormatError(what + ": expected format 1");
    set.classes = j.at("classes").get<std::vector<std::string>>();
    class_map_from(j.at("classes"));
    for (const auto& r : j.at("outcomes")) {
      SequenceOutcome o;
      o.sequence_id = r.at("sequence").get<std::string>();
      o.gt_class = optional_int_from(r, "gt_class");
      o.pred_class = optional_int_from(r, "pred_class");
      o.result = outcome_from_string(r.at("result").get<std::string>());
      set.outcomes.push_back(o);
      set.ambiguous.push_back(r.value("ambiguous", false) ? 1 : 0);
    }
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(what + ": " + e.what());
  }
  return set;
}

std::vector<DsaSequence> split_of(const std::vector<DsaSequence>& all, const std::string& split) {
  if (split == "all") return all;
  return filter_split(all, split);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_train, n_val, n_test, image_size, frames;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  auto cfg = base_config(a.config);
  if (a.seed) cfg.synth.seed = *a.seed;
  if (a.n_train) cfg.synth.n_train = *a.n_train;
  if (a.n_val) cfg.synth.n_val = *a.n_val;
  if (a.n_test) cfg.synth.n_test = *a.n_test;
  if (a.image_size) cfg.synth.image_size = *a.image_size;
  if (a.frames) cfg.synth.frames = *a.frames;
  cfg.finalize();
  const auto seqs = synth_generate(cfg.synth);
  save_dataset(a.out, seqs);
  out << "wrote " << seqs.size() << " sequences to " << a.out << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string config, dataset, out;
  std::optional<std::string> variant;
  std::optional<std::size_t> epochs, channels, input_size, jobs;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  auto cfg = base_config(a.config);
  if (!a.dataset.empty()) cfg.dataset = a.dataset;
  if (a.variant) cfg.model.variant = variant_from_string(*a.variant);
  if (a.epochs) cfg.optimizer.epochs = *a.epochs;
  if (a.channels) cfg.model.channels = *a.channels;
  if (a.input_size) cfg.preprocess.input_size = *a.input_size;
  if (a.seed) cfg.seed = *a.seed;
  cfg.finalize();
  if (cfg.dataset.empty()) throw ConfigError("no dataset given (--dataset or config 'dataset')");

  const auto all = load_dataset(cfg.dataset);
  const auto train_set = prepare_all(filter_split(all, "train"), cfg.preprocess);
  const auto val_set = prepare_all(filter_split(all, "val"), cfg.preprocess);

  OccluNetModel<float> model(cfg.model);
  model.init(cfg.seed);
  TrainConfig tc;
  tc.optimizer = cfg.optimizer;
  tc.schedule = cfg.schedule;
  tc.post = cfg.post;
  tc.judge = cfg.judge;
  tc.flip = cfg.flip;
  tc.seed = cfg.seed;
  tc.jobs = a.jobs.value_or(default_jobs());
  tc.out_dir = a.out;
  fs::create_directories(a.out);
  write_file_atomic(fs::path(a.out) / "run_config.json", to_json(cfg).dump(2) + "\n");
  const auto result = train(model, train_set, val_set, cfg.classes(), tc, a.quiet ? nullptr : &out);
  out << "best epoch " << result.best_epoch << " of " << result.history.size() << "\n";
  return kExitOk;
}

struct InferArgs {
  std::string config, checkpoint, dataset, out = "-", split = "test";
  std::optional<std::string> variant;
  std::optional<std::size_t> jobs;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  std::string config_path = a.config;
  if (config_path.empty()) {
    const auto sibling = fs::path(a.checkpoint).parent_path() / "run_config.json";
    if (fs::exists(sibling)) config_path = sibling.string();
  }
  auto cfg = base_config(config_path);
  if (a.split != "train" && a.split != "val" && a.split != "test" && a.split != "all")
    throw ConfigError("--split must be train, val, test or all");
  const auto model = load_checkpoint(a.checkpoint);
  const auto& mc = model.config();
  if (a.variant && variant_from_string(*a.variant) != mc.variant)
    throw ConfigError("checkpoint holds a " + std::string(to_string(mc.variant)) + " model, not " + *a.variant);
  cfg.preprocess.input_size = mc.input_size;
  const ClassMap classes = mc.num_classes == 1 ? ClassMap::single_class() : ClassMap::occlusion_types();

  const auto seqs = prepare_all(split_of(load_dataset(a.dataset), a.split), cfg.preprocess);
  std::vector<std::vector<std::vector<Detection>>> dets(seqs.size());
  parallel_for(seqs.size(), a.jobs.value_or(default_jobs()),
               [&](std::size_t i) { dets[i] = infer_sequence(model, seqs[i].frames, cfg.post); });

  json listing = json::array();
  for (std::size_t i = 0; i < seqs.size(); ++i) listing.push_back({{"id", seqs[i].id}, {"frames", dets[i].size()}});
  std::string text = json{{"format", kFileFormat},
                          {"kind", "detections"},
                          {"variant", to_string(mc.variant)},
                          {"input_size", mc.input_size},
                          {"classes", classes.names()},
                          {"sequences", listing}}
                         .dump() +
                     "\n";
  for (std::size_t i = 0; i < seqs.size(); ++i)
    for (const auto& frame : dets[i])
      for (const auto& d : frame) {
        auto rec = detection_to_json(d);
        rec["sequence"] = seqs[i].id;
        text += rec.dump() + "\n";
      }
  write_text(a.out, text, out);
  return kExitOk;
}

struct PostArgs {
  std::string config, detections = "-", out = "-";
  std::optional<double> radius;
  std::optional<int> max_gap;
};

int cmd_postprocess(const PostArgs& a, std::ostream& out) {
  auto cfg = base_config(a.config);
  if (a.radius) cfg.post.link.radius_px = *a.radius;
  if (a.max_gap) cfg.post.link.max_gap = *a.max_gap;
  cfg.finalize();
  const auto lines = parse_jsonl(read_text(a.detections), a.detections);
  const json& h = lines.front();
  check_header(h, "detections", a.detections);

  std::vector<std::string> ids;
  std::map<std::string, std::vector<std::vector<Detection>>> by_seq;
  try {
    for (const auto& s : h.at("sequences")) {
      const auto id = s.at("id").get<std::string>();
      if (by_seq.count(id)) throw FormatError("duplicate sequence " + id);
      ids.push_back(id);
      by_seq[id].resize(s.at("frames").get<std::size_t>());
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto id = lines[i].at("sequence").get<std::string>();
      auto it = by_seq.find(id);
      if (it == by_seq.end()) throw FormatError("detection for unlisted sequence " + id);
      const auto d = detection_from_json(lines[i]);
      if (d.frame_index < 0 || static_cast<std::size_t>(d.frame_index) >= it->second.size())
        throw FormatError("frame index out of range in sequence " + id);
      it->second[static_cast<std::size_t>(d.frame_index)].push_back(d);
    }
  } catch (const json::exception& e) {
    throw FormatError(a.detections + ": " + e.what());
  }

  std::string text = json{{"format", kFileFormat},
                          {"kind", "trajectories"},
                          {"variant", h.value("variant", "")},
                          {"input_size", h.value("input_size", 0)},
                          {"classes", h.at("classes")}}
                         .dump() +
                     "\n";
  for (const auto& id : ids) {
    const auto best = postprocess(by_seq[id], cfg.post.link);
    json traj;
    if (best) {
      json members = json::array();
      for (const auto& d : best->detections) members.push_back(detection_to_json(d));
      traj = {{"class", best->class_id}, {"score", best->score}, {"detections", members}};
    }
    text += json{{"sequence", id}, {"trajectory", traj}}.dump() + "\n";
  }
  write_text(a.out, text, out);
  return kExitOk;
}

struct EvalArgs {
  std::string config, winners, dataset, outcomes, out, split = "test";
};

OutcomeSet judge_winners(const EvalArgs& a, const RunConfig& cfg) {
  const auto lines = parse_jsonl(read_text(a.winners), a.winners);
  const json& h = lines.front();
  check_header(h, "trajectories", a.winners);
  OutcomeSet set;
  try {
    set.classes = h.at("classes").get<std::vector<std::string>>();
    const ClassMap classes = class_map_from(h.at("classes"));
    const auto input_size = h.at("input_size").get<std::size_t>();
    if (input_size == 0) throw FormatError("input_size must be positive");
    std::map<std::string, const DsaSequence*> lookup;
    const auto seqs = split_of(load_dataset(a.dataset), a.split);
    for (const auto& s : seqs) lookup[s.id] = &s;
    if (lines.size() - 1 != seqs.size())
      throw FormatError("winners cover " + std::to_string(lines.size() - 1) + " sequences, dataset split has " +
                        std::to_string(seqs.size()));
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto id = lines[i].at("sequence").get<std::string>();
      auto it = lookup.find(id);
      if (it == lookup.end()) throw FormatError("sequence " + id + " not in dataset split");
      const DsaSequence& s = *it->second;
      std::optional<Trajectory> winner;
      const json& t = lines[i].at("trajectory");
      if (!t.is_null()) {
        Trajectory traj;
        traj.class_id = t.at("class").get<int>();
        traj.score = t.at("score").get<double>();
        for (const auto& d : t.at("detections")) traj.detections.push_back(detection_from_json(d));
        if (traj.detections.empty()) throw FormatError("empty trajectory for " + id);
        winner = traj;
      }
      std::optional<Annotation> ann;
      if (s.annotation) {
        const double scale = static_cast<double>(input_size) / static_cast<double>(std::max(s.height(), s.width()));
        ann = scale_annotation(*s.annotation, scale);
      }
      set.outcomes.push_back(judge_sequence(id, winner, ground_truth(ann, classes), cfg.judge));
      set.ambiguous.push_back(s.ambiguous ? 1 : 0);
    }
  } catch (const json::exception& e) {
    throw FormatError(a.winners + ": " + e.what());
  }
  return set;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  auto cfg = base_config(a.config);
  if (a.outcomes.empty() == a.winners.empty()) throw ConfigError("give exactly one of --winners or --outcomes");
  if (!a.winners.empty() && a.dataset.empty()) throw ConfigError("--winners needs --dataset");
  const OutcomeSet set =
      a.outcomes.empty() ? judge_winners(a, cfg) : outcomes_from_json(parse_json(read_text(a.outcomes), a.outcomes),
                                                                      a.outcomes);
  out << format_report_table(aggregate(set.outcomes), set.classes);
  if (!a.out.empty()) write_text(a.out, report_json(set).dump(2) + "\n", out);
  return kExitOk;
}

struct CompareArgs {
  std::string a, b, out;
};

int cmd_compare(const CompareArgs& args, std::ostream& out) {
  const auto ra = outcomes_from_json(parse_json(read_text(args.a), args.a), args.a);
  const auto rb = outcomes_from_json(parse_json(read_text(args.b), args.b), args.b);
  std::map<std::string, bool> correct_b;
  for (const auto& o : rb.outcomes) correct_b[o.sequence_id] = is_correct(o.result);
  if (correct_b.size() != ra.outcomes.size()) throw FormatError("reports do not cover the same sequences");
  const std::size_t n = ra.outcomes.size();
  const auto ca = std::make_unique<bool[]>(n), cb = std::make_unique<bool[]>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& o = ra.outcomes[k];
    auto it = correct_b.find(o.sequence_id);
    if (it == correct_b.end()) throw FormatError("sequence " + o.sequence_id + " missing from " + args.b);
    ca[k] = is_correct(o.result);
    cb[k] = it->second;
  }
  const auto r = mcnemar(std::span<const bool>(ca.get(), n), std::span<const bool>(cb.get(), n));
  out << "b=" << r.b << " c=" << r.c << " p=" << std::setprecision(6) << r.p_value << "\n";
  if (!args.out.empty())
    write_text(args.out,
               json{{"format", kFileFormat}, {"kind", "mcnemar"}, {"n", n}, {"b", r.b}, {"c", r.c},
                    {"p_value", r.p_value}}
                       .dump(2) +
                   "\n",
               out);
  return kExitOk;
}

struct GradArgs {
  GradSuiteOptions opts;
  std::vector<std::string> only, corrupt;
  std::string out;
};

int cmd_gradcheck(GradArgs& a, std::ostream& out) {
  std::set<std::string> known;
  for (const auto& c : gradient_cases()) known.insert(c.name);
  for (const auto* list : {&a.only, &a.corrupt})
    for (const auto& n : *list)
      if (!known.count(n)) throw ConfigError("unknown gradient case " + n);
  a.opts.only = {a.only.begin(), a.only.end()};
  a.opts.corrupt = {a.corrupt.begin(), a.corrupt.end()};
  if (a.opts.seeds == 0) throw ConfigError("--seeds must be positive");
  const auto rows = run_gradient_suite(a.opts);
  bool ok = true;
  json report = json::array();
  out << std::left << std::setw(20) << "case" << std::setw(7) << "seeds" << std::setw(14) << "max rel err"
      << "result\n";
  for (const auto& r : rows) {
    ok = ok && r.passed;
    out << std::left << std::setw(20) << r.name << std::setw(7) << r.seeds << std::setw(14) << std::scientific
        << std::setprecision(3) << r.max_error << std::defaultfloat << (r.passed ? "pass" : "FAIL") << "\n";
    report.push_back({{"case", r.name}, {"seeds", r.seeds}, {"max_error", r.max_error}, {"passed", r.passed}});
  }
  if (!a.out.empty())
    write_text(a.out,
               json{{"format", kFileFormat}, {"kind", "gradcheck"}, {"threshold", a.opts.threshold},
                    {"cases", report}}
                       .dump(2) +
                   "\n",
               out);
  return ok ? kExitOk : kExitNumeric;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Occlusion detection in DSA sequences"};
  app.name("occlunet");
  app.require_subcommand(1);
  app.set_version_flag("--version", "occlunet 0.1.0");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic DSA dataset");
  s->add_option("--config", synth.config, "Run config JSON")->check(CLI::ExistingFile);
  s->add_option("--out", synth.out, "Dataset directory")->required();
  s->add_option("--seed", synth.seed);
  s->add_option("--n-train", synth.n_train);
  s->add_option("--n-val", synth.n_val);
  s->add_option("--n-test", synth.n_test);
  s->add_option("--image-size", synth.image_size);
  s->add_option("--frames", synth.frames);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on a dataset's train split");
  t->add_option("--config", tr.config)->check(CLI::ExistingFile);
  t->add_option("--dataset", tr.dataset);
  t->add_option("--out", tr.out, "Run directory (checkpoints, log)")->required();
  t->add_option("--variant", tr.variant, "occlunet1 | occlunet2 | minip-baseline");
  t->add_option("--epochs", tr.epochs);
  t->add_option("--channels", tr.channels);
  t->add_option("--input-size", tr.input_size);
  t->add_option("--seed", tr.seed);
  t->add_option("--jobs", tr.jobs);
  t->add_flag("--quiet", tr.quiet);

  InferArgs inf;
  auto* i = app.add_subcommand("infer", "Per-frame detections for a dataset split");
  i->add_option("--config", inf.config)->check(CLI::ExistingFile);
  i->add_option("--checkpoint", inf.checkpoint)->required();
  i->add_option("--dataset", inf.dataset)->required();
  i->add_option("--variant", inf.variant, "Must match the checkpoint");
  i->add_option("--split", inf.split, "train | val | test | all");
  i->add_option("--out", inf.out, "JSONL output, - for stdout");
  i->add_option("--jobs", inf.jobs);

  PostArgs post;
  auto* p = app.add_subcommand("postprocess", "Link detections and pick one trajectory per sequence");
  p->add_option("--config", post.config)->check(CLI::ExistingFile);
  p->add_option("--detections", post.detections, "JSONL from infer, - for stdin");
  p->add_option("--out", post.out);
  p->add_option("--link-radius", post.radius);
  p->add_option("--max-gap", post.max_gap);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Sequence-level precision and recall");
  e->add_option("--config", ev.config)->check(CLI::ExistingFile);
  e->add_option("--winners", ev.winners, "JSONL from postprocess");
  e->add_option("--dataset", ev.dataset);
  e->add_option("--split", ev.split);
  e->add_option("--outcomes", ev.outcomes, "Precomputed outcome list or report");
  e->add_option("--out", ev.out, "JSON report");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Exact McNemar test between two eval reports");
  c->add_option("--a", cmp.a)->required();
  c->add_option("--b", cmp.b)->required();
  c->add_option("--out", cmp.out);

  GradArgs grad;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  g->add_option("--seeds", grad.opts.seeds);
  g->add_option("--first-seed", grad.opts.first_seed);
  g->add_option("--threshold", grad.opts.threshold);
  g->add_option("--only", grad.only);
  g->add_option("--corrupt", grad.corrupt, "Distort these cases' gradients (negative control)");
  g->add_option("--out", grad.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s) return cmd_synth(synth, out);
    if (*t) return cmd_train(tr, out);
    if (*i) return cmd_infer(inf, out);
    if (*p) return cmd_postprocess(post, out);
    if (*e) return cmd_eval(ev, out);
    if (*c) return cmd_compare(cmp, out);
    if (*g) return cmd_gradcheck(grad, out);
  } catch (const NumericError& ex) {
    err << "numeric failure: " << ex.what() << "\n";
    return kExitNumeric;
  } catch (const IoError& ex) {
    err << "I/O error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const FormatError& ex) {
    err << "malformed input: " << ex.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& ex) {
    err << "I/O error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace occlunet::cli
