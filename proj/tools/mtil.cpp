// mtil: multi-task imitation pipelines on the noisy combination lock.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtil/bc/bc.hpp"
#include "mtil/cli/config.hpp"
#include "mtil/complexity/gaussian_average.hpp"
#include "mtil/data/data.hpp"
#include "mtil/data/dataset_io.hpp"
#include "mtil/data/policy.hpp"
#include "mtil/env/lock.hpp"
#include "mtil/error.hpp"
#include "mtil/eval/eval.hpp"
#include "mtil/model/checkpoint.hpp"
#include "mtil/numkit/numkit.hpp"
#include "mtil/oa/oa.hpp"
#include "mtil/rltransfer/rl.hpp"

namespace {

using namespace mtil;
using cli::UsageError;

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::vector<std::string> overrides;
  std::string out;

  cli::Config load() const {
    cli::Config cfg = config_path.empty() ? cli::Config{} : cli::Config::load(config_path);
    for (const auto& o : overrides) cfg.set(o);
    return cfg;
  }
  std::string out_path(const cli::Config& cfg) const {
    if (!out.empty()) return out;
    return cfg.get("out.path").value_or("");
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key=value config file");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "output file (overrides out.path)");
  app->add_option("overrides", c.overrides, "key=value overrides");
}

std::string require_out(const Common& c, const cli::Config& cfg) {
  auto path = c.out_path(cfg);
  if (path.empty()) throw UsageError("no output path: pass --out or set out.path");
  return path;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path + "'");
  return f;
}

std::vector<env::LockParams> load_tasks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read task file '" + path + "'");
  auto tasks = env::read_tasks(in);
  if (tasks.empty()) throw UsageError("task file '" + path + "' holds no tasks");
  return tasks;
}

std::size_t max_level(const data::BCTaskData& d) {
  return d.levels.empty() ? 0 : *std::max_element(d.levels.begin(), d.levels.end());
}

// gen-tasks

int gen_tasks(const Common& c, std::size_t count) {
  const auto cfg = c.load();
  const auto proto = cli::lock_template(cfg);
  env::TaskSampler sampler(proto, Rng(c.seed).fork("gen-tasks"));
  std::vector<env::LockParams> tasks;
  for (std::size_t i = 0; i < count; ++i) tasks.push_back(sampler.sample());
  auto f = open_out(require_out(c, cfg));
  env::write_tasks(f, tasks);
  std::cout << "wrote " << count << " tasks\n";
  return 0;
}

// collect

int collect(const Common& c, const std::string& tasks_path, const std::string& setting,
            const std::string& dump_csv) {
  const auto cfg = c.load();
  const auto tasks = load_tasks(tasks_path);
  const std::size_t n = cfg.get_size("train.n").value_or(5);
  const bool all_pairs = cfg.get_bool("train.all_pairs").value_or(true);
  const Rng root = Rng(c.seed).fork("collect");
  const auto path = require_out(c, cfg);
  if (setting == "bc") {
    data::BCDataset ds;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      Rng rng = root.fork("task", i);
      const auto trajs = data::collect_trajectories(tasks[i], data::expert_policy(tasks[i]), n, rng);
      ds.push_back(data::build_bc_dataset(trajs, rng, all_pairs));
    }
    data::save_bc_dataset(path, ds);
    if (!dump_csv.empty()) {
      auto f = open_out(dump_csv);
      data::dump_bc_csv(f, ds);
    }
  } else if (setting == "oa") {
    data::OADataset ds;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      Rng rng = root.fork("task", i);
      const auto trajs = data::collect_trajectories(tasks[i], data::expert_policy(tasks[i]), 2 * n, rng);
      ds.push_back(data::build_oa_dataset(tasks[i], trajs, rng));
    }
    data::save_oa_dataset(path, ds);
    if (!dump_csv.empty()) {
      auto f = open_out(dump_csv);
      data::dump_oa_csv(f, ds);
    }
  } else {
    throw UsageError("--setting must be bc or oa");
  }
  std::cout << "collected " << tasks.size() << " task(s), n = " << n << '\n';
  return 0;
}

// train-bc / train-oa

int train_bc(const Common& c, const std::string& data_path) {
  const auto cfg = c.load();
  bc::BCTrainConfig tc;
  cli::apply(cfg, tc);
  const bool per_level = cfg.get_bool("train.per_level").value_or(true);
  const auto ds = data::load_bc_dataset(data_path);
  if (ds.empty()) throw UsageError("dataset holds no tasks");
  const Rng rng = Rng(c.seed).fork("train-bc");
  std::vector<model::Record> records;
  if (per_level) {
    std::size_t horizon = 0;
    for (const auto& t : ds) horizon = std::max(horizon, max_level(t));
    const auto levels = bc::train_bc_levels(ds, horizon, tc, rng);
    for (std::size_t h = 0; h < levels.size(); ++h) {
      const auto level = static_cast<std::uint32_t>(h);
      model::append_records(records, levels[h].repr, level);
      for (std::size_t i = 0; i < levels[h].heads.size(); ++i)
        model::append_records(records, levels[h].heads[i], level, static_cast<std::uint32_t>(i));
    }
    std::cout << "trained " << levels.size() << " level representations on " << ds.size() << " task(s)\n";
  } else {
    std::vector<model::BCBatch> batches;
    for (const auto& t : ds) batches.push_back(t.batch);
    Rng r = rng;
    const auto res = bc::train_bc_repr(batches, tc, r);
    model::append_records(records, res.repr);
    for (std::size_t i = 0; i < res.heads.size(); ++i)
      model::append_records(records, res.heads[i], 0, static_cast<std::uint32_t>(i));
    std::cout << "trained representation on " << ds.size() << " task(s), final loss "
              << res.loss_history.back() << '\n';
  }
  model::save_checkpoint(require_out(c, cfg), records);
  return 0;
}

int train_oa(const Common& c, const std::string& data_path) {
  const auto cfg = c.load();
  oa::OATrainConfig tc;
  cli::apply(cfg, tc);
  const auto ds = data::load_oa_dataset(data_path);
  if (ds.empty()) throw UsageError("dataset holds no tasks");
  const auto levels = oa::train_oa_reprs(ds, tc, Rng(c.seed).fork("train-oa"));
  std::vector<model::Record> records;
  for (std::size_t h = 0; h < levels.size(); ++h) {
    const auto level = static_cast<std::uint32_t>(h);
    model::append_records(records, levels[h].repr, level);
    for (std::size_t i = 0; i < levels[h].heads.size(); ++i) {
      model::append_records(records, levels[h].heads[i], level, static_cast<std::uint32_t>(i));
      model::append_records(records, levels[h].discs[i], level, static_cast<std::uint32_t>(i));
    }
  }
  model::save_checkpoint(require_out(c, cfg), records);
  std::cout << "trained " << levels.size() << " level representations on " << ds.size() << " task(s)\n";
  return 0;
}

// adapt

std::vector<model::ReprParams> level_reprs(const std::vector<model::Record>& records) {
  std::vector<model::ReprParams> reprs;
  for (const auto& r : records)
    if (r.role == model::Role::ReprWeight) reprs.push_back(model::find_repr(records, r.level));
  if (reprs.empty()) throw UsageError("checkpoint holds no representation");
  return reprs;
}

int adapt(const Common& c, const std::string& model_path, const std::string& data_path) {
  const auto cfg = c.load();
  const auto records = model::load_checkpoint(model_path);
  const auto reprs = level_reprs(records);
  const Rng rng = Rng(c.seed).fork("adapt");
  std::vector<model::HeadParams> heads;
  if (data::peek_dataset_kind(data_path) == data::DatasetKind::BehavioralCloning) {
    bc::BCTrainConfig tc;
    cli::apply(cfg, tc);
    const auto ds = data::load_bc_dataset(data_path);
    if (ds.empty()) throw UsageError("dataset holds no tasks");
    if (reprs.size() == 1) {
      Rng r = rng;
      heads.push_back(bc::adapt_head(reprs[0], ds[0].batch, tc, r).head);
    } else {
      heads = bc::adapt_heads_levels(reprs, ds[0], tc, rng);
    }
  } else {
    oa::OATrainConfig tc;
    cli::apply(cfg, tc);
    const auto ds = data::load_oa_dataset(data_path);
    if (ds.empty()) throw UsageError("dataset holds no tasks");
    if (reprs.size() != ds[0].horizon())
      throw UsageError("observation-alone adaptation needs one representation per level");
    heads = oa::adapt_oa_heads(reprs, ds[0], tc, rng);
  }
  std::vector<model::Record> out;
  for (std::size_t h = 0; h < reprs.size(); ++h) {
    model::append_records(out, reprs[h], static_cast<std::uint32_t>(h));
    model::append_records(out, heads[h], static_cast<std::uint32_t>(h));
  }
  model::save_checkpoint(require_out(c, cfg), out);
  std::cout << "adapted " << heads.size() << " head(s)\n";
  return 0;
}

// eval

int evaluate(const Common& c, const std::string& model_path, const std::string& tasks_path,
             std::size_t task_index) {
  const auto cfg = c.load();
  const auto tasks = load_tasks(tasks_path);
  if (task_index >= tasks.size()) throw UsageError("--task-index out of range");
  const auto records = model::load_checkpoint(model_path);
  const auto reprs = level_reprs(records);
  std::vector<model::HeadParams> heads;
  for (std::size_t h = 0; h < reprs.size(); ++h) {
    if (!model::has_head(records, static_cast<std::uint32_t>(h)))
      throw UsageError("checkpoint has no head for level " + std::to_string(h));
    heads.push_back(model::find_head(records, static_cast<std::uint32_t>(h)));
  }
  const bool greedy = cfg.get_bool("eval.greedy").value_or(false);
  const auto policy = reprs.size() == 1 ? data::stationary_policy(reprs[0], heads[0], greedy)
                                        : data::level_policy(reprs, heads, greedy);
  const std::size_t episodes = cfg.get_size("eval.episodes").value_or(1000);
  Rng rng = Rng(c.seed).fork("eval");
  const auto est = eval::rollout_return(tasks[task_index], policy, episodes, rng);
  auto path = c.out_path(cfg);
  char line[96];
  std::snprintf(line, sizeof line, "%zu,%zu,%.6f,%.6f\n", task_index, episodes, est.mean, est.se);
  if (path.empty()) {
    std::cout << "task,episodes,return_mean,return_se\n" << line;
  } else {
    auto f = open_out(path);
    f << "task,episodes,return_mean,return_se\n" << line;
    std::cout << "return " << est.mean << " +- " << est.se << '\n';
  }
  return 0;
}

// experiment / rl

int experiment(const Common& c) {
  const auto cfg = c.load();
  eval::ExperimentConfig ec;
  cli::apply(cfg, ec);
  ec.master_seed = c.seed;
  ec.jobs = c.jobs;
  try {
    ec.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const auto path = c.out_path(cfg);
  std::vector<eval::ExperimentResult> rows;
  if (path.empty()) {
    rows = eval::run_experiment(ec, &std::cout, nullptr);
  } else {
    auto f = open_out(path);
    rows = eval::run_experiment(ec, &f, &std::cout);
  }
  const bool failed = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.status != "ok"; });
  if (failed) std::cerr << "some cells failed; see the status column\n";
  return failed ? 2 : 0;
}

int rl_run(const Common& c) {
  const auto cfg = c.load();
  rl::RLExperimentConfig rc;
  cli::apply(cfg, rc);
  rc.master_seed = c.seed;
  rc.jobs = c.jobs;
  try {
    rc.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const auto path = c.out_path(cfg);
  std::vector<rl::CurveRow> rows;
  if (path.empty()) {
    rows = rl::rl_experiment(rc, &std::cout, nullptr);
  } else {
    auto f = open_out(path);
    rows = rl::rl_experiment(rc, &f, &std::cout);
  }
  const bool failed = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.return_mean != r.return_mean; });
  if (failed) std::cerr << "some runs failed; their rows hold nan\n";
  return failed ? 2 : 0;
}

// gauss

int gauss(const Common& c, const std::string& cls_name, std::size_t draws, std::size_t points,
          std::size_t dim, std::size_t hidden, double radius) {
  const auto cfg = c.load();
  complexity::FunctionClassHandle cls;
  std::size_t input_dim = 1;
  if (cls_name == "singleton") {
    cls = complexity::constant_class({1.0});
  } else if (cls_name == "two-point") {
    cls = complexity::constant_class({0.0, 1.0});
  } else if (cls_name == "linear") {
    cls = complexity::linear_ball_class(dim, radius);
    input_dim = dim;
  } else if (cls_name == "relu") {
    cls = complexity::relu_repr_class(dim, hidden, radius);
    input_dim = dim;
  } else {
    throw UsageError("--class must be singleton, two-point, linear or relu");
  }
  Rng root(c.seed);
  Rng point_rng = root.fork("gauss-points");
  std::vector<Vector> xs;
  for (std::size_t j = 0; j < points; ++j) xs.push_back(gaussian_vector(point_rng, input_dim, 1.0));
  Rng rng = root.fork("gauss");
  const auto ga = complexity::gaussian_average_mc(cls, xs, draws, rng);
  nlohmann::json j = {{"class", cls_name},       {"draws", ga.draws},   {"points", points},
                      {"estimate", ga.estimate}, {"se", ga.se},         {"lower_bound", ga.lower_bound}};
  const auto path = c.out_path(cfg);
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    auto f = open_out(path);
    f << j.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task imitation learning on the noisy combination lock"};
  app.require_subcommand(1);

  Common common;
  std::size_t count = 20;
  std::string tasks_path, data_path, model_path, setting = "bc", dump_csv, cls = "two-point";
  std::size_t task_index = 0, draws = 20000, points = 1, dim = 5, hidden = 5;
  double radius = 1.0;

  auto* gen = app.add_subcommand("gen-tasks", "sample lock tasks");
  add_common(gen, common);
  gen->add_option("--count", count, "number of tasks")->check(CLI::PositiveNumber);

  auto* col = app.add_subcommand("collect", "collect expert data into a dataset file");
  add_common(col, common);
  col->add_option("--tasks", tasks_path, "task file")->required();
  col->add_option("--setting", setting, "bc or oa");
  col->add_option("--dump-csv", dump_csv, "also write a CSV dump");

  auto* tbc = app.add_subcommand("train-bc", "train a behavioral-cloning representation");
  add_common(tbc, common);
  tbc->add_option("--data", data_path, "dataset file")->required();

  auto* toa = app.add_subcommand("train-oa", "train observation-alone representations");
  add_common(toa, common);
  toa->add_option("--data", data_path, "dataset file")->required();

  auto* ad = app.add_subcommand("adapt", "fit heads on a new task with the representation frozen");
  add_common(ad, common);
  ad->add_option("--model", model_path, "checkpoint")->required();
  ad->add_option("--data", data_path, "test-task dataset (first task is used)")->required();

  auto* ev = app.add_subcommand("eval", "estimate the return of an adapted policy");
  add_common(ev, common);
  ev->add_option("--model", model_path, "checkpoint with heads")->required();
  ev->add_option("--tasks", tasks_path, "task file")->required();
  ev->add_option("--task-index", task_index, "which task to evaluate on");

  auto* ex = app.add_subcommand("experiment", "full sample-efficiency sweep to CSV");
  add_common(ex, common);

  auto* rlc = app.add_subcommand("rl", "policy-gradient transfer curves to CSV");
  add_common(rlc, common);

  auto* ga = app.add_subcommand("gauss", "Monte-Carlo Gaussian average of a function class");
  add_common(ga, common);
  ga->add_option("--class", cls, "singleton, two-point, linear or relu");
  ga->add_option("--draws", draws, "Gaussian draws");
  ga->add_option("--points", points, "number of data points");
  ga->add_option("--dim", dim, "input dimension (linear, relu)");
  ga->add_option("--hidden", hidden, "hidden units (relu)");
  ga->add_option("--radius", radius, "norm bound (linear, relu)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return gen_tasks(common, count);
    if (col->parsed()) return collect(common, tasks_path, setting, dump_csv);
    if (tbc->parsed()) return train_bc(common, data_path);
    if (toa->parsed()) return train_oa(common, data_path);
    if (ad->parsed()) return adapt(common, model_path, data_path);
    if (ev->parsed()) return evaluate(common, model_path, tasks_path, task_index);
    if (ex->parsed()) return experiment(common);
    if (rlc->parsed()) return rl_run(common);
    if (ga->parsed()) return gauss(common, cls, draws, points, dim, hidden, radius);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const TrainingFailure& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
