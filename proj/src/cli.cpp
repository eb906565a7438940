// Copyright 2026 The onlinesfm Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "onlinesfm/cli.hpp"

#include <algorithm>
#include <charconv>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "onlinesfm/datagen.hpp"
#include "onlinesfm/io.hpp"
#include "onlinesfm/metric.hpp"
#include "onlinesfm/online_driver.hpp"
#include "onlinesfm/stream.hpp"

namespace onlinesfm {

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

struct AlgoChoice {
  Variant variant = Variant::Sage;
  WeightSolver solver = WeightSolver::L2;
  bool decaying = false;
};

AlgoChoice parse_algo(const std::string& name) {
  if (name == "sage") return {};
  if (name == "sage100") return {Variant::Sage, WeightSolver::L2, true};
  if (name == "rsage") return {Variant::Sage, WeightSolver::L1, false};
  if (name == "rsage100") return {Variant::Sage, WeightSolver::L1, true};
  if (name == "md-isvd") return {Variant::MdIsvd, WeightSolver::L2, false};
  throw Error(ErrorCode::InvalidDimension, "unknown algorithm '" + name + "'");
}

const std::vector<std::string> kAlgos = {"sage", "sage100", "rsage", "rsage100", "md-isvd"};

UpdateConfig update_config(const AlgoChoice& algo, double c) {
  UpdateConfig cfg;
  cfg.weightSolver = algo.solver;
  if (algo.decaying) cfg.alphaSchedule = AlphaSchedule::decaying(c);
  return cfg;
}

std::filesystem::path sibling(const std::filesystem::path& p, const char* ext) {
  auto q = p;
  q.replace_extension(ext);
  return q;
}

// Sorts model rows by track id so that row i belongs to the i-th smallest id.
FactorModel<double> rows_by_track(const FactorModel<double>& model,
                                  const std::unordered_map<std::int64_t, Index>& trackRows) {
  std::vector<std::pair<std::int64_t, Index>> order(trackRows.begin(), trackRows.end());
  std::sort(order.begin(), order.end());
  FactorModel<double> out = model;
  for (std::size_t i = 0; i < order.size(); ++i) out.U.row(static_cast<Index>(i)) = model.U.row(order[i].second);
  return out;
}

struct GenArgs {
  bool sphere = false;
  std::string project;
  Index cloud = 0;
  Index points = 100;
  std::optional<Index> frames;
  std::string occlusion;
  std::optional<double> missing;
  double outliers = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string output;
  std::string gt;
  std::string tracks;
};

int run_gen(const GenArgs& a, std::ostream& out) {
  if (a.sphere == (!a.project.empty() || a.cloud > 0)) {
    throw Error(ErrorCode::InvalidDimension, "choose exactly one of --sphere, --project, --cloud");
  }
  SyntheticScene scene;
  MeasurementMatrixd w;
  if (a.sphere) {
    scene = gen_sphere(a.points, a.frames.value_or(200), a.seed);
    const std::string occ = a.occlusion.empty() ? "banded" : a.occlusion;
    if (occ == "banded") {
      w = apply_banded_occlusion(scene);
    } else if (occ == "random") {
      w = apply_random_occlusion(scene.Wfull, a.missing.value_or(0.651), a.seed + 1);
      scene.mask = w.mask;
    } else if (occ == "none") {
      w = scene.measurement();
    } else {
      throw Error(ErrorCode::InvalidDimension, "unknown occlusion '" + occ + "'");
    }
  } else {
    Eigen::MatrixXd sgt;
    if (!a.project.empty()) {
      std::ifstream in(a.project);
      if (!in) throw Error(ErrorCode::IoError, "cannot open " + a.project);
      sgt = read_point_cloud(in, a.project);
    } else {
      sgt = random_cloud(a.cloud, a.seed);
    }
    const std::string occ = a.occlusion.empty() ? "random" : a.occlusion;
    if (occ != "random" && occ != "none") throw Error(ErrorCode::InvalidDimension, "projected scenes take random or none occlusion");
    scene = gen_projected_model(sgt, a.frames.value_or(100), occ == "none" ? 0.0 : a.missing.value_or(0.9), a.seed + 1);
    w = scene.measurement();
  }
  if (a.noise > 0.0) w = add_noise(w, a.noise, a.seed + 2);
  if (a.outliers > 0.0) w = inject_outliers(w, a.outliers, a.seed + 3);

  const std::filesystem::path output(a.output);
  write_matrix(w, output);
  write_ground_truth(GroundTruth{scene.trackMap, scene.row_points()}, a.gt.empty() ? sibling(output, ".gt") : std::filesystem::path(a.gt));
  if (!a.tracks.empty()) write_tracks(frames_from(w), std::filesystem::path(a.tracks));
  out << w.rows() << ' ' << w.cols() << ' ' << num(w.missing_fraction()) << '\n';
  return 0;
}

struct RunArgs {
  std::string input;
  std::string tracks;
  std::string algo = "sage";
  Index rank = 4;
  std::string init = "random";
  std::uint64_t seed = 0;
  double convDrop = 0.01;
  Index convWindow = 10;
  double maxSeconds = 600.0;
  Index maxPasses = 100000;
  double c = 100.0;
  bool noOnes = false;
  bool noTiming = false;
  Index itersPerFrame = 0;
  std::optional<Index> capacity;
  bool realtime = false;
  std::string log;
  std::string model;
};

int run_batch_cmd(const RunArgs& a, std::ostream& out) {
  const auto w = read_matrix(std::filesystem::path(a.input));
  const auto algo = parse_algo(a.algo);
  BatchConfig cfg;
  cfg.variant = algo.variant;
  cfg.rank = a.rank;
  cfg.onesColumn = !a.noOnes;
  cfg.init = a.init == "mean" ? InitKind::ColumnMean : InitKind::Random;
  cfg.seed = a.seed;
  cfg.update = update_config(algo, a.c);
  cfg.convergence.relDrop = a.convDrop;
  cfg.convergence.window = a.convWindow;
  cfg.convergence.maxSeconds = a.maxSeconds;
  cfg.convergence.maxPasses = a.maxPasses;
  const auto res = run_batch(w, cfg);
  if (!a.log.empty()) write_runlog(res.log, std::filesystem::path(a.log), !a.noTiming);
  if (!a.model.empty()) write_model(res.model, std::filesystem::path(a.model));
  out << num(res.log.records.back().rmse2d) << '\n';
  return 0;
}

int run_online_cmd(const RunArgs& a, std::ostream& out) {
  if (a.input.empty() == a.tracks.empty()) {
    throw Error(ErrorCode::InvalidDimension, "give exactly one of --input or --tracks");
  }
  const auto frames = a.tracks.empty() ? frames_from(read_matrix(std::filesystem::path(a.input)))
                                       : read_tracks(std::filesystem::path(a.tracks));
  const auto algo = parse_algo(a.algo);
  OnlineConfig cfg;
  cfg.variant = algo.variant;
  cfg.rank = a.rank;
  cfg.onesColumn = !a.noOnes;
  cfg.iterationsPerFrame = a.itersPerFrame;
  cfg.seed = a.seed;
  cfg.update = update_config(algo, a.c);
  cfg.storeCapacity = a.capacity;

  OnlineResult res;
  if (a.realtime) {
    FrameQueue queue;
    std::thread producer([&] {
      for (const auto& f : frames) queue.push(f);
      queue.close();
    });
    auto rt = run_realtime(queue, cfg);
    producer.join();
    res = std::move(rt.result);
  } else {
    res = run_online(frames, cfg);
  }
  if (!a.log.empty()) write_runlog(res.log, std::filesystem::path(a.log), !a.noTiming);
  if (!a.model.empty()) write_model(rows_by_track(res.model, res.trackRows), std::filesystem::path(a.model));
  out << num(res.log.records.empty() ? 0.0 : res.log.records.back().rmse2d) << '\n';
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string gt;
  std::string input;
  bool rmse2d = false;
  bool rmse3d = false;
  bool relError = false;
};

int run_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto model = read_model(std::filesystem::path(a.model));
  const bool any = a.rmse2d || a.rmse3d || a.relError;
  const bool want2d = a.rmse2d || (!any && !a.input.empty());
  const bool want3d = a.rmse3d || (!any && !a.gt.empty());
  const bool wantRel = a.relError || (!any && !a.gt.empty());
  std::vector<std::pair<std::string, double>> results;
  if (want2d) {
    if (a.input.empty()) throw Error(ErrorCode::InvalidDimension, "--rmse2d needs --input");
    const auto w = read_matrix(std::filesystem::path(a.input));
    if (w.rows() != model.rows() || w.cols() != model.cols()) {
      throw Error(ErrorCode::InvalidDimension, "model and measurement shapes differ");
    }
    results.emplace_back("rmse2d", rmse_2d<double>(reconstruct(model), w.values, w.mask));
  }
  if (want3d || wantRel) {
    if (a.gt.empty()) throw Error(ErrorCode::InvalidDimension, "3D metrics need --gt");
    const auto gt = read_ground_truth(std::filesystem::path(a.gt));
    if (gt.rowPoints.rows() != model.rows()) throw Error(ErrorCode::InvalidDimension, "ground truth row count differs");
    const auto ev = evaluate_structure(model, gt.rowPoints);
    if (ev.sfm.metricDegenerate) err << "warning: metric upgrade was degenerate\n";
    if (want3d) results.emplace_back("rmse3d", ev.rmse3d);
    if (wantRel) results.emplace_back("rel-error", ev.relError);
  }
  if (results.empty()) throw Error(ErrorCode::InvalidDimension, "nothing to evaluate");
  if (results.size() == 1) {
    out << num(results.front().second) << '\n';
  } else {
    for (const auto& [name, value] : results) out << name << ' ' << num(value) << '\n';
  }
  return 0;
}

struct ExportArgs {
  std::string model;
  std::string points;
  std::string cameras;
  std::string gt;
};

int run_export(const ExportArgs& a, std::ostream& err) {
  if (a.points.empty() && a.cameras.empty()) throw Error(ErrorCode::InvalidDimension, "nothing to export");
  const auto model = read_model(std::filesystem::path(a.model));
  auto sfm = metric_upgrade(model);
  if (sfm.metricDegenerate) err << "warning: metric upgrade was degenerate\n";
  if (!a.gt.empty()) {
    const auto gt = read_ground_truth(std::filesystem::path(a.gt));
    sfm.S = procrustes_align<double>(sfm.S, gt.rowPoints).aligned;
  }
  auto open = [](const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
    return f;
  };
  if (!a.points.empty()) {
    auto f = open(a.points);
    write_point_cloud(sfm.S, f);
  }
  if (!a.cameras.empty()) {
    auto f = open(a.cameras);
    write_cameras(sfm.M, sfm.tau, f);
  }
  return 0;
}

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--algo", a.algo, "sage, sage100, rsage, rsage100 or md-isvd")->check(CLI::IsMember(kAlgos));
  cmd->add_option("--rank", a.rank, "factorization rank")->check(CLI::Range(Index(2), Index(1000000)));
  cmd->add_option("--seed", a.seed);
  cmd->add_option("--c", a.c, "decay constant for the *100 schedules")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-ones", a.noOnes, "drop the ones-column constraint");
  cmd->add_flag("--no-timing", a.noTiming, "write zero seconds to the log");
  cmd->add_option("--log", a.log);
  cmd->add_option("-o,--model", a.model, "write the final model");
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"online rank-k matrix completion for structure from motion"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic dataset");
  g->add_flag("--sphere", gen.sphere, "unit sphere seen from a circling camera");
  g->add_option("--project", gen.project, "project an 'x y z' point file onto random cameras");
  g->add_option("--cloud", gen.cloud, "project a random cloud of this many points");
  g->add_option("--points", gen.points)->check(CLI::Range(Index(4), Index(100000000)));
  g->add_option("--frames", gen.frames)->check(CLI::Range(Index(3), Index(100000000)));
  g->add_option("--occlusion", gen.occlusion)->check(CLI::IsMember({"banded", "random", "none"}));
  g->add_option("--missing", gen.missing)->check(CLI::Range(0.0, 0.999999));
  g->add_option("--outliers", gen.outliers)->check(CLI::Range(0.0, 1.0));
  g->add_option("--noise", gen.noise)->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen.seed);
  g->add_option("-o,--output", gen.output)->required();
  g->add_option("--gt", gen.gt, "ground truth file (default: output with .gt)");
  g->add_option("--tracks", gen.tracks, "also write a track stream");

  RunArgs batch;
  auto* b = app.add_subcommand("batch", "randomized passes until convergence");
  b->add_option("-i,--input", batch.input)->required();
  add_run_options(b, batch);
  b->add_option("--init", batch.init)->check(CLI::IsMember({"random", "mean"}));
  b->add_option("--conv-drop", batch.convDrop);
  b->add_option("--conv-window", batch.convWindow)->check(CLI::PositiveNumber);
  b->add_option("--max-seconds", batch.maxSeconds)->check(CLI::PositiveNumber);
  b->add_option("--max-passes", batch.maxPasses)->check(CLI::PositiveNumber);

  RunArgs online;
  auto* o = app.add_subcommand("online", "frame-by-frame processing with revisits");
  o->add_option("-i,--input", online.input, "measurement matrix replayed as a stream");
  o->add_option("--tracks", online.tracks, "track stream file");
  add_run_options(o, online);
  o->add_option("--iters-per-frame", online.itersPerFrame)->check(CLI::NonNegativeNumber);
  o->add_option("--capacity", online.capacity, "retained columns")->check(CLI::PositiveNumber);
  o->add_flag("--realtime", online.realtime, "feed frames from a second thread");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "error metrics of a saved model");
  e->add_option("model", eval.model)->required();
  e->add_option("--gt", eval.gt);
  e->add_option("-i,--input", eval.input);
  e->add_flag("--rmse2d", eval.rmse2d);
  e->add_flag("--rmse3d", eval.rmse3d);
  e->add_flag("--rel-error", eval.relError);

  ExportArgs exp;
  auto* x = app.add_subcommand("export", "metric structure and cameras of a saved model");
  x->add_option("model", exp.model)->required();
  x->add_option("--points", exp.points);
  x->add_option("--cameras", exp.cameras);
  x->add_option("--gt", exp.gt, "align points to this ground truth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (g->parsed()) return run_gen(gen, out);
    if (b->parsed()) return run_batch_cmd(batch, out);
    if (o->parsed()) return run_online_cmd(online, out);
    if (e->parsed()) return run_eval(eval, out, err);
    if (x->parsed()) return run_export(exp, err);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return ex.code() == ErrorCode::NumericalFault || ex.code() == ErrorCode::DegenerateAlignment ? 2 : 1;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 1;
}

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

}  // namespace onlinesfm
