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

#include "onlinesfm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace onlinesfm {

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  // Next non-empty, non-comment line split into tokens.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      tokens.clear();
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg, ErrorCode code = ErrorCode::ParseError) const {
    throw Error(code, name_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  std::int64_t integer(const std::string& tok) const {
    std::int64_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("expected an integer, got '" + tok + "'");
    return v;
  }

  double real(const std::string& tok) const {
    double v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("expected a number, got '" + tok + "'");
    if (!std::isfinite(v)) fail("non-finite value '" + tok + "'");
    return v;
  }

  void expect(const std::vector<std::string>& tokens, std::size_t count, const char* what) const {
    if (tokens.size() != count) fail(std::string("expected ") + what);
  }

  std::size_t line() const { return line_no_; }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t line_no_ = 0;
};

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

template <typename Fn>
void with_out(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  fn(out);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void write_rows(const Eigen::MatrixXd& m, std::ostream& out) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << fmt(m(i, j));
    out << '\n';
  }
}

Eigen::MatrixXd read_rows(LineReader& reader, Index rows, Index cols) {
  Eigen::MatrixXd m(rows, cols);
  std::vector<std::string> tok;
  for (Index i = 0; i < rows; ++i) {
    if (!reader.next(tok)) reader.fail("unexpected end of file");
    if (static_cast<Index>(tok.size()) != cols) reader.fail("expected " + std::to_string(cols) + " values");
    for (Index j = 0; j < cols; ++j) m(i, j) = reader.real(tok[static_cast<std::size_t>(j)]);
  }
  return m;
}

}  // namespace

MeasurementMatrixd read_matrix(std::istream& in, const std::string& name) {
  LineReader reader(in, name);
  std::vector<std::string> tok;
  if (!reader.next(tok)) reader.fail("missing header");
  reader.expect(tok, 2, "header '<rows> <cols>'");
  const auto rows = reader.integer(tok[0]);
  const auto cols = reader.integer(tok[1]);
  if (rows < 0 || cols < 0) reader.fail("negative dimensions");
  MeasurementMatrixd w(rows, cols);
  while (reader.next(tok)) {
    reader.expect(tok, 3, "'<row> <col> <value>'");
    const auto i = reader.integer(tok[0]);
    const auto j = reader.integer(tok[1]);
    const double v = reader.real(tok[2]);
    if (i < 0 || i >= rows) reader.fail("row index " + std::to_string(i) + " out of range");
    if (j < 0 || j >= cols) reader.fail("column index " + std::to_string(j) + " out of range");
    if (w.observed(i, j)) {
      reader.fail("duplicate entry (" + std::to_string(i) + ", " + std::to_string(j) + ")", ErrorCode::DuplicateEntry);
    }
    w.set(i, j, v);
  }
  return w;
}

MeasurementMatrixd read_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_matrix(in, path.string());
}

void write_matrix(const MeasurementMatrixd& w, std::ostream& out) {
  out << w.rows() << ' ' << w.cols() << '\n';
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j)
      if (w.observed(i, j)) out << i << ' ' << j << ' ' << fmt(w.values(i, j)) << '\n';
}

void write_matrix(const MeasurementMatrixd& w, const std::filesystem::path& path) {
  with_out(path, [&](std::ostream& out) { write_matrix(w, out); });
}

std::vector<Frame> read_tracks(std::istream& in, const std::string& name) {
  LineReader reader(in, name);
  std::vector<Frame> frames;
  std::vector<std::string> tok;
  while (reader.next(tok)) {
    if (tok[0] == "frame") {
      reader.expect(tok, 2, "'frame <f>'");
      const auto f = reader.integer(tok[1]);
      if (!frames.empty() && f <= frames.back().frameId) reader.fail("frame ids must be strictly increasing");
      frames.push_back(Frame{f, {}});
      continue;
    }
    if (frames.empty()) reader.fail("observation before the first frame line");
    reader.expect(tok, 3, "'<trackId> <u> <v>'");
    frames.back().observations.push_back({reader.integer(tok[0]), reader.real(tok[1]), reader.real(tok[2])});
  }
  return frames;
}

std::vector<Frame> read_tracks(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_tracks(in, path.string());
}

void write_tracks(const std::vector<Frame>& frames, std::ostream& out) {
  for (const auto& frame : frames) {
    out << "frame " << frame.frameId << '\n';
    for (const auto& obs : frame.observations) out << obs.trackId << ' ' << fmt(obs.u) << ' ' << fmt(obs.v) << '\n';
  }
}

void write_tracks(const std::vector<Frame>& frames, const std::filesystem::path& path) {
  with_out(path, [&](std::ostream& out) { write_tracks(frames, out); });
}

void write_runlog(const RunLog& log, std::ostream& out, bool timing) {
  out << "# index seconds rmse2d cols rows\n";
  for (const auto& rec : log.records) {
    out << rec.index << ' ' << fmt(timing ? rec.seconds : 0.0) << ' ' << fmt(rec.rmse2d) << ' ' << rec.cols << ' '
        << rec.rows << '\n';
  }
}

void write_runlog(const RunLog& log, const std::filesystem::path& path, bool timing) {
  with_out(path, [&](std::ostream& out) { write_runlog(log, out, timing); });
}

RunLog read_runlog(std::istream& in, const std::string& name) {
  LineReader reader(in, name);
  RunLog log;
  std::vector<std::string> tok;
  while (reader.next(tok)) {
    reader.expect(tok, 5, "'<index> <seconds> <rmse2d> <cols> <rows>'");
    log.records.push_back({reader.integer(tok[0]), reader.real(tok[1]), reader.real(tok[2]), reader.integer(tok[3]),
                           reader.integer(tok[4])});
  }
  return log;
}

RunLog read_runlog(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_runlog(in, path.string());
}

void write_model(const FactorModel<double>& model, std::ostream& out) {
  out << "# onlinesfm factor model\n";
  out << "variant " << to_string(model.variant) << '\n';
  out << "ones " << (model.onesColumn ? 1 : 0) << '\n';
  out << "shape " << model.rows() << ' ' << model.rank() << ' ' << model.cols() << '\n';
  out << "d";
  for (Index j = 0; j < model.d.size(); ++j) out << ' ' << fmt(model.d(j));
  out << "\nU\n";
  write_rows(model.U, out);
  out << "R\n";
  write_rows(model.R, out);
}

void write_model(const FactorModel<double>& model, const std::filesystem::path& path) {
  with_out(path, [&](std::ostream& out) { write_model(model, out); });
}

FactorModel<double> read_model(std::istream& in, const std::string& name) {
  LineReader reader(in, name);
  std::vector<std::string> tok;
  FactorModel<double> model;
  auto header = [&](const char* key, std::size_t count) {
    if (!reader.next(tok) || tok[0] != key) reader.fail(std::string("expected '") + key + "'");
    reader.expect(tok, count, key);
  };
  header("variant", 2);
  if (tok[1] == "sage") {
    model.variant = Variant::Sage;
  } else if (tok[1] == "md-isvd") {
    model.variant = Variant::MdIsvd;
  } else {
    reader.fail("unknown variant '" + tok[1] + "'");
  }
  header("ones", 2);
  model.onesColumn = reader.integer(tok[1]) != 0;
  header("shape", 4);
  const auto n = reader.integer(tok[1]);
  const auto k = reader.integer(tok[2]);
  const auto t = reader.integer(tok[3]);
  if (n < 0 || k < 1 || t < 0) reader.fail("bad shape");
  header("d", static_cast<std::size_t>(k) + 1);
  model.d.resize(k);
  for (Index j = 0; j < k; ++j) model.d(j) = reader.real(tok[static_cast<std::size_t>(j) + 1]);
  header("U", 1);
  model.U = read_rows(reader, n, k);
  header("R", 1);
  model.R = read_rows(reader, t, k);
  return model;
}

FactorModel<double> read_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_model(in, path.string());
}

void write_ground_truth(const GroundTruth& gt, std::ostream& out) {
  out << "# row point x y z\n";
  for (Index r = 0; r < gt.rowPoints.rows(); ++r) {
    out << r << ' ' << gt.pointIds[static_cast<std::size_t>(r)] << ' ' << fmt(gt.rowPoints(r, 0)) << ' '
        << fmt(gt.rowPoints(r, 1)) << ' ' << fmt(gt.rowPoints(r, 2)) << '\n';
  }
}

void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  with_out(path, [&](std::ostream& out) { write_ground_truth(gt, out); });
}

GroundTruth read_ground_truth(std::istream& in, const std::string& name) {
  LineReader reader(in, name);
  std::vector<std::string> tok;
  std::vector<Eigen::RowVector3d> pts;
  GroundTruth gt;
  while (reader.next(tok)) {
    reader.expect(tok, 5, "'<row> <point> <x> <y> <z>'");
    if (reader.integer(tok[0]) != static_cast<std::int64_t>(pts.size())) reader.fail("rows must be listed in order");
    gt.pointIds.push_back(reader.integer(tok[1]));
    pts.emplace_back(reader.real(tok[2]), reader.real(tok[3]), reader.real(tok[4]));
  }
  gt.rowPoints.resize(static_cast<Index>(pts.size()), 3);
  for (std::size_t r = 0; r < pts.size(); ++r) gt.rowPoints.row(static_cast<Index>(r)) = pts[r];
  return gt;
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_ground_truth(in, path.string());
}

void write_point_cloud(const Eigen::MatrixXd& s, std::ostream& out) { write_rows(s, out); }

Eigen::MatrixXd read_point_cloud(std::istream& in, const std::string& name) {
  LineReader reader(in, name);
  std::vector<std::string> tok;
  std::vector<Eigen::RowVector3d> pts;
  while (reader.next(tok)) {
    reader.expect(tok, 3, "'<x> <y> <z>'");
    pts.emplace_back(reader.real(tok[0]), reader.real(tok[1]), reader.real(tok[2]));
  }
  Eigen::MatrixXd s(static_cast<Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) s.row(static_cast<Index>(i)) = pts[i];
  return s;
}

void write_cameras(const Eigen::MatrixXd& m, const Eigen::VectorXd& tau, std::ostream& out) {
  for (Index f = 0; 2 * f + 1 < m.rows(); ++f) {
    out << f;
    for (Index r = 0; r < 2; ++r)
      for (Index c = 0; c < 3; ++c) out << ' ' << fmt(m(2 * f + r, c));
    const double tx = tau.size() == m.rows() ? tau(2 * f) : 0.0;
    const double ty = tau.size() == m.rows() ? tau(2 * f + 1) : 0.0;
    out << ' ' << fmt(tx) << ' ' << fmt(ty) << '\n';
  }
}

}  // namespace onlinesfm
