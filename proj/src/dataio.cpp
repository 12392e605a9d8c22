#include "rpd/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/core.h>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rpd/random.hpp"

namespace rpd {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line) {}

namespace {

std::optional<double> to_double(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) return std::nullopt;
  return v;
}

std::optional<std::size_t> to_index(std::string_view tok) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

SparseCoo Dataset::to_coo() const {
  SparseCoo coo{rows.size(), n_features, {}};
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (const auto& [c, v] : rows[r]) coo.entries.push_back({r, c, v});
  return coo;
}

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> n_features) {
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    auto tokens = split_ws(view);
    if (tokens.empty()) continue;
    auto label = to_double(tokens[0]);
    if (!label) throw ParseError(lineno, fmt::format("bad label '{}'", tokens[0]));
    std::vector<std::pair<std::size_t, double>> row;
    std::size_t last = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) throw ParseError(lineno, fmt::format("malformed token '{}'", tokens[t]));
      auto idx = to_index(tokens[t].substr(0, colon));
      if (!idx || *idx == 0) throw ParseError(lineno, fmt::format("bad index in '{}'", tokens[t]));
      auto val = to_double(tokens[t].substr(colon + 1));
      if (!val) throw ParseError(lineno, fmt::format("nonnumeric value in '{}'", tokens[t]));
      if (*idx <= last) throw ParseError(lineno, fmt::format("index {} not increasing", *idx));
      if (n_features && *idx > *n_features) {
        throw ParseError(lineno, fmt::format("index {} exceeds feature count {}", *idx, *n_features));
      }
      last = *idx;
      row.emplace_back(*idx - 1, *val);
    }
    max_index = std::max(max_index, last);
    data.rows.push_back(std::move(row));
    data.labels.push_back(*label);
  }
  data.n_features = n_features ? *n_features : max_index;
  return data;
}

Dataset read_libsvm(const std::string& path, std::optional<std::size_t> n_features) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  return parse_libsvm(in, n_features);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    std::string line = fmt::format("{:.17g}", data.labels.at(r));
    for (const auto& [c, v] : data.rows[r]) line += fmt::format(" {}:{:.17g}", c + 1, v);
    out << line << '\n';
  }
}

LadInstance gen_lad(const LadParams& params) {
  if (!(params.density > 0.0 && params.density <= 1.0)) {
    throw std::invalid_argument(fmt::format("gen_lad: density {} not in (0, 1]", params.density));
  }
  if (params.rows == 0 || params.cols == 0) throw std::invalid_argument("gen_lad: empty shape");
  if (!(params.noise >= 0.0)) throw std::invalid_argument("gen_lad: noise must be >= 0");
  if (!(params.support >= 0.0 && params.support <= 1.0)) throw std::invalid_argument("gen_lad: support not in [0, 1]");

  CounterRng root(params.seed, 0);
  CounterRng pattern = root.split(1);
  CounterRng values = root.split(2);
  CounterRng xrng = root.split(3);
  CounterRng noise = root.split(4);

  LadInstance inst;
  inst.K = SparseCoo{params.rows, params.cols, {}};
  for (std::size_t r = 0; r < params.rows; ++r)
    for (std::size_t c = 0; c < params.cols; ++c)
      if (params.density >= 1.0 || pattern.uniform() < params.density) inst.K.entries.push_back({r, c, values.normal()});

  // support drawn by a partial Fisher-Yates shuffle
  const auto k = static_cast<std::size_t>(std::llround(params.support * static_cast<double>(params.cols)));
  std::vector<std::size_t> perm(params.cols);
  std::iota(perm.begin(), perm.end(), 0);
  inst.x_true.assign(params.cols, 0.0);
  for (std::size_t t = 0; t < std::min(k, params.cols); ++t) {
    const std::size_t pick = t + xrng.below(params.cols - t);
    std::swap(perm[t], perm[pick]);
    inst.x_true[perm[t]] = xrng.normal();
  }

  inst.b.assign(params.rows, 0.0);
  for (const auto& e : inst.K.entries) inst.b[e.row] += e.value * inst.x_true[e.col];
  if (params.noise > 0.0)
    for (double& v : inst.b) v += params.noise * noise.laplace(1.0);
  return inst;
}

Dataset gen_svm(const SvmParams& params) {
  if (!(params.density > 0.0 && params.density <= 1.0)) throw std::invalid_argument("gen_svm: density not in (0, 1]");
  if (params.samples == 0 || params.features == 0) throw std::invalid_argument("gen_svm: empty shape");
  if (!(params.flip >= 0.0 && params.flip <= 1.0)) throw std::invalid_argument("gen_svm: flip not in [0, 1]");
  CounterRng root(params.seed, 0);
  CounterRng pattern = root.split(1);
  CounterRng values = root.split(2);
  CounterRng wrng = root.split(3);
  CounterRng labels = root.split(4);

  std::vector<double> w(params.features);
  for (double& e : w) e = wrng.normal();

  Dataset data;
  data.n_features = params.features;
  for (std::size_t r = 0; r < params.samples; ++r) {
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t c = 0; c < params.features; ++c)
      if (params.density >= 1.0 || pattern.uniform() < params.density) row.emplace_back(c, values.normal());
    if (row.empty()) row.emplace_back(pattern.below(params.features), values.normal());
    double nrm = 0.0;
    for (const auto& [c, v] : row) nrm += v * v;
    nrm = std::sqrt(nrm);
    double dot = 0.0;
    for (auto& [c, v] : row) {
      v /= nrm;
      dot += v * w[c];
    }
    double label = dot >= 0.0 ? 1.0 : -1.0;
    if (labels.uniform() < params.flip) label = -label;
    data.rows.push_back(std::move(row));
    data.labels.push_back(label);
  }
  return data;
}

Partition partition(std::size_t dim, std::size_t n_blocks) {
  return Partition::uniform(dim, n_blocks);
}

void write_instance(std::ostream& out, const LadInstance& inst) {
  out << "rpd-instance 1\n";
  out << fmt::format("{} {} {}\n", inst.K.rows, inst.K.cols, inst.K.entries.size());
  for (const auto& e : inst.K.entries) out << fmt::format("{} {} {:.17g}\n", e.row, e.col, e.value);
  out << fmt::format("b {}\n", inst.b.size());
  for (double v : inst.b) out << fmt::format("{:.17g}\n", v);
  out << fmt::format("x {}\n", inst.x_true.size());
  for (double v : inst.x_true) out << fmt::format("{:.17g}\n", v);
}

LadInstance read_instance(std::istream& in) {
  std::size_t lineno = 0;
  std::string line;
  auto next = [&]() -> std::vector<std::string_view> {
    if (!std::getline(in, line)) throw ParseError(lineno + 1, "unexpected end of instance");
    ++lineno;
    return split_ws(line);
  };
  auto index_at = [&](std::string_view tok) {
    auto v = to_index(tok);
    if (!v) throw ParseError(lineno, fmt::format("bad integer '{}'", tok));
    return *v;
  };
  auto double_at = [&](std::string_view tok) {
    auto v = to_double(tok);
    if (!v) throw ParseError(lineno, fmt::format("bad number '{}'", tok));
    return *v;
  };

  auto head = next();
  if (head.size() != 2 || head[0] != "rpd-instance" || head[1] != "1") throw ParseError(lineno, "missing header");
  auto dims = next();
  if (dims.size() != 3) throw ParseError(lineno, "expected '<rows> <cols> <nnz>'");
  LadInstance inst;
  inst.K.rows = index_at(dims[0]);
  inst.K.cols = index_at(dims[1]);
  const std::size_t nnz = index_at(dims[2]);
  inst.K.entries.reserve(nnz);
  for (std::size_t t = 0; t < nnz; ++t) {
    auto tok = next();
    if (tok.size() != 3) throw ParseError(lineno, "expected '<row> <col> <value>'");
    Triplet e{index_at(tok[0]), index_at(tok[1]), double_at(tok[2])};
    if (e.row >= inst.K.rows || e.col >= inst.K.cols) throw ParseError(lineno, "entry outside declared shape");
    inst.K.entries.push_back(e);
  }
  auto read_vec = [&](std::string_view tag, std::vector<double>& vec) {
    auto tok = next();
    if (tok.size() != 2 || tok[0] != tag) throw ParseError(lineno, fmt::format("expected '{} <length>'", tag));
    vec.resize(index_at(tok[1]));
    for (double& v : vec) {
      auto t = next();
      if (t.size() != 1) throw ParseError(lineno, "expected one value");
      v = double_at(t[0]);
    }
  };
  read_vec("b", inst.b);
  read_vec("x", inst.x_true);
  if (inst.b.size() != inst.K.rows) throw ParseError(lineno, "b length does not match rows");
  if (!inst.x_true.empty() && inst.x_true.size() != inst.K.cols) throw ParseError(lineno, "x length does not match cols");
  return inst;
}

void save_instance(const std::string& path, const LadInstance& inst) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  write_instance(out, inst);
}

LadInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  return read_instance(in);
}

}  // namespace rpd
