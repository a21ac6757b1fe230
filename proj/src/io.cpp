#include "pidkit/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pidkit {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw FormatError(msg); }

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

int get_dim(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer() || v.get<long long>() <= 0 || v.get<long long>() > (1 << 20))
    fail(std::string("field '") + key + "' must be a positive integer");
  return v.get<int>();
}

double get_real(const json& v, const char* what) {
  if (!v.is_number()) fail(std::string(what) + ": expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) fail(std::string(what) + ": non-finite value");
  return x;
}

json matrix_json(const CMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(json::array({m(i, k).real(), m(i, k).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    fail(what + ": expected " + std::to_string(rows) + " rows");
  CMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      fail(what + ": expected " + std::to_string(cols) + " columns in row " + std::to_string(i));
    for (int k = 0; k < cols; ++k) {
      const json& z = row[k];
      if (!z.is_array() || z.size() != 2) fail(what + ": entries must be [re, im] pairs");
      m(i, k) = cplx(get_real(z[0], what.c_str()), get_real(z[1], what.c_str()));
    }
  }
  return m;
}

json real_table_json(const RMatrix& t) {
  json rows = json::array();
  for (int i = 0; i < t.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < t.cols(); ++k) row.push_back(t(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

RMatrix real_table_from(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    fail(what + ": expected " + std::to_string(rows) + " rows");
  RMatrix t(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      fail(what + ": expected " + std::to_string(cols) + " columns");
    for (int k = 0; k < cols; ++k) t(i, k) = get_real(j[i][k], what.c_str());
  }
  return t;
}

json matrix_list(const std::vector<CMatrix>& v) {
  json a = json::array();
  for (const auto& m : v) a.push_back(matrix_json(m));
  return a;
}

json matrix_grid(const std::vector<std::vector<CMatrix>>& g) {
  json a = json::array();
  for (const auto& row : g) a.push_back(matrix_list(row));
  return a;
}

std::vector<CMatrix> matrix_list_from(const json& j, int n, int d, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    fail(what + ": expected " + std::to_string(n) + " matrices");
  std::vector<CMatrix> out;
  for (int i = 0; i < n; ++i) out.push_back(matrix_from(j[i], d, d, what));
  return out;
}

std::vector<std::vector<CMatrix>> matrix_grid_from(const json& j, int n0, int n1, int d,
                                                   const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n0)
    fail(what + ": expected " + std::to_string(n0) + " rows of matrices");
  std::vector<std::vector<CMatrix>> out;
  for (int i = 0; i < n0; ++i) out.push_back(matrix_list_from(j[i], n1, d, what));
  return out;
}

std::vector<std::vector<CMatrix>> choi_grid(const Pid& p) {
  std::vector<std::vector<CMatrix>> g(p.n_programs());
  for (int x0 = 0; x0 < p.n_programs(); ++x0)
    for (int x1 = 0; x1 < p.n_outcomes(); ++x1) g[x0].push_back(p.block(x0, x1).mat());
  return g;
}

std::vector<CMatrix> choi_list(const Instrument& inst) {
  std::vector<CMatrix> v;
  for (const auto& b : inst.branches) v.push_back(b.mat());
  return v;
}

std::vector<ChoiMatrix> to_choi(const std::vector<CMatrix>& v, int din, int dout) {
  std::vector<ChoiMatrix> out;
  for (const auto& m : v) out.emplace_back(din, dout, m);
  return out;
}

struct Writer {
  json& j;
  void operator()(const Pid& p) {
    j["kind"] = "pid";
    j["din"] = p.din();
    j["dout"] = p.dout();
    j["n_programs"] = p.n_programs();
    j["n_outcomes"] = p.n_outcomes();
    j["blocks"] = matrix_grid(choi_grid(p));
  }
  void operator()(const Pmd& m) {
    j["kind"] = "pmd";
    j["dim"] = m.dim;
    j["n_programs"] = m.n_programs();
    j["n_outcomes"] = m.n_outcomes();
    j["effects"] = matrix_grid(m.effects);
  }
  void operator()(const Povm& m) {
    j["kind"] = "povm";
    j["dim"] = m.dim;
    j["n_outcomes"] = static_cast<int>(m.effects.size());
    j["effects"] = matrix_list(m.effects);
  }
  void operator()(const Instrument& inst) {
    j["kind"] = "instrument";
    j["din"] = inst.din;
    j["dout"] = inst.dout;
    j["n_outcomes"] = inst.size();
    j["branches"] = matrix_list(choi_list(inst));
  }
  void operator()(const ChoiMatrix& c) {
    j["kind"] = "channel";
    j["din"] = c.din();
    j["dout"] = c.dout();
    j["choi"] = matrix_json(c.mat());
  }
  void operator()(const GameSpec& g) {
    j["kind"] = "game";
    j["n_m"] = g.n_m;
    j["n_n"] = g.n_n;
    j["d_ref"] = g.d_ref;
    j["dout"] = g.dout;
    j["effects"] = matrix_grid(g.effects);
  }
  void operator()(const PiGameSpec& g) {
    j["kind"] = "pigame";
    j["n_m"] = g.n_m;
    j["n_n"] = g.n_n;
    j["din"] = g.din;
    j["dout"] = g.dout;
    j["n_l"] = g.n_l();
    json e = json::array();
    for (const auto& row : g.ensemble) e.push_back(matrix_grid(row));
    j["ensemble"] = std::move(e);
    j["povm_l"] = matrix_list(g.povm_l.effects);
  }
  void operator()(const FreeSimulation& f) {
    j["kind"] = "simulation";
    j["n_x0"] = f.n_x0;
    j["n_x1"] = f.n_x1;
    j["n_y0"] = f.n_y0;
    j["n_y1"] = f.n_y1;
    j["d_a0"] = f.d_a0;
    j["d_a1"] = f.d_a1;
    j["d_b0"] = f.d_b0;
    j["d_b1"] = f.d_b1;
    j["d_side"] = f.d_side;
    j["n_k"] = f.n_k();
    j["n_l"] = f.n_l();
    j["pre"] = matrix_json(f.pre.mat());
    j["post"] = matrix_list(choi_list(f.post));
    j["p"] = real_table_json(f.p.table());
    j["q"] = real_table_json(f.q.table());
  }
  void operator()(const Functional& f) {
    j["kind"] = "functional";
    j["din"] = f.din;
    j["dout"] = f.dout;
    j["n_programs"] = static_cast<int>(f.targets.size());
    j["n_outcomes"] = f.targets.empty() ? 0 : static_cast<int>(f.targets[0].size());
    j["targets"] = matrix_grid(f.targets);
  }
  void operator()(const CertificateFile& c) {
    j["kind"] = "certificate";
    j["din"] = c.din;
    j["dout"] = c.dout;
    j["n_programs"] = static_cast<int>(c.witness.alpha.size());
    j["n_outcomes"] = c.witness.alpha.empty() ? 0 : static_cast<int>(c.witness.alpha[0].size());
    j["r"] = c.r;
    j["dual"] = c.dual;
    j["gap"] = c.gap;
    j["alpha"] = matrix_grid(c.witness.alpha);
    j["beta"] = matrix_list(c.witness.beta);
  }
};

DeviceValue read_value(const json& j, const std::string& kind) {
  if (kind == "pid") {
    int din = get_dim(j, "din"), dout = get_dim(j, "dout");
    int nx0 = get_dim(j, "n_programs"), nx1 = get_dim(j, "n_outcomes");
    auto g = matrix_grid_from(field(j, "blocks"), nx0, nx1, din * dout, "blocks");
    std::vector<std::vector<ChoiMatrix>> blocks;
    for (auto& row : g) blocks.push_back(to_choi(row, din, dout));
    return Pid(din, dout, std::move(blocks));
  }
  if (kind == "pmd") {
    int d = get_dim(j, "dim");
    auto g = matrix_grid_from(field(j, "effects"), get_dim(j, "n_programs"), get_dim(j, "n_outcomes"),
                              d, "effects");
    return Pmd(d, std::move(g));
  }
  if (kind == "povm") {
    Povm m;
    m.dim = get_dim(j, "dim");
    m.effects = matrix_list_from(field(j, "effects"), get_dim(j, "n_outcomes"), m.dim, "effects");
    for (auto& e : m.effects) e = hermitize(e);
    return m;
  }
  if (kind == "instrument") {
    int din = get_dim(j, "din"), dout = get_dim(j, "dout");
    auto v = matrix_list_from(field(j, "branches"), get_dim(j, "n_outcomes"), din * dout, "branches");
    return Instrument(to_choi(v, din, dout));
  }
  if (kind == "channel") {
    int din = get_dim(j, "din"), dout = get_dim(j, "dout");
    return ChoiMatrix(din, dout, matrix_from(field(j, "choi"), din * dout, din * dout, "choi"));
  }
  if (kind == "game") {
    GameSpec g;
    g.n_m = get_dim(j, "n_m");
    g.n_n = get_dim(j, "n_n");
    g.d_ref = get_dim(j, "d_ref");
    g.dout = get_dim(j, "dout");
    g.effects = matrix_grid_from(field(j, "effects"), g.n_m, g.n_n, g.d_ref * g.dout, "effects");
    for (auto& row : g.effects)
      for (auto& e : row) e = hermitize(e);
    return g;
  }
  if (kind == "pigame") {
    PiGameSpec g;
    g.n_m = get_dim(j, "n_m");
    g.n_n = get_dim(j, "n_n");
    g.din = get_dim(j, "din");
    g.dout = get_dim(j, "dout");
    int nl = get_dim(j, "n_l");
    const json& e = field(j, "ensemble");
    if (!e.is_array() || static_cast<int>(e.size()) != g.n_m) fail("ensemble: expected n_m entries");
    for (int m = 0; m < g.n_m; ++m) {
      auto grid = matrix_grid_from(e[m], g.n_n, nl, g.din, "ensemble");
      for (auto& row : grid)
        for (auto& s : row) s = hermitize(s);
      g.ensemble.push_back(std::move(grid));
    }
    g.povm_l.dim = g.dout;
    g.povm_l.effects = matrix_list_from(field(j, "povm_l"), nl, g.dout, "povm_l");
    for (auto& l : g.povm_l.effects) l = hermitize(l);
    return g;
  }
  if (kind == "simulation") {
    FreeSimulation f;
    f.n_x0 = get_dim(j, "n_x0");
    f.n_x1 = get_dim(j, "n_x1");
    f.n_y0 = get_dim(j, "n_y0");
    f.n_y1 = get_dim(j, "n_y1");
    f.d_a0 = get_dim(j, "d_a0");
    f.d_a1 = get_dim(j, "d_a1");
    f.d_b0 = get_dim(j, "d_b0");
    f.d_b1 = get_dim(j, "d_b1");
    f.d_side = get_dim(j, "d_side");
    int nk = get_dim(j, "n_k"), nl = get_dim(j, "n_l");
    int dpre = f.d_a0 * f.d_side * f.d_b0;
    f.pre = ChoiMatrix(f.d_b0, f.d_a0 * f.d_side, matrix_from(field(j, "pre"), dpre, dpre, "pre"));
    auto post = matrix_list_from(field(j, "post"), nk, f.d_a1 * f.d_side * f.d_b1, "post");
    f.post = Instrument(to_choi(post, f.d_a1 * f.d_side, f.d_b1));
    f.p = ClassicalChannel(f.n_x0 * nl, f.n_y0 * nk,
                           real_table_from(field(j, "p"), f.n_x0 * nl, f.n_y0 * nk, "p"));
    f.q = ClassicalChannel(f.n_y1, f.n_x1 * nl,
                           real_table_from(field(j, "q"), f.n_y1, f.n_x1 * nl, "q"));
    return f;
  }
  if (kind == "functional") {
    Functional f;
    f.din = get_dim(j, "din");
    f.dout = get_dim(j, "dout");
    f.targets = matrix_grid_from(field(j, "targets"), get_dim(j, "n_programs"), get_dim(j, "n_outcomes"),
                                 f.din * f.dout, "targets");
    for (auto& row : f.targets)
      for (auto& t : row) t = hermitize(t);
    return f;
  }
  if (kind == "certificate") {
    CertificateFile c;
    c.din = get_dim(j, "din");
    c.dout = get_dim(j, "dout");
    int nx0 = get_dim(j, "n_programs"), nx1 = get_dim(j, "n_outcomes");
    c.r = get_real(field(j, "r"), "r");
    c.dual = get_real(field(j, "dual"), "dual");
    c.gap = get_real(field(j, "gap"), "gap");
    c.witness.alpha = matrix_grid_from(field(j, "alpha"), nx0, nx1, c.din * c.dout, "alpha");
    c.witness.beta = matrix_list_from(field(j, "beta"), nx0, c.din, "beta");
    c.witness.value = c.dual;
    return c;
  }
  fail("unknown kind '" + kind + "'");
}

}  // namespace

std::string DeviceFile::kind() const {
  static const char* names[] = {"pid",  "pmd",     "povm",       "instrument", "channel",
                                "game", "pigame", "simulation", "functional", "certificate"};
  return names[value.index()];
}

DeviceFile parse_device(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");
  const json& kind = field(j, "kind");
  if (!kind.is_string()) fail("'kind' must be a string");
  if (auto it = j.find("layout"); it != j.end() && *it != "row-major")
    fail("only the row-major layout is supported");

  DeviceFile f;
  if (auto it = j.find("metadata"); it != j.end()) {
    if (!it->is_object()) fail("'metadata' must be an object");
    if (auto s = it->find("seed"); s != it->end() && !s->is_null()) {
      if (!s->is_number_unsigned()) fail("metadata.seed must be a non-negative integer");
      f.meta.seed = s->get<std::uint64_t>();
    }
    if (auto d = it->find("description"); d != it->end()) {
      if (!d->is_string()) fail("metadata.description must be a string");
      f.meta.description = d->get<std::string>();
    }
  }
  try {
    f.value = read_value(j, kind.get<std::string>());
  } catch (const DimensionError& e) {
    fail(e.what());
  }
  return f;
}

std::string serialize_device(const DeviceFile& f) {
  json j;
  std::visit(Writer{j}, f.value);
  j["layout"] = "row-major";
  json meta;
  meta["seed"] = f.meta.seed ? json(*f.meta.seed) : json(nullptr);
  meta["description"] = f.meta.description;
  j["metadata"] = std::move(meta);
  return j.dump() + "\n";
}

DeviceFile load_device(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_device(ss.str());
}

void save_device(const std::string& path, const DeviceFile& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write " + path);
  out << serialize_device(f);
  if (!out) fail("write failed: " + path);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string CsvTable::str() const {
  std::string s;
  for (size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
  s += "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) s += ",";
      s += format_double(row[i]);
    }
    s += "\n";
  }
  return s;
}

CsvTable bound_table(const BoundReport& r) {
  CsvTable t;
  t.columns = {"n_dummy",       "ratio", "lower_bound", "identity_value", "seesaw_value",
               "pguess_simple", "cap"};
  for (const auto& p : r.points)
    t.rows.push_back({double(p.n_dummy), p.ratio, p.lower_bound, p.identity_value, p.seesaw_value,
                      p.pguess_simple, 1 + r.roi});
  return t;
}

}  // namespace pidkit
