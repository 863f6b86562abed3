#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qploc/instance.hpp"

namespace qploc {

namespace {

// Exact double round trip: shortest-faithful is overkill, 17 significant
// digits always survive strtod.
std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_vector(std::ostream& out, const std::vector<double>& v) {
  for (size_t i = 0; i < v.size(); ++i) {
    out << (i ? " " : "") << num(v[i]);
  }
  out << "\n";
}

void write_matrix(std::ostream& out, const Mat& m) {
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      out << (j ? " " : "") << num(m(i, j));
    }
    out << "\n";
  }
}

// Whitespace token stream with line tracking for parse diagnostics.
class Tokens {
 public:
  Tokens(std::istream& in, std::string what) : what_(std::move(what)) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) {
        toks_.push_back(tok);
        lines_.push_back(lineno);
      }
    }
  }

  bool done() const { return pos_ >= toks_.size(); }
  size_t remaining() const { return toks_.size() - pos_; }

  const std::string& peek() const {
    if (done()) fail("unexpected end of input");
    return toks_[pos_];
  }

  std::string word() {
    std::string t = peek();
    ++pos_;
    return t;
  }

  double number() {
    const std::string& t = peek();
    size_t used = 0;
    double x = 0;
    try {
      x = std::stod(t, &used);
    } catch (const std::exception&) {
      fail("expected a number, got '" + t + "'");
    }
    if (used != t.size()) fail("expected a number, got '" + t + "'");
    ++pos_;
    return x;
  }

  int integer() {
    double x = number();
    int i = int(x);
    if (double(i) != x) fail("expected an integer");
    return i;
  }

  void expect(const std::string& kw) {
    if (done()) fail("unexpected end of input, expected section '" + kw + "'");
    std::string t = word();
    if (t != kw) fail("expected section '" + kw + "', got '" + t + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    int line = pos_ < lines_.size() ? lines_[pos_] : (lines_.empty() ? 0 : lines_.back());
    throw ParseError(what_ + ":" + std::to_string(line) + ": " + msg);
  }

  std::vector<double> numbers(int count) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = number();
    return v;
  }

  Mat matrix(int rows, int cols) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = number();
    }
    return m;
  }

 private:
  std::string what_;
  std::vector<std::string> toks_;
  std::vector<int> lines_;
  size_t pos_ = 0;
};

}  // namespace

void save_instance(const Instance& inst, std::ostream& out) {
  out << inst.n << " " << inst.p << " " << variant_name(inst.variant) << "\n";
  out << "SETUP\n";
  write_vector(out, inst.setup);
  out << "CAPACITY\n";
  write_vector(out, inst.capacity);
  out << "DEMAND\n";
  write_vector(out, inst.demand);
  out << "COST\n";
  write_matrix(out, inst.assign_cost);
  if (inst.quad.is_factorized()) {
    out << "DIST\n";
    write_matrix(out, inst.quad.dist());
    out << "FLOW " << num(inst.quad.tau()) << "\n";
    write_matrix(out, inst.quad.flow());
  } else {
    out << "QDENSE\n";
    for (int i = 0; i < inst.n; ++i) {
      for (int j = i + 1; j < inst.n; ++j) {
        for (int k = 0; k < inst.n; ++k) {
          for (int m = 0; m < inst.n; ++m) {
            out << (m ? " " : "") << num(inst.quad(i, k, j, m));
          }
          out << "\n";
        }
      }
    }
  }
}

void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  save_instance(inst, out);
}

Instance load_instance(std::istream& in, const std::string& what) {
  Tokens t(in, what);
  Instance inst;
  inst.n = t.integer();
  inst.p = t.integer();
  inst.variant = variant_from_name(t.word());
  inst.name = what;
  if (inst.n <= 0) t.fail("n must be positive");

  t.expect("SETUP");
  inst.setup = t.numbers(inst.n);
  t.expect("CAPACITY");
  inst.capacity = t.numbers(inst.n);
  t.expect("DEMAND");
  inst.demand = t.numbers(inst.n);
  t.expect("COST");
  inst.assign_cost = t.matrix(inst.n, inst.n);

  std::string kind = t.word();
  if (kind == "DIST") {
    Mat dist = t.matrix(inst.n, inst.n);
    t.expect("FLOW");
    double tau = t.number();
    Mat flow = t.matrix(inst.n, inst.n);
    inst.quad = QuadCost::factorized(std::move(flow), std::move(dist), tau);
  } else if (kind == "QDENSE") {
    inst.quad = QuadCost::dense(inst.n);
    for (int i = 0; i < inst.n; ++i) {
      for (int j = i + 1; j < inst.n; ++j) {
        for (int k = 0; k < inst.n; ++k) {
          for (int m = 0; m < inst.n; ++m) {
            inst.quad.dense_at(i, k, j, m) = t.number();
          }
        }
      }
    }
  } else {
    t.fail("expected DIST or QDENSE section, got '" + kind + "'");
  }
  if (!t.done()) t.fail("trailing content after instance");
  inst.validate();
  return inst;
}

namespace {

bool looks_numeric(const std::string& s) {
  size_t used = 0;
  try {
    (void)std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

}  // namespace

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  // Sniff: native files have "n p variant-name"; raw coordinate files start
  // with n followed only by numbers.
  std::string l1, l2, l3;
  in >> l1 >> l2 >> l3;
  in.clear();
  in.seekg(0);
  if (looks_numeric(l3)) {
    return load_raw_flow(path, RawReadOptions{});
  }
  return load_instance(in, path);
}

Instance load_raw_flow(const std::string& path, const RawReadOptions& opt) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  Tokens t(in, path);

  Instance inst;
  inst.n = t.integer();
  if (inst.n <= 0) t.fail("n must be positive");
  int n = inst.n;
  inst.name = path;
  inst.variant = opt.variant;

  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = t.number();
    y[i] = t.number();
  }
  Mat flow = t.matrix(n, n);

  // Optional trailers: setup costs, then capacities.
  std::vector<double> setup(n, 0.0), cap(n, 0.0);
  bool have_setup = t.remaining() >= size_t(n);
  if (have_setup) {
    for (int k = 0; k < n; ++k) setup[k] = opt.setup_scale * t.number();
  }
  bool have_cap = t.remaining() >= size_t(n);
  if (have_cap) {
    for (int k = 0; k < n; ++k) cap[k] = t.number();
  }

  Mat dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      dist(i, j) = opt.coord_scale * std::hypot(x[i] - x[j], y[i] - y[j]);
    }
  }

  inst.setup = setup;
  build_flow_costs(inst, flow, dist, opt.units);
  inst.demand.resize(n);
  for (int i = 0; i < n; ++i) {
    double o = 0.0;
    for (int j = 0; j < n; ++j) o += flow(i, j);
    inst.demand[i] = o;
  }
  if (capacitated(opt.variant) && !have_cap) {
    throw InvalidInstance("capacitated variant requested but '" + path +
                          "' carries no capacity block");
  }
  if (have_cap) {
    inst.capacity = cap;
  } else {
    // Loose placeholder so the field is well formed for uncapacitated runs.
    double total = inst.total_demand();
    inst.capacity.assign(n, total + 1.0);
  }
  inst.p = p_bounded(opt.variant) ? (opt.p > 0 ? opt.p : n) : n;
  inst.validate();
  return inst;
}

}  // namespace qploc
