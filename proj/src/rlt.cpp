#include "qploc/rlt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qploc {

const char* to_string(RltLevel level) {
  switch (level) {
    case RltLevel::STD: return "STD";
    case RltLevel::RL1: return "RL1";
    case RltLevel::RL2: return "RL2";
    case RltLevel::RL3: return "RL3";
    case RltLevel::RL4: return "RL4";
    case RltLevel::RL5: return "RL5";
    case RltLevel::RL6: return "RL6";
    case RltLevel::RL7: return "RL7";
    case RltLevel::RL8: return "RL8";
  }
  return "?";
}

RltLevel rlt_level_from_name(const std::string& s) {
  for (RltLevel lv : {RltLevel::STD, RltLevel::RL1, RltLevel::RL2, RltLevel::RL3,
                      RltLevel::RL4, RltLevel::RL5, RltLevel::RL6, RltLevel::RL7,
                      RltLevel::RL8}) {
    if (s == to_string(lv)) return lv;
  }
  throw ParseError("unknown relaxation level '" + s + "'");
}

RltConfig RltConfig::make(RltLevel level) {
  RltConfig cfg;
  cfg.level = level;
  switch (level) {
    case RltLevel::STD:
      cfg.product_envelope = true;
      return cfg;
    case RltLevel::RL1:
      cfg.marginals = true;
      cfg.linking_z = cfg.linking_complement = true;
      cfg.capacity_z = cfg.capacity_complement = true;
      cfg.cardinality_z = cfg.cardinality_complement = true;
      cfg.redundant_bounds = true;
      return cfg;
    case RltLevel::RL2: break;
    case RltLevel::RL3: cfg.linking_z = true; break;
    case RltLevel::RL4: cfg.linking_complement = true; break;
    case RltLevel::RL5: cfg.linking_z = cfg.linking_complement = true; break;
    case RltLevel::RL6: cfg.capacity_z = true; break;
    case RltLevel::RL7: cfg.capacity_complement = true; break;
    case RltLevel::RL8: cfg.capacity_z = cfg.capacity_complement = true; break;
  }
  cfg.marginals = true;
  return cfg;
}

namespace {

// Sparse row assembler that merges duplicate columns, needed because the
// same-customer product corrections can cancel against linear terms.
struct RowBuf {
  std::vector<int> idx;
  std::vector<double> val;
  std::vector<int> pos;  // col -> position + 1

  explicit RowBuf(int ncols) : pos(ncols, 0) {}

  void add(int col, double coef) {
    if (coef == 0.0) return;
    if (pos[col] == 0) {
      idx.push_back(col);
      val.push_back(coef);
      pos[col] = int(idx.size());
    } else {
      val[pos[col] - 1] += coef;
    }
  }

  void clear() {
    for (int c : idx) pos[c] = 0;
    idx.clear();
    val.clear();
  }
};

}  // namespace

int RltModel::col_x(int a, int b, int c, int d) const {
  if (a == c) throw IndexOutOfRange("product column needs two distinct customers");
  int i = a, k = b, j = c, m = d;
  if (i > j) {
    i = c;
    k = d;
    j = a;
    m = b;
  }
  int pair = i * n - i * (i + 1) / 2 + (j - i - 1);
  return n * n + (pair * n + k) * n + m;
}

namespace {

// Columns plus the always-on rows (location polytope, product envelope or
// marginals). Kept separate from the optional product families so a bound
// computation can solve this part first and warm start the rest.
void build_core(RltModel& model, const Instance& inst, const RltConfig& cfg) {
  int n = inst.n;
  Lp& lp = model.lp;
  RltRowCounts& rc = model.rows;

  // z columns, then one n x n product block per pair i < j.
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      double obj = inst.assign_cost(i, k) + (i == k ? inst.setup[k] : 0.0);
      lp.add_col(obj, 0.0, 1.0);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int m = 0; m < n; ++m) {
          lp.add_col(inst.quad(i, k, j, m), 0.0, kInf);
        }
      }
    }
  }

  RowBuf row(lp.num_cols());
  auto push = [&](RowSense sense, double rhs) {
    lp.add_row(sense, rhs, row.idx, row.val);
    row.clear();
  };
  auto zc = [&](int i, int k) { return model.col_z(i, k); };
  auto xc = [&](int a, int b, int c, int d) { return model.col_x(a, b, c, d); };

  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) row.add(zc(i, k), 1.0);
    push(RowSense::EQ, 1.0);
    ++rc.base;
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      if (i == k) continue;
      row.add(zc(i, k), 1.0);
      row.add(zc(k, k), -1.0);
      push(RowSense::LE, 0.0);
      ++rc.base;
    }
  }
  if (inst.p_bounded()) {
    for (int k = 0; k < n; ++k) row.add(zc(k, k), 1.0);
    push(RowSense::LE, double(inst.p));
    ++rc.base;
  }
  if (inst.capacitated()) {
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        if (i != k) row.add(zc(i, k), inst.demand[i]);
      }
      row.add(zc(k, k), -inst.slack_cap(k));
      push(RowSense::LE, 0.0);
      ++rc.base;
    }
  }

  if (cfg.product_envelope) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          for (int m = 0; m < n; ++m) {
            int x = xc(i, k, j, m);
            row.add(x, 1.0);
            row.add(zc(i, k), -1.0);
            push(RowSense::LE, 0.0);
            row.add(x, 1.0);
            row.add(zc(j, m), -1.0);
            push(RowSense::LE, 0.0);
            row.add(zc(i, k), 1.0);
            row.add(zc(j, m), 1.0);
            row.add(x, -1.0);
            push(RowSense::LE, 1.0);
            rc.envelope += 3;
          }
        }
      }
    }
  }

  if (cfg.marginals) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int m = 0; m < n; ++m) {
          for (int k = 0; k < n; ++k) row.add(xc(i, k, j, m), 1.0);
          row.add(zc(j, m), -1.0);
          push(RowSense::EQ, 0.0);
          ++rc.marginal_cols;
        }
        for (int k = 0; k < n; ++k) {
          for (int m = 0; m < n; ++m) row.add(xc(i, k, j, m), 1.0);
          row.add(zc(i, k), -1.0);
          push(RowSense::EQ, 0.0);
          ++rc.marginal_rows;
        }
      }
    }
  }
}

enum class Family {
  LinkingZ,
  LinkingComplement,
  CapacityZ,
  CapacityComplement,
  Cardinality,
  RedundantBounds,
};

// Emits the optional product families of the fuller configurations row by
// row; the sink either installs them in the model or screens them lazily.
template <class Sink>
void emit_families(const RltModel& model, const Instance& inst, const RltConfig& cfg,
                   Sink&& sink) {
  int n = inst.n;
  RowBuf row(model.lp.num_cols());
  auto push = [&](RowSense sense, double rhs, Family fam) {
    sink(sense, rhs, row.idx, row.val, fam);
    row.clear();
  };
  auto zc = [&](int i, int k) { return model.col_z(i, k); };
  auto xc = [&](int a, int b, int c, int d) { return model.col_x(a, b, c, d); };

  // Product forms below loop over ordered customer pairs (i, j): the source
  // row concerns customer i, the multiplier z_jm (or its complement) customer
  // j. Facility k == j is skipped where z_kk * z_jm has no product column.
  if (cfg.linking_z || cfg.linking_complement) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        for (int k = 0; k < n; ++k) {
          if (k == i || k == j) continue;
          for (int m = 0; m < n; ++m) {
            if (cfg.linking_z) {
              row.add(xc(i, k, j, m), 1.0);
              row.add(xc(k, k, j, m), -1.0);
              push(RowSense::LE, 0.0, Family::LinkingZ);
            }
            if (cfg.linking_complement) {
              row.add(zc(i, k), 1.0);
              row.add(zc(k, k), -1.0);
              row.add(xc(i, k, j, m), -1.0);
              row.add(xc(k, k, j, m), 1.0);
              push(RowSense::LE, 0.0, Family::LinkingComplement);
            }
          }
        }
      }
    }
  }

  if (inst.capacitated() && (cfg.capacity_z || cfg.capacity_complement)) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (k == j) continue;
        for (int m = 0; m < n; ++m) {
          if (cfg.capacity_z) {
            for (int i = 0; i < n; ++i) {
              if (i == k || i == j) continue;
              row.add(xc(i, k, j, m), inst.demand[i]);
            }
            // z_jk * z_jm folds to z_jm when k == m and to 0 otherwise.
            if (k == m) row.add(zc(j, m), inst.demand[j]);
            row.add(xc(k, k, j, m), -inst.slack_cap(k));
            push(RowSense::LE, 0.0, Family::CapacityZ);
          }
          if (cfg.capacity_complement) {
            for (int i = 0; i < n; ++i) {
              if (i == k) continue;
              row.add(zc(i, k), inst.demand[i]);
            }
            for (int i = 0; i < n; ++i) {
              if (i == k || i == j) continue;
              row.add(xc(i, k, j, m), -inst.demand[i]);
            }
            if (k == m) row.add(zc(j, m), -inst.demand[j]);
            row.add(zc(k, k), -inst.slack_cap(k));
            row.add(xc(k, k, j, m), inst.slack_cap(k));
            push(RowSense::LE, 0.0, Family::CapacityComplement);
          }
        }
      }
    }
  }

  if (inst.p_bounded() && (cfg.cardinality_z || cfg.cardinality_complement)) {
    for (int j = 0; j < n; ++j) {
      for (int m = 0; m < n; ++m) {
        if (cfg.cardinality_z) {
          for (int k = 0; k < n; ++k) {
            if (k != j) row.add(xc(k, k, j, m), 1.0);
          }
          if (m == j) row.add(zc(j, j), 1.0);
          row.add(zc(j, m), -double(inst.p));
          push(RowSense::LE, 0.0, Family::Cardinality);
        }
        if (cfg.cardinality_complement) {
          for (int k = 0; k < n; ++k) row.add(zc(k, k), 1.0);
          for (int k = 0; k < n; ++k) {
            if (k != j) row.add(xc(k, k, j, m), -1.0);
          }
          if (m == j) row.add(zc(j, j), -1.0);
          row.add(zc(j, m), double(inst.p));
          push(RowSense::LE, double(inst.p), Family::Cardinality);
        }
      }
    }
  }

  if (cfg.redundant_bounds) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int k = 0; k < j; ++k) {
          if (k == i) continue;
          for (int m = 0; m < n; ++m) {
            row.add(xc(i, k, j, m), 1.0);
            row.add(zc(j, m), -1.0);
            push(RowSense::LE, 0.0, Family::RedundantBounds);
          }
        }
      }
    }
  }
}

}  // namespace

RltModel build_lp(const Instance& inst, const RltConfig& cfg, int max_n) {
  if (inst.n > max_n) {
    throw SizeGuard("relaxation build limited to n <= " + std::to_string(max_n));
  }
  RltModel model;
  model.n = inst.n;
  build_core(model, inst, cfg);
  emit_families(model, inst, cfg,
                [&](RowSense sense, double rhs, const std::vector<int>& idx,
                    const std::vector<double>& val, Family fam) {
                  model.lp.add_row(sense, rhs, idx, val);
                  switch (fam) {
                    case Family::LinkingZ: ++model.rows.linking_z; break;
                    case Family::LinkingComplement:
                      ++model.rows.linking_complement;
                      break;
                    case Family::CapacityZ: ++model.rows.capacity_z; break;
                    case Family::CapacityComplement:
                      ++model.rows.capacity_complement;
                      break;
                    case Family::Cardinality: ++model.rows.cardinality; break;
                    case Family::RedundantBounds:
                      ++model.rows.redundant_bounds;
                      break;
                  }
                });
  return model;
}

double lp_bound(const Instance& inst, const RltConfig& cfg, int max_n) {
  if (inst.n > max_n) {
    throw SizeGuard("relaxation build limited to n <= " + std::to_string(max_n));
  }
  RltModel model;
  model.n = inst.n;
  build_core(model, inst, cfg);
  LpStatus st = model.lp.solve();
  if (st != LpStatus::Optimal) {
    throw NumericalFailure(std::string("relaxation core LP ended ") + to_string(st));
  }

  // The product families are screened lazily: only rows violated at the
  // current optimum enter the model, a small batch per round, so the solver
  // never faces the full degenerate row system at once. Absent rows are
  // satisfied at termination, hence the bound equals the full model's.
  struct Pending {
    double violation;
    double rhs;
    std::vector<int> idx;
    std::vector<double> val;
    int seq;
  };
  constexpr int kBatch = 64;
  std::vector<char> added;
  for (;;) {
    const std::vector<double>& x = model.lp.x();
    std::vector<Pending> viol;
    int seq = 0;
    emit_families(model, inst, cfg,
                  [&](RowSense, double rhs, const std::vector<int>& idx,
                      const std::vector<double>& val, Family) {
                    int s = seq++;
                    if (s >= int(added.size())) added.resize(s + 1, 0);
                    // Rows already in the model are enforced by the solver at
                    // its own feasibility tolerance; re-adding them would loop.
                    if (added[s]) return;
                    double lhs = 0.0;
                    for (size_t t = 0; t < idx.size(); ++t) lhs += val[t] * x[idx[t]];
                    double tol = 1e-9 * (1.0 + std::abs(rhs));
                    if (lhs > rhs + tol) {
                      viol.push_back({lhs - rhs, rhs, idx, val, s});
                    }
                  });
    if (viol.empty()) break;
    std::stable_sort(viol.begin(), viol.end(), [](const Pending& a, const Pending& b) {
      return a.violation > b.violation;
    });
    int take = std::min<int>(kBatch, int(viol.size()));
    for (int t = 0; t < take; ++t) {
      model.lp.add_row(RowSense::LE, viol[t].rhs, viol[t].idx, viol[t].val);
      added[viol[t].seq] = 1;
    }
    st = model.lp.solve();
    if (st != LpStatus::Optimal) {
      throw NumericalFailure(std::string("relaxation LP ended ") + to_string(st));
    }
  }
  return model.lp.obj_value();
}

}  // namespace qploc
