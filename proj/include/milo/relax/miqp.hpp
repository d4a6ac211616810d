#pragma once

#include "milo/relax/interval.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace milo::relax {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

class VarTable {
 public:
  int add(const std::string& name);
  int at(const std::string& name) const;  // throws std::out_of_range with the name
  std::optional<int> find(const std::string& name) const;
  const std::string& name(int col) const { return names_.at(col); }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& all() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

// Region selector binaries for one segmented variable. OneHot carries one
// binary per region plus an exactly-one row; Coded carries log2(regions) bits
// where every bit pattern names exactly one region (regions must be a power
// of two).
struct SelectorGroup {
  enum class Kind { OneHot, Coded };
  Kind kind = Kind::OneHot;
  int var = -1;
  int knot = -1;  // knot the segmented variable belongs to
  Interval range;
  int regions = 1;
  std::vector<int> bins;

  int region_of(double x) const { return range.region_of(x, regions); }
  Interval region_interval(int r) const { return range.sub(r, regions); }

  // slack(r) = constant + sum(coeff * bin): equals 0 when region r is
  // selected and is >= 1 otherwise.
  void slack(int r, std::vector<std::pair<int, double>>& terms, double& constant) const;

  // binary values selecting region r, as (column, value) pairs
  std::vector<std::pair<int, int>> values_for_region(int r) const;
};

// sum_s z[s] - c == 0 for one toe at one knot (c fixed at knot 0)
struct ContactLink {
  int knot = 0;
  int toe = 0;
  int c = -1;
  std::vector<int> z;
};

struct LinearConstraintSet {
  SpMat A;
  Vec l, u;
  int rows() const { return static_cast<int>(A.rows()); }
};

// Binary ordering categories; binary_idx is sorted by (category, knot, ...)
// which is also the PaperOrder branching priority.
enum class BinCategory : int { Contact = 0, Region = 1, SelAngle = 2, SelToe = 3,
                               SelRate = 4, SelOmega = 5, SelForce = 6, Other = 7 };

struct MixedIntegerQP {
  SpMat P;  // full symmetric PSD
  Vec q;
  double obj_const = 0.0;
  LinearConstraintSet cons;
  Vec lb, ub;  // variable bounds (+-inf allowed)
  std::vector<int> binary_idx;           // canonical order (see BinCategory)
  std::vector<int> binary_category;      // aligned with binary_idx
  VarTable names;
  std::vector<SelectorGroup> selectors;
  std::vector<ContactLink> links;
  int horizon = 0;

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_rows() const { return cons.rows(); }
  int num_binaries() const { return static_cast<int>(binary_idx.size()); }

  // position of a column in binary_idx, or -1
  int binary_pos(int col) const;

  // constraint system with one bound row appended per variable that has a
  // finite bound (the branch-and-bound node loop edits those rows in place)
  struct Extended {
    SpMat A;
    Vec l, u;
    std::vector<int> bound_row_of_var;  // -1 when the variable has no bound row
  };
  Extended extended() const;

  double objective_at(const Vec& x) const;

  // max violation of all rows and bounds at x; equality_only restricts to
  // rows with l == u
  double max_violation(const Vec& x, bool equality_only = false) const;

  // deterministic lower probe of the smallest eigenvalue of P
  double min_eigenvalue_probe() const;

  void finalize_binary_pos();  // rebuild the column -> position cache

 private:
  std::vector<int> binary_pos_;  // size num_vars, -1 or position
};

// Values for the binaries of one MixedIntegerQP, aligned with binary_idx.
// -1 marks an unset entry (partial assignments are legal inputs for
// warm-starting; validate() additionally requires completeness).
struct IntegerAssignment {
  std::vector<std::int8_t> value;

  static IntegerAssignment empty(const MixedIntegerQP& m) {
    IntegerAssignment a;
    a.value.assign(m.binary_idx.size(), -1);
    return a;
  }
  bool complete() const;
  int count_set() const;
  // throws InconsistentAssignment on incompleteness, broken exactly-one
  // selector groups, or broken sum_s z + (1-c) = 1 links
  void validate(const MixedIntegerQP& m) const;
  bool operator==(const IntegerAssignment& o) const { return value == o.value; }
};

}  // namespace milo::relax
