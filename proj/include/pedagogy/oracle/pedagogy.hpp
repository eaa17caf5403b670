#pragma once

// Recursive Bayesian teacher/student model on a finite concept x example domain.
// The teacher is a concepts x examples matrix (rows sum to 1), the student an
// examples x concepts matrix (rows sum to 1, or are all zero when undefined).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pedagogy/tasks/boolean.hpp"

namespace pedagogy::oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DiscreteDomain {
  Matrix consistency;  // [c, e] in {0, 1}
  Vector prior;        // P(c)
  std::vector<std::string> concept_names;
  std::vector<std::string> example_names;

  Eigen::Index concepts() const { return consistency.rows(); }
  Eigen::Index examples() const { return consistency.cols(); }

  void validate() const {
    if (consistency.rows() == 0 || consistency.cols() == 0) throw DomainError("empty domain");
    if (prior.size() != consistency.rows()) throw DomainError("prior length does not match concept count");
    for (Eigen::Index c = 0; c < consistency.rows(); ++c) {
      bool any = false;
      for (Eigen::Index e = 0; e < consistency.cols(); ++e) {
        const double m = consistency(c, e);
        if (m != 0.0 && m != 1.0) throw DomainError("consistency entries must be 0 or 1");
        any = any || m == 1.0;
      }
      if (!any) throw DomainError("concept " + std::to_string(c) + " has no consistent example");
    }
    if ((prior.array() < 0).any() || !prior.allFinite()) throw DomainError("prior must be finite and non-negative");
    if (std::abs(prior.sum() - 1.0) > 1e-9) throw DomainError("prior must sum to 1");
  }

  /// Uniform prior, generated names.
  static DiscreteDomain from_consistency(Matrix m) {
    DiscreteDomain d;
    d.prior = Vector::Constant(m.rows(), 1.0 / static_cast<double>(m.rows()));
    for (Eigen::Index c = 0; c < m.rows(); ++c) d.concept_names.push_back("c" + std::to_string(c));
    for (Eigen::Index e = 0; e < m.cols(); ++e) d.example_names.push_back("e" + std::to_string(e));
    d.consistency = std::move(m);
    d.validate();
    return d;
  }
};

/// Boolean-task domain over the 36 candidate objects for the given concepts.
inline DiscreteDomain boolean_domain(const std::vector<BooleanConcept>& concepts) {
  Matrix m(static_cast<Eigen::Index>(concepts.size()), static_cast<Eigen::Index>(kBooleanCandidates));
  for (std::size_t c = 0; c < concepts.size(); ++c)
    for (std::size_t e = 0; e < kBooleanCandidates; ++e)
      m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(e)) =
          boolean_consistent(Properties::from_index(e), concepts[c]) ? 1.0 : 0.0;
  auto d = DiscreteDomain::from_consistency(std::move(m));
  for (std::size_t c = 0; c < concepts.size(); ++c) d.concept_names[c] = concepts[c].describe();
  for (std::size_t e = 0; e < kBooleanCandidates; ++e) d.example_names[e] = Properties::from_index(e).describe();
  return d;
}

inline Matrix init_teacher(const DiscreteDomain& d) {
  d.validate();
  Matrix t = d.consistency;
  for (Eigen::Index c = 0; c < t.rows(); ++c) t.row(c) /= t.row(c).sum();
  return t;
}

/// P_S(c|e) proportional to P_T(e|c) P(c). Examples no concept would produce
/// keep an all-zero row; they are listed in `undefined`.
struct StudentMatrix {
  Matrix posterior;  // [e, c]
  std::vector<Eigen::Index> undefined;
};

inline StudentMatrix student_update(const Matrix& teacher, const Vector& prior) {
  if (prior.size() != teacher.rows()) throw DomainError("prior length does not match teacher rows");
  const double z = prior.sum();
  if (!(z > 0)) throw DomainError("prior has no mass");
  StudentMatrix s{Matrix::Zero(teacher.cols(), teacher.rows()), {}};
  for (Eigen::Index e = 0; e < teacher.cols(); ++e) {
    Vector joint = teacher.col(e).cwiseProduct(prior / z);
    const double evidence = joint.sum();
    if (evidence > 0)
      s.posterior.row(e) = (joint / evidence).transpose();
    else
      s.undefined.push_back(e);
  }
  return s;
}

/// P_T(e|c) proportional to P_S(c|e)^alpha over the examples consistent with c.
inline Matrix teacher_update(const Matrix& student, const Matrix& consistency, double alpha) {
  if (!(alpha >= 0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite and >= 0");
  if (student.rows() != consistency.cols() || student.cols() != consistency.rows())
    throw DomainError("student matrix shape does not match the domain");
  Matrix t = Matrix::Zero(consistency.rows(), consistency.cols());
  for (Eigen::Index c = 0; c < t.rows(); ++c) {
    // Work relative to the row maximum so large alpha does not underflow.
    double top = 0;
    for (Eigen::Index e = 0; e < t.cols(); ++e)
      if (consistency(c, e) == 1.0) top = std::max(top, student(e, c));
    for (Eigen::Index e = 0; e < t.cols(); ++e) {
      if (consistency(c, e) != 1.0) continue;
      const double p = student(e, c);
      if (alpha == 0)
        t(c, e) = 1.0;
      else if (p > 0)
        t(c, e) = std::pow(p / top, alpha);
    }
    const double z = t.row(c).sum();
    if (!(z > 0)) throw DomainError("teacher normalizer is zero for concept " + std::to_string(c));
    t.row(c) /= z;
  }
  return t;
}

enum class UpdateOrder { StudentFirst, TeacherFirst };

struct PedagogyState {
  Matrix teacher;  // [c, e]
  Matrix student;  // [e, c]
  std::vector<Eigen::Index> undefined_examples;
  double alpha = 1.0;
  std::size_t iterations = 0;
  double residual = 0;
  bool converged = false;
};

struct FixedPointOptions {
  double alpha = 1.0;
  std::size_t max_iters = 1000;
  double tol = 1e-10;
  UpdateOrder order = UpdateOrder::StudentFirst;
};

/// Alternates the two updates from the uniform-consistent teacher until the
/// teacher matrix moves less than `tol` (max abs) or the cap is reached.
/// Teacher-first starts from the student implied by the bare consistency matrix.
inline PedagogyState fixed_point(const DiscreteDomain& d, const FixedPointOptions& opt = {}) {
  d.validate();
  if (!(opt.alpha >= 0)) throw DomainError("alpha must be >= 0");
  PedagogyState st;
  st.alpha = opt.alpha;
  st.teacher = init_teacher(d);
  StudentMatrix s = student_update(opt.order == UpdateOrder::StudentFirst ? st.teacher : Matrix(d.consistency), d.prior);
  bool have_student = opt.order == UpdateOrder::TeacherFirst;
  for (std::size_t it = 1; it <= opt.max_iters; ++it) {
    if (!have_student) s = student_update(st.teacher, d.prior);
    have_student = false;
    Matrix next = teacher_update(s.posterior, d.consistency, opt.alpha);
    st.residual = (next - st.teacher).cwiseAbs().maxCoeff();
    st.teacher = std::move(next);
    st.iterations = it;
    if (st.residual < opt.tol) {
      st.converged = true;
      break;
    }
  }
  s = student_update(st.teacher, d.prior);
  st.student = std::move(s.posterior);
  st.undefined_examples = std::move(s.undefined);
  return st;
}

/// One student update then one teacher update: the discrete analogue of
/// pretraining a student on random examples and fitting a best response.
inline PedagogyState single_step(const DiscreteDomain& d, double alpha = 1.0) {
  return fixed_point(d, {alpha, 1, 0.0, UpdateOrder::StudentFirst});
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

}  // namespace detail

/// Header row of column names, then one row per matrix row led by its name.
inline std::string matrix_csv(const Matrix& m, const std::vector<std::string>& row_names,
                              const std::vector<std::string>& col_names, const std::string& corner) {
  if (row_names.size() != static_cast<std::size_t>(m.rows()) || col_names.size() != static_cast<std::size_t>(m.cols()))
    throw DomainError("matrix_csv: name count does not match matrix shape");
  std::ostringstream os;
  os.precision(17);
  os << detail::csv_field(corner);
  for (const auto& c : col_names) os << ',' << detail::csv_field(c);
  os << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << detail::csv_field(row_names[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << ',' << m(r, c);
    os << '\n';
  }
  return os.str();
}

/// Writes consistency.csv, prior.csv, teacher.csv and student.csv into `dir`.
inline void write_oracle_csv(const std::filesystem::path& dir, const DiscreteDomain& d, const PedagogyState& st) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << body;
  };
  put("consistency.csv", matrix_csv(d.consistency, d.concept_names, d.example_names, "concept"));
  put("prior.csv", matrix_csv(d.prior, d.concept_names, {"prior"}, "concept"));
  put("teacher.csv", matrix_csv(st.teacher, d.concept_names, d.example_names, "concept"));
  put("student.csv", matrix_csv(st.student, d.example_names, d.concept_names, "example"));
}

}  // namespace pedagogy::oracle
