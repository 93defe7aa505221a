#include "nnmpc/polytope.hpp"

#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "nnmpc/qp.hpp"
#include "nnmpc/text_io.hpp"

namespace nnmpc {

Polytope::Polytope(Eigen::MatrixXd H, Eigen::VectorXd h) : H_(std::move(H)), h_(std::move(h)) {
  if (H_.rows() != h_.size()) throw std::invalid_argument("Polytope: H and h disagree");
  if (!H_.allFinite() || !h_.allFinite()) throw std::invalid_argument("Polytope: non-finite data");
  for (Eigen::Index r = 0; r < H_.rows(); ++r) {
    if ((H_.row(r).array() == 0.0).all()) {
      throw std::invalid_argument("Polytope: row " + std::to_string(r) + " is all zero");
    }
  }
}

Polytope Polytope::from_box(const Box& box) {
  const int n = box.dim();
  Eigen::MatrixXd H(2 * n, n);
  Eigen::VectorXd h(2 * n);
  H << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  h << box.upper, -box.lower;
  return Polytope(std::move(H), std::move(h));
}

bool Polytope::contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const {
  if (x.size() != dim()) throw std::invalid_argument("Polytope::contains: dimension mismatch");
  return num_rows() == 0 || ((H_ * x - h_).array() <= tol).all();
}

Polytope Polytope::translated(const Eigen::Ref<const Eigen::VectorXd>& shift) const {
  return Polytope(H_, h_ + H_ * shift);
}

Polytope Polytope::intersect(const Polytope& other) const {
  if (other.dim() != dim()) throw std::invalid_argument("Polytope::intersect: dimension mismatch");
  Eigen::MatrixXd H(num_rows() + other.num_rows(), dim());
  Eigen::VectorXd h(num_rows() + other.num_rows());
  H << H_, other.H_;
  h << h_, other.h_;
  return Polytope(std::move(H), std::move(h));
}

std::optional<double> maximize_linear(const Polytope& p,
                                     const Eigen::Ref<const Eigen::VectorXd>& c) {
  const int n = p.dim();
  if (c.size() != n) throw std::invalid_argument("maximize_linear: dimension mismatch");
  const QpProblem lp(Eigen::MatrixXd::Zero(n, n), -c, 0.0, p.H(),
                     Eigen::VectorXd::Constant(p.num_rows(), -kInf), p.h());
  const auto sol = solve_qp(lp);
  if (sol.status != QpStatus::kOptimal) return std::nullopt;
  return -sol.objective;
}

Polytope remove_redundant(const Polytope& p) {
  const int n = p.dim();
  std::vector<bool> keep(p.num_rows(), true);
  for (int j = 0; j < p.num_rows(); ++j) {
    std::vector<int> others;
    for (int r = 0; r < p.num_rows(); ++r) {
      if (r != j && keep[r]) others.push_back(r);
    }
    Eigen::MatrixXd A(others.size(), n);
    Eigen::VectorXd u(others.size());
    for (std::size_t k = 0; k < others.size(); ++k) {
      A.row(k) = p.H().row(others[k]);
      u[k] = p.h()[others[k]];
    }
    // max H_j x  ⇔  min −H_j x
    const QpProblem lp(Eigen::MatrixXd::Zero(n, n), -p.H().row(j).transpose(), 0.0, A,
                       Eigen::VectorXd::Constant(others.size(), -kInf), u);
    const auto sol = solve_qp(lp);
    if (sol.status == QpStatus::kOptimal && -sol.objective <= p.h()[j] + 1e-9) {
      keep[j] = false;
    }
  }
  std::vector<int> rows;
  for (int r = 0; r < p.num_rows(); ++r) {
    if (keep[r]) rows.push_back(r);
  }
  Eigen::MatrixXd H(rows.size(), n);
  Eigen::VectorXd h(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    H.row(k) = p.H().row(rows[k]);
    h[k] = p.h()[rows[k]];
  }
  return Polytope(std::move(H), std::move(h));
}

std::string polytope_to_text(const Polytope& p) {
  std::ostringstream out;
  out << "{\n  \"dim\": " << p.dim() << ",\n  \"H\": [";
  for (int r = 0; r < p.num_rows(); ++r) {
    out << (r ? ",\n    [" : "\n    [");
    for (int c = 0; c < p.dim(); ++c) out << (c ? ", " : "") << format_double(p.H()(r, c));
    out << "]";
  }
  out << "\n  ],\n  \"h\": [";
  for (int r = 0; r < p.num_rows(); ++r) out << (r ? ", " : "") << format_double(p.h()[r]);
  out << "]\n}\n";
  return out.str();
}

Polytope polytope_from_text(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    const int n = doc.at("dim").get<int>();
    const auto rows = doc.at("H").get<std::vector<std::vector<double>>>();
    const auto h = doc.at("h").get<std::vector<double>>();
    if (rows.size() != h.size()) throw std::invalid_argument("polytope file: H/h length mismatch");
    Eigen::MatrixXd H(rows.size(), n);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<int>(rows[r].size()) != n) {
        throw std::invalid_argument("polytope file: row width mismatch");
      }
      for (int c = 0; c < n; ++c) H(r, c) = rows[r][c];
    }
    return Polytope(std::move(H), Eigen::Map<const Eigen::VectorXd>(h.data(), h.size()));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("polytope file: ") + e.what());
  }
}

void save_polytope(const Polytope& p, const std::filesystem::path& path) {
  write_text_file(path, polytope_to_text(p));
}

Polytope load_polytope(const std::filesystem::path& path) {
  return polytope_from_text(read_text_file(path));
}

}  // namespace nnmpc
