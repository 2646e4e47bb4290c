#include "kgc/crf.hpp"

#include <cmath>
#include <limits>

#include "kgc/error.hpp"

namespace kgc::crf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_shapes(const Matrix& emissions, const Matrix& transitions) {
  if (emissions.rows() < 1) fail(ErrorCode::InvalidArgument, "CRF needs at least one token");
  if (transitions.rows() != emissions.cols() + 2 || transitions.cols() != emissions.cols() + 2) {
    fail(ErrorCode::DimensionMismatch, "transition matrix must be (L+2) x (L+2)");
  }
}

Matrix forward(const Matrix& e, const Matrix& tr) {
  const Eigen::Index T = e.rows();
  const Eigen::Index L = e.cols();
  const auto S = static_cast<Eigen::Index>(start_state(tr));
  Matrix alpha(T, L);
  for (Eigen::Index j = 0; j < L; ++j) alpha(0, j) = tr(S, j) + e(0, j);
  std::vector<double> buf(static_cast<std::size_t>(L));
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < L; ++j) {
      for (Eigen::Index i = 0; i < L; ++i) buf[static_cast<std::size_t>(i)] = alpha(t - 1, i) + tr(i, j);
      alpha(t, j) = log_sum_exp(buf.data(), buf.size()) + e(t, j);
    }
  }
  return alpha;
}

Matrix backward(const Matrix& e, const Matrix& tr) {
  const Eigen::Index T = e.rows();
  const Eigen::Index L = e.cols();
  const auto E = static_cast<Eigen::Index>(end_state(tr));
  Matrix beta(T, L);
  for (Eigen::Index i = 0; i < L; ++i) beta(T - 1, i) = tr(i, E);
  std::vector<double> buf(static_cast<std::size_t>(L));
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < L; ++i) {
      for (Eigen::Index j = 0; j < L; ++j) buf[static_cast<std::size_t>(j)] = tr(i, j) + e(t + 1, j) + beta(t + 1, j);
      beta(t, i) = log_sum_exp(buf.data(), buf.size());
    }
  }
  return beta;
}

double final_lse(const Matrix& alpha, const Matrix& tr) {
  const Eigen::Index L = alpha.cols();
  const auto E = static_cast<Eigen::Index>(end_state(tr));
  std::vector<double> buf(static_cast<std::size_t>(L));
  for (Eigen::Index j = 0; j < L; ++j) buf[static_cast<std::size_t>(j)] = alpha(alpha.rows() - 1, j) + tr(j, E);
  return log_sum_exp(buf.data(), buf.size());
}

}  // namespace

double log_sum_exp(const double* values, std::size_t n) {
  double m = kNegInf;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, values[i]);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(values[i] - m);
  return m + std::log(s);
}

double path_score(const Matrix& emissions, const Matrix& transitions, const std::vector<std::size_t>& labels) {
  check_shapes(emissions, transitions);
  if (labels.size() != static_cast<std::size_t>(emissions.rows())) {
    fail(ErrorCode::DimensionMismatch, "label sequence length differs from emissions");
  }
  const auto L = static_cast<std::size_t>(emissions.cols());
  double score = transitions(static_cast<Eigen::Index>(start_state(transitions)), static_cast<Eigen::Index>(labels[0]));
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] >= L) fail(ErrorCode::InvalidArgument, "label index out of range");
    score += emissions(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(labels[t]));
    if (t > 0) score += transitions(static_cast<Eigen::Index>(labels[t - 1]), static_cast<Eigen::Index>(labels[t]));
  }
  score += transitions(static_cast<Eigen::Index>(labels.back()), static_cast<Eigen::Index>(end_state(transitions)));
  return score;
}

double log_partition(const Matrix& emissions, const Matrix& transitions) {
  check_shapes(emissions, transitions);
  return final_lse(forward(emissions, transitions), transitions);
}

double sequence_nll(const Matrix& emissions, const Matrix& transitions, const std::vector<std::size_t>& labels) {
  const double nll = log_partition(emissions, transitions) - path_score(emissions, transitions, labels);
  return std::isnan(nll) ? nll : std::max(0.0, nll);
}

Marginals marginals(const Matrix& e, const Matrix& tr) {
  check_shapes(e, tr);
  const Eigen::Index T = e.rows();
  const Eigen::Index L = e.cols();
  const auto S = static_cast<Eigen::Index>(start_state(tr));
  const auto E = static_cast<Eigen::Index>(end_state(tr));
  const Matrix alpha = forward(e, tr);
  const Matrix beta = backward(e, tr);
  Marginals m;
  m.log_z = final_lse(alpha, tr);
  m.unary = (alpha + beta).array() - m.log_z;
  m.unary = m.unary.array().exp();
  m.pairwise = Matrix::Zero(L + 2, L + 2);
  for (Eigen::Index j = 0; j < L; ++j) {
    m.pairwise(S, j) = m.unary(0, j);
    m.pairwise(j, E) = m.unary(T - 1, j);
  }
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index i = 0; i < L; ++i) {
      for (Eigen::Index j = 0; j < L; ++j) {
        m.pairwise(i, j) += std::exp(alpha(t - 1, i) + tr(i, j) + e(t, j) + beta(t, j) - m.log_z);
      }
    }
  }
  return m;
}

Decoded viterbi(const Matrix& e, const Matrix& tr) {
  check_shapes(e, tr);
  const Eigen::Index T = e.rows();
  const Eigen::Index L = e.cols();
  const auto S = static_cast<Eigen::Index>(start_state(tr));
  const auto E = static_cast<Eigen::Index>(end_state(tr));
  Matrix delta(T, L);
  std::vector<std::vector<std::size_t>> back(static_cast<std::size_t>(T), std::vector<std::size_t>(static_cast<std::size_t>(L), 0));
  for (Eigen::Index j = 0; j < L; ++j) delta(0, j) = tr(S, j) + e(0, j);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < L; ++j) {
      double best = delta(t - 1, 0) + tr(0, j);
      std::size_t arg = 0;
      for (Eigen::Index i = 1; i < L; ++i) {
        const double s = delta(t - 1, i) + tr(i, j);
        if (s > best) {
          best = s;
          arg = static_cast<std::size_t>(i);
        }
      }
      delta(t, j) = best + e(t, j);
      back[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = arg;
    }
  }
  double best = delta(T - 1, 0) + tr(0, E);
  std::size_t last = 0;
  for (Eigen::Index j = 1; j < L; ++j) {
    const double s = delta(T - 1, j) + tr(j, E);
    if (s > best) {
      best = s;
      last = static_cast<std::size_t>(j);
    }
  }
  Decoded out;
  out.labels.assign(static_cast<std::size_t>(T), 0);
  out.labels.back() = last;
  for (Eigen::Index t = T - 1; t > 0; --t) {
    out.labels[static_cast<std::size_t>(t - 1)] = back[static_cast<std::size_t>(t)][out.labels[static_cast<std::size_t>(t)]];
  }
  out.score = best;
  return out;
}

}  // namespace kgc::crf
