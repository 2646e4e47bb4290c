#pragma once

#include <cstddef>
#include <vector>

#include "kgc/encoder.hpp"

/// Linear-chain CRF primitives over a T x L emission matrix and an
/// (L+2) x (L+2) transition matrix whose row/column L is the virtual start
/// state and L+1 the virtual end state. -inf transitions forbid a move.
namespace kgc::crf {

inline std::size_t start_state(const Matrix& transitions) { return static_cast<std::size_t>(transitions.rows()) - 2; }
inline std::size_t end_state(const Matrix& transitions) { return static_cast<std::size_t>(transitions.rows()) - 1; }

/// Score of one label path: emissions plus transitions including start and end.
double path_score(const Matrix& emissions, const Matrix& transitions, const std::vector<std::size_t>& labels);

/// log of the sum over all L^T paths of exp(path score), by the forward algorithm.
double log_partition(const Matrix& emissions, const Matrix& transitions);

/// log_partition - path_score(labels), clamped at 0.
double sequence_nll(const Matrix& emissions, const Matrix& transitions, const std::vector<std::size_t>& labels);

struct Marginals {
  Matrix unary;     ///< T x L posterior label probabilities
  Matrix pairwise;  ///< (L+2) x (L+2) expected transition counts
  double log_z = 0.0;
};

/// Forward-backward in log space.
Marginals marginals(const Matrix& emissions, const Matrix& transitions);

struct Decoded {
  std::vector<std::size_t> labels;
  double score = 0.0;
};

/// Highest-scoring path. Ties prefer the lower label index, both for the
/// final state and for every back-pointer.
Decoded viterbi(const Matrix& emissions, const Matrix& transitions);

double log_sum_exp(const double* values, std::size_t n);

}  // namespace kgc::crf
