#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "kgc/crf.hpp"
#include "kgc/error.hpp"
#include "oracles.hpp"

using namespace kgc;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("single step normalizer is a logsumexp") {
  Matrix e(1, 3);
  e << 0.5, -1.0, 2.0;
  const Matrix tr = Matrix::Zero(5, 5);
  const double expected = std::log(std::exp(0.5) + std::exp(-1.0) + std::exp(2.0));
  CHECK(crf::log_partition(e, tr) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(crf::viterbi(e, tr).labels == std::vector<std::size_t>{2});
}

TEST_CASE("normalizer equals brute force over all paths") {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const long T = 1 + static_cast<long>(rng.uniform_index(4));
    const long L = 1 + static_cast<long>(rng.uniform_index(3));
    const Matrix e = fixture::random_matrix(rng, T, L);
    const Matrix tr = fixture::random_matrix(rng, L + 2, L + 2);
    REQUIRE(std::abs(crf::log_partition(e, tr) - oracle::log_partition(e, tr)) <= 1e-10);
  }
}

TEST_CASE("shifting every emission by c shifts the normalizer by T*c") {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const long T = 1 + static_cast<long>(rng.uniform_index(8));
    const Matrix e = fixture::random_matrix(rng, T, 3);
    const Matrix tr = fixture::random_matrix(rng, 5, 5);
    const double c = rng.uniform01() * 6.0 - 3.0;
    const Matrix shifted = e.array() + c;
    REQUIRE(std::abs(crf::log_partition(shifted, tr) - crf::log_partition(e, tr) - static_cast<double>(T) * c) <= 1e-10);
  }
}

TEST_CASE("path score matches the oracle") {
  Rng rng(33);
  const Matrix e = fixture::random_matrix(rng, 4, 3);
  const Matrix tr = fixture::random_matrix(rng, 5, 5);
  for (const auto& p : oracle::all_paths(4, 3)) CHECK(crf::path_score(e, tr, p) == doctest::Approx(oracle::path_score(e, tr, p)));
}

TEST_CASE("probabilities of all paths sum to one") {
  Rng rng(34);
  for (int trial = 0; trial < 100; ++trial) {
    const long T = 1 + static_cast<long>(rng.uniform_index(4));
    const Matrix e = fixture::random_matrix(rng, T, 3);
    const Matrix tr = fixture::random_matrix(rng, 5, 5);
    double total = 0.0;
    for (const auto& p : oracle::all_paths(static_cast<std::size_t>(T), 3)) {
      const double nll = crf::sequence_nll(e, tr, p);
      REQUIRE(nll >= 0.0);
      total += std::exp(-nll);
    }
    REQUIRE(std::abs(total - 1.0) <= 1e-8);
  }
}

TEST_CASE("single label set has zero loss") {
  Rng rng(35);
  const Matrix e = fixture::random_matrix(rng, 5, 1);
  const Matrix tr = fixture::random_matrix(rng, 3, 3);
  CHECK(crf::sequence_nll(e, tr, std::vector<std::size_t>(5, 0)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("viterbi equals exhaustive argmax with the backtracking tie-break") {
  Rng rng(36);
  for (int trial = 0; trial < 1000; ++trial) {
    const long T = 1 + static_cast<long>(rng.uniform_index(6));
    const Matrix e = fixture::random_matrix(rng, T, 3);
    const Matrix tr = fixture::random_matrix(rng, 5, 5);
    const auto d = crf::viterbi(e, tr);
    const auto best = oracle::best_path(e, tr);
    REQUIRE(std::abs(d.score - best.score) <= 1e-10);
    REQUIRE(d.labels == best.labels);
  }
}

TEST_CASE("viterbi ties resolve deterministically") {
  Rng rng(37);
  for (int trial = 0; trial < 300; ++trial) {
    const long T = 1 + static_cast<long>(rng.uniform_index(5));
    // small integer scores make exact ties common
    Matrix e(T, 3), tr(5, 5);
    for (long i = 0; i < e.size(); ++i) e.data()[i] = static_cast<double>(rng.uniform_index(2));
    for (long i = 0; i < tr.size(); ++i) tr.data()[i] = static_cast<double>(rng.uniform_index(2));
    const auto d = crf::viterbi(e, tr);
    const auto best = oracle::best_path(e, tr, 1e-12);
    REQUIRE(d.score == doctest::Approx(best.score));
    REQUIRE(d.labels == best.labels);
  }
  const Matrix flat = Matrix::Zero(3, 3);
  CHECK(crf::viterbi(flat, Matrix::Zero(5, 5)).labels == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("forbidden transitions are never decoded") {
  Rng rng(38);
  for (int trial = 0; trial < 500; ++trial) {
    const long T = 1 + static_cast<long>(rng.uniform_index(10));
    const Matrix e = fixture::random_matrix(rng, T, 3, 5.0);
    Matrix tr = fixture::random_matrix(rng, 5, 5);
    tr(2, 1) = kNegInf;
    tr(3, 1) = kNegInf;
    const auto d = crf::viterbi(e, tr);
    REQUIRE(d.labels[0] != 1);
    for (std::size_t t = 1; t < d.labels.size(); ++t) REQUIRE(!(d.labels[t - 1] == 2 && d.labels[t] == 1));
    REQUIRE(std::isfinite(crf::log_partition(e, tr)));
  }
}

TEST_CASE("marginals are distributions consistent with pairwise counts") {
  Rng rng(39);
  const Matrix e = fixture::random_matrix(rng, 4, 3);
  const Matrix tr = fixture::random_matrix(rng, 5, 5);
  const auto m = crf::marginals(e, tr);
  for (long t = 0; t < 4; ++t) CHECK(m.unary.row(t).sum() == doctest::Approx(1.0));
  CHECK(m.pairwise.row(3).sum() == doctest::Approx(1.0));
  CHECK(m.pairwise.col(4).sum() == doctest::Approx(1.0));
  CHECK(m.pairwise.topLeftCorner(3, 3).sum() == doctest::Approx(3.0));

  // brute-force unary marginal of label 1 at position 2
  double p = 0.0;
  for (const auto& path : oracle::all_paths(4, 3)) {
    if (path[2] == 1) p += std::exp(oracle::path_score(e, tr, path) - oracle::log_partition(e, tr));
  }
  CHECK(m.unary(2, 1) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("shape checks") {
  CHECK_THROWS_AS(crf::log_partition(Matrix::Zero(2, 3), Matrix::Zero(4, 4)), Error);
  CHECK_THROWS_AS(crf::viterbi(Matrix::Zero(0, 3), Matrix::Zero(5, 5)), Error);
  CHECK_THROWS_AS(crf::path_score(Matrix::Zero(2, 3), Matrix::Zero(5, 5), {0}), Error);
}
