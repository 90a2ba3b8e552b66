#include <cmath>
#include <random>
#include <string>
#include <stdexcept>

#include "doctest.h"
#include "rodd/codec.hpp"

using namespace rodd;

TEST_CASE("codebook entries follow (1-q, q/2, q/2)") {
  const Codebook book = generate_codebook(7, 8, 600, 0.5);
  REQUIRE(book.entries().size() == 256u * 600u);
  REQUIRE(book.word_count() == 256);
  double counts[3] = {0, 0, 0};
  for (std::int8_t v : book.entries()) counts[v + 1] += 1.0;
  const double n = static_cast<double>(book.entries().size());
  CHECK(std::abs(counts[1] / n - 0.5) < 0.02);

  // chi-square with 2 degrees of freedom; 9.21 is the 1% critical value
  for (double q : {0.5, 0.2}) {
    const Codebook b = generate_codebook(3, 8, 600, q, 4);
    double c[3] = {0, 0, 0};
    for (std::int8_t v : b.entries()) c[v + 1] += 1.0;
    const double expected[3] = {n * q / 2, n * (1 - q), n * q / 2};
    double chi2 = 0.0;
    for (int k = 0; k < 3; ++k) chi2 += (c[k] - expected[k]) * (c[k] - expected[k]) / expected[k];
    CHECK(chi2 < 9.21);
  }
}

TEST_CASE("codebooks regenerate from (nia, salt)") {
  CHECK(generate_codebook(7, 8, 600, 0.5) == generate_codebook(7, 8, 600, 0.5));
  CHECK(generate_codebook(7, 8, 600, 0.5).entries() != generate_codebook(8, 8, 600, 0.5).entries());
  CHECK(generate_codebook(7, 8, 600, 0.5, 0).entries() != generate_codebook(7, 8, 600, 0.5, 1).entries());
  // regression pin of the canonical book of node 0 at l = 2, M_s = 8
  const Codebook b = generate_codebook(0, 2, 8, 0.5);
  const char* pinned[4] = {"--0+-000", "00+-000+", "+-000000", "--+0+00+"};
  for (int w = 0; w < 4; ++w) {
    std::string text;
    for (std::int8_t v : b.word(w)) text += v > 0 ? '+' : (v < 0 ? '-' : '0');
    CHECK(text == pinned[w]);
  }
}

TEST_CASE("codebook accessors and validation") {
  const Codebook b = generate_codebook(2, 3, 16, 0.5);
  CHECK(b.word(7).size() == 16);
  CHECK(b.symbol(7, 15) == b.word(7)[15]);
  CHECK_THROWS_AS(b.word(8), std::out_of_range);
  CHECK_THROWS_AS(b.word(-1), std::out_of_range);
  CHECK_THROWS_AS(generate_codebook(0, 0, 16, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(generate_codebook(0, 17, 16, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(generate_codebook(0, 3, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(generate_codebook(0, 3, 16, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Codebook(0, 2, 4, 0.5, 0, std::vector<std::int8_t>(15)), std::invalid_argument);
}

TEST_CASE("quantization examples") {
  CHECK(quantization_step(50.0, 8) == 0.1953125);
  CHECK(quantize(0.0, 50.0, 8) == 0);
  CHECK(std::abs(dequantize(0, 50.0, 8) - 0.09766) < 1e-5);
  CHECK(quantize(12.34, 50.0, 8) == 63);
  CHECK(std::abs(dequantize(63, 50.0, 8) - 12.4023) < 1e-4);
  CHECK(quantize(50.0, 50.0, 8) == 255);
  CHECK(quantize(-3.0, 50.0, 8) == 0);
  CHECK(quantize(1e9, 50.0, 8) == 255);
  CHECK(quantize(std::nan(""), 50.0, 8) == 0);

  const QuantizedLocation q = quantize_location({12.34, 0.0}, 50.0, 8);
  CHECK(q.omega == 63);
  CHECK(q.nu == 0);
  CHECK(q.step == 0.1953125);
  const Vec2 back = dequantize_location(q, 50.0, 8);
  CHECK(back.x == dequantize(63, 50.0, 8));
  CHECK(back.y == dequantize(0, 50.0, 8));
}

TEST_CASE("quantize round trip stays within half a step") {
  std::mt19937_64 rng(17);
  for (int bits : {1, 4, 6, 8, 12}) {
    const double step = quantization_step(50.0, bits);
    std::uniform_real_distribution<double> x(0.0, 50.0);
    for (int i = 0; i < 2000; ++i) {
      const double v = x(rng);
      CHECK(std::abs(dequantize(quantize(v, 50.0, bits), 50.0, bits) - v) <= step / 2 + 1e-12);
    }
  }
}

TEST_CASE("sparse vector layout") {
  // one-based (1, 3, 2) is zero-based (0, 2, 1)
  const std::vector<int> messages{0, 2, 1};
  const std::vector<std::complex<double>> amps{{1.0, 0.5}, {-0.3, 2.0}, {0.0, -1.0}};
  const SparseVector x = build_sparse_vector(messages, amps, 2);
  REQUIRE(x.size() == 12);
  const std::vector<std::complex<double>> expected{amps[0], 0, 0, 0, 0, 0, amps[1], 0, 0, amps[2], 0, 0};
  for (std::size_t i = 0; i < 12; ++i) CHECK(x.values()[i] == expected[i]);
  CHECK(x.nonzero_count() == 3);

  // block argmax recovers the messages
  for (int b = 0; b < 3; ++b) {
    const auto blk = x.block(b);
    int arg = 0;
    for (int w = 1; w < 4; ++w) {
      if (std::abs(blk[static_cast<std::size_t>(w)]) > std::abs(blk[static_cast<std::size_t>(arg)])) arg = w;
    }
    CHECK(arg == messages[static_cast<std::size_t>(b)]);
  }

  const SparseVector zero = build_sparse_vector(std::vector<int>{0}, std::vector<std::complex<double>>{0.0}, 3);
  CHECK(zero.nonzero_count() == 0);
  CHECK_THROWS_AS(build_sparse_vector(std::vector<int>{4}, std::vector<std::complex<double>>{1.0}, 2),
                  std::out_of_range);
  CHECK_THROWS_AS(build_sparse_vector(std::vector<int>{-1}, std::vector<std::complex<double>>{1.0}, 2),
                  std::out_of_range);
}

TEST_CASE("at most one nonzero per block for random inputs") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> word(0, 15);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    std::vector<int> m(6);
    std::vector<std::complex<double>> a(6);
    for (int i = 0; i < 6; ++i) {
      m[static_cast<std::size_t>(i)] = word(rng);
      a[static_cast<std::size_t>(i)] = {g(rng), g(rng)};
    }
    const SparseVector x = build_sparse_vector(m, a, 4);
    for (int b = 0; b < 6; ++b) {
      int nz = 0;
      for (auto v : x.block(b)) nz += v != std::complex<double>{};
      CHECK(nz <= 1);
    }
  }
}
