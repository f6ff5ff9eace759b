#include "wthin/errors.hpp"
#include "wthin/matrix_io.hpp"
#include "wthin/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace wthin;

TEST(MatrixIo, RoundTripIsBitExact) {
    RngStream rng(3, 0);
    Eigen::MatrixXd m(4, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::ldexp(rng.normal(), static_cast<int>(rng.uniform_index(60)) - 30);
    m(0, 0) = 0.1;
    m(1, 1) = -0.0;
    std::stringstream ss;
    write_csv_matrix(ss, m);
    const Eigen::MatrixXd back = parse_csv_matrix(ss);
    ASSERT_EQ(back.rows(), 4);
    ASSERT_EQ(back.cols(), 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) EXPECT_EQ(back.data()[i], m.data()[i]);
}

TEST(MatrixIo, ShortestDecimal) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(format_double(1e-300), "1e-300");
}

TEST(MatrixIo, RejectsRaggedAndGarbage) {
    std::stringstream ragged("1,2\n3\n");
    EXPECT_THROW(parse_csv_matrix(ragged), Error);
    std::stringstream garbage("1,abc\n");
    EXPECT_THROW(parse_csv_matrix(garbage), Error);
    std::stringstream empty("\n\n");
    EXPECT_THROW(parse_csv_matrix(empty), Error);
}

TEST(MatrixIo, ToleratesWhitespaceAndCrlf) {
    std::stringstream in(" 1, 2 \r\n\n3,4\r\n");
    const auto m = parse_csv_matrix(in);
    EXPECT_EQ(m(1, 0), 3.0);
    EXPECT_EQ(m(0, 1), 2.0);
}

TEST(MatrixIo, MissingFileIsIoError) {
    try {
        read_csv_matrix("/nonexistent/definitely/missing.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
    }
}
