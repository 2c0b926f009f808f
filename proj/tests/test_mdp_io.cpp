#include <gtest/gtest.h>

#include <sstream>

#include "rsdrl/linear_mdp.hpp"
#include "rsdrl/mdp_io.hpp"
#include "support.hpp"

using namespace rsdrl;

TEST(MdpIo, TabularRoundTripIsBitExact) {
  Rng rng(2);
  const auto mdp = testing_support::random_mdp(rng, 3, 2, 4, ValueGrid(-1, 0.5, 5), 0.2);
  std::stringstream ss;
  write_mdp(ss, mdp);
  const ParsedMdp back = read_mdp(ss);
  EXPECT_TRUE(back.tabular == mdp);
  EXPECT_FALSE(back.linear.has_value());
}

TEST(MdpIo, LinearRoundTripKeepsFeatures) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 6, 3, 7);
  std::stringstream ss;
  write_mdp(ss, lin);
  const std::string text = ss.str();
  const ParsedMdp back = read_mdp(ss);
  ASSERT_TRUE(back.linear.has_value());
  EXPECT_TRUE(back.tabular == lin.tabular);
  EXPECT_EQ(back.linear->dim, 2u);
  for (std::size_t k = 0; k < lin.phi.size(); ++k) EXPECT_EQ(back.linear->phi[k], lin.phi[k]);
  std::stringstream again;
  write_mdp(again, *back.linear);
  EXPECT_EQ(again.str(), text);
}

TEST(MdpIo, CommentsAndBlankLinesIgnored) {
  Rng rng(3);
  const auto mdp = testing_support::random_mdp(rng, 2, 1, 1, ValueGrid(0, 1, 2));
  std::stringstream ss;
  write_mdp(ss, mdp);
  std::stringstream commented("# header comment\n\n" + ss.str());
  EXPECT_TRUE(read_mdp(commented).tabular == mdp);
}

TEST(MdpIo, MalformedInputReportsLine) {
  std::istringstream bad_magic("rsdrl-mdp 2\n");
  EXPECT_THROW(read_mdp(bad_magic), IoError);
  std::istringstream truncated("rsdrl-mdp 1\nstates 2\nactions 1\n");
  EXPECT_THROW(read_mdp(truncated), IoError);
  std::istringstream bad_number("rsdrl-mdp 1\nstates two\n");
  try {
    read_mdp(bad_number);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(MdpIo, InvalidTablesRejected) {
  Rng rng(4);
  auto mdp = testing_support::random_mdp(rng, 2, 1, 1, ValueGrid(0, 1, 2));
  mdp.transition_row(0, 1, 0)[0] += 0.5;
  std::stringstream ss;
  write_mdp(ss, mdp);
  EXPECT_THROW(read_mdp(ss), ValidationError);
}

TEST(MdpIo, InconsistentFeaturesRejected) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 2, 3, 1);
  auto tampered = lin;
  tampered.phi[0] = Eigen::Vector2d(0.9, 0.1);
  std::stringstream ss;
  write_mdp(ss, tampered);
  EXPECT_THROW(read_mdp(ss), IoError);
}
