#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eaf/model_io.hpp"

namespace {

constexpr const char* kAffine = R"(# affine algebra
name    = "affine"
dim     = 2
f       = [[0, 1, 1, -1.0]]
G       = [1, 0,
           0, 1]
Gamma   = [1, 0, 0, 1]
D       = [0.5, 0, 0, 0.5]
measure = "halfplane"
domain  = [[null, null], [0, null]]
)";

TEST(ModelFile, ParsesAllKeys) {
  const auto m = eaf::parse_model(kAffine);
  EXPECT_EQ(m.name(), "affine");
  EXPECT_EQ(m.dim(), 2);
  EXPECT_EQ(m.algebra()(1, 0, 1), 1.0);
  EXPECT_EQ(m.noise()(1, 1), 0.5);
  EXPECT_EQ(m.measure().kind(), eaf::InvariantMeasure::Kind::HalfPlane);
  EXPECT_FALSE(m.in_domain(Eigen::Vector2d(0.0, -1.0)));
  EXPECT_TRUE(m.in_domain(Eigen::Vector2d(-3.0, 1.0)));
}

TEST(ModelFile, Defaults) {
  const auto m = eaf::parse_model("dim = 3\n");
  EXPECT_TRUE(m.metric().matrix().isIdentity(0.0));
  EXPECT_TRUE(m.dissipation().matrix().isZero(0.0));
  EXPECT_TRUE(m.noise().matrix().isZero(0.0));
  EXPECT_TRUE(m.measure().is_constant());
}

TEST(ModelFile, PowerMeasure) {
  const auto m = eaf::parse_model(R"(dim = 2
f = [[0, 1, 1, -1]]
measure = {"power": [0, -1], "scale": 2}
)");
  EXPECT_DOUBLE_EQ(m.measure()(Eigen::Vector2d(1.0, 4.0)), 0.5);
}

TEST(ModelFile, RejectsBadInput) {
  EXPECT_THROW(eaf::parse_model("dim = 2\ncolour = 3\n"), eaf::ConfigError);
  EXPECT_THROW(eaf::parse_model("dim = 2\ndim = 2\n"), eaf::ConfigError);
  EXPECT_THROW(eaf::parse_model("f = []\n"), eaf::ConfigError);
  EXPECT_THROW(eaf::parse_model("dim = 2\nG = [1, 0, 0]\n"), eaf::ConfigError);
  EXPECT_THROW(eaf::parse_model("dim = 2\nG = [1, 0, 0, -1]\n"), eaf::ConfigError);
  EXPECT_THROW(eaf::parse_model("dim = 2\nf = [[0, 1, 1]]\n"), eaf::ConfigError);
  EXPECT_THROW(eaf::parse_model("dim = 2\nmeasure = \"spherical\"\n"), eaf::ConfigError);
  EXPECT_THROW(eaf::parse_model("dim = 2\nname = 5\n"), eaf::ConfigError);
  EXPECT_THROW(eaf::parse_model("dim = [2\n"), eaf::ConfigError);
  EXPECT_THROW(eaf::parse_model("dim 2\n"), eaf::ConfigError);
  // Jacobi violation
  EXPECT_THROW(eaf::parse_model("dim = 3\nf = [[0,1,2,1],[1,2,0,1],[2,0,1,1],[0,1,0,0.1]]\n"), eaf::ConfigError);
}

TEST(ModelFile, RoundTrip) {
  for (const auto& name : eaf::builtin_model_names()) {
    const auto m = eaf::builtin_model(name);
    std::ostringstream os;
    eaf::write_model(os, m);
    const auto back = eaf::parse_model(os.str());
    EXPECT_EQ(back.name(), m.name());
    EXPECT_EQ(back.algebra().dense(), m.algebra().dense());
    EXPECT_EQ(back.metric().matrix(), m.metric().matrix());
    EXPECT_EQ(back.dissipation().matrix(), m.dissipation().matrix());
    EXPECT_EQ(back.noise().matrix(), m.noise().matrix());
    EXPECT_EQ(back.measure().exponents(), m.measure().exponents());
    EXPECT_EQ(back.measure().kind(), m.measure().kind());
  }
}

TEST(ModelFile, LoadByNameOrPath) {
  EXPECT_EQ(eaf::load_model("so3").name(), "so3");
  const auto path = std::filesystem::temp_directory_path() / "eaf_model_io_test.model";
  {
    std::ofstream os(path);
    os << kAffine;
  }
  EXPECT_EQ(eaf::load_model(path.string()).name(), "affine");
  std::filesystem::remove(path);
  EXPECT_THROW(eaf::load_model("/nonexistent/model.file"), eaf::ConfigError);
}

}  // namespace
