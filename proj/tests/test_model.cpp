#include <gtest/gtest.h>

#include "hsflow/errors.hpp"
#include "support.hpp"

using namespace hsflow;
using namespace hsflow::testing;

namespace {

ParseError parse_failure(const std::string& text) {
  try {
    parse_model(text);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no parse error for:\n" << text;
  return ParseError(0, 0, "none");
}

}  // namespace

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

TEST(ComplexLiteral, Forms) {
  EXPECT_EQ(parse_complex_literal("2"), cplx(2.0));
  EXPECT_EQ(parse_complex_literal("-1.5e-1"), cplx(-0.15));
  EXPECT_EQ(parse_complex_literal("3i"), cplx(0, 3));
  EXPECT_EQ(parse_complex_literal("-i"), cplx(0, -1));
  EXPECT_EQ(parse_complex_literal("1-2i"), cplx(1, -2));
  EXPECT_EQ(parse_complex_literal("1e-3+2e-3i"), cplx(1e-3, 2e-3));
  EXPECT_FALSE(parse_complex_literal("1+").has_value());
  EXPECT_FALSE(parse_complex_literal("abc").has_value());
  EXPECT_FALSE(parse_complex_literal("").has_value());
}

TEST(ModelParser, Iwasawa) {
  const Model m = iwasawa();
  EXPECT_EQ(m.backend, Backend::invariant);
  EXPECT_EQ(m.n, 3);
  ASSERT_EQ(m.d_phi[2].size(), 1u);
  EXPECT_EQ(m.d_phi[2][0].c, cplx(-1.0));
  EXPECT_EQ(m.d_phi[2][0].kind, 'e');
  EXPECT_EQ(m.metric.at({}), Mat::Identity(3, 3));
}

TEST(ModelParser, StructureSums) {
  const Model m = parse_model("kind invariant\nn 3\nd 3 := e(1,2) - 0.5i*f(1,1) + 2*f(2,2)\n");
  ASSERT_EQ(m.d_phi[2].size(), 3u);
  EXPECT_EQ(m.d_phi[2][1].c, cplx(0, -0.5));
  EXPECT_EQ(m.d_phi[2][2].c, cplx(2.0));
}

TEST(ModelParser, SpectralDefaults) {
  const Model m = spectral_torus();
  EXPECT_EQ(m.backend, Backend::spectral);
  EXPECT_EQ(m.modes.size(), 12u);
  EXPECT_EQ(m.grid, minimum_grid(3, m.modes));
  EXPECT_EQ(m.grid, 5);
  EXPECT_EQ(m.potential.size(), 5u);
}

TEST(ModelParser, ErrorsCarryLineAndColumn) {
  {
    const ParseError e = parse_failure("kind invariant\nn 3\nd 3 := 1+*e(1,2)\n");
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 8u);
  }
  {
    const ParseError e = parse_failure("kind invariant\nn 3\nd 4 := e(1,2)\n");
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 3u);
  }
  {
    const ParseError e = parse_failure("kind invariant\nn 3\nn 2\n");
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 1u);
  }
  {
    const ParseError e = parse_failure("kind invariant\nn 2\nfrobnicate 3\n");
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 1u);
  }
  {
    const ParseError e = parse_failure("kind spectral\nn 2\n");
    EXPECT_EQ(e.line(), 3u);
  }
  {
    const ParseError e = parse_failure("kind invariant\nn 2\nd 1 := e(1,2) e(1,2)\n");
    EXPECT_EQ(e.line(), 3u);
  }
  {
    const ParseError e = parse_failure("kind invariant\nn 2\nmodes axis K 1\n");
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ModelParser, CommentsAndBlankLines) {
  const Model m = parse_model("# header\n\nkind invariant   # trailing\nn 2\n\n");
  EXPECT_EQ(m.n, 2);
}

TEST(ModelValidation, RejectsBrokenJacobi) {
  EXPECT_THROW(parse_model("kind invariant\nn 3\nd 3 := e(1,2)\nd 1 := f(3,3)\n"), ValidationError);
}

TEST(ModelValidation, RejectsNonIntegrable) {
  EXPECT_THROW(parse_model("kind invariant\nn 3\nd 3 := g(1,2)\n"), ValidationError);
}

TEST(ModelValidation, RejectsCoarseGrid) {
  EXPECT_THROW(parse_model("kind spectral\nn 2\nmodes axis K 1\ngrid 3\n"), ValidationError);
  EXPECT_NO_THROW(parse_model("kind spectral\nn 2\nmodes axis K 1\ngrid 5\n"));
}

TEST(ModelValidation, RejectsPotentialOutsideModeSet) {
  EXPECT_THROW(parse_model("kind spectral\nn 1\nmodes axis K 1\npotential 2 0 1 := 1\n"), ValidationError);
}

TEST(ModelValidation, RejectsInconsistentHermitianPartner) {
  EXPECT_THROW(parse_model("kind invariant\nn 2\nmetric h 1 2 := 0.1\nmetric h 2 1 := 0.2\n"), ValidationError);
  const Model m = parse_model("kind invariant\nn 2\nmetric h 1 2 := 0.1i\n");
  EXPECT_EQ(m.metric.at({})(1, 0), cplx(0, -0.1));
}

TEST(ModelTemplate, PolynomialCoefficients) {
  const ModelTemplate t = load_model_template(model_path("jump_family.model"));
  EXPECT_FALSE(t.is_constant());
  EXPECT_EQ(t.t_samples.size(), 3u);
  const Model m0 = t.instantiate(0.0);
  const Model m1 = t.instantiate(0.5);
  EXPECT_EQ(m0.d_phi[2][0].c, cplx(0.0));
  EXPECT_EQ(m1.d_phi[2][0].c, cplx(-0.5));
  EXPECT_THROW(load_model(model_path("jump_family.model")), ValidationError);
}

TEST(ModelTemplate, PolyEvaluation) {
  EXPECT_EQ(evaluate(Poly{1.0, 2.0, 3.0}, cplx(2.0)), cplx(17.0));
  EXPECT_EQ(evaluate(Poly{cplx(0, 1)}, cplx(5.0)), cplx(0, 1));
}

TEST(ModelLoad, MissingFileIsInputError) { EXPECT_THROW(load_model("/nonexistent/file.model"), InputError); }
