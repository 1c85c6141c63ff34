#include <gtest/gtest.h>

#include "support.hpp"

using namespace svgtok;

namespace {

Error error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error raised";
  return Error(Errc::Io, "none");
}

const PreprocessConfig kCfg;

std::vector<const Element*> paths_of(const Element& root) {
  std::vector<const Element*> out;
  for_each_element(root, [&](const Element& e) {
    if (e.tag == "path") out.push_back(&e);
  });
  return out;
}

std::vector<double> params(const Element& path, std::size_t i) { return (*path.path_data)[i].params(); }

}  // namespace

TEST(Clean, RejectsScript) {
  auto e = error_of([] { preprocess(R"svg(<svg viewBox="0 0 10 10"><script>x()</script><path d="M0 0H5"/></svg>)svg"); });
  EXPECT_EQ(e.code(), Errc::RejectedContent);
  EXPECT_EQ(e.stage(), "clean");
  EXPECT_EQ(error_of([] { preprocess(R"svg(<svg viewBox="0 0 10 10"><g><image href="a.png"/></g></svg>)svg"); }).code(),
            Errc::RejectedContent);
}

TEST(Clean, InlinesStyleAndCompactsColor) {
  auto doc = clean_document(parse_svg(R"svg(<svg viewBox="0 0 10 10"><path style="fill:red" d="M0 0H5"/></svg>)svg"), kCfg);
  const Element& p = doc.root.children.at(0);
  ASSERT_NE(p.attr("fill"), nullptr);
  EXPECT_EQ(*p.attr("fill"), "#ff0000");
  EXPECT_EQ(p.attr("style"), nullptr);
}

TEST(Clean, StylesheetClassRules) {
  auto doc = clean_document(
      parse_svg(R"svg(<svg viewBox="0 0 10 10"><style>.a{stroke:#ABC;fill:none}</style><path class="a" d="M0 0H5"/></svg>)svg"),
      kCfg);
  auto paths = paths_of(doc.root);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(*paths[0]->attr("stroke"), "#aabbcc");
  EXPECT_EQ(*paths[0]->attr("fill"), "none");
}

TEST(Clean, RootKeepsOnlyViewBox) {
  auto doc = clean_document(
      parse_svg(R"svg(<svg xmlns="http://www.w3.org/2000/svg" width="24" height="24" viewBox="0 0 24 24" class="x" fill="currentColor"><path d="M0 0H5"/></svg>)svg"),
      kCfg);
  EXPECT_TRUE(doc.root.attributes.empty());
  EXPECT_EQ(doc.viewbox, (ViewBox{0, 0, 24, 24}));
  // inheritable presentation moves onto a wrapping group
  ASSERT_EQ(doc.root.children.size(), 1u);
  EXPECT_EQ(doc.root.children[0].tag, "g");
  EXPECT_EQ(*doc.root.children[0].attr("fill"), "#000000");
}

TEST(Clean, RepairsMissingFillAndDropsForeignObject) {
  auto doc = clean_document(
      parse_svg(R"svg(<svg viewBox="0 0 10 10"><foreignObject><p/></foreignObject><path d="M0 0H5"/></svg>)svg"), kCfg);
  ASSERT_EQ(doc.root.children.size(), 1u);
  EXPECT_EQ(*doc.root.children[0].attr("fill"), std::string(kDefaultFill));
}

TEST(Clean, FixedPointWithoutDisallowedContent) {
  auto once = clean_document(parse_svg(R"svg(<svg viewBox="0 0 10 10"><path fill="#123456" d="M0 0H5"/></svg>)svg"), kCfg);
  EXPECT_EQ(clean_document(once, kCfg), once);
}

TEST(Clean, ShapesBecomePaths) {
  auto doc = clean_document(
      parse_svg(R"svg(<svg viewBox="0 0 10 10"><rect x="1" y="2" width="3" height="4"/><circle cx="5" cy="5" r="2"/></svg>)svg"),
      kCfg);
  ASSERT_EQ(doc.root.children.size(), 2u);
  for (const auto& c : doc.root.children) EXPECT_EQ(c.tag, "path");
  // rect corners: M(1,2) H 4 V 6 H 1 Z
  const auto& r = *doc.root.children[0].path_data;
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r[0].params(), (std::vector<double>{1, 2}));
  EXPECT_EQ(r[1].params(), (std::vector<double>{4}));
  EXPECT_EQ(r[2].params(), (std::vector<double>{6}));
  // circle: two half arcs through (3,5) and (7,5)
  const auto& c = *doc.root.children[1].path_data;
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c[0].params(), (std::vector<double>{3, 5}));
  EXPECT_EQ(c[1].params(), (std::vector<double>{2, 2, 0, 7, 5}));
}

TEST(ExpandUse, OffsetBecomesTranslate) {
  auto doc = expand_use(parse_svg(
      R"svg(<svg viewBox="0 0 10 10"><defs><path id="p" d="M0 0L1 1"/></defs><use href="#p" x="5"/></svg>)svg"));
  bool any_use = false;
  for_each_element(doc.root, [&](const Element& e) { any_use = any_use || e.tag == "use"; });
  EXPECT_FALSE(any_use);
  ASSERT_EQ(doc.root.children.size(), 1u);  // the emptied defs is pruned
  const Element& g = doc.root.children[0];
  EXPECT_EQ(g.tag, "g");
  ASSERT_NE(g.attr("transform"), nullptr);
  EXPECT_EQ(parse_transform(*g.attr("transform")).apply({0, 0}).x, 5);
  EXPECT_EQ(g.children.at(0).tag, "path");
}

TEST(ExpandUse, NoUseIsIdentity) {
  auto doc = parse_svg(R"svg(<svg viewBox="0 0 10 10"><path d="M0 0L1 1"/></svg>)svg");
  EXPECT_EQ(expand_use(doc), doc);
}

TEST(ExpandUse, DanglingReference) {
  EXPECT_EQ(error_of([] { expand_use(parse_svg(R"svg(<svg><use href="#nope"/></svg>)svg")); }).code(),
            Errc::DanglingReference);
}

TEST(BakeTransforms, Translation) {
  auto doc = bake_transforms(parse_svg(R"svg(<svg><path transform="translate(10,20)" d="M1 0"/></svg>)svg"));
  const Element& p = doc.root.children[0];
  EXPECT_EQ(p.attr("transform"), nullptr);
  EXPECT_EQ(params(p, 0), (std::vector<double>{11, 20}));
}

TEST(BakeTransforms, RotatedHorizontalBecomesLine) {
  auto doc = bake_transforms(parse_svg(R"svg(<svg><path transform="rotate(90)" d="M0 0H5"/></svg>)svg"));
  const auto& path = *doc.root.children[0].path_data;
  ASSERT_EQ(path.size(), 2u);
  EXPECT_EQ(path[1].op(), PathOp::L);
  // (5, 0) rotated by 90 degrees is (0, 5)
  EXPECT_NEAR(path[1].params()[0], 0, 1e-12);
  EXPECT_NEAR(path[1].params()[1], 5, 1e-12);
}

TEST(BakeTransforms, NestedComposition) {
  auto doc = bake_transforms(
      parse_svg(R"svg(<svg><g transform="scale(2)"><path transform="translate(1 1)" d="M1 2"/></g></svg>)svg"));
  // scale(2) . translate(1,1) . (1,2) = (4, 6)
  EXPECT_EQ(params(doc.root.children[0].children[0], 0), (std::vector<double>{4, 6}));
}

TEST(BakeTransforms, Singular) {
  auto e = error_of([] { preprocess(R"svg(<svg viewBox="0 0 10 10"><path transform="scale(0,1)" d="M0 0H5"/></svg>)svg"); });
  EXPECT_EQ(e.code(), Errc::SingularTransform);
  EXPECT_EQ(e.stage(), "bake_transforms");
}

TEST(TransformMatrixTest, AssociativeWithIdentity) {
  auto a = parse_transform("rotate(30) translate(3 4)");
  auto b = parse_transform("skewX(10) scale(2 3)");
  auto c = parse_transform("matrix(1 2 3 4 5 6)");
  auto l = (a * b) * c, r = a * (b * c);
  for (double* p : {&l.a, &l.b, &l.c, &l.d, &l.e, &l.f}) {
    double* q = &r.a + (p - &l.a);
    EXPECT_NEAR(*p, *q, 1e-9);
  }
  auto i = TransformMatrix::identity();
  auto ai = a * i;
  EXPECT_NEAR(ai.e, a.e, 0);
  EXPECT_NEAR(ai.a, a.a, 0);
}

TEST(NormalizeViewBox, ScalesToCanvas) {
  auto doc = normalize_viewbox(parse_svg(R"svg(<svg viewBox="0 0 24 24"><path d="M12 12"/></svg>)svg"), kCfg);
  EXPECT_EQ(doc.viewbox, (ViewBox{0, 0, 784, 784}));
  const auto p = params(doc.root.children[0], 0);
  EXPECT_DOUBLE_EQ(p[0], 784.0 / 24 * 12);
  EXPECT_DOUBLE_EQ(p[1], 392);
}

TEST(NormalizeViewBox, IdentityAndOrigin) {
  auto same = parse_svg(R"svg(<svg viewBox="0 0 784 784"><path d="M12 13"/></svg>)svg");
  EXPECT_EQ(normalize_viewbox(same, kCfg).root, same.root);
  // non-square: the longer side maps to the canvas, origin moves to 0
  auto doc = normalize_viewbox(parse_svg(R"svg(<svg viewBox="-10 5 20 10"><path d="M-10 5 L10 15"/></svg>)svg"), kCfg);
  EXPECT_EQ(params(doc.root.children[0], 0), (std::vector<double>{0, 0}));
  EXPECT_EQ(params(doc.root.children[0], 1), (std::vector<double>{784, 392}));
}

TEST(NormalizeViewBox, Degenerate) {
  EXPECT_EQ(error_of([] { preprocess(R"svg(<svg viewBox="0 0 0 10"><path d="M0 0H5"/></svg>)svg"); }).code(),
            Errc::DegenerateViewBox);
}

TEST(Quantize, RoundsThenDifferences) {
  auto doc = quantize_and_relativize(
      parse_svg(R"svg(<svg viewBox="0 0 784 784"><path d="M100.4 200.6 L150 170"/></svg>)svg"), kCfg);
  const auto& path = *doc.root.children[0].path_data;
  EXPECT_EQ(path[0], PathCommand(PathOp::M, false, {100, 201}));
  EXPECT_EQ(path[1], PathCommand(PathOp::L, true, {50, -31}));
}

TEST(Quantize, HalfAwayFromZeroWithoutDrift) {
  // absolutes 10 -> 7.5 -> 5.5 -> 3.5 round to 10, 8, 6, 4: deltas -2 each;
  // rounding the real deltas (-2.5, -2, -2) would drift instead
  auto doc = quantize_and_relativize(
      parse_svg(R"svg(<svg viewBox="0 0 784 784"><path d="M10 10 L7.5 10 L5.5 10 L3.5 10 L-2.5 10"/></svg>)svg"), kCfg);
  const auto& path = *doc.root.children[0].path_data;
  EXPECT_EQ(path[1].params()[0], -2);
  EXPECT_EQ(path[2].params()[0], -2);
  EXPECT_EQ(path[3].params()[0], -2);
  EXPECT_EQ(path[4].params()[0], -7);  // -2.5 rounds to -3
}

TEST(Quantize, FixedPoint) {
  auto doc = parse_svg(R"svg(<svg viewBox="0 0 784 784"><path d="M 1 2 l 3 4 z"/></svg>)svg");
  EXPECT_EQ(quantize_and_relativize(doc, kCfg), doc);
}

TEST(Quantize, ClampsOverflow) {
  auto doc = quantize_and_relativize(
      parse_svg(R"svg(<svg viewBox="0 0 784 784"><path d="M700 700 L800.2 700"/></svg>)svg"), kCfg);
  EXPECT_EQ(params(doc.root.children[0], 1), (std::vector<double>{794 - 700, 0}));
}

TEST(Quantize, DropsOutsideSubpaths) {
  auto doc = quantize_and_relativize(
      parse_svg(R"svg(<svg viewBox="0 0 784 784"><path d="M10 10 L20 20 M2000 2000 L2100 2100 M30 30 L40 40"/></svg>)svg"),
      kCfg);
  const auto& path = *doc.root.children[0].path_data;
  ASSERT_EQ(path.size(), 4u);
  EXPECT_EQ(path[2], PathCommand(PathOp::M, true, {10, 10}));
}

TEST(Quantize, UnstableWhenEverythingClipped) {
  auto e = error_of([] { preprocess(R"svg(<svg viewBox="0 0 10 10"><path d="M100 100 L200 200"/></svg>)svg"); });
  EXPECT_EQ(e.code(), Errc::UnstableSample);
  EXPECT_EQ(e.stage(), "quantize");
}

TEST(Pipeline, OrderMatters) {
  const char* fixture =
      R"svg(<svg viewBox="0 0 784 784"><defs><path id="p" d="M0 0 L10 0"/></defs><use href="#p" transform="translate(100 0)"/></svg>)svg";
  auto right = preprocess(fixture);
  auto start = [](const SvgDocument& d) { return (*paths_of(d.root).at(0)->path_data)[0].params()[0]; };
  EXPECT_EQ(start(right), 100);
  // baking before expansion drops the use transform on the floor
  auto parsed = parse_svg(fixture);
  auto wrong = quantize_and_relativize(normalize_viewbox(expand_use(bake_transforms(clean_document(parsed, kCfg))), kCfg), kCfg);
  EXPECT_NE(start(wrong), start(right));
}

TEST(Pipeline, EndToEndFixture) {
  auto doc = preprocess(
      R"svg(<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 24 24"><g transform="translate(2 2)"><rect width="10" height="10" rx="0"/></g></svg>)svg");
  EXPECT_EQ(doc.viewbox, (ViewBox{0, 0, 784, 784}));
  auto paths = paths_of(doc.root);
  ASSERT_EQ(paths.size(), 1u);
  const auto& p = *paths[0]->path_data;
  // 2 * 784/24 = 65.33 -> 65; the rect spans 10 * 784/24 = 326.67
  EXPECT_EQ(p[0], PathCommand(PathOp::M, false, {65, 65}));
  EXPECT_EQ(p[1], PathCommand(PathOp::H, true, {327}));
}

TEST(Pipeline, DarkBackground) {
  PreprocessConfig cfg;
  cfg.dark_background = true;
  auto doc = preprocess(R"svg(<svg viewBox="0 0 24 24"><path fill="#ffffff" d="M1 1H5"/></svg>)svg", cfg);
  ASSERT_EQ(doc.root.children.size(), 2u);
  const auto& bg = *doc.root.children[0].path_data;
  EXPECT_EQ(bg[0], PathCommand(PathOp::M, false, {0, 0}));
  EXPECT_EQ(bg[1], PathCommand(PathOp::H, true, {784}));
  EXPECT_EQ(*doc.root.children[0].attr("fill"), "#000000");
}

TEST(Pipeline, CorpusInvariantsAndIdempotence) {
  const double hi = kCfg.canvas + kCfg.overflow_tolerance;
  for (const auto& f : testing_support::icon_corpus()) {
    SvgDocument doc = preprocess(f.text);
    EXPECT_EQ(doc.viewbox, (ViewBox{0, 0, 784, 784}));
    for (const Element* p : paths_of(doc.root)) {
      bool first = true;
      for (const auto& c : *p->path_data) {
        if (!first) {
          EXPECT_TRUE(c.relative()) << f.path;
        }
        for (double v : c.params()) {
          EXPECT_EQ(v, std::round(v)) << f.path;
          const double lo = first ? 0 : -hi;
          EXPECT_TRUE(v >= lo && v <= hi) << f.path;
        }
        first = false;
      }
    }
    EXPECT_EQ(preprocess(serialize_svg(doc)), doc) << f.path;
  }
}

TEST(Pipeline, FidelityOnTransformFixtures) {
  for (std::uint32_t i = 0; i < 20; ++i) {
    auto fx = testing_support::transform_fixture(500 + i);
    auto doc = preprocess(fx.svg);
    auto got = testing_support::reconstruct_points(*testing_support::first_path(doc.root)->path_data);
    ASSERT_EQ(got.size(), fx.expected.size());
    for (std::size_t c = 0; c < got.size(); ++c) {
      ASSERT_EQ(got[c].size(), fx.expected[c].size());
      for (std::size_t k = 0; k < got[c].size(); ++k) {
        EXPECT_LE(std::abs(got[c][k].first - fx.expected[c][k].first), 0.5);
        EXPECT_LE(std::abs(got[c][k].second - fx.expected[c][k].second), 0.5);
      }
    }
  }
}
