#include <doctest.h>

#include <string>
#include <vector>

#include "celltrack/evaluation.hpp"

using namespace celltrack;

namespace {

Correspondence corr_of(int frame_t, const std::vector<std::pair<int, int>>& daughter_father,
                       const std::vector<int>& unmatched = {}) {
  Correspondence c;
  c.frame_t = frame_t;
  for (const auto& [d, f] : daughter_father)
    c.pairs.push_back({d, f, 0.8, MatchKind::proliferation});
  c.unmatched_daughters = unmatched;
  return c;
}

}  // namespace

TEST_CASE("metric arithmetic is exact before rounding and tidy after") {
  const EvalReport r = report_from_counts(911, 21, 21, 932);
  CHECK(r.tp == 911);
  CHECK(r.fat == 21);
  CHECK(r.tdf == 21);
  CHECK(r.gt == 932);
  CHECK(r.tdr == 911.0 / 932.0);  // bit-exact, no tolerance
  CHECK(r.acc == 911.0 / 932.0);
  CHECK(r.er == 42.0 / 932.0);

  const std::string text = report_text(r);
  CHECK(text.find("tdr = 97.7%") != std::string::npos);
  CHECK(text.find("er = 4.5%") != std::string::npos);
  CHECK(text.find("acc = 97.7%") != std::string::npos);
  CHECK(text.find("tp = 911") != std::string::npos);
  CHECK(text.find("gt = 932") != std::string::npos);

  CHECK_THROWS_AS(report_from_counts(1, 0, 0, 0), std::runtime_error);
  CHECK_THROWS_AS(report_from_counts(1, 0, 0, -5), std::runtime_error);
}

TEST_CASE("tracks grow through single daughters and restart at divisions") {
  // Frame 0 holds cells 1 and 2. Cell 1 divides into 3 and 4; cell 2 carries
  // on; cell 9 appears from nowhere. Next, 3 grows into 5, 2 into 8, and a
  // father (42) shows up that was never active before.
  const std::vector<Correspondence> pairs = {
      corr_of(0, {{3, 1}, {4, 1}, {2, 2}}, {9}),
      corr_of(1, {{5, 3}, {8, 2}, {6, 42}}),
  };
  const std::vector<TrackPath> tracks = tracks_from_pairs(pairs, {1, 2});

  REQUIRE(tracks.size() == 6);
  CHECK(tracks[0] == TrackPath{{0, 1}});                  // ended by its division
  CHECK(tracks[1] == TrackPath{{0, 2}, {1, 2}, {2, 8}});  // uninterrupted chain
  CHECK(tracks[2] == TrackPath{{1, 3}, {2, 5}});          // daughter track
  CHECK(tracks[3] == TrackPath{{1, 4}});                  // daughter with no future
  CHECK(tracks[4] == TrackPath{{1, 9}});                  // orphan start
  CHECK(tracks[5] == TrackPath{{1, 42}, {2, 6}});         // father seeded on first use

  SUBCASE("no pairs means one stub track per seed") {
    const std::vector<TrackPath> stubs = tracks_from_pairs({}, {7, 3});
    REQUIRE(stubs.size() == 2);
    CHECK(stubs[0] == TrackPath{{0, 3}});  // seeds are sorted
    CHECK(stubs[1] == TrackPath{{0, 7}});
  }
}

TEST_CASE("frame-pair detection counts only exact pair-set equality") {
  const std::vector<Correspondence> truth = {
      corr_of(0, {{1, 1}, {2, 1}}),
      corr_of(1, {{1, 1}, {2, 2}}),
  };
  // First pair matches despite different order/scores; the second assigns one
  // daughter to the wrong father.
  std::vector<Correspondence> predicted = {
      corr_of(0, {{2, 1}, {1, 1}}),
      corr_of(1, {{1, 1}, {2, 1}}),
  };
  predicted[0].pairs[0].score = 0.123;  // scores are irrelevant to equality
  predicted[0].pairs[1].kind = MatchKind::division;

  const EvalReport r = frame_tdr(predicted, truth);
  CHECK(r.tp == 1);
  CHECK(r.gt == 2);
  CHECK(r.tdr == 0.5);
  CHECK(r.er == 0.0);  // not this metric's business
  CHECK(r.acc == 0.0);
  REQUIRE(r.histogram.size() == 2);
  CHECK(r.histogram[0] == std::pair<int, int>{0, 0});
  CHECK(r.histogram[1] == std::pair<int, int>{1, 2});  // one wrong + one missing

  SUBCASE("misaligned inputs are rejected") {
    std::vector<Correspondence> shifted = predicted;
    shifted[1].frame_t = 7;
    CHECK_THROWS_AS(frame_tdr(shifted, truth), std::runtime_error);
    shifted.pop_back();
    CHECK_THROWS_AS(frame_tdr(shifted, truth), std::runtime_error);
    CHECK_THROWS_AS(frame_tdr({}, {}), std::runtime_error);
  }
}

TEST_CASE("track errors are counted on window-truncated exact tracks") {
  const TrackPath a = {{0, 1}, {1, 1}, {2, 1}};
  const TrackPath b = {{0, 2}, {1, 2}, {2, 2}};
  const std::vector<TrackPath> truth = {a, b};
  // The prediction breaks track b after frame 1.
  const std::vector<TrackPath> predicted = {a, {{0, 2}, {1, 2}}, {{2, 2}}};

  SUBCASE("a split inside the window costs two false and one missing") {
    const EvalReport r = track_er(predicted, truth, {0, 2});
    CHECK(r.fat == 2);
    CHECK(r.tdf == 1);
    CHECK(r.gt == 2);
    CHECK(r.tp == 1);
    CHECK(r.er == doctest::Approx(1.5));
  }
  SUBCASE("a window before the break sees no error") {
    const EvalReport r = track_er(predicted, truth, {0, 1});
    CHECK(r.fat == 0);
    CHECK(r.tdf == 0);
    CHECK(r.er == 0.0);
ockCHECK(r.gt == 2);
  }
  SUBCASE("swapping prediction and truth swaps the error kinds") {
    const EvalReport fwd = track_er(predicted, truth, {0, 2});
    const EvalReport rev = track_er(truth, predicted, {0, 2});
    CHECK(fwd.fat == rev.tdf);
    CHECK(fwd.tdf == rev.fat);
  }
  SUBCASE("degenerate windows are rejected") {
    CHECK_THROWS_AS(track_er(predicted, truth, {2, 0}), std::runtime_error);
    CHECK_THROWS_AS(track_er(predicted, truth, {5, 9}), std::runtime_error);
  }
}

TEST_CASE("match accuracy counts shared pairs against the truth size") {
  const Correspondence truth = corr_of(3, {{1, 1}, {2, 1}, {3, 2}});

  SUBCASE("a perfect prediction scores one") {
    const EvalReport r = match_accuracy(truth, truth);
    CHECK(r.tp == 3);
    CHECK(r.gt == 3);
    CHECK(r.acc == 1.0);
  }
  SUBCASE("a missing pair lowers accuracy") {
    const Correspondence pred = corr_of(3, {{1, 1}, {3, 2}});
    const EvalReport r = match_accuracy(pred, truth);
    CHECK(r.tp == 2);
    CHECK(r.acc == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("an extra predicted pair does not inflate or deflate accuracy") {
    Correspondence pred = truth;
    pred.pairs.push_back({9, 2, 0.6, MatchKind::proliferation});
    const EvalReport r = match_accuracy(pred, truth);
    CHECK(r.tp == 3);
    CHECK(r.acc == 1.0);
  }
  SUBCASE("empty truth is rejected") {
    CHECK_THROWS_AS(match_accuracy(truth, corr_of(3, {})), std::runtime_error);
  }
}

TEST_CASE("the error histogram walks symmetric differences per frame pair") {
  const std::vector<Correspondence> truth = {
      corr_of(0, {{1, 1}}),
      corr_of(1, {{1, 1}, {2, 2}}),
      corr_of(2, {{1, 1}}),
  };
  std::vector<Correspondence> predicted = truth;
  predicted[1] = corr_of(1, {{1, 2}, {2, 2}});  // one pair rewired

  const auto hist = error_histogram(predicted, truth);
  REQUIRE(hist.size() == 3);
  CHECK(hist[0] == std::pair<int, int>{0, 0});
  CHECK(hist[1] == std::pair<int, int>{1, 2});
  CHECK(hist[2] == std::pair<int, int>{2, 0});

  CHECK(histogram_csv(hist) == "frame_t,errors\n0,0\n1,2\n2,0\n");
  CHECK_THROWS_AS(error_histogram(predicted, std::vector<Correspondence>{truth[0]}),
                  std::runtime_error);
}
