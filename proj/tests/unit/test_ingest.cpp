#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "skeldiff/ingest.hpp"
#include "skeldiff/metrics.hpp"
#include "skeldiff/text.hpp"

using namespace skeldiff;

namespace {

std::string pose_line(const std::string& video, int frame, int track, std::size_t k,
                      double base = 0.0) {
  std::string line = video + "\t" + std::to_string(frame) + "\t" + std::to_string(track) + "\t";
  for (std::size_t j = 0; j < k; ++j) {
    if (j) line += ";";
    line += text::format_double(base + j) + "," + text::format_double(base + 2.0 * j) + ",0.5";
  }
  return line + "\n";
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l + "\n");
  return out;
}

}  // namespace

TEST_CASE("parse_tracklets: one line gives one tracklet of length one") {
  std::istringstream in(pose_line("v1", 0, 3, 17));
  const auto tracks = parse_tracklets(in, 17);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].size() == 1);
  CHECK(tracks[0].video_id() == "v1");
  CHECK(tracks[0].track_id() == 3);
  CHECK(tracks[0].detections()[0].keypoints()[4].y() == 8.0);
}

TEST_CASE("parse_tracklets: detections are re-sorted by frame") {
  std::istringstream in(pose_line("v1", 5, 1, 17) + pose_line("v1", 3, 1, 17));
  const auto tracks = parse_tracklets(in, 17);
  REQUIRE(tracks.size() == 1);
  REQUIRE(tracks[0].size() == 2);
  CHECK(tracks[0].detections()[0].frame_index() == 3);
  CHECK(tracks[0].detections()[1].frame_index() == 5);
}

TEST_CASE("parse_tracklets: keypoint count mismatch names the line") {
  std::istringstream in(pose_line("v1", 0, 1, 17) + pose_line("v1", 1, 1, 16));
  try {
    parse_tracklets(in, 17);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("keypoints") != std::string::npos);
  }
}

TEST_CASE("parse_tracklets: error paths") {
  SUBCASE("duplicate detection") {
    std::istringstream in(pose_line("v1", 0, 1, 2) + pose_line("v1", 0, 1, 2));
    CHECK_THROWS_AS(parse_tracklets(in, 2), ParseError);
  }
  SUBCASE("non-finite coordinate") {
    std::istringstream in("v1\t0\t1\tinf,0,0.5;1,1,0.5\n");
    CHECK_THROWS_AS(parse_tracklets(in, 2), ParseError);
  }
  SUBCASE("nan coordinate") {
    std::istringstream in("v1\t0\t1\tnan,0,0.5;1,1,0.5\n");
    CHECK_THROWS_AS(parse_tracklets(in, 2), ParseError);
  }
  SUBCASE("malformed line") {
    std::istringstream in("# comment\n\nv1\t0\t1\n");
    try {
      parse_tracklets(in, 2);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("confidence out of range") {
    std::istringstream in("v1\t0\t1\t0,0,1.5;1,1,0.5\n");
    CHECK_THROWS_AS(parse_tracklets(in, 2), ParseError);
  }
}

TEST_CASE("parse_tracklets is order-insensitive and round-trips") {
  std::mt19937_64 rng(5);
  std::string file;
  for (int v = 0; v < 3; ++v) {
    for (int t = 0; t < 4; ++t) {
      for (int f = 0; f < 10; ++f) {
        file += pose_line("vid" + std::to_string(v), f * 2 + t, t, 5,
                          std::uniform_real_distribution<double>(-50, 900)(rng));
      }
    }
  }
  auto lines = lines_of(file);
  std::istringstream a(file);
  const auto original = parse_tracklets(a, 5);
  std::shuffle(lines.begin(), lines.end(), rng);
  std::string shuffled;
  for (const auto& l : lines) shuffled += l;
  std::istringstream b(shuffled);
  CHECK(parse_tracklets(b, 5) == original);

  std::ostringstream out;
  write_tracklets(out, original);
  std::istringstream c(out.str());
  CHECK(parse_tracklets(c, 5) == original);
}

TEST_CASE("parse_labels") {
  SUBCASE("single normal label") {
    std::istringstream in("v1,0,0\n");
    const auto labels = parse_labels(in);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0] == FrameLabel{"v1", 0, Label::Normal});
  }
  SUBCASE("duplicate row") {
    std::istringstream in("v1,0,0\nv1,0,1\n");
    CHECK_THROWS_AS(parse_labels(in), ParseError);
  }
  SUBCASE("label outside {0,1}") {
    std::istringstream in("v1,0,2\n");
    CHECK_THROWS_AS(parse_labels(in), ParseError);
  }
  SUBCASE("anomalous count matches an independent scan of the fixture") {
    const std::string fixture =
        "video_id,frame_index,label\n"
        "a,0,0\na,1,1\na,2,0\na,3,1\nb,0,0\nb,1,0\nb,2,0\nb,3,1\nb,4,0\nb,5,0\n";
    std::size_t expected = 0;
    for (const auto& l : lines_of(fixture)) expected += l.ends_with(",1\n") ? 1 : 0;
    std::istringstream in(fixture);
    const auto labels = parse_labels(in);
    CHECK(labels.size() == 10);
    CHECK(std::count_if(labels.begin(), labels.end(), [](const FrameLabel& l) {
            return l.label == Label::Anomalous;
          }) == static_cast<long>(expected));
    CHECK(expected == 3);
    std::ostringstream out;
    write_labels(out, labels);
    std::istringstream again(out.str());
    CHECK(parse_labels(again) == labels);
  }
}

TEST_CASE("parse_embeddings") {
  SUBCASE("minimal") {
    std::istringstream in("dim=4 mu=0,0,0,0\ntrain\t1,0,0,0\n");
    const auto set = parse_embeddings(in);
    CHECK(set.records.size() == 1);
    CHECK(set.dimension() == 4);
    CHECK(set.records[0].split == Split::Train);
  }
  SUBCASE("dimension mismatch") {
    std::istringstream in("dim=4 mu=0,0,0,0\ntrain\t1,0,0\n");
    CHECK_THROWS_AS(parse_embeddings(in), ParseError);
  }
  SUBCASE("missing prior") {
    std::istringstream in("train\t1,0,0\n");
    CHECK_THROWS_AS(parse_embeddings(in), ParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(parse_embeddings(empty), ParseError);
  }
  SUBCASE("100-row generated fixture") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 3.0);
    EmbeddingSet set;
    set.prior.mu_normal = {0.5, -1.0, 2.0};
    std::size_t counts[3] = {0, 0, 0};
    for (int i = 0; i < 100; ++i) {
      EmbeddingRecord r;
      r.split = static_cast<Split>(rng() % 3);
      ++counts[static_cast<int>(r.split)];
      r.vector = {n(rng), n(rng), n(rng)};
      if (i % 7 == 0) r.source_window = "w" + std::to_string(i);
      set.records.push_back(r);
    }
    std::stringstream ss;
    write_embeddings(ss, set);
    const auto back = parse_embeddings(ss);
    CHECK(back.records.size() == 100);
    for (int s = 0; s < 3; ++s) {
      CHECK(std::count_if(back.records.begin(), back.records.end(), [&](const auto& r) {
              return static_cast<int>(r.split) == s;
            }) == static_cast<long>(counts[s]));
    }
    CHECK(back.records == set.records);
    CHECK(back.prior == set.prior);
  }
}

TEST_CASE("parse_scores polarity") {
  const std::vector<FrameLabel> labels{{"v", 0, Label::Normal}, {"v", 1, Label::Anomalous}};
  const LabelIndex index(labels);
  SUBCASE("normality scores are negated") {
    std::istringstream in("v,0,0.9\n");
    const auto s = parse_scores(in, ScorePolarity::NormalityScore, index);
    REQUIRE(s.size() == 1);
    CHECK(s[0].score == -0.9);
  }
  SUBCASE("anomaly scores are kept") {
    std::istringstream in("v,1,0.9\n");
    const auto s = parse_scores(in, ScorePolarity::AnomalyScore, index);
    CHECK(s[0].score == 0.9);
    CHECK(s[0].label == Label::Anomalous);
  }
  SUBCASE("unlabeled frame and non-finite score") {
    std::istringstream a("v,2,0.9\n");
    CHECK_THROWS_AS(parse_scores(a, ScorePolarity::AnomalyScore, index), ParseError);
    std::istringstream b("v,0,nan\n");
    CHECK_THROWS_AS(parse_scores(b, ScorePolarity::AnomalyScore, index), ParseError);
    std::istringstream c("v,0,1\nv,0,2\n");
    CHECK_THROWS_AS(parse_scores(c, ScorePolarity::AnomalyScore, index), ParseError);
  }
}

TEST_CASE("AUC from normality scores equals AUC from negated anomaly scores") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<FrameLabel> labels;
  std::string normality, anomaly;
  for (int f = 0; f < 300; ++f) {
    const bool anomalous = f % 3 == 0;
    labels.push_back({"v", f, anomalous ? Label::Anomalous : Label::Normal});
    const double a = n(rng) + (anomalous ? 0.8 : 0.0);
    anomaly += "v," + std::to_string(f) + "," + text::format_double(a) + "\n";
    normality += "v," + std::to_string(f) + "," + text::format_double(-a) + "\n";
  }
  const LabelIndex index(labels);
  std::istringstream an(anomaly), no(normality);
  const auto from_anomaly = parse_scores(an, ScorePolarity::AnomalyScore, index);
  const auto from_normality = parse_scores(no, ScorePolarity::NormalityScore, index);
  CHECK(auc_roc(from_anomaly) == auc_roc(from_normality));
  CHECK(oracle::pairwise_auc(from_normality) == doctest::Approx(auc_roc(from_anomaly)).epsilon(1e-12));

  std::ostringstream out;
  write_scores(out, from_anomaly);
  std::istringstream again(out.str());
  CHECK(parse_scores(again, ScorePolarity::AnomalyScore, index) == from_anomaly);
}

TEST_CASE("manifest parsing") {
  std::istringstream in(R"({"a": {"split": "train", "width": 856, "height": 480},
                            "b": {"split": "val", "width": 1920, "height": 1080}})");
  const auto m = parse_manifest(in);
  CHECK(m.at("a").split == VideoSplit::Train);
  CHECK(m.at("b").width == 1920.0);
  std::istringstream again(manifest_to_json(m));
  CHECK(parse_manifest(again) == m);

  std::istringstream bad(R"({"a": {"split": "test", "width": 1, "height": 1}})");
  CHECK_THROWS_AS(parse_manifest(bad), ParseError);
  std::istringstream missing(R"({"a": {"split": "val", "width": 1}})");
  CHECK_THROWS_AS(parse_manifest(missing), ParseError);
  std::istringstream notjson("{");
  CHECK_THROWS_AS(parse_manifest(notjson), ParseError);
}

TEST_CASE("validate_bundle") {
  std::mt19937_64 rng(3);
  SUBCASE("anomalous label inside a training video is fatal") {
    DatasetBundle b;
    b.videos["t"] = {VideoSplit::Train, 100, 100};
    b.labels.push_back({"t", 4, Label::Anomalous});
    CHECK_THROWS_AS(validate_bundle(b), ValidationError);
    CHECK_FALSE(inspect_bundle(b).ok());
  }
  SUBCASE("empty bundle is valid and empty") {
    const auto r = validate_bundle(DatasetBundle{});
    CHECK(r.ok());
    CHECK(r.videos.empty());
    CHECK(r.eligible_frames_train == 0);
    CHECK(r.eligible_frames_val == 0);
  }
  SUBCASE("two-video fixture") {
    DatasetBundle b;
    b.config.frames = 4;
    b.config.keypoints = 17;
    b.videos["train0"] = {VideoSplit::Train, 640, 480};
    b.videos["val0"] = {VideoSplit::Validation, 640, 480};
    // train0: track 0 frames 0..9 (eligible), track 1 frames 20..22 (too short)
    b.tracklets.push_back(oracle::random_tracklet(rng, "train0", 0, oracle::frame_range(0, 10), 17));
    b.tracklets.push_back(oracle::random_tracklet(rng, "train0", 1, oracle::frame_range(20, 3), 17));
    // val0: frames 0..5 and 7..12 on one track; labels for 0..9 only
    auto frames = oracle::frame_range(0, 6);
    for (auto f : oracle::frame_range(7, 6)) frames.push_back(f);
    b.tracklets.push_back(oracle::random_tracklet(rng, "val0", 5, frames, 17));
    for (FrameIndex f = 0; f < 10; ++f) {
      b.labels.push_back({"val0", f, f == 3 ? Label::Anomalous : Label::Normal});
    }
    const auto r = validate_bundle(b);
    REQUIRE(r.videos.size() == 2);
    const auto& t = r.videos[0];
    CHECK(t.video_id == "train0");
    CHECK(t.detections == 13);
    CHECK(t.tracks == 2);
    CHECK(t.first_frame == 0);
    CHECK(t.last_frame == 22);
    CHECK(t.window_eligible_frames == 10);
    const auto& v = r.videos[1];
    CHECK(v.detections == 12);
    CHECK(v.labeled_frames == 10);
    CHECK(v.anomalous_frames == 1);
    CHECK(v.window_eligible_frames == 12);
    CHECK(v.unlabeled_frames == 3);  // frames 10, 11, 12
    CHECK(r.eligible_frames_train == 10);
    CHECK(r.eligible_frames_val == 12);
    CHECK(r.label_gaps == 3);
    CHECK_FALSE(r.warnings.empty());
  }
  SUBCASE("tracklet video missing from manifest") {
    DatasetBundle b;
    b.tracklets.push_back(oracle::random_tracklet(rng, "ghost", 0, {0}, 17));
    CHECK_THROWS_AS(validate_bundle(b), ValidationError);
  }
}
