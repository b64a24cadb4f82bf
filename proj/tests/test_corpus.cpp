#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"
#include "urgency/corpus.hpp"
#include "urgency/error.hpp"
#include "urgency/preprocess.hpp"

using namespace urgency;
using urgency::testing::TempDir;
using urgency::testing::write_text;

TEST(UrgencyLabel, ParsesWholeAndHalfSteps) {
  EXPECT_EQ(UrgencyLabel::parse("5")->value(), 5.0);
  EXPECT_EQ(UrgencyLabel::parse("4.5")->value(), 4.5);
  EXPECT_EQ(UrgencyLabel::parse("3.0")->value(), 3.0);
  EXPECT_TRUE(UrgencyLabel::parse("4.5")->half_steps() == 9);
  EXPECT_FALSE(UrgencyLabel::parse("4.5")->is_whole());
}

TEST(UrgencyLabel, RejectsOutOfRangeAndOffGrid) {
  EXPECT_FALSE(UrgencyLabel::parse("8").has_value());
  EXPECT_FALSE(UrgencyLabel::parse("0.5").has_value());
  EXPECT_FALSE(UrgencyLabel::parse("4.25").has_value());
  EXPECT_FALSE(UrgencyLabel::parse("abc").has_value());
  EXPECT_FALSE(UrgencyLabel::parse("").has_value());
  EXPECT_THROW(UrgencyLabel::from_value(7.5), DataError);
}

TEST(UrgencyLabel, OrderingIsNumeric) {
  EXPECT_LT(UrgencyLabel::from_value(4.0), UrgencyLabel::from_value(4.5));
  EXPECT_EQ(UrgencyLabel::from_value(2.0).to_string(), "2");
  EXPECT_EQ(UrgencyLabel::from_value(2.5).to_string(), "2.5");
}

TEST(LoadCorpus, UpennDefaults) {
  TempDir dir;
  write_text(dir / "c.csv",
             "post_id,student_id,timestamp,text,label\n"
             "p1,s1,2020-01-01,When is the quiz due?,5\n"
             "p2,s2,,\"Thanks, great lecture\",1\n");
  const auto posts = load_corpus(dir / "c.csv", CorpusFormat::kUpenn);
  ASSERT_EQ(posts.size(), 2u);
  EXPECT_EQ(posts[0].post.post_id, "p1");
  EXPECT_EQ(posts[0].label.value(), 5.0);
  EXPECT_EQ(posts[1].post.text, "Thanks, great lecture");
  EXPECT_EQ(posts[1].post.timestamp, "");
}

TEST(LoadCorpus, StanfordHalfStepLabelsAndColumnMap) {
  TempDir dir;
  write_text(dir / "s.csv",
             "forum_post_id,forum_uid,created_at,Text,Urgency(1-7)\n"
             "10,u1,t,I cannot submit my assignment,4.5\n");
  const auto posts = load_corpus(dir / "s.csv", CorpusFormat::kStanford);
  ASSERT_EQ(posts.size(), 1u);
  EXPECT_EQ(posts[0].label.value(), 4.5);
  EXPECT_EQ(posts[0].post.student_id, "u1");

  write_text(dir / "r.csv", "Body,Score\nhello there,3\n");
  const auto renamed = load_corpus(dir / "r.csv", CorpusFormat::kStanford,
                                   {{"text", "Body"}, {"label", "Score"}});
  ASSERT_EQ(renamed.size(), 1u);
  EXPECT_EQ(renamed[0].post.text, "hello there");
}

TEST(LoadCorpus, SynthesizesMissingIds) {
  TempDir dir;
  write_text(dir / "c.csv", "text,label\nfirst post,2\nsecond post,3\n");
  const auto posts = load_corpus(dir / "c.csv", CorpusFormat::kUpenn);
  ASSERT_EQ(posts.size(), 2u);
  EXPECT_EQ(posts[0].post.post_id, "0");
  EXPECT_EQ(posts[1].post.post_id, "1");
  EXPECT_EQ(posts[1].post.student_id, "1");
}

TEST(LoadCorpus, BadLabelsListRows) {
  TempDir dir;
  write_text(dir / "c.csv", "text,label\nok,2\nbad one,8\nbad two,2.25\n");
  try {
    load_corpus(dir / "c.csv", CorpusFormat::kUpenn);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
  }
}

TEST(LoadCorpus, UnmappedRequiredColumnIsConfigError) {
  TempDir dir;
  write_text(dir / "c.csv", "body,label\nx,2\n");
  EXPECT_THROW(load_corpus(dir / "c.csv", CorpusFormat::kUpenn), ConfigError);
}

TEST(LoadCorpus, DuplicatePostIdIsDataError) {
  TempDir dir;
  write_text(dir / "c.csv", "post_id,text,label\na,x,2\na,y,3\n");
  EXPECT_THROW(load_corpus(dir / "c.csv", CorpusFormat::kUpenn), DataError);
}

TEST(LoadCorpus, EmptyFileIsDataError) {
  TempDir dir;
  write_text(dir / "c.csv", "");
  EXPECT_THROW(load_corpus(dir / "c.csv", CorpusFormat::kUpenn), Error);
  write_text(dir / "h.csv", "post_id,student_id,timestamp,text,label\n");
  EXPECT_THROW(load_corpus(dir / "h.csv", CorpusFormat::kUpenn), DataError);
}

TEST(LoadCorpus, UnlabeledInputMayBeEmpty) {
  TempDir dir;
  write_text(dir / "c.csv", "post_id,text\n");
  EXPECT_TRUE(load_unlabeled(dir / "c.csv", CorpusFormat::kUpenn).empty());
}

TEST(FilterPosts, DocumentedExamples) {
  EXPECT_EQ(classify_post("\xE2\x88\x91\xE2\x88\xAB\xE2\x89\x88 \xC3\x97\xC3\xB7"),
            DropReason::kSymbolsOnly);
  EXPECT_EQ(classify_post("http://a.example http://b.example"), DropReason::kLinksOnly);
  EXPECT_EQ(classify_post("When is the quiz due?"), std::nullopt);
  EXPECT_EQ(classify_post("3x + 2 = 11"), DropReason::kMathOnly);
  EXPECT_EQ(classify_post("\xD0\x9F\xD1\x80\xD0\xB8\xD0\xB2\xD0\xB5\xD1\x82 \xD0\xBC\xD0\xB8\xD1\x80"),
            DropReason::kNonEnglish);
  EXPECT_EQ(classify_post("www.example.org"), DropReason::kLinksOnly);
}

TEST(FilterPosts, PartitionAndIdempotence) {
  std::vector<RawPost> posts;
  const std::vector<std::string> texts = {"Hello there", "http://x.example", "!!! ???", "2 + 2",
                                          "caf\xC3\xA9 ol\xC3\xA9", "Real question about week 3",
                                          "\xE4\xBD\xA0\xE5\xA5\xBD"};
  for (std::size_t i = 0; i < texts.size(); ++i) {
    posts.push_back({std::to_string(i), "s", "", texts[i]});
  }
  const auto result = filter_posts(posts);
  EXPECT_EQ(result.kept.size() + result.dropped.size(), posts.size());
  std::multiset<std::string> ids;
  for (const auto& p : result.kept) ids.insert(p.post_id);
  for (const auto& [p, reason] : result.dropped) ids.insert(p.post_id);
  EXPECT_EQ(ids.size(), posts.size());
  EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), posts.size());

  const auto again = filter_posts(result.kept);
  EXPECT_TRUE(again.dropped.empty());
  EXPECT_EQ(again.kept.size(), result.kept.size());
}

TEST(ComputeStats, SinglePost) {
  const std::vector<LabeledPost> posts = {{{"1", "s", "", "x"}, UrgencyLabel::from_value(3)}};
  const std::vector<std::size_t> counts = {4};
  const auto stats = compute_stats(posts, counts);
  EXPECT_EQ(stats.n_posts, 1u);
  EXPECT_EQ(stats.label_histogram.at(UrgencyLabel::from_value(3)), 1u);
  EXPECT_EQ(stats.word_count_mean, 4.0);
  EXPECT_EQ(stats.word_count_min, 4u);
  EXPECT_EQ(stats.word_count_max, 4u);
  EXPECT_EQ(stats.word_count_stdev, 0.0);
}

TEST(ComputeStats, EmptyCorpusIsError) {
  EXPECT_THROW(compute_stats({}, {}), DataError);
}

TEST(ComputeStats, HistogramSumsAndBounds) {
  const auto posts = urgency::testing::synthetic_corpus(300, 40, 9);
  std::vector<std::size_t> counts;
  for (const auto& d : preprocess_corpus(posts)) counts.push_back(d.tokens.size());
  const auto stats = compute_stats(posts, counts);
  std::size_t total = 0;
  for (const auto& [label, c] : stats.label_histogram) total += c;
  EXPECT_EQ(total, stats.n_posts);
  EXPECT_LE(static_cast<double>(stats.word_count_min), stats.word_count_mean);
  EXPECT_LE(stats.word_count_mean, static_cast<double>(stats.word_count_max));
}

TEST(ComputeStats, CsvRoundTripPreservesStats) {
  TempDir dir;
  auto posts = urgency::testing::synthetic_corpus(120, 20, 4);
  posts[3].post.text = "Quoted, \"text\"\nwith a newline";
  write_text(dir / "c.csv", corpus_to_csv(posts));
  const auto reloaded = load_corpus(dir / "c.csv", CorpusFormat::kUpenn);
  auto stats_of = [](const std::vector<LabeledPost>& p) {
    std::vector<std::size_t> counts;
    for (const auto& d : preprocess_corpus(p)) counts.push_back(d.tokens.size());
    return compute_stats(p, counts);
  };
  const auto a = stats_of(posts);
  const auto b = stats_of(reloaded);
  EXPECT_EQ(a.n_posts, b.n_posts);
  EXPECT_EQ(a.n_students, b.n_students);
  EXPECT_EQ(a.label_histogram, b.label_histogram);
  EXPECT_EQ(a.word_count_mean, b.word_count_mean);
  EXPECT_EQ(a.word_count_stdev, b.word_count_stdev);
  EXPECT_EQ(a.word_count_max, b.word_count_max);
}
