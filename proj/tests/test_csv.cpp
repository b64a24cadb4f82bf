#include <gtest/gtest.h>

#include "urgency/csv.hpp"
#include "urgency/error.hpp"

namespace csv = urgency::csv;

TEST(Csv, QuotedFieldsWithCommasNewlinesAndEscapes) {
  const auto t = csv::parse("a,b,c\n1,\"x, y\",\"say \"\"hi\"\"\"\n2,\"multi\nline\",z\n");
  ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "x, y");
  EXPECT_EQ(t.rows[0][2], "say \"hi\"");
  EXPECT_EQ(t.rows[1][1], "multi\nline");
  EXPECT_EQ(t.row_lines[0], 2u);
  EXPECT_EQ(t.row_lines[1], 3u);
}

TEST(Csv, CrlfAndBom) {
  const auto t = csv::parse("\xEF\xBB\xBFid,text\r\n1,hello\r\n2,world\r\n");
  EXPECT_EQ(t.header[0], "id");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], "world");
  EXPECT_EQ(t.column("text"), 1u);
  EXPECT_FALSE(t.column("missing").has_value());
}

TEST(Csv, FieldCountMismatchNamesLine) {
  try {
    csv::parse("a,b\n1,2\n3\n");
    FAIL() << "expected a DataError";
  } catch (const urgency::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Csv, UnterminatedQuoteIsAnError) {
  EXPECT_THROW(csv::parse("a,b\n1,\"open\n"), urgency::DataError);
}

TEST(Csv, FormatRowRoundTrips) {
  const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "two\nlines", ""};
  const auto t = csv::parse(csv::format_row({"a", "b", "c", "d", "e"}) + csv::format_row(fields));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], fields);
}
