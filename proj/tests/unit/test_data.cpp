#include <doctest.h>

#include "dosetrend/data.hpp"
#include "dosetrend/error.hpp"
#include "fixtures.hpp"

using namespace dosetrend;
using fixtures::code_of;

TEST_CASE("reaction fixture validates into four ordered groups") {
  const auto table = fixtures::reaction();
  const auto design = validate(table);
  REQUIRE(design.group_count() == 4);
  CHECK(design.k() == 3);
  CHECK(design.doses() == std::vector<double>{0, 1, 2, 3});
  CHECK(design.sizes() == std::vector<double>{10, 10, 10, 10});
  const auto s = group_summaries(design, table);
  CHECK(s[0].mean == doctest::Approx(2.5));
  CHECK(s[1].mean == doctest::Approx(4.78));
  CHECK(s[2].mean == doctest::Approx(5.82));
  CHECK(s[3].mean == doctest::Approx(7.48));
}

TEST_CASE("groups are ordered by dose, not by appearance") {
  const auto design = validate(fixtures::from_text("dose,response\n10,1\n10,2\n0,3\n0,4\n2.5,1\n2.5,2\n"));
  CHECK(design.doses() == std::vector<double>{0, 2.5, 10});
  CHECK(design.groups[0].label == "0");
}

TEST_CASE("binomial counts aggregate per group") {
  const auto table = fixtures::case_control();
  const auto design = validate(table);
  CHECK(design.sizes() == std::vector<double>{337, 167, 186, 212});
  const auto s = group_summaries(design, table);
  CHECK(s[3].successes == 122);
  CHECK(s[3].mean == doctest::Approx(122.0 / 212.0));
}

TEST_CASE("trials column and Bernoulli long format") {
  ColumnSchema trials;
  trials.endpoint = EndpointKind::binomial;
  trials.successes = "tumors";
  trials.trials = "n";
  const auto etu = validate(fixtures::load("etu.csv", trials));
  CHECK(etu.sizes() == std::vector<double>{72, 75, 73, 73, 69, 70});

  ColumnSchema bern;
  bern.endpoint = EndpointKind::binomial;
  const auto t = fixtures::from_text("dose,response\n0,1\n0,0\n1,1\n1,1\n", bern);
  const auto s = group_summaries(validate(t), t);
  CHECK(s[0].successes == 1);
  CHECK(s[1].successes == 2);
  CHECK(code_of([&] { fixtures::from_text("dose,response\n0,2\n", bern); }) == ErrorCode::NonNumericValue);
}

TEST_CASE("explicit group column and dose consistency") {
  ColumnSchema schema;
  schema.group = "grp";
  const auto ok = validate(fixtures::from_text("grp,dose,response\nA,0,1\nB,5,2\nA,0,3\nB,5,1\n", schema));
  CHECK(ok.groups[1].label == "B");
  CHECK(code_of([&] { validate(fixtures::from_text("grp,dose,response\nA,0,1\nA,1,2\nB,5,1\n", schema)); }) ==
        ErrorCode::InconsistentDoseWithinGroup);
  CHECK(code_of([&] { validate(fixtures::from_text("grp,dose,response\nA,0,1\nB,0,2\n", schema)); }) ==
        ErrorCode::DuplicateDose);
}

TEST_CASE("input errors carry specific codes") {
  CHECK(code_of([] { fixtures::from_text("dose,value\n0,1\n"); }) == ErrorCode::MissingColumn);
  CHECK(code_of([] { fixtures::from_text("dose,response\n0,abc\n"); }) == ErrorCode::NonNumericValue);
  CHECK(code_of([] { fixtures::from_text("dose,response\n0,1,2\n"); }) == ErrorCode::MalformedInput);
  CHECK(code_of([] { fixtures::from_text(""); }) == ErrorCode::MalformedInput);
  CHECK(code_of([] { validate(fixtures::from_text("dose,response\n0,1\n0,2\n")); }) == ErrorCode::SingleGroup);
  CHECK(code_of([] {
          fixtures::from_text("dose,cases,controls\n0,-1,4\n", fixtures::case_control_schema());
        }) == ErrorCode::NegativeCount);
  CHECK(code_of([] {
          validate(fixtures::from_text("dose,cases,controls\n0,0,0\n1,2,3\n", fixtures::case_control_schema()));
        }) == ErrorCode::EmptyGroup);
}

TEST_CASE("quoted fields and row numbers in messages") {
  const auto t = fixtures::from_text("dose,response\n\"0\",\"1.5\"\n1,2\n");
  CHECK(t.rows[0].response == 1.5);
  try {
    fixtures::from_text("dose,response\n0,1\n1,x\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("design round-trips through its text form") {
  const auto design = validate(fixtures::daphnia());
  CHECK(parse_design(serialize_design(design)) == design);
  const auto binom = validate(fixtures::case_control());
  CHECK(parse_design(serialize_design(binom)) == binom);
}
