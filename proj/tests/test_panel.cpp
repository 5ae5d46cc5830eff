#include <doctest.h>

#include <cmath>

#include "sfa/panel.hpp"
#include "sfa/simulate.hpp"
#include "sfa/translog.hpp"

using namespace sfa;

namespace {

VariableSchema tiny_schema() {
  VariableSchema schema;
  schema.firm_id = "firm";
  schema.year = "year";
  schema.output = "output";
  schema.inputs = {"capital", "labor", "fuel"};
  schema.determinants = {"trend"};
  return schema;
}

}  // namespace

TEST_CASE("load_csv groups firms and keeps short panels for validation to flag") {
  const std::string text =
      "firm,year,output,capital,labor,fuel,trend\n"
      "A,2001,10,1,2,3,0\n"
      "A,2000,9,1,2,3,1\n"
      "B,2000,5,1,1,1,0\n";
  const PanelDataset data = load_csv_text(text, tiny_schema());
  REQUIRE(data.firms.size() == 2);
  CHECK(data.firms[0].firm_id == "A");
  CHECK(data.firms[0].length() == 2);
  CHECK(data.firms[0].observations[0].year == 2000);  // time-sorted
  CHECK(data.firms[0].observations[1].year == 2001);
  CHECK(data.firms[1].length() == 1);
}

TEST_CASE("load_csv error contracts") {
  VariableSchema schema = tiny_schema();

  SUBCASE("missing output column") {
    const std::string text = "firm,year,capital,labor,fuel,trend\nA,2000,1,2,3,0\n";
    CHECK_THROWS_WITH_AS(load_csv_text(text, schema),
                         doctest::Contains("missing column 'output'"), DataError);
  }
  SUBCASE("non-positive input") {
    const std::string text =
        "firm,year,output,capital,labor,fuel,trend\nA,2000,10,0,2,3,0\n";
    CHECK_THROWS_WITH_AS(load_csv_text(text, schema),
                         doctest::Contains("log of non-positive input"), DataError);
  }
  SUBCASE("duplicate firm-year") {
    const std::string text =
        "firm,year,output,capital,labor,fuel,trend\n"
        "A,2000,10,1,2,3,0\n"
        "A,2000,11,1,2,3,0\n";
    CHECK_THROWS_AS(load_csv_text(text, schema), DataError);
  }
  SUBCASE("quoted fields parse") {
    const std::string text =
        "firm,year,output,capital,labor,fuel,trend\n"
        "\"A, Inc\",2000,10,1,2,3,0\n"
        "\"A, Inc\",2001,11,1,2,3,1\n";
    const PanelDataset data = load_csv_text(text, schema);
    CHECK(data.firms[0].firm_id == "A, Inc");
  }
}

TEST_CASE("validate_panel reproduces the 98 firm / 542 firm-year shape") {
  // 96 firms with T=5, 1 with T=32, 1 with T=30: 96*5 + 62 = 542.
  std::string text = "firm,year,output,capital,labor,fuel,trend\n";
  int firm = 0;
  auto add_firm = [&](int t_len) {
    ++firm;
    for (int t = 0; t < t_len; ++t) {
      text += "F" + std::to_string(firm) + "," + std::to_string(2000 + t) + ",10,1,2,3,0\n";
    }
  };
  for (int i = 0; i < 96; ++i) add_firm(5);
  add_firm(32);
  add_firm(30);
  add_firm(1);  // excluded
  const PanelDataset data = load_csv_text(text, tiny_schema());
  const ValidationReport report = validate_panel(data);
  CHECK(report.firms_total == 99);
  CHECK(report.firms_included == 98);
  CHECK(report.firm_years_included == 542);
  REQUIRE(report.excluded_firms.size() == 1);
  CHECK(report.excluded_firms[0] == "F99");
}

TEST_CASE("validate_panel exclusion edge cases") {
  SUBCASE("all panels long enough -> empty exclusion list") {
    const std::string text =
        "firm,year,output,capital,labor,fuel,trend\n"
        "A,2000,10,1,2,3,0\nA,2001,10,1,2,3,1\n";
    CHECK(validate_panel(load_csv_text(text, tiny_schema())).excluded_firms.empty());
  }
  SUBCASE("everything excluded -> error") {
    const std::string text =
        "firm,year,output,capital,labor,fuel,trend\nA,2000,10,1,2,3,0\n";
    CHECK_THROWS_AS(validate_panel(load_csv_text(text, tiny_schema())), DataError);
  }
}

TEST_CASE("within transform arithmetic") {
  const std::string text =
      "firm,year,output,capital,labor,fuel,trend\n"
      "A,2000," + std::to_string(std::exp(1.0)) + ",5,5,5,0\n"
      "A,2001," + std::to_string(std::exp(2.0)) + ",5,5,5,1\n"
      "A,2002," + std::to_string(std::exp(3.0)) + ",5,5,5,2\n";
  const PanelDataset data = load_csv_text(text, tiny_schema());
  const TransformedPanel transformed = transform_panel(data, 2000);
  REQUIRE(transformed.firms.size() == 1);
  const FirmBlock& firm = transformed.firms[0];

  // y = (1,2,3) demeans to (-1,0,1)
  CHECK(firm.y_demeaned(0) == doctest::Approx(-1.0));
  CHECK(firm.y_demeaned(1) == doctest::Approx(0.0));
  CHECK(firm.y_demeaned(2) == doctest::Approx(1.0));
  CHECK(firm.y_mean == doctest::Approx(2.0));

  // Constant input columns demean to zero.
  for (int t = 0; t < 3; ++t) {
    CHECK(firm.x_demeaned(t, 0) == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("within transform properties: zero sums, idempotence, shift invariance") {
  DgpSpec spec = DgpSpec::defaults();
  spec.n_firms = 7;
  spec.t_min = 2;
  spec.t_max = 9;
  spec.seed = 77;
  const SimulatedPanel sim = generate_panel(spec);
  const TransformedPanel transformed = transform_panel(sim.data, spec.base_year);

  for (const auto& firm : transformed.firms) {
    const double scale = std::max(1.0, firm.y_demeaned.cwiseAbs().maxCoeff());
    CHECK(std::abs(firm.y_demeaned.sum()) <= 1e-10 * firm.length() * scale);
    for (int c = 0; c < firm.x_demeaned.cols(); ++c) {
      const double col_scale = std::max(1.0, firm.x_demeaned.col(c).cwiseAbs().maxCoeff());
      CHECK(std::abs(firm.x_demeaned.col(c).sum()) <= 1e-10 * firm.length() * col_scale);
    }
    // Idempotence: demeaning an already demeaned column changes nothing.
    Eigen::VectorXd again = firm.y_demeaned;
    demean_in_place(again);
    CHECK((again - firm.y_demeaned).cwiseAbs().maxCoeff() <= 1e-14);
  }

  // Adding a per-firm constant to output leaves demeaned y untouched.
  PanelDataset shifted = sim.data;
  for (std::size_t i = 0; i < shifted.firms.size(); ++i) {
    const double shift = 0.5 + static_cast<double>(i);
    for (auto& obs : shifted.firms[i].observations) {
      obs.output *= std::exp(shift);
    }
  }
  const TransformedPanel transformed_shifted = transform_panel(shifted, spec.base_year);
  for (std::size_t i = 0; i < transformed.firms.size(); ++i) {
    const double diff = (transformed.firms[i].y_demeaned -
                         transformed_shifted.firms[i].y_demeaned)
                            .cwiseAbs()
                            .maxCoeff();
    CHECK(diff <= 1e-12);
  }
}

TEST_CASE("within_transform rejects misaligned design/scaling lengths") {
  const std::string text =
      "firm,year,output,capital,labor,fuel,trend\n"
      "A,2000,10,1,2,3,0\nA,2001,10,1,2,3,1\n";
  const PanelDataset data = load_csv_text(text, tiny_schema());
  const Eigen::MatrixXd design = Eigen::MatrixXd::Zero(3, translog::kTermCount);
  CHECK_THROWS_AS(within_transform(data, design, Eigen::VectorXd::Ones(3), 2000),
                  ConfigError);
}
