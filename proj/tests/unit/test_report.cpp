/**
 * Copyright 2026 The vidmatch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "helpers.hpp"
#include "vidmatch/report.hpp"

using namespace vidmatch;
namespace fs = std::filesystem;

namespace {

// Captures std::cerr for the lifetime of the object.
struct CerrCapture {
  std::ostringstream buf;
  std::streambuf* old;
  CerrCapture() : old(std::cerr.rdbuf(buf.rdbuf())) {}
  ~CerrCapture() { std::cerr.rdbuf(old); }
};

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

const char* kHeader =
    "step,lr,L_cs,L_ps,L_match,L_fair,L_align,total,tau_global,tau_class_0,tau_class_1,lambda_m,mask_rate,"
    "pl_precision\n";

std::string metrics_rows(int n) {
  std::string s = kHeader;
  for (int k = 0; k < n; ++k)
    s += std::to_string(k) + ",0.03,0.7,0.6,0.5,-0.69,1.0,2.8,0.5,0.5,0.5,0.4,1,\n";
  return s;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("duplicate presets are dropped with a notice") {
    CerrCapture cap;
    const auto out = dedupe_presets({"cr_ft", "cr_sat", "cr_ft", "firematch_full", "cr_sat"});
    CHECK(out == std::vector<std::string>{"cr_ft", "cr_sat", "firematch_full"});
    const std::string msg = cap.buf.str();
    CHECK(msg.find("cr_ft") != std::string::npos);
    CHECK(msg.find("cr_sat") != std::string::npos);
  }

  TEST_CASE("no notice without duplicates") {
    CerrCapture cap;
    CHECK(dedupe_presets({"a", "b"}).size() == 2);
    CHECK(cap.buf.str().empty());
  }

  TEST_CASE("aggregate: sweep arithmetic and sample deviation") {
    std::vector<AblationCell> cells;
    const double acc[3][3] = {{0.5, 0.6, 0.7}, {0.9, 0.9, 0.9}, {0.8, 1.0, 0.9}};
    const char* presets[] = {"cr_ft", "cr_sat", "firematch_full"};
    for (int p = 0; p < 3; ++p)
      for (int s = 0; s < 3; ++s) cells.push_back({presets[p], std::uint64_t(s + 1), true, acc[p][s], 0.1 * (s + 1), ""});
    const auto rows = aggregate(cells);
    REQUIRE(rows.size() == 3);
    for (int p = 0; p < 3; ++p) {
      CHECK(rows[p].preset == presets[p]);
      CHECK(rows[p].n_seeds == 3);
      const double mean = (acc[p][0] + acc[p][1] + acc[p][2]) / 3;
      double var = 0;
      for (double a : acc[p]) var += (a - mean) * (a - mean);
      CHECK(rows[p].mean_acc == doctest::Approx(mean).epsilon(1e-12));
      CHECK(rows[p].std_acc == doctest::Approx(std::sqrt(var / 2)).epsilon(1e-12));
      CHECK(rows[p].mean_mask_rate == doctest::Approx(0.2).epsilon(1e-12));
    }
    CHECK(rows[1].std_acc == 0);
  }

  TEST_CASE("aggregate skips failed cells and keeps first-seen order") {
    std::vector<AblationCell> cells = {{"b", 1, true, 0.8, 0.5, ""}, {"a", 1, false, 0, 0, "boom"}, {"b", 2, false, 0, 0, "x"}};
    const auto rows = aggregate(cells);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].preset == "b");
    CHECK(rows[0].n_seeds == 1);
    CHECK(rows[0].std_acc == 0);
    CHECK(rows[1].n_seeds == 0);
    CHECK(std::isnan(rows[1].mean_acc));
  }

  TEST_CASE("ablation csv schema") {
    const std::string csv = ablation_csv({{"cr_ft", 3, 0.5, 0.1, 0.25}, {"dead", 0, NAN, NAN, NAN}});
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "preset,n_seeds,mean_acc,std_acc,mean_mask_rate");
    std::getline(in, line);
    CHECK(line == "cr_ft,3,0.5,0.1,0.25");
    std::getline(in, line);
    CHECK(line == "dead,0,,,");
  }

  TEST_CASE("read_metrics parses columns") {
    testing::TempDir dir("report_read");
    write_file(dir.path() / "metrics.csv", metrics_rows(4));
    const auto m = read_metrics(dir.path() / "metrics.csv", "r");
    REQUIRE(m);
    CHECK(m->step.size() == 4);
    CHECK(m->step[3] == 3);
    CHECK(m->l_match[0] == 0.5);
    CHECK(m->total[2] == 2.8);
    REQUIRE(m->tau_class.size() == 2);
    CHECK(m->tau_class[1].size() == 4);
  }

  TEST_CASE("read_metrics rejects unusable files") {
    testing::TempDir dir("report_bad");
    CerrCapture cap;
    CHECK_FALSE(read_metrics(dir.path() / "missing.csv", "x"));
    write_file(dir.path() / "empty.csv", "");
    CHECK_FALSE(read_metrics(dir.path() / "empty.csv", "x"));
    write_file(dir.path() / "zero.csv", kHeader);
    CHECK_FALSE(read_metrics(dir.path() / "zero.csv", "x"));
    write_file(dir.path() / "short.csv", std::string(kHeader) + "0,0.03,1\n");
    CHECK_FALSE(read_metrics(dir.path() / "short.csv", "x"));
    write_file(dir.path() / "nan.csv", std::string(kHeader) + "0,0.03,0.7,0.6,abc,-0.69,1.0,2.8,0.5,0.5,0.5,0.4,1,\n");
    CHECK_FALSE(read_metrics(dir.path() / "nan.csv", "x"));
    write_file(dir.path() / "nocol.csv", "step,lr\n0,1\n");
    CHECK_FALSE(read_metrics(dir.path() / "nocol.csv", "x"));
    CHECK(cap.buf.str().find("zero steps") != std::string::npos);
  }

  TEST_CASE("write_report names outputs after usable runs only") {
    testing::TempDir dir("report_write");
    write_file(dir.path() / "alpha" / "metrics.csv", metrics_rows(3));
    write_file(dir.path() / "beta" / "metrics.csv", metrics_rows(2));
    write_file(dir.path() / "empty" / "metrics.csv", kHeader);
    CerrCapture cap;
    const auto files =
        write_report({dir.path() / "alpha", dir.path() / "empty", dir.path() / "beta"}, dir.path() / "out");
    REQUIRE(files.size() == 2);
    CHECK(files[0].filename() == "report_alpha_beta.svg");
    CHECK(files[1].filename() == "report_alpha_beta.csv");
    for (const auto& f : files) CHECK(fs::file_size(f) > 0);
    std::ifstream csv(files[1]);
    std::string line;
    int rows = 0;
    std::getline(csv, line);
    CHECK(line == "run,step,L_match,total,tau_global,mask_rate");
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 5);
  }

  TEST_CASE("write_report with nothing usable writes nothing") {
    testing::TempDir dir("report_none");
    CerrCapture cap;
    CHECK(write_report({dir.path() / "nope"}, dir.path() / "out").empty());
    CHECK_FALSE(fs::exists(dir.path() / "out"));
  }
}
