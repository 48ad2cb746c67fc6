/*
 * Copyright (c) 2026, The shaperef Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"
#include "shaperef/dictionary.hpp"
#include "shaperef/metrics.hpp"
#include "shaperef/pipeline.hpp"
#include "shaperef/sae.hpp"
#include "shaperef/training.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "shaperef");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = shaperef::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("shaperef_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        shaperef::PipelineConfig c;
        c.model_config = shaperef::SAEConfig::tiny();
        c.corpus.count = 5;
        c.corpus.dims = {16, 16, 4};
        c.train.iterations = 3;
        c.train.batch_size = 1;
        std::ofstream(dir_ / "config.json") << shaperef::pipeline_config_to_json(c);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

TEST_F(CliTest, UsageErrorsExitWithTwo) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"eval", "--pred", "a.mvol"}).code, 2);
    EXPECT_EQ(run({"synth", "--out-dir", "x", "--count", "abc"}).code, 2);
    const auto help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("build-dict"), std::string::npos);
}

TEST_F(CliTest, OperationalErrorsWriteJson) {
    const auto r = run({"eval", "--pred", path("missing.mvol"), "--gt", path("missing.mvol")});
    EXPECT_EQ(r.code, 1);
    const auto doc = json::parse(r.out);
    EXPECT_EQ(doc.at("error").at("kind"), "io");
    EXPECT_EQ(doc.at("error").at("command"), "eval");
    EXPECT_FALSE(r.err.empty());

    std::ofstream(path("bad.json")) << R"({"bogus": 1})";
    const auto cfg = run({"synth", "--out-dir", path("c"), "--config", path("bad.json")});
    EXPECT_EQ(cfg.code, 1);
    EXPECT_EQ(json::parse(cfg.out).at("error").at("kind"), "config");
}

TEST_F(CliTest, EvalMatchesLibrary) {
    ASSERT_EQ(run({"synth", "--out-dir", path("c"), "--config", path("config.json")}).code, 0);
    const auto a = path("c/vol_0000.mvol");
    const auto b = path("c/vol_0003.mvol");
    const auto r = run({"eval", "--pred", a, "--gt", b, "--out", path("m.json")});
    ASSERT_EQ(r.code, 0) << r.out;
    const auto expected = shaperef::report_to_json(shaperef::evaluate(shaperef::read_volume(a), shaperef::read_volume(b)));
    EXPECT_EQ(json::parse(r.out), json::parse(expected));
    std::ifstream f(path("m.json"));
    EXPECT_EQ(json::parse(f), json::parse(expected));
}

TEST_F(CliTest, SynthBuildRetrieveTrainRefine) {
    const auto s = run({"synth", "--out-dir", path("c"), "--config", path("config.json"), "--seed", "11"});
    ASSERT_EQ(s.code, 0) << s.out;
    EXPECT_EQ(json::parse(s.out).at("count"), 5);

    const auto d = run({"build-dict", "--corpus-dir", path("c"), "--out", path("c/dict.json"), "--config", path("config.json")});
    ASSERT_EQ(d.code, 0) << d.out;
    EXPECT_EQ(json::parse(d.out).at("entries"), 5);
    const auto dict = shaperef::load_dictionary(path("c/dict.json"));
    EXPECT_EQ(dict.size(), 5U);

    const auto q = run({"retrieve", "--dict", path("c/dict.json"), "--in", path("c/vol_0002.mvol")});
    ASSERT_EQ(q.code, 0) << q.out;
    EXPECT_EQ(json::parse(q.out).at("retrieved_id"), "vol_0002");
    EXPECT_EQ(json::parse(q.out).at("distance"), 0.0);

    const auto t = run({"train-sae", "--corpus-dir", path("c"), "--out", path("model.bin"), "--loss-csv", path("loss.csv"),
                        "--config", path("config.json")});
    ASSERT_EQ(t.code, 0) << t.out << t.err;
    EXPECT_EQ(json::parse(t.out).at("iterations"), 3);
    std::ifstream csv(path("loss.csv"));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(csv, line)) ++lines;
    EXPECT_EQ(lines, 4U);

    const auto r = run({"refine", "--model", path("model.bin"), "--dict", path("c/dict.json"), "--in",
                        path("c/vol_0001.mvol"), "--out", path("refined.mvol")});
    ASSERT_EQ(r.code, 0) << r.out;
    const auto summary = json::parse(r.out);
    EXPECT_EQ(summary.at("retrieved_id"), "vol_0001");
    const auto seg = shaperef::read_volume(path("c/vol_0001.mvol"));
    const auto refined = shaperef::read_volume(path("refined.mvol"));
    EXPECT_EQ(refined.dims(), seg.dims());
    const auto model = shaperef::load_model(path("model.bin"));
    const auto lib = shaperef::refine(seg, dict, model, {}, shaperef::file_label_loader(dir_ / "c"));
    EXPECT_EQ(refined, lib.refined);

    const auto bad = run({"refine", "--model", path("model.bin"), "--dict", path("c/dict.json"), "--in",
                          path("c/vol_0001.mvol"), "--out", path("r2.mvol"), "--threshold", "1.5"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_EQ(json::parse(bad.out).at("error").at("kind"), "config");
    EXPECT_FALSE(fs::exists(path("r2.mvol")));
}

TEST_F(CliTest, RefineEmptySegmentation) {
    ASSERT_EQ(run({"synth", "--out-dir", path("c"), "--config", path("config.json")}).code, 0);
    ASSERT_EQ(run({"build-dict", "--corpus-dir", path("c"), "--out", path("c/dict.json")}).code, 0);
    shaperef::save_model(shaperef::SAEModel{shaperef::SAEConfig::tiny(), 1}, path("model.bin"));
    shaperef::write_volume(shaperef::MaskVolume({16, 16, 4}, {}), path("empty.mvol"));
    const std::vector<std::string> base{"refine", "--model", path("model.bin"), "--dict", path("c/dict.json"),
                                        "--in", path("empty.mvol"), "--out", path("out.mvol")};
    const auto fail = run(base);
    EXPECT_EQ(fail.code, 1);
    EXPECT_EQ(json::parse(fail.out).at("error").at("kind"), "empty_shape");
    auto args = base;
    args.push_back("--pass-through-empty");
    const auto pass = run(args);
    ASSERT_EQ(pass.code, 0) << pass.out;
    EXPECT_EQ(json::parse(pass.out).at("passed_through"), true);
    EXPECT_EQ(shaperef::read_volume(path("out.mvol")), shaperef::MaskVolume({16, 16, 4}, {}));
}

}  // namespace
