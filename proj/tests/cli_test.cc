// Copyright 2026 The Endgate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <sstream>

#include "cli.h"
#include "doctest.h"
#include "endgate/eval.h"
#include "endgate/features.h"
#include "endgate/io.h"
#include "endgate/pipeline.h"
#include "test_util.h"

namespace endgate::tools {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Call(std::vector<std::string> args) {
  args.insert(args.begin(), "endgate");
  std::ostringstream out, err;
  Result r;
  r.code = Dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

constexpr const char* kTinyConfig =
    "[run]\nseed = 3\njobs = 1\n"
    "[corpus]\nnum_complete = 30\nnum_hesitation = 20\nnum_incomplete = 20\n"
    "[frame_train]\nepochs = 1\n"
    "[arbitrator_train]\nepochs = 1\n";

// One pipeline shared by the tests below, built through the CLI.
struct Workspace {
  testing::TempDir dir;
  bool ok = true;
  Workspace() {
    io::WriteFileAtomic(dir / "c.ini", kTinyConfig);
    const std::string cfg = (dir / "c.ini").string();
    const std::string root = dir.path().string();
    ok = Call({"gen-corpus", "--config", cfg, "--out", root + "/corpus"}).code == 0 &&
         Call({"train", "--config", cfg, "--corpus", root + "/corpus/train", "--out",
               root + "/fm.ckpt"}).code == 0 &&
         Call({"train-arbitrator", "--config", cfg, "--corpus", root + "/corpus/train",
               "--frame-model", root + "/fm.ckpt", "--out", root + "/arb.ckpt"}).code == 0 &&
         Call({"evaluate", "--config", cfg, "--corpus", root + "/corpus/test", "--frame-model",
               root + "/fm.ckpt", "--out", root + "/base.txt"}).code == 0;
  }
  std::string Path(const std::string& name) const { return (dir / name).string(); }
};

const Workspace& Shared() {
  static const Workspace w;
  return w;
}

TEST_CASE("the CLI pipeline builds artifacts with manifests") {
  const Workspace& w = Shared();
  REQUIRE(w.ok);
  for (const char* p : {"corpus/train/corpus.txt", "corpus/test/features.bin", "corpus/manifest.txt",
                        "corpus/config.ini", "fm.ckpt", "fm.ckpt.manifest", "arb.ckpt", "arb.ckpt.manifest", "base.txt",
                        "base.txt.manifest"}) {
    CHECK(fs::exists(w.dir / p));
  }
  const std::string manifest = io::ReadFile(w.dir / "fm.ckpt.manifest");
  CHECK(manifest.rfind("endgate-manifest 1", 0) == 0);
  CHECK(manifest.find("seed 3") != std::string::npos);
}

TEST_CASE("report on a decision file exits 0") {
  const Workspace& w = Shared();
  REQUIRE(w.ok);
  const Result r = Call({"report", "--decisions", w.Path("base.txt")});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("endgate-report 1", 0) == 0);
  const Result partial = Call({"report", "--decisions", w.Path("base.txt"), "--mode", "partial"});
  CHECK(partial.code == 0);
  CHECK(partial.out.find("mode partial") != std::string::npos);
}

TEST_CASE("report relative metrics against a baseline report") {
  const Workspace& w = Shared();
  REQUIRE(w.ok);
  CHECK(Call({"report", "--decisions", w.Path("base.txt"), "--out", w.Path("base.report")}).code == 0);
  CHECK(fs::exists(w.Path("base.report.manifest")));
  const Result arb = Call({"evaluate", "--config", w.Path("c.ini"), "--corpus", w.Path("corpus/test"),
                           "--frame-model", w.Path("fm.ckpt"), "--arbitrator", w.Path("arb.ckpt"),
                           "--out", w.Path("arb.txt"), "--trace", w.Path("arb.trace")});
  REQUIRE(arb.code == 0);
  CHECK(fs::exists(w.Path("arb.trace")));
  const Result r = Call({"report", "--decisions", w.Path("arb.txt"), "--baseline", w.Path("base.report")});
  CHECK(r.code == 0);
  CHECK(r.out.find("eeprr_pct") != std::string::npos);
  const Result csv = Call({"report", "--decisions", w.Path("arb.txt"), "--baseline",
                           w.Path("base.report"), "--csv"});
  CHECK(csv.out.rfind("WER,WERR,EEPR,EEPRR,P50,P90,P99,avg\n", 0) == 0);
}

TEST_CASE("unknown flags exit 2") {
  CHECK(Call({"report", "--decisionz", "x"}).code == 2);
  CHECK(Call({"frobnicate"}).code == 2);
  CHECK(Call({}).code == 2);
  CHECK(Call({"report", "--decisions", "/nonexistent/d.txt"}).code == 2);
}

TEST_CASE("help exits 0") {
  const Result r = Call({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("evaluate") != std::string::npos);
  CHECK(Call({"sweep", "--help"}).code == 0);
}

TEST_CASE("evaluate with a missing checkpoint exits 1") {
  const Workspace& w = Shared();
  REQUIRE(w.ok);
  const Result r = Call({"evaluate", "--corpus", w.Path("corpus/test"), "--frame-model",
                         w.Path("missing.ckpt"), "--out", w.Path("x.txt")});
  CHECK(r.code == 1);
  CHECK(r.err.find("missing.ckpt") != std::string::npos);
  CHECK_FALSE(fs::exists(w.Path("x.txt")));
}

TEST_CASE("invalid config values exit 2 and name the key") {
  testing::TempDir dir;
  io::WriteFileAtomic(dir / "bad.ini", "[pipeline]\nT_EP = 1.5\n");
  const Result r = Call({"gen-corpus", "--config", (dir / "bad.ini").string(), "--out",
                         (dir / "c").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("T_EP") != std::string::npos);
}

TEST_CASE("sweep writes curves") {
  const Workspace& w = Shared();
  REQUIRE(w.ok);
  io::WriteFileAtomic(w.dir / "spec.ini",
                      std::string(kTinyConfig) +
                          "[sweep]\nT_EP = 0.5,0.9\neos_scale = 1\nT_arb = 0.3,0.7\n"
                          "corpus = corpus/test\nframe_model = fm.ckpt\narbitrator = arb.ckpt\n");
  const Result r = Call({"sweep", "--spec", w.Path("spec.ini"), "--out", w.Path("sweep")});
  CHECK(r.code == 0);
  CHECK(fs::exists(w.dir / "sweep" / "curves.csv"));
  CHECK(fs::exists(w.dir / "sweep" / "both_eeprr.svg"));
  CHECK(fs::exists(w.dir / "sweep" / "manifest.txt"));
}

TEST_CASE("featurize and pad-silence") {
  testing::TempDir dir;
  AudioBuffer a;
  a.samples.resize(16000);
  for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] = 0.3 * std::sin(0.05 * static_cast<double>(i));
  WriteWav(a, dir / "a.wav");
  const Result pad = Call({"pad-silence", "--in", (dir / "a.wav").string(), "--out",
                           (dir / "p.wav").string()});
  REQUIRE(pad.code == 0);
  CHECK(ReadWav(dir / "p.wav").samples.size() == 48000);
  const Result feat = Call({"featurize", "--in", (dir / "a.wav").string(), "--out",
                            (dir / "a.feat").string()});
  REQUIRE(feat.code == 0);
  CHECK(ReadFeatureFile(dir / "a.feat").size() == 32);
  CHECK(fs::exists(dir / "a.feat.manifest"));
}

}  // namespace
}  // namespace endgate::tools
