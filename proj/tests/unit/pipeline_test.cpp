#include "support.hpp"

#include <afsmr/pipeline.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace {

using namespace afsmr;
using afsmr::testing::scratch_dir;

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream s(line);
        std::string cell;
        while (std::getline(s, cell, ','))
            cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

/// Static smooth sequence of `frames` frames.
std::filesystem::path static_sequence(const std::filesystem::path& dir, int frames, int w = 32, int h = 24)
{
    std::vector<GrayFrame> seq(frames, afsmr::testing::smooth_frame(w, h));
    write_yuv_sequence(dir / "static.yuv", seq);
    return dir / "static.yuv";
}

RunConfig small_config(const std::filesystem::path& input, int first_n)
{
    RunConfig cfg;
    cfg.input = input;
    cfg.width = 32;
    cfg.height = 24;
    cfg.first_n = first_n;
    cfg.methods = {Method::lin, Method::afsmr};
    return cfg;
}

TEST(Method, ParsesCaseInsensitively)
{
    EXPECT_EQ(parse_method("afsmr"), Method::afsmr);
    EXPECT_EQ(parse_method("Cub"), Method::cub);
    EXPECT_EQ(to_string(Method::nwe), "NWE");
    EXPECT_THROW(parse_method("bicubic"), std::invalid_argument);
}

TEST(Protocol, TargetFramesAreEvenUpToFirstN)
{
    RunConfig cfg;
    cfg.first_n = 100;
    const auto t = target_frames(cfg);
    ASSERT_EQ(t.size(), 50u);
    EXPECT_EQ(t.front(), 2);
    EXPECT_EQ(t.back(), 100);
    cfg.first_n = 9;
    EXPECT_EQ(target_frames(cfg).size(), std::size_t((9 - 2) / 2 + 1));
    cfg.stride = 3;
    EXPECT_EQ(target_frames(cfg), (std::vector<int>{2, 5, 8}));
}

TEST(Protocol, RejectsInvalidConfig)
{
    RunConfig cfg;
    cfg.width = 8;
    cfg.height = 8;
    cfg.first_n = 2;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.first_n = 10;
    cfg.stride = 1;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.stride = 2;
    cfg.methods.clear();
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Fruc, StaticSequenceWritesRowsAveragesAndConfig)
{
    const auto dir = scratch_dir("fruc_static");
    auto cfg = small_config(static_sequence(dir, 7), 7);
    cfg.output_dir = dir / "out";
    cfg.write_frames = true;
    const auto report = run_fruc(cfg);

    ASSERT_EQ(report.rows.size(), 3u * 2);
    EXPECT_EQ(report.rows[0].frame_index, 2);
    EXPECT_EQ(report.rows[1].method, Method::afsmr);
    EXPECT_EQ(report.rows[5].frame_index, 6);
    for (const auto& r : report.rows) {
        if (r.method == Method::afsmr)
            EXPECT_GT(r.psnr, 50.0);
        EXPECT_GE(r.runtime, 0.0);
    }

    const auto csv = read_csv(dir / "out" / "metrics.csv");
    ASSERT_EQ(csv.size(), 1u + 6 + 2);
    EXPECT_EQ(csv[0], (std::vector<std::string>{"sequence", "frame", "method", "psnr_db", "ssim", "runtime_s"}));
    EXPECT_EQ(csv[1][0], "static");
    EXPECT_EQ(csv[7][1], "avg");
    EXPECT_EQ(csv[8][2], "AFSMR");

    // Averages are means of the per-frame rows.
    for (const auto& a : report.averages) {
        double ps = 0, ss = 0, rt = 0;
        int n = 0;
        for (const auto& r : report.rows)
            if (r.method == a.method) {
                ps += r.psnr;
                ss += r.ssim;
                rt += r.runtime;
                ++n;
            }
        EXPECT_EQ(a.frames, n);
        if (std::isinf(a.psnr))
            EXPECT_EQ(a.psnr, ps / n);
        else
            EXPECT_NEAR(a.psnr, ps / n, 1e-9);
        EXPECT_NEAR(a.ssim, ss / n, 1e-9);
        EXPECT_NEAR(a.runtime, rt / n, 1e-9);
    }

    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "frames" / "AFSMR_4.pgm"));
    std::ifstream config(dir / "out" / "config.json");
    const auto j = nlohmann::json::parse(config);
    EXPECT_EQ(j.at("flow").at("kind"), "synthetic");
    EXPECT_EQ(j.at("first_n"), 7);
    EXPECT_EQ(j.at("resampler").at("block_size"), 4);
    EXPECT_EQ(j.at("threads"), 1);
}

TEST(Fruc, IsDeterministicApartFromRuntime)
{
    const auto dir = scratch_dir("fruc_determinism");
    std::mt19937_64 rng(71);
    std::vector<GrayFrame> seq;
    for (int i = 0; i < 5; ++i)
        seq.push_back(afsmr::testing::smooth_frame(32, 24, 0.3 * i));
    write_yuv_sequence(dir / "moving.yuv", seq);
    auto cfg = small_config(dir / "moving.yuv", 5);
    cfg.flow.synthetic = GlobalTranslation{1.0, 0.5};
    cfg.methods = {Method::lin, Method::cub, Method::nwe, Method::fsmr, Method::afsmr};
    const auto a = run_fruc(cfg);
    cfg.threads = 3;
    const auto b = run_fruc(cfg);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].psnr, b.rows[i].psnr);
        EXPECT_EQ(a.rows[i].ssim, b.rows[i].ssim);
    }
}

TEST(Fruc, ReadsFlowFilesByPairName)
{
    const auto dir = scratch_dir("fruc_flo");
    auto cfg = small_config(static_sequence(dir, 5), 5);
    cfg.flow.kind = FlowSource::Kind::flo_directory;
    cfg.flow.directory = dir / "flows";
    std::filesystem::create_directories(cfg.flow.directory);
    write_flo(MotionField(32, 24), cfg.flow.directory / "flow_1_3.flo");
    EXPECT_THROW(run_fruc(cfg), std::runtime_error);  // flow_3_5.flo missing
    write_flo(MotionField(32, 24), cfg.flow.directory / "flow_3_5.flo");
    EXPECT_EQ(run_fruc(cfg).rows.size(), 2u * 2);

    write_flo(MotionField(16, 24), cfg.flow.directory / "flow_3_5.flo");
    EXPECT_THROW(run_fruc(cfg), std::runtime_error);
}

TEST(Fruc, NextFrameIsOnlyNeededForBlockMatching)
{
    const auto dir = scratch_dir("fruc_shortfall");
    auto cfg = small_config(static_sequence(dir, 6), 6);
    EXPECT_EQ(run_fruc(cfg).rows.size(), 3u * 2);
    cfg.flow.kind = FlowSource::Kind::block_matching;
    EXPECT_THROW(run_fruc(cfg), IoError);  // target 6 needs frame 7
    cfg.first_n = 5;
    EXPECT_EQ(run_fruc(cfg).rows.size(), 2u * 2);
    cfg.first_n = 9;
    cfg.flow.kind = FlowSource::Kind::synthetic;
    EXPECT_THROW(run_fruc(cfg), IoError);
}

TEST(Timing, SpeedupColumnOnlyWithFsmr)
{
    const auto dir = scratch_dir("timing");
    auto cfg = small_config(static_sequence(dir, 5), 5);
    cfg.methods = {Method::fsmr, Method::afsmr};
    cfg.output_dir = dir / "out";
    const auto t = run_timing(cfg);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_DOUBLE_EQ(*t.rows[0].speedup_vs_fsmr, 1.0);
    const auto csv = read_csv(dir / "out" / "timing.csv");
    EXPECT_EQ(csv[0], (std::vector<std::string>{"sequence", "method", "frames", "avg_runtime_s", "speedup_vs_fsmr",
                                                 "threads"}));
    EXPECT_EQ(csv.size(), 3u);

    cfg.methods = {Method::lin};
    std::ostringstream out;
    write_timing_csv(run_timing(cfg), out);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "sequence,method,frames,avg_runtime_s,threads");
}

TEST(Config, JsonRoundTrip)
{
    RunConfig cfg;
    cfg.input = "a.yuv";
    cfg.width = 416;
    cfg.height = 240;
    cfg.flow.kind = FlowSource::Kind::synthetic;
    cfg.flow.synthetic = AffineMotion{1.01, 0.0, 0.0, 0.99, 1.0, -2.0};
    cfg.methods = {Method::cub, Method::fsmr};
    cfg.resampler.rho = 0.75;
    cfg.resampler.key_points = KeyPointPlacement::central_block;
    cfg.nwe.bandwidth = 1.5;
    const auto back = run_config_from_json(to_json(cfg));
    EXPECT_EQ(back.width, 416);
    EXPECT_EQ(back.methods, cfg.methods);
    EXPECT_EQ(back.resampler.rho, 0.75);
    EXPECT_EQ(back.resampler.key_points, KeyPointPlacement::central_block);
    EXPECT_EQ(back.nwe.bandwidth, 1.5);
    EXPECT_EQ(std::get<AffineMotion>(back.flow.synthetic).a11, 1.01);
    EXPECT_THROW(run_config_from_json(nlohmann::json{{"methods", {"XYZ"}}}), std::invalid_argument);
}

TEST(Reconstruct, ClampsEveryMethod)
{
    MeshPointSet mesh;
    mesh.push_back(0, 0, -50);
    mesh.push_back(7, 0, 400);
    mesh.push_back(0, 7, 400);
    mesh.push_back(7, 7, -50);
    for (Method m : {Method::lin, Method::cub, Method::nwe, Method::fsmr, Method::afsmr}) {
        const auto out = reconstruct(m, mesh, 8, 8, ResamplerConfig{}, NweConfig{});
        for (double v : out.values()) {
            EXPECT_GE(v, 0.0) << to_string(m);
            EXPECT_LE(v, 255.0) << to_string(m);
        }
    }
}

TEST(Reconstruct, ThreePointMeshGivesValidFrame)
{
    MeshPointSet mesh;
    mesh.push_back(1, 1, 10);
    mesh.push_back(5, 1, 20);
    mesh.push_back(1, 5, 30);
    const auto out = reconstruct(Method::lin, mesh, 8, 8, {}, {});
    EXPECT_EQ(out(1, 1), 10.0);
    EXPECT_EQ(out(7, 7), 20.0);
    EXPECT_DOUBLE_EQ(out(2, 2), 17.5);
}

TEST(TraceCsv, ListsSelectionsPerArea)
{
    std::vector<AreaTrace> traces(2);
    traces[0].area = {0, 0, 8, 8, 0, 0, 4, 4};
    traces[0].mesh_points = 10;
    traces[0].selections = {{0, 0, 12.5, 3.0}, {1, 2, -0.5, 1.0}};
    traces[1].area = {4, 0, 8, 8, 4, 0, 4, 4};
    traces[1].fallback = true;
    std::ostringstream out;
    write_model_trace_csv(traces, out);
    EXPECT_EQ(out.str(),
              "area_left,area_top,block_left,block_top,mesh_points,key_points,iteration,k,l,coefficient,energy\n"
              "0,0,0,0,10,0,1,0,0,12.5,3\n"
              "0,0,0,0,10,0,2,1,2,-0.5,1\n"
              "4,0,4,0,0,0,0,,,,\n");
}

// CLI ---------------------------------------------------------------------

int run_cli(const std::string& args, const std::filesystem::path& log)
{
    const std::string cmd = std::string(AFSMR_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Cli, FrucWritesMetricsCsv)
{
    const auto dir = scratch_dir("cli_fruc");
    const auto input = static_sequence(dir, 5);
    ASSERT_EQ(run_cli("fruc -i " + input.string() + " -W 32 -H 24 --first-n 5 -m LIN,AFSMR --translate 0 0 -o " +
                          (dir / "out").string(),
                      dir / "log.txt"),
              0)
        << slurp(dir / "log.txt");
    const auto csv = read_csv(dir / "out" / "metrics.csv");
    EXPECT_EQ(csv.size(), 1u + 4 + 2);
}

TEST(Cli, ConfigFileWithFlagOverride)
{
    const auto dir = scratch_dir("cli_config");
    const auto input = static_sequence(dir, 7);
    std::ofstream(dir / "run.json") << nlohmann::json{{"input", input.string()},
                                                      {"width", 32},
                                                      {"height", 24},
                                                      {"first_n", 7},
                                                      {"methods", {"LIN"}},
                                                      {"output_dir", (dir / "out").string()}}
                                           .dump();
    ASSERT_EQ(run_cli("fruc --config " + (dir / "run.json").string() + " --first-n 5", dir / "log.txt"), 0)
        << slurp(dir / "log.txt");
    EXPECT_EQ(read_csv(dir / "out" / "metrics.csv").size(), 1u + 2 + 1);
    std::ifstream echoed(dir / "out" / "config.json");
    EXPECT_EQ(nlohmann::json::parse(echoed).at("first_n"), 5);
}

TEST(Cli, ResampleIsDeterministicAndReportsMetrics)
{
    const auto dir = scratch_dir("cli_resample");
    const auto f = afsmr::testing::smooth_frame(24, 16);
    write_frame_pgm(f, dir / "f.pgm");
    const std::string base = "resample --frame " + (dir / "f.pgm").string() + " --reference " +
                             (dir / "f.pgm").string() + " -m AFSMR --trace " + (dir / "trace.csv").string();
    ASSERT_EQ(run_cli(base + " -o " + (dir / "a.pgm").string(), dir / "log.txt"), 0) << slurp(dir / "log.txt");
    EXPECT_NE(slurp(dir / "log.txt").find("psnr_db="), std::string::npos);
    ASSERT_EQ(run_cli(base + " -o " + (dir / "b.pgm").string(), dir / "log2.txt"), 0);
    EXPECT_EQ(slurp(dir / "a.pgm"), slurp(dir / "b.pgm"));
    EXPECT_GT(read_csv(dir / "trace.csv").size(), 1u);

    MeshPointSet mesh;
    mesh.push_back(1, 1, 10);
    mesh.push_back(6, 1, 20);
    mesh.push_back(1, 6, 30);
    write_mesh_csv(mesh, dir / "mesh.csv");
    ASSERT_EQ(run_cli("resample --mesh " + (dir / "mesh.csv").string() + " -W 8 -H 8 -m LIN -o " +
                          (dir / "lin.pgm").string(),
                      dir / "log3.txt"),
              0)
        << slurp(dir / "log3.txt");
    EXPECT_EQ(read_frame_pgm(dir / "lin.pgm")(1, 1), 10.0);
}

TEST(Cli, FlowGenAndMetrics)
{
    const auto dir = scratch_dir("cli_flowgen");
    ASSERT_EQ(run_cli("flow-gen --model translation -W 6 -H 4 --dx 1.5 --dy -2 -o " + (dir / "t.flo").string(),
                      dir / "log.txt"),
              0);
    const auto flow = read_flo(dir / "t.flo");
    EXPECT_EQ(flow.dm(5, 3), 1.5);
    EXPECT_EQ(flow.dn(0, 0), -2.0);

    write_yuv_sequence(dir / "s.yuv", std::vector<GrayFrame>(5, afsmr::testing::smooth_frame(32, 24)));
    ASSERT_EQ(run_cli("flow-gen --model block-matching -i " + (dir / "s.yuv").string() +
                          " -W 32 -H 24 --first-n 4 -o " + (dir / "flows").string(),
                      dir / "log2.txt"),
              0)
        << slurp(dir / "log2.txt");
    EXPECT_TRUE(std::filesystem::exists(dir / "flows" / "flow_1_3.flo"));
    EXPECT_TRUE(std::filesystem::exists(dir / "flows" / "flow_3_5.flo"));

    write_frame_pgm(GrayFrame(16, 16, 100.0), dir / "a.pgm");
    write_frame_pgm(GrayFrame(16, 16, 101.0), dir / "b.pgm");
    ASSERT_EQ(run_cli("metrics " + (dir / "a.pgm").string() + " " + (dir / "b.pgm").string(), dir / "m.txt"), 0);
    EXPECT_NE(slurp(dir / "m.txt").find("48.130803608679"), std::string::npos) << slurp(dir / "m.txt");
}

TEST(Cli, ErrorsExitNonzeroWithMessage)
{
    const auto dir = scratch_dir("cli_errors");
    EXPECT_NE(run_cli("fruc -i " + (dir / "missing.yuv").string() + " -W 32 -H 24", dir / "log.txt"), 0);
    EXPECT_NE(slurp(dir / "log.txt").find("error:"), std::string::npos);
    EXPECT_NE(run_cli("bogus", dir / "log2.txt"), 0);
    const auto input = static_sequence(dir, 3);
    EXPECT_NE(run_cli("fruc -i " + input.string() + " -W 32 -H 24 --first-n 3 --flow-dir " + (dir / "none").string(),
                      dir / "log3.txt"),
              0);
    EXPECT_NE(slurp(dir / "log3.txt").find("flow_1_3.flo"), std::string::npos);
}

}  // namespace
