// Command-line driver: fruc, resample, timing, flow-gen, metrics.

#include <afsmr/pipeline.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace afsmr;

/// Flags shared by fruc and timing. Values left unset fall back to the
/// config file, then to library defaults.
struct RunFlags {
    std::string config_file;
    std::string input;
    std::optional<int> width, height;
    std::string sequence;

    std::string flow_dir;
    bool zero_unknown = false;
    bool block_matching = false;
    std::optional<int> bm_block, bm_range;
    std::vector<double> translate;
    std::vector<double> affine;

    std::vector<std::string> methods;
    std::optional<int> first_n, stride, first_target;

    std::optional<int> block_size, border, iterations;
    std::optional<double> rho, sigma, energy_stop;
    std::string key_points;
    std::optional<double> nwe_bandwidth, nwe_radius;

    std::string output_dir;
    bool write_frames = false;
    bool quantize = false;
    std::optional<unsigned> threads;
};

void add_run_flags(CLI::App* cmd, RunFlags& f)
{
    cmd->add_option("--config", f.config_file, "JSON run config; flags override its keys")->check(CLI::ExistingFile);
    cmd->add_option("-i,--input", f.input, "YUV 4:2:0 sequence (8 bit)");
    cmd->add_option("-W,--width", f.width, "frame width");
    cmd->add_option("-H,--height", f.height, "frame height");
    cmd->add_option("--sequence", f.sequence, "name written to the CSV (default: input stem)");

    cmd->add_option("--flow-dir", f.flow_dir, "directory with flow_<c-1>_<c+1>.flo files");
    cmd->add_flag("--zero-unknown", f.zero_unknown, "treat unknown .flo vectors as zero motion");
    cmd->add_flag("--block-matching", f.block_matching, "estimate flow by block matching on frames c-1, c+1");
    cmd->add_option("--bm-block", f.bm_block, "block matching block size");
    cmd->add_option("--bm-range", f.bm_range, "block matching search range");
    cmd->add_option("--translate", f.translate, "synthetic translation DX DY over the c-1 -> c+1 pair")
        ->expected(2);
    cmd->add_option("--affine", f.affine, "synthetic affine flow A11 A12 A21 A22 TX TY")->expected(6);

    cmd->add_option("-m,--methods", f.methods, "subset of LIN CUB NWE FSMR AFSMR")->delimiter(',');
    cmd->add_option("--first-n", f.first_n, "last eligible target frame (1-based)");
    cmd->add_option("--stride", f.stride, "distance between target frames");
    cmd->add_option("--first-target", f.first_target, "first target frame (1-based)");

    cmd->add_option("--block-size", f.block_size, "resampler block size B");
    cmd->add_option("--border", f.border, "resampler support border D");
    cmd->add_option("--rho", f.rho, "spatial weighting decay");
    cmd->add_option("--sigma", f.sigma, "spectral weighting decay");
    cmd->add_option("--iterations", f.iterations, "model generation iteration budget");
    cmd->add_option("--energy-stop", f.energy_stop, "stop when residual energy falls below this");
    cmd->add_option("--key-points", f.key_points, "FSMR key point placement")
        ->check(CLI::IsMember({"whole_area", "central_block"}));
    cmd->add_option("--nwe-bandwidth", f.nwe_bandwidth, "NWE Gaussian bandwidth h");
    cmd->add_option("--nwe-radius", f.nwe_radius, "NWE support radius (0: 3h)");

    cmd->add_option("-o,--out", f.output_dir, "output directory");
    cmd->add_flag("--write-frames", f.write_frames, "also write reconstructions as PGM");
    cmd->add_flag("--quantize", f.quantize, "round reconstructions to 8 bit before scoring");
    cmd->add_option("-j,--threads", f.threads, "worker threads (0: hardware concurrency)");
}

RunConfig build_run_config(const RunFlags& f)
{
    RunConfig c;
    if (!f.config_file.empty()) {
        std::ifstream in(f.config_file);
        c = run_config_from_json(nlohmann::json::parse(in));
    }
    if (!f.input.empty()) c.input = f.input;
    if (f.width) c.width = *f.width;
    if (f.height) c.height = *f.height;
    if (!f.sequence.empty()) c.sequence_name = f.sequence;

    const int sources = int(!f.flow_dir.empty()) + int(f.block_matching) + int(!f.translate.empty()) +
                        int(!f.affine.empty());
    if (sources > 1)
        throw std::invalid_argument("choose one flow source: --flow-dir, --block-matching, --translate or --affine");
    if (!f.flow_dir.empty()) {
        c.flow.kind = FlowSource::Kind::flo_directory;
        c.flow.directory = f.flow_dir;
    } else if (f.block_matching) {
        c.flow.kind = FlowSource::Kind::block_matching;
    } else if (!f.translate.empty()) {
        c.flow.kind = FlowSource::Kind::synthetic;
        c.flow.synthetic = GlobalTranslation{f.translate[0], f.translate[1]};
    } else if (!f.affine.empty()) {
        c.flow.kind = FlowSource::Kind::synthetic;
        c.flow.synthetic = AffineMotion{f.affine[0], f.affine[1], f.affine[2], f.affine[3], f.affine[4], f.affine[5]};
    }
    if (f.zero_unknown) c.flow.zero_unknown = true;
    if (f.bm_block) c.flow.block_matching.block_size = *f.bm_block;
    if (f.bm_range) c.flow.block_matching.search_range = *f.bm_range;

    if (!f.methods.empty()) {
        c.methods.clear();
        for (const auto& m : f.methods)
            c.methods.push_back(parse_method(m));
    }
    if (f.first_n) c.first_n = *f.first_n;
    if (f.stride) c.stride = *f.stride;
    if (f.first_target) c.first_target = *f.first_target;

    if (f.block_size) c.resampler.block_size = *f.block_size;
    if (f.border) c.resampler.border = *f.border;
    if (f.rho) c.resampler.rho = *f.rho;
    if (f.sigma) c.resampler.sigma = *f.sigma;
    if (f.iterations) c.resampler.max_iterations = *f.iterations;
    if (f.energy_stop) c.resampler.residual_energy_stop = *f.energy_stop;
    if (!f.key_points.empty())
        c.resampler.key_points =
            f.key_points == "whole_area" ? KeyPointPlacement::whole_area : KeyPointPlacement::central_block;
    if (f.nwe_bandwidth) c.nwe.bandwidth = *f.nwe_bandwidth;
    if (f.nwe_radius) c.nwe.support_radius = *f.nwe_radius;

    if (!f.output_dir.empty()) c.output_dir = f.output_dir;
    if (f.write_frames) c.write_frames = true;
    if (f.quantize) c.quantize_metrics = true;
    if (f.threads) c.threads = *f.threads;
    if (c.input.empty())
        throw std::invalid_argument("no input sequence (--input or config \"input\")");
    return c;
}

void print_averages(const FrucReport& r)
{
    std::printf("%-6s %7s %12s %10s %12s\n", "method", "frames", "psnr_db", "ssim", "runtime_s");
    for (const auto& a : r.averages)
        std::printf("%-6s %7d %12.4f %10.6f %12.6f\n", to_string(a.method).c_str(), a.frames, a.psnr, a.ssim,
                    a.runtime);
}

// resample -------------------------------------------------------------------

struct ResampleFlags {
    std::string mesh_csv;
    std::string frame;
    std::string flow;
    int width = 0, height = 0;
    std::string method = "AFSMR";
    std::string reference;
    std::string output;
    std::string trace;
    double t = 0.5;
    RunFlags params;  // resampler / NWE overrides only
};

int run_resample(const ResampleFlags& f)
{
    MeshPointSet mesh;
    int width = f.width, height = f.height;
    if (!f.mesh_csv.empty()) {
        if (!f.frame.empty())
            throw std::invalid_argument("give either --mesh or --frame, not both");
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("--mesh needs --width and --height of the output grid");
        mesh = read_mesh_csv(f.mesh_csv);
    } else if (!f.frame.empty()) {
        const GrayFrame prev = read_frame_pgm(f.frame);
        width = prev.width();
        height = prev.height();
        const MotionField flow = f.flow.empty() ? MotionField(width, height) : read_flo(f.flow);
        mesh = motion_compensate_forward(prev, flow, f.t);
    } else {
        throw std::invalid_argument("resample needs --mesh or --frame");
    }

    ResamplerConfig rcfg;
    const auto& p = f.params;
    if (p.block_size) rcfg.block_size = *p.block_size;
    if (p.border) rcfg.border = *p.border;
    if (p.rho) rcfg.rho = *p.rho;
    if (p.sigma) rcfg.sigma = *p.sigma;
    if (p.iterations) rcfg.max_iterations = *p.iterations;
    if (p.energy_stop) rcfg.residual_energy_stop = *p.energy_stop;
    if (!p.key_points.empty())
        rcfg.key_points =
            p.key_points == "whole_area" ? KeyPointPlacement::whole_area : KeyPointPlacement::central_block;
    NweConfig ncfg;
    if (p.nwe_bandwidth) ncfg.bandwidth = *p.nwe_bandwidth;
    if (p.nwe_radius) ncfg.support_radius = *p.nwe_radius;
    const unsigned threads = p.threads.value_or(1);
    const Method method = parse_method(f.method);

    GrayFrame out;
    std::vector<AreaTrace> traces;
    const auto start = std::chrono::steady_clock::now();
    if (!f.trace.empty() && (method == Method::afsmr || method == Method::fsmr)) {
        rcfg.variant = method == Method::fsmr ? ResamplerVariant::fsmr : ResamplerVariant::afsmr;
        rcfg.threads = threads;
        out = resample_frame(mesh, width, height, rcfg, &traces);
    } else {
        out = reconstruct(method, mesh, width, height, rcfg, ncfg, threads);
    }
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::printf("method=%s points=%zu size=%dx%d runtime_s=%.6f\n", to_string(method).c_str(), mesh.size(), width,
                height, runtime);
    if (!f.reference.empty()) {
        const GrayFrame ref = read_frame_pgm(f.reference);
        std::printf("psnr_db=%.6f ssim=%.6f\n", psnr(ref, out), ssim(ref, out));
    }
    if (!f.output.empty())
        write_frame_pgm(out, f.output);
    if (!f.trace.empty()) {
        if (method != Method::afsmr && method != Method::fsmr)
            throw std::invalid_argument("--trace is only available for FSMR and AFSMR");
        std::ofstream t(f.trace, std::ios::trunc);
        if (!t)
            throw IoError("cannot create '" + f.trace + "'");
        write_model_trace_csv(traces, t);
    }
    return 0;
}

// flow-gen -------------------------------------------------------------------

struct FlowGenFlags {
    std::string model = "translation";
    int width = 0, height = 0;
    double dx = 0.0, dy = 0.0;
    std::vector<double> affine;
    std::string prev, next;                 // block matching on two PGM frames
    std::string input;                      // block matching on a YUV sequence
    int first_n = 100, stride = 2, first_target = 2;
    int bm_block = 8, bm_range = 8;
    unsigned threads = 1;
    std::string output;
};

int run_flow_gen(const FlowGenFlags& f)
{
    if (f.model == "translation" || f.model == "affine") {
        if (f.width <= 0 || f.height <= 0)
            throw std::invalid_argument("synthetic flow needs --width and --height");
        SyntheticFlowSpec spec = GlobalTranslation{f.dx, f.dy};
        if (f.model == "affine") {
            if (f.affine.size() != 6)
                throw std::invalid_argument("--affine needs A11 A12 A21 A22 TX TY");
            spec = AffineMotion{f.affine[0], f.affine[1], f.affine[2], f.affine[3], f.affine[4], f.affine[5]};
        }
        write_flo(synthesize_flow(spec, f.width, f.height), f.output);
        return 0;
    }

    BlockMatchConfig bm{f.bm_block, f.bm_range, f.threads};
    if (!f.prev.empty() || !f.next.empty()) {
        write_flo(estimate_block_matching(read_frame_pgm(f.prev), read_frame_pgm(f.next), bm), f.output);
        return 0;
    }
    if (f.input.empty() || f.width <= 0 || f.height <= 0)
        throw std::invalid_argument("block matching needs --prev/--next or --input with --width/--height");

    // One flow file per protocol pair, named for the fruc --flow-dir convention.
    std::filesystem::create_directories(f.output);
    const auto frames = count_yuv_frames(f.input, f.width, f.height);
    int written = 0;
    for (int c = f.first_target; c <= f.first_n; c += f.stride) {
        if (static_cast<std::size_t>(c + 1) > frames)
            throw IoError("sequence has " + std::to_string(frames) + " frames, pair for frame " + std::to_string(c) +
                          " needs " + std::to_string(c + 1));
        const auto prev = read_yuv_frame(f.input, static_cast<std::size_t>(c - 2), f.width, f.height);
        const auto next = read_yuv_frame(f.input, static_cast<std::size_t>(c), f.width, f.height);
        write_flo(estimate_block_matching(prev, next, bm),
                  std::filesystem::path(f.output) / flow_file_name(c - 1, c + 1));
        ++written;
    }
    std::printf("wrote %d flow files to %s\n", written, f.output.c_str());
    return 0;
}

// metrics --------------------------------------------------------------------

struct MetricsFlags {
    std::string reference, test;
    int width = 0, height = 0;
    int reference_frame = 1, test_frame = 1;
    bool quantize = false;
};

GrayFrame load_any(const std::string& path, int width, int height, int frame)
{
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".yuv") {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("YUV input needs --width and --height");
        if (frame < 1)
            throw std::invalid_argument("frame numbers are 1-based");
        return read_yuv_frame(path, static_cast<std::size_t>(frame - 1), width, height);
    }
    return read_frame_pgm(path);
}

int run_metrics(const MetricsFlags& f)
{
    const GrayFrame ref = load_any(f.reference, f.width, f.height, f.reference_frame);
    GrayFrame test = load_any(f.test, f.width, f.height, f.test_frame);
    if (f.quantize)
        test = quantize(test);
    std::printf("psnr_db,ssim\n%s,%s\n", detail::format_number(psnr(ref, test)).c_str(),
                detail::format_number(ssim(ref, test)).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Motion-compensated frame rate up-conversion with frequency-selective mesh-to-grid resampling"};
    app.require_subcommand(1);

    RunFlags fruc_flags;
    auto* fruc = app.add_subcommand("fruc", "reconstruct every stride-th frame and score it (frames are 1-based)");
    add_run_flags(fruc, fruc_flags);

    RunFlags timing_flags;
    auto* timing = app.add_subcommand("timing", "average per-frame runtime per method, speed-up relative to FSMR");
    add_run_flags(timing, timing_flags);

    ResampleFlags rs;
    auto* resample = app.add_subcommand("resample", "resample one mesh onto the pixel grid");
    resample->add_option("--mesh", rs.mesh_csv, "mesh CSV with header x,y,value")->check(CLI::ExistingFile);
    resample->add_option("--frame", rs.frame, "PGM frame to motion compensate")->check(CLI::ExistingFile);
    resample->add_option("--flow", rs.flow, ".flo forward flow for --frame (default: zero)")
        ->check(CLI::ExistingFile);
    resample->add_option("-t,--position", rs.t, "temporal position along the flow");
    resample->add_option("-W,--width", rs.width, "output width (with --mesh)");
    resample->add_option("-H,--height", rs.height, "output height (with --mesh)");
    resample->add_option("-m,--method", rs.method, "LIN, CUB, NWE, FSMR or AFSMR");
    resample->add_option("--reference", rs.reference, "PGM to score against")->check(CLI::ExistingFile);
    resample->add_option("-o,--out", rs.output, "output PGM");
    resample->add_option("--trace", rs.trace, "per-area basis selection trace CSV (FSMR/AFSMR)");
    resample->add_option("--block-size", rs.params.block_size, "resampler block size B");
    resample->add_option("--border", rs.params.border, "resampler support border D");
    resample->add_option("--rho", rs.params.rho, "spatial weighting decay");
    resample->add_option("--sigma", rs.params.sigma, "spectral weighting decay");
    resample->add_option("--iterations", rs.params.iterations, "model generation iteration budget");
    resample->add_option("--energy-stop", rs.params.energy_stop, "stop when residual energy falls below this");
    resample->add_option("--key-points", rs.params.key_points, "FSMR key point placement")
        ->check(CLI::IsMember({"whole_area", "central_block"}));
    resample->add_option("--nwe-bandwidth", rs.params.nwe_bandwidth, "NWE Gaussian bandwidth h");
    resample->add_option("--nwe-radius", rs.params.nwe_radius, "NWE support radius (0: 3h)");
    resample->add_option("-j,--threads", rs.params.threads, "worker threads (0: hardware concurrency)");

    FlowGenFlags fg;
    auto* flow_gen = app.add_subcommand("flow-gen", "write .flo files from a motion model or block matching");
    flow_gen->add_option("--model", fg.model, "translation, affine or block-matching")
        ->check(CLI::IsMember({"translation", "affine", "block-matching"}));
    flow_gen->add_option("-W,--width", fg.width, "frame width");
    flow_gen->add_option("-H,--height", fg.height, "frame height");
    flow_gen->add_option("--dx", fg.dx, "horizontal displacement");
    flow_gen->add_option("--dy", fg.dy, "vertical displacement");
    flow_gen->add_option("--affine", fg.affine, "A11 A12 A21 A22 TX TY")->expected(6);
    flow_gen->add_option("--prev", fg.prev, "block matching: first PGM frame")->check(CLI::ExistingFile);
    flow_gen->add_option("--next", fg.next, "block matching: second PGM frame")->check(CLI::ExistingFile);
    flow_gen->add_option("-i,--input", fg.input, "block matching: YUV sequence, one file per protocol pair")
        ->check(CLI::ExistingFile);
    flow_gen->add_option("--first-n", fg.first_n, "last target frame (1-based)");
    flow_gen->add_option("--stride", fg.stride, "distance between target frames");
    flow_gen->add_option("--first-target", fg.first_target, "first target frame (1-based)");
    flow_gen->add_option("--bm-block", fg.bm_block, "block size");
    flow_gen->add_option("--bm-range", fg.bm_range, "search range");
    flow_gen->add_option("-j,--threads", fg.threads, "worker threads (0: hardware concurrency)");
    flow_gen->add_option("-o,--out", fg.output, ".flo file, or directory with --input")->required();

    MetricsFlags mf;
    auto* metrics = app.add_subcommand("metrics", "PSNR and SSIM between two frames (PGM or YUV)");
    metrics->add_option("reference", mf.reference, "reference frame")->required()->check(CLI::ExistingFile);
    metrics->add_option("test", mf.test, "test frame")->required()->check(CLI::ExistingFile);
    metrics->add_option("-W,--width", mf.width, "YUV width");
    metrics->add_option("-H,--height", mf.height, "YUV height");
    metrics->add_option("--reference-frame", mf.reference_frame, "1-based frame number in a YUV reference");
    metrics->add_option("--test-frame", mf.test_frame, "1-based frame number in a YUV test file");
    metrics->add_flag("--quantize", mf.quantize, "round the test frame to 8 bit first");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fruc->parsed()) {
            const auto cfg = build_run_config(fruc_flags);
            const auto report = run_fruc(cfg);
            if (cfg.output_dir.empty())
                write_metrics_csv(report, std::cout);
            else
                print_averages(report);
        } else if (timing->parsed()) {
            const auto cfg = build_run_config(timing_flags);
            write_timing_csv(run_timing(cfg), std::cout);
        } else if (resample->parsed()) {
            return run_resample(rs);
        } else if (flow_gen->parsed()) {
            return run_flow_gen(fg);
        } else if (metrics->parsed()) {
            return run_metrics(mf);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
