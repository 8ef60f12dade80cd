#pragma once

#include <afsmr/baselines.hpp>
#include <afsmr/frame_io.hpp>
#include <afsmr/metrics.hpp>
#include <afsmr/motion.hpp>
#include <afsmr/resampler.hpp>

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace afsmr {

enum class Method { lin, cub, nwe, fsmr, afsmr };

inline std::string to_string(Method m)
{
    switch (m) {
    case Method::lin: return "LIN";
    case Method::cub: return "CUB";
    case Method::nwe: return "NWE";
    case Method::fsmr: return "FSMR";
    case Method::afsmr: return "AFSMR";
    }
    return "?";
}

inline Method parse_method(std::string name)
{
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
    for (Method m : {Method::lin, Method::cub, Method::nwe, Method::fsmr, Method::afsmr})
        if (to_string(m) == name)
            return m;
    throw std::invalid_argument("unknown method '" + name + "' (expected LIN, CUB, NWE, FSMR or AFSMR)");
}

/// Where the forward flow for each (c-1 -> c+1) pair comes from.
struct FlowSource {
    enum class Kind { flo_directory, block_matching, synthetic };

    Kind kind = Kind::synthetic;
    std::filesystem::path directory;       ///< flo_directory: holds flow_<c-1>_<c+1>.flo
    bool zero_unknown = false;             ///< map .flo unknown markers to (0, 0)
    BlockMatchConfig block_matching;
    SyntheticFlowSpec synthetic = GlobalTranslation{};  ///< displacement over the whole pair

    bool needs_next_frame() const { return kind == Kind::block_matching; }
};

inline std::string flow_file_name(int prev_frame, int next_frame)
{
    return "flow_" + std::to_string(prev_frame) + "_" + std::to_string(next_frame) + ".flo";
}

/// Evaluation run. Frame numbers are 1-based: frame c is the c-th frame of
/// the input file.
struct RunConfig {
    std::filesystem::path input;
    int width = 0;
    int height = 0;
    std::string sequence_name;

    FlowSource flow;
    std::vector<Method> methods{Method::afsmr};

    int first_n = 100;       ///< last frame number eligible as a target
    int stride = 2;
    int first_target = 2;

    ResamplerConfig resampler;
    NweConfig nwe;
    double temporal_position = 0.5;

    std::filesystem::path output_dir;  ///< empty: write nothing
    bool write_frames = false;
    bool quantize_metrics = false;     ///< round reconstructions to 8 bit before metrics
    unsigned threads = 1;

    std::string name() const
    {
        return sequence_name.empty() ? input.stem().string() : sequence_name;
    }

    void validate() const
    {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("run config: width and height are required");
        if (first_n < 3)
            throw std::invalid_argument("run config: first_n must be >= 3");
        if (stride < 2)
            throw std::invalid_argument("run config: stride must be >= 2");
        if (first_target < 2 || first_target > first_n)
            throw std::invalid_argument("run config: first_target must lie in [2, first_n]");
        if (methods.empty())
            throw std::invalid_argument("run config: no methods selected");
        if (flow.kind == FlowSource::Kind::flo_directory && flow.directory.empty())
            throw std::invalid_argument("run config: flo_directory flow source needs a directory");
        resampler.validate();
        nwe.validate();
        flow.block_matching.validate();
    }
};

/// Target frame numbers: first_target, first_target + stride, ... <= first_n.
inline std::vector<int> target_frames(const RunConfig& cfg)
{
    std::vector<int> out;
    for (int c = cfg.first_target; c <= cfg.first_n; c += cfg.stride)
        out.push_back(c);
    return out;
}

struct MetricReport {
    std::string sequence;
    int frame_index = 0;
    Method method = Method::afsmr;
    double psnr = 0.0;
    double ssim = 0.0;
    double runtime = 0.0;  ///< seconds: mesh construction + resampling
};

struct MethodSummary {
    Method method = Method::afsmr;
    int frames = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double runtime = 0.0;
};

struct FrucReport {
    std::string sequence;
    std::vector<MetricReport> rows;        ///< ordered by frame, then method order
    std::vector<MethodSummary> averages;   ///< in method order
};

// ---------------------------------------------------------------------------

/// One resampling pass with the chosen method; output clamped to [0, 255].
inline GrayFrame reconstruct(Method method, const MeshPointSet& mesh, int width, int height,
                             const ResamplerConfig& resampler, const NweConfig& nwe, unsigned threads = 1)
{
    GrayFrame out;
    switch (method) {
    case Method::lin: out = interpolate_linear(mesh, width, height); break;
    case Method::cub: out = interpolate_cubic(mesh, width, height); break;
    case Method::nwe: out = interpolate_nwe(mesh, width, height, nwe, threads); break;
    case Method::fsmr:
    case Method::afsmr: {
        ResamplerConfig cfg = resampler;
        cfg.variant = method == Method::fsmr ? ResamplerVariant::fsmr : ResamplerVariant::afsmr;
        cfg.threads = threads;
        out = resample_frame(mesh, width, height, cfg);
        break;
    }
    }
    for (double& v : out.values())
        v = std::clamp(v, 0.0, 255.0);
    return out;
}

struct TimedReconstruction {
    GrayFrame frame;
    double runtime = 0.0;
};

/// Motion compensation plus resampling, timed together.
inline TimedReconstruction reconstruct_timed(Method method, const GrayFrame& prev, const MotionField& flow,
                                             const RunConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    const MeshPointSet mesh = motion_compensate_forward(prev, flow, cfg.temporal_position);
    GrayFrame frame = reconstruct(method, mesh, prev.width(), prev.height(), cfg.resampler, cfg.nwe, cfg.threads);
    const auto stop = std::chrono::steady_clock::now();
    return {std::move(frame), std::chrono::duration<double>(stop - start).count()};
}

// ---------------------------------------------------------------------------
// Config serialization

inline nlohmann::json to_json(const ResamplerConfig& r)
{
    return {{"block_size", r.block_size},
            {"border", r.border},
            {"rho", r.rho},
            {"sigma", r.sigma},
            {"max_iterations", r.max_iterations},
            {"residual_energy_stop", r.residual_energy_stop},
            {"key_points", r.key_points == KeyPointPlacement::whole_area ? "whole_area" : "central_block"}};
}

inline void from_json(const nlohmann::json& j, ResamplerConfig& r)
{
    r.block_size = j.value("block_size", r.block_size);
    r.border = j.value("border", r.border);
    r.rho = j.value("rho", r.rho);
    r.sigma = j.value("sigma", r.sigma);
    r.max_iterations = j.value("max_iterations", r.max_iterations);
    r.residual_energy_stop = j.value("residual_energy_stop", r.residual_energy_stop);
    if (j.contains("key_points")) {
        const auto placement = j.at("key_points").get<std::string>();
        if (placement == "whole_area")
            r.key_points = KeyPointPlacement::whole_area;
        else if (placement == "central_block")
            r.key_points = KeyPointPlacement::central_block;
        else
            throw std::invalid_argument("resampler.key_points must be whole_area or central_block");
    }
}

inline nlohmann::json to_json(const FlowSource& f)
{
    nlohmann::json j;
    switch (f.kind) {
    case FlowSource::Kind::flo_directory:
        j = {{"kind", "flo_directory"}, {"directory", f.directory.string()}, {"zero_unknown", f.zero_unknown}};
        break;
    case FlowSource::Kind::block_matching:
        j = {{"kind", "block_matching"},
             {"block_size", f.block_matching.block_size},
             {"search_range", f.block_matching.search_range}};
        break;
    case FlowSource::Kind::synthetic:
        if (const auto* t = std::get_if<GlobalTranslation>(&f.synthetic))
            j = {{"kind", "synthetic"}, {"model", "translation"}, {"dx", t->dx}, {"dy", t->dy}};
        else {
            const auto& a = std::get<AffineMotion>(f.synthetic);
            j = {{"kind", "synthetic"}, {"model", "affine"}, {"a11", a.a11}, {"a12", a.a12}, {"a21", a.a21},
                 {"a22", a.a22}, {"tx", a.tx}, {"ty", a.ty}};
        }
        break;
    }
    return j;
}

inline void from_json(const nlohmann::json& j, FlowSource& f)
{
    const auto kind = j.value("kind", std::string("synthetic"));
    if (kind == "flo_directory") {
        f.kind = FlowSource::Kind::flo_directory;
        f.directory = j.value("directory", std::string());
        f.zero_unknown = j.value("zero_unknown", false);
    } else if (kind == "block_matching") {
        f.kind = FlowSource::Kind::block_matching;
        f.block_matching.block_size = j.value("block_size", f.block_matching.block_size);
        f.block_matching.search_range = j.value("search_range", f.block_matching.search_range);
    } else if (kind == "synthetic") {
        f.kind = FlowSource::Kind::synthetic;
        const auto model = j.value("model", std::string("translation"));
        if (model == "translation") {
            f.synthetic = GlobalTranslation{j.value("dx", 0.0), j.value("dy", 0.0)};
        } else if (model == "affine") {
            AffineMotion a;
            a.a11 = j.value("a11", a.a11);
            a.a12 = j.value("a12", a.a12);
            a.a21 = j.value("a21", a.a21);
            a.a22 = j.value("a22", a.a22);
            a.tx = j.value("tx", a.tx);
            a.ty = j.value("ty", a.ty);
            f.synthetic = a;
        } else {
            throw std::invalid_argument("flow.model must be translation or affine");
        }
    } else {
        throw std::invalid_argument("flow.kind must be flo_directory, block_matching or synthetic");
    }
}

inline nlohmann::json to_json(const RunConfig& c)
{
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : c.methods)
        methods.push_back(to_string(m));
    return {{"input", c.input.string()},
            {"width", c.width},
            {"height", c.height},
            {"sequence", c.name()},
            {"flow", to_json(c.flow)},
            {"methods", methods},
            {"first_n", c.first_n},
            {"stride", c.stride},
            {"first_target", c.first_target},
            {"frame_numbering", "1-based"},
            {"temporal_position", c.temporal_position},
            {"resampler", to_json(c.resampler)},
            {"nwe", {{"bandwidth", c.nwe.bandwidth}, {"support_radius", c.nwe.radius()}}},
            {"output_dir", c.output_dir.string()},
            {"write_frames", c.write_frames},
            {"quantize_metrics", c.quantize_metrics},
            {"threads", resolve_threads(c.threads)}};
}

/// Reads a declarative run config; keys absent from `j` keep their defaults.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c = {})
{
    if (j.contains("input"))
        c.input = j.at("input").get<std::string>();
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.sequence_name = j.value("sequence", c.sequence_name);
    if (j.contains("flow"))
        from_json(j.at("flow"), c.flow);
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods"))
            c.methods.push_back(parse_method(m.get<std::string>()));
    }
    c.first_n = j.value("first_n", c.first_n);
    c.stride = j.value("stride", c.stride);
    c.first_target = j.value("first_target", c.first_target);
    c.temporal_position = j.value("temporal_position", c.temporal_position);
    if (j.contains("resampler"))
        from_json(j.at("resampler"), c.resampler);
    if (j.contains("nwe")) {
        c.nwe.bandwidth = j.at("nwe").value("bandwidth", c.nwe.bandwidth);
        c.nwe.support_radius = j.at("nwe").value("support_radius", c.nwe.support_radius);
    }
    if (j.contains("output_dir"))
        c.output_dir = j.at("output_dir").get<std::string>();
    c.write_frames = j.value("write_frames", c.write_frames);
    c.quantize_metrics = j.value("quantize_metrics", c.quantize_metrics);
    c.threads = j.value("threads", c.threads);
    return c;
}

// ---------------------------------------------------------------------------
// CSV output

namespace detail {

inline std::string format_number(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"')
            quoted += '"';
        quoted += c;
    }
    return quoted + '"';
}

}  // namespace detail

/// Columns: sequence,frame,method,psnr_db,ssim,runtime_s. Per-frame rows
/// first, then one row per method with frame "avg".
inline void write_metrics_csv(const FrucReport& report, std::ostream& out)
{
    out << "sequence,frame,method,psnr_db,ssim,runtime_s\n";
    for (const auto& r : report.rows)
        out << detail::csv_field(r.sequence) << ',' << r.frame_index << ',' << to_string(r.method) << ','
            << detail::format_number(r.psnr) << ',' << detail::format_number(r.ssim) << ','
            << detail::format_number(r.runtime) << '\n';
    for (const auto& a : report.averages)
        out << detail::csv_field(report.sequence) << ",avg," << to_string(a.method) << ','
            << detail::format_number(a.psnr) << ',' << detail::format_number(a.ssim) << ','
            << detail::format_number(a.runtime) << '\n';
}

inline void write_metrics_csv(const FrucReport& report, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot create '" + path.string() + "'");
    write_metrics_csv(report, out);
}

/// Columns: area_left,area_top,block_left,block_top,mesh_points,key_points,
/// iteration,k,l,coefficient,energy. Fallback areas contribute one row with
/// iteration 0 and empty model columns.
inline void write_model_trace_csv(const std::vector<AreaTrace>& traces, std::ostream& out)
{
    out << "area_left,area_top,block_left,block_top,mesh_points,key_points,iteration,k,l,coefficient,energy\n";
    for (const auto& t : traces) {
        const auto prefix = std::to_string(t.area.left) + ',' + std::to_string(t.area.top) + ',' +
                            std::to_string(t.area.block_left) + ',' + std::to_string(t.area.block_top) + ',' +
                            std::to_string(t.mesh_points) + ',' + std::to_string(t.key_points) + ',';
        if (t.fallback) {
            out << prefix << "0,,,,\n";
            continue;
        }
        for (std::size_t i = 0; i < t.selections.size(); ++i) {
            const auto& s = t.selections[i];
            out << prefix << (i + 1) << ',' << s.k << ',' << s.l << ',' << detail::format_number(s.coefficient)
                << ',' << detail::format_number(s.energy) << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Protocol

namespace detail {

inline MotionField obtain_flow(const RunConfig& cfg, int c, const GrayFrame& prev, const GrayFrame* next)
{
    MotionField flow;
    switch (cfg.flow.kind) {
    case FlowSource::Kind::flo_directory: {
        const auto path = cfg.flow.directory / flow_file_name(c - 1, c + 1);
        if (!std::filesystem::exists(path))
            throw IoError("missing flow file '" + path.string() + "'");
        flow = read_flo(path, FloReadOptions{cfg.flow.zero_unknown});
        break;
    }
    case FlowSource::Kind::block_matching: {
        BlockMatchConfig bm = cfg.flow.block_matching;
        bm.threads = cfg.threads;
        flow = estimate_block_matching(prev, *next, bm);
        break;
    }
    case FlowSource::Kind::synthetic:
        flow = synthesize_flow(cfg.flow.synthetic, prev.width(), prev.height());
        break;
    }
    if (flow.width() != prev.width() || flow.height() != prev.height())
        throw std::invalid_argument("flow " + std::to_string(flow.width()) + "x" + std::to_string(flow.height()) +
                                    " does not match frame " + std::to_string(prev.width()) + "x" +
                                    std::to_string(prev.height()));
    return flow;
}

}  // namespace detail

/// Reconstructs every target frame c from frame c-1 and the c-1 -> c+1 flow
/// with each selected method, scoring against the true frame c. Frame c+1 is
/// only read when the flow source estimates motion from it.
inline FrucReport run_fruc(const RunConfig& cfg)
{
    cfg.validate();
    const auto targets = target_frames(cfg);
    const auto available = count_yuv_frames(cfg.input, cfg.width, cfg.height);
    const int last_needed = targets.back() + (cfg.flow.needs_next_frame() ? 1 : 0);
    if (static_cast<std::size_t>(last_needed) > available)
        throw IoError("'" + cfg.input.string() + "' has " + std::to_string(available) + " frames, protocol needs " +
                      std::to_string(last_needed));

    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        if (cfg.write_frames)
            std::filesystem::create_directories(cfg.output_dir / "frames");
        std::ofstream(cfg.output_dir / "config.json") << to_json(cfg).dump(2) << '\n';
    }

    FrucReport report;
    report.sequence = cfg.name();
    for (int c : targets) {
        const GrayFrame prev = read_yuv_frame(cfg.input, static_cast<std::size_t>(c - 2), cfg.width, cfg.height);
        const GrayFrame truth = read_yuv_frame(cfg.input, static_cast<std::size_t>(c - 1), cfg.width, cfg.height);
        std::optional<GrayFrame> next;
        if (cfg.flow.needs_next_frame())
            next = read_yuv_frame(cfg.input, static_cast<std::size_t>(c), cfg.width, cfg.height);

        MotionField flow;
        try {
            flow = detail::obtain_flow(cfg, c, prev, next ? &*next : nullptr);
        } catch (const std::exception& e) {
            throw std::runtime_error("frame " + std::to_string(c) + ": " + e.what());
        }

        for (Method method : cfg.methods) {
            TimedReconstruction rec;
            try {
                rec = reconstruct_timed(method, prev, flow, cfg);
            } catch (const std::exception& e) {
                throw std::runtime_error("frame " + std::to_string(c) + ", " + to_string(method) + ": " + e.what());
            }
            const GrayFrame scored = cfg.quantize_metrics ? quantize(rec.frame) : rec.frame;
            report.rows.push_back({report.sequence, c, method, psnr(truth, scored), ssim(truth, scored), rec.runtime});
            if (!cfg.output_dir.empty() && cfg.write_frames)
                write_frame_pgm(rec.frame,
                                cfg.output_dir / "frames" / (to_string(method) + "_" + std::to_string(c) + ".pgm"));
        }
    }

    for (Method method : cfg.methods) {
        MethodSummary s;
        s.method = method;
        for (const auto& r : report.rows)
            if (r.method == method) {
                ++s.frames;
                s.psnr += r.psnr;
                s.ssim += r.ssim;
                s.runtime += r.runtime;
            }
        s.psnr /= s.frames;
        s.ssim /= s.frames;
        s.runtime /= s.frames;
        report.averages.push_back(s);
    }

    if (!cfg.output_dir.empty())
        write_metrics_csv(report, cfg.output_dir / "metrics.csv");
    return report;
}

// ---------------------------------------------------------------------------
// Runtime comparison

struct TimingRow {
    Method method = Method::afsmr;
    int frames = 0;
    double average_runtime = 0.0;
    std::optional<double> speedup_vs_fsmr;  ///< FSMR runtime / this runtime
};

struct TimingReport {
    std::string sequence;
    unsigned threads = 1;
    std::vector<TimingRow> rows;
};

inline TimingReport timing_from(const FrucReport& fruc, unsigned threads)
{
    TimingReport t;
    t.sequence = fruc.sequence;
    t.threads = threads;
    std::optional<double> fsmr;
    for (const auto& a : fruc.averages)
        if (a.method == Method::fsmr)
            fsmr = a.runtime;
    for (const auto& a : fruc.averages) {
        TimingRow row{a.method, a.frames, a.runtime, std::nullopt};
        if (fsmr)
            row.speedup_vs_fsmr = *fsmr / a.runtime;
        t.rows.push_back(row);
    }
    return t;
}

/// Columns: sequence,method,frames,avg_runtime_s[,speedup_vs_fsmr],threads.
/// The speed-up column is present only when FSMR was timed.
inline void write_timing_csv(const TimingReport& t, std::ostream& out)
{
    const bool speedup = std::any_of(t.rows.begin(), t.rows.end(),
                                     [](const TimingRow& r) { return r.speedup_vs_fsmr.has_value(); });
    out << "sequence,method,frames,avg_runtime_s" << (speedup ? ",speedup_vs_fsmr" : "") << ",threads\n";
    for (const auto& r : t.rows) {
        out << detail::csv_field(t.sequence) << ',' << to_string(r.method) << ',' << r.frames << ','
            << detail::format_number(r.average_runtime);
        if (speedup)
            out << ',' << detail::format_number(*r.speedup_vs_fsmr);
        out << ',' << t.threads << '\n';
    }
}

inline TimingReport run_timing(const RunConfig& cfg)
{
    RunConfig quiet = cfg;
    quiet.output_dir.clear();
    const auto report = run_fruc(quiet);
    auto timing = timing_from(report, resolve_threads(cfg.threads));
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream(cfg.output_dir / "config.json") << to_json(cfg).dump(2) << '\n';
        std::ofstream out(cfg.output_dir / "timing.csv", std::ios::trunc);
        if (!out)
            throw IoError("cannot create '" + (cfg.output_dir / "timing.csv").string() + "'");
        write_timing_csv(timing, out);
    }
    return timing;
}

}  // namespace afsmr
