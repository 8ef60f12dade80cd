#pragma once

#include <afsmr/baselines.hpp>
#include <afsmr/image.hpp>
#include <afsmr/parallel.hpp>
#include <afsmr/spatial_index.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace afsmr {

enum class ResamplerVariant {
    afsmr,  ///< model built from mesh points only
    fsmr,   ///< mesh points plus cubic-interpolated key points at grid positions
};

enum class KeyPointPlacement {
    whole_area,     ///< one key point per grid position of the reconstruction area
    central_block,  ///< key points only inside the central block
};

struct ResamplerConfig {
    int block_size = 4;               ///< B: side of the central block
    int border = 4;                   ///< D: support border around the block
    double rho = 0.8;                 ///< spatial weight decay, 0 < rho < 1
    double sigma = 0.7;               ///< spectral weight decay, 0 < sigma < 1
    int max_iterations = 200;
    double residual_energy_stop = 0.0;  ///< stop once weighted energy <= this
    ResamplerVariant variant = ResamplerVariant::afsmr;
    KeyPointPlacement key_points = KeyPointPlacement::whole_area;
    unsigned threads = 1;             ///< 0 = one per hardware thread

    int area_size() const { return block_size + 2 * border; }

    void validate() const
    {
        if (block_size < 1)
            throw std::invalid_argument("resampler: block_size must be >= 1");
        if (border < 0)
            throw std::invalid_argument("resampler: border must be >= 0");
        if (!(rho > 0.0 && rho < 1.0))
            throw std::invalid_argument("resampler: rho must lie in (0, 1)");
        if (!(sigma > 0.0 && sigma < 1.0))
            throw std::invalid_argument("resampler: sigma must lie in (0, 1)");
        if (max_iterations < 1)
            throw std::invalid_argument("resampler: max_iterations must be >= 1");
        if (!(residual_energy_stop >= 0.0))
            throw std::invalid_argument("resampler: residual_energy_stop must be >= 0");
    }
};

/// Placement of one reconstruction area: a central block plus its support
/// border, cropped to the frame. All fields are in frame pixels.
struct AreaDescriptor {
    int left = 0, top = 0;          ///< area origin
    int width = 0, height = 0;      ///< M x N
    int block_left = 0, block_top = 0;
    int block_width = 0, block_height = 0;

    int block_offset_x() const { return block_left - left; }
    int block_offset_y() const { return block_top - top; }

    friend bool operator==(const AreaDescriptor&, const AreaDescriptor&) = default;
};

/// Points assigned to one area, in area-local coordinates
/// (0 <= x < M, 0 <= y < N). Mesh points come first, in mesh order; any key
/// points follow.
struct ReconstructionArea {
    AreaDescriptor desc;
    std::vector<double> xs, ys, vals;
    std::size_t mesh_points = 0;

    std::size_t size() const { return xs.size(); }
    bool empty() const { return xs.empty(); }
};

/// Separable 2-D DCT-II basis on an M x N area, evaluated at continuous
/// positions. Unnormalized: phi(0,0) == 1.
class BasisEvaluator {
public:
    BasisEvaluator(int width, int height) : width_(width), height_(height) {}

    int width() const { return width_; }
    int height() const { return height_; }

    double horizontal(int k, double x) const
    {
        return std::cos(std::numbers::pi * k * (2.0 * x + 1.0) / (2.0 * width_));
    }
    double vertical(int l, double y) const
    {
        return std::cos(std::numbers::pi * l * (2.0 * y + 1.0) / (2.0 * height_));
    }
    double operator()(int k, int l, double x, double y) const { return horizontal(k, x) * vertical(l, y); }

    /// Row i holds horizontal(k, xs[i]) for k = 0..M-1.
    Eigen::MatrixXd horizontal_table(const std::vector<double>& xs) const
    {
        Eigen::MatrixXd t(static_cast<Eigen::Index>(xs.size()), width_);
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (int k = 0; k < width_; ++k)
                t(i, k) = horizontal(k, xs[static_cast<std::size_t>(i)]);
        return t;
    }
    /// Row i holds vertical(l, ys[i]) for l = 0..N-1.
    Eigen::MatrixXd vertical_table(const std::vector<double>& ys) const
    {
        Eigen::MatrixXd t(static_cast<Eigen::Index>(ys.size()), height_);
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (int l = 0; l < height_; ++l)
                t(i, l) = vertical(l, ys[static_cast<std::size_t>(i)]);
        return t;
    }

private:
    int width_;
    int height_;
};

struct BasisSelection {
    int k = 0;
    int l = 0;
    double coefficient = 0.0;
    double energy = 0.0;  ///< weighted residual energy after the update
};

/// Accumulated model of one area.
struct ModelState {
    Eigen::MatrixXd coefficients;  ///< M x N, indexed (k, l)
    Eigen::VectorXd residual;      ///< one entry per area point
    int iterations = 0;
    double energy = 0.0;           ///< current weighted residual energy
    std::vector<BasisSelection> trace;
    std::vector<double> energy_history;  ///< energy before iteration 1, then after each iteration
};

// ---------------------------------------------------------------------------
// Weights

/// Isotropic spatial window centred on the area.
inline double spatial_weight(double x, double y, int width, int height, double rho)
{
    const double dx = x - (width - 1) / 2.0;
    const double dy = y - (height - 1) / 2.0;
    return std::pow(rho, std::sqrt(dx * dx + dy * dy));
}

inline double spatial_weight(double x, double y, const AreaDescriptor& area, const ResamplerConfig& cfg)
{
    return spatial_weight(x, y, area.width, area.height, cfg.rho);
}

/// Frequency prior favouring low (k, l).
inline double spectral_weight(int k, int l, double sigma)
{
    return std::pow(sigma, std::sqrt(static_cast<double>(k) * k + static_cast<double>(l) * l));
}

inline double spectral_weight(int k, int l, const ResamplerConfig& cfg)
{
    return spectral_weight(k, l, cfg.sigma);
}

// ---------------------------------------------------------------------------
// Partitioning

/// Tiles the frame with B x B central blocks (the last row/column may be
/// smaller) and attaches a border of D pixels to each, cropped to the frame.
inline std::vector<AreaDescriptor> partition(int frame_width, int frame_height, const ResamplerConfig& cfg)
{
    cfg.validate();
    if (frame_width < 1 || frame_height < 1)
        throw std::invalid_argument("partition: frame dimensions must be >= 1");

    std::vector<AreaDescriptor> areas;
    const int b = cfg.block_size, d = cfg.border;
    for (int top = 0; top < frame_height; top += b)
        for (int left = 0; left < frame_width; left += b) {
            AreaDescriptor a;
            a.block_left = left;
            a.block_top = top;
            a.block_width = std::min(b, frame_width - left);
            a.block_height = std::min(b, frame_height - top);
            a.left = std::max(0, left - d);
            a.top = std::max(0, top - d);
            a.width = std::min(frame_width, left + a.block_width + d) - a.left;
            a.height = std::min(frame_height, top + a.block_height + d) - a.top;
            areas.push_back(a);
        }
    return areas;
}

inline bool area_contains(const AreaDescriptor& area, double x, double y)
{
    const double lx = x - area.left, ly = y - area.top;
    return lx >= 0.0 && lx < area.width && ly >= 0.0 && ly < area.height;
}

/// Selects the mesh points inside the area's half-open extent. Points in
/// overlapping borders belong to every area that contains them.
inline ReconstructionArea gather_mesh(const AreaDescriptor& area, const MeshPointSet& mesh)
{
    ReconstructionArea out;
    out.desc = area;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (!area_contains(area, mesh.xs[i], mesh.ys[i]))
            continue;
        out.xs.push_back(mesh.xs[i] - area.left);
        out.ys.push_back(mesh.ys[i] - area.top);
        out.vals.push_back(mesh.vals[i]);
    }
    out.mesh_points = out.xs.size();
    return out;
}

/// Appends key points at grid positions, valued from `estimate` (a full-frame
/// pre-estimate, e.g. cubic interpolation of the mesh).
inline void add_key_points(ReconstructionArea& area, const GrayFrame& estimate, KeyPointPlacement placement)
{
    const auto& d = area.desc;
    int x0 = 0, y0 = 0, x1 = d.width, y1 = d.height;
    if (placement == KeyPointPlacement::central_block) {
        x0 = d.block_offset_x();
        y0 = d.block_offset_y();
        x1 = x0 + d.block_width;
        y1 = y0 + d.block_height;
    }
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            area.xs.push_back(x);
            area.ys.push_back(y);
            area.vals.push_back(estimate(d.left + x, d.top + y));
        }
}

// ---------------------------------------------------------------------------
// Model generation

/// Iterative frequency-selective model for one area. Holds the basis tables
/// at the area points, the spatial weights and the per-frequency weighted
/// basis energies, which stay fixed across iterations.
class FrequencySelectiveModel {
public:
    /// Frequencies whose weighted basis energy falls below this fraction of
    /// the DC energy cannot be estimated.
    static constexpr double kUnavailableRelative = 1e-12;

    FrequencySelectiveModel(const ReconstructionArea& area, const ResamplerConfig& cfg)
        : area_(area), cfg_(cfg), basis_(area.desc.width, area.desc.height)
    {
        if (area.empty())
            throw std::invalid_argument("frequency-selective model needs at least one point");
        const int m = area.desc.width, n = area.desc.height;
        const auto points = static_cast<Eigen::Index>(area.size());

        horizontal_ = basis_.horizontal_table(area.xs);
        vertical_ = basis_.vertical_table(area.ys);
        weights_.resize(points);
        for (Eigen::Index i = 0; i < points; ++i)
            weights_[i] = spatial_weight(area.xs[i], area.ys[i], m, n, cfg.rho);

        // sum_i w_i phi_kl(p_i)^2 = H2^T diag(w) V2
        const Eigen::MatrixXd h2 = horizontal_.array().square().matrix();
        const Eigen::MatrixXd v2 = vertical_.array().square().matrix();
        basis_energy_ = h2.transpose() * (weights_.asDiagonal() * v2);

        spectral_.resize(m, n);
        for (int k = 0; k < m; ++k)
            for (int l = 0; l < n; ++l)
                spectral_(k, l) = spectral_weight(k, l, cfg.sigma);
        available_threshold_ = kUnavailableRelative * basis_energy_(0, 0);

        state_.coefficients = Eigen::MatrixXd::Zero(m, n);
        state_.residual = Eigen::Map<const Eigen::VectorXd>(area.vals.data(), points);
        state_.energy = weighted_energy();
        state_.energy_history.push_back(state_.energy);
        scratch_.resize(points, n);
    }

    /// Resumes from an existing state of the same area.
    FrequencySelectiveModel(const ReconstructionArea& area, const ResamplerConfig& cfg, ModelState resume)
        : FrequencySelectiveModel(area, cfg)
    {
        if (static_cast<std::size_t>(resume.residual.size()) != area.size() ||
            resume.coefficients.rows() != area.desc.width || resume.coefficients.cols() != area.desc.height)
            throw std::invalid_argument("frequency-selective model: state does not match area");
        state_ = std::move(resume);
        state_.energy = weighted_energy();
    }

    const ModelState& state() const { return state_; }
    ModelState release() { return std::move(state_); }
    const Eigen::VectorXd& weights() const { return weights_; }
    const BasisEvaluator& basis() const { return basis_; }

    bool available(int k, int l) const { return basis_energy_(k, l) > available_threshold_; }

    /// Weighted projections sum_i r_i phi_kl(p_i) w_i of the current residual
    /// onto every basis function, as an M x N array.
    const Eigen::MatrixXd& projections()
    {
        scratch_.noalias() = (weights_.cwiseProduct(state_.residual)).asDiagonal() * vertical_;
        projections_.noalias() = horizontal_.transpose() * scratch_;
        return projections_;
    }

    /// Coefficient minimizing the weighted residual energy for (k, l) alone.
    std::optional<double> coefficient(int k, int l)
    {
        if (!available(k, l))
            return std::nullopt;
        return projections()(k, l) / basis_energy_(k, l);
    }

    struct Candidate {
        int k = 0, l = 0;
        double coefficient = 0.0;
        double gain = 0.0;  ///< energy decrease times spectral weight
    };

    /// Frequency with the largest spectrally weighted energy decrease; ties go
    /// to the lexicographically smallest (k, l).
    std::optional<Candidate> select()
    {
        const auto& proj = projections();
        std::optional<Candidate> best;
        for (int k = 0; k < proj.rows(); ++k)
            for (int l = 0; l < proj.cols(); ++l) {
                if (!available(k, l))
                    continue;
                const double energy = basis_energy_(k, l);
                const double c = proj(k, l) / energy;
                const double gain = c * c * energy * spectral_(k, l);
                if (!best || gain > best->gain)
                    best = Candidate{k, l, c, gain};
            }
        return best;
    }

    /// One iteration. Returns false when no frequency is available or none
    /// would lower the energy; the state is unchanged then.
    bool step()
    {
        const auto best = select();
        if (!best || best->gain <= 0.0)
            return false;
        apply(best->k, best->l, best->coefficient);
        return true;
    }

    /// Adds c * phi_kl to the model and updates residual and energy.
    void apply(int k, int l, double c)
    {
        state_.coefficients(k, l) += c;
        state_.residual.noalias() -= c * horizontal_.col(k).cwiseProduct(vertical_.col(l));
        state_.energy = weighted_energy();
        ++state_.iterations;
        state_.trace.push_back({k, l, c, state_.energy});
        state_.energy_history.push_back(state_.energy);
    }

    void run()
    {
        while (state_.iterations < cfg_.max_iterations) {
            if (state_.energy <= cfg_.residual_energy_stop)
                break;
            if (!step())
                break;
        }
    }

private:
    double weighted_energy() const { return weights_.dot(state_.residual.cwiseAbs2()); }

    const ReconstructionArea& area_;
    ResamplerConfig cfg_;
    BasisEvaluator basis_;
    Eigen::MatrixXd horizontal_;    // P x M
    Eigen::MatrixXd vertical_;      // P x N
    Eigen::VectorXd weights_;       // P
    Eigen::MatrixXd basis_energy_;  // M x N
    Eigen::MatrixXd spectral_;      // M x N
    double available_threshold_ = 0.0;
    ModelState state_;
    Eigen::MatrixXd scratch_;
    Eigen::MatrixXd projections_;
};

/// Initial state for an area: zero model, residual equal to the point values.
inline ModelState initial_state(const ReconstructionArea& area, const ResamplerConfig& cfg)
{
    return FrequencySelectiveModel(area, cfg).release();
}

/// Weighted least-squares coefficient of phi_kl against the state's residual,
/// summed directly over the area points in extended precision. nullopt when
/// phi_kl carries no weighted energy at the points.
inline std::optional<double> estimate_coefficient(int k, int l, const ModelState& state,
                                                  const ReconstructionArea& area, const ResamplerConfig& cfg)
{
    const auto& d = area.desc;
    if (k < 0 || l < 0 || k >= d.width || l >= d.height)
        throw std::out_of_range("estimate_coefficient: frequency outside the area");
    if (static_cast<std::size_t>(state.residual.size()) != area.size())
        throw std::invalid_argument("estimate_coefficient: residual does not match area points");

    // Near-zero coefficients come from heavily cancelling sums, so the basis
    // and weights are evaluated in long double too.
    constexpr long double pi = std::numbers::pi_v<long double>;
    const long double cx = (d.width - 1) / 2.0L, cy = (d.height - 1) / 2.0L;
    long double num = 0.0L, den = 0.0L, dc = 0.0L;
    for (std::size_t i = 0; i < area.size(); ++i) {
        const long double x = area.xs[i], y = area.ys[i];
        const long double w = std::pow(static_cast<long double>(cfg.rho),
                                       std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy)));
        const long double phi = std::cos(pi * k * (2 * x + 1) / (2.0L * d.width)) *
                                std::cos(pi * l * (2 * y + 1) / (2.0L * d.height));
        num += state.residual[static_cast<Eigen::Index>(i)] * phi * w;
        den += w * phi * phi;
        dc += w;
    }
    if (!(den > FrequencySelectiveModel::kUnavailableRelative * dc))
        return std::nullopt;
    return static_cast<double>(num / den);
}

/// Best-fitting frequency for the state's residual, or nullopt when no
/// frequency can be estimated.
inline std::optional<std::pair<int, int>> select_basis(const ModelState& state, const ReconstructionArea& area,
                                                       const ResamplerConfig& cfg)
{
    if (area.empty())
        return std::nullopt;
    FrequencySelectiveModel model(area, cfg, state);
    const auto best = model.select();
    if (!best)
        return std::nullopt;
    return std::pair{best->k, best->l};
}

/// Runs the iterative model generation on an area. Returns nullopt for an
/// area without points; the frame driver fills those blocks separately.
/// For the FSMR variant, `key_estimate` supplies the key point values and is
/// required.
inline std::optional<ModelState> generate_model(const ReconstructionArea& area, const ResamplerConfig& cfg,
                                                const GrayFrame* key_estimate = nullptr)
{
    cfg.validate();
    if (cfg.variant == ResamplerVariant::fsmr) {
        if (!key_estimate)
            throw std::invalid_argument("FSMR model generation needs a key point estimate");
        ReconstructionArea augmented = area;
        add_key_points(augmented, *key_estimate, cfg.key_points);
        if (augmented.mesh_points == 0)
            return std::nullopt;
        FrequencySelectiveModel model(augmented, cfg);
        model.run();
        return model.release();
    }
    if (area.empty())
        return std::nullopt;
    FrequencySelectiveModel model(area, cfg);
    model.run();
    return model.release();
}

/// Evaluates the model at the integer positions of the central block via a
/// separable inverse transform. Result is block_width x block_height.
inline GrayFrame synthesize_grid(const ModelState& state, const AreaDescriptor& area)
{
    const BasisEvaluator basis(area.width, area.height);
    Eigen::MatrixXd gx(area.block_width, area.width);
    for (int i = 0; i < area.block_width; ++i)
        for (int k = 0; k < area.width; ++k)
            gx(i, k) = basis.horizontal(k, area.block_offset_x() + i);
    Eigen::MatrixXd gy(area.block_height, area.height);
    for (int j = 0; j < area.block_height; ++j)
        for (int l = 0; l < area.height; ++l)
            gy(j, l) = basis.vertical(l, area.block_offset_y() + j);

    const Eigen::MatrixXd patch = gx * state.coefficients * gy.transpose();  // (i, j)
    GrayFrame out(area.block_width, area.block_height);
    for (int j = 0; j < area.block_height; ++j)
        for (int i = 0; i < area.block_width; ++i)
            out(i, j) = patch(i, j);
    return out;
}

inline GrayFrame synthesize_grid(const ModelState& state, const ReconstructionArea& area)
{
    return synthesize_grid(state, area.desc);
}

// ---------------------------------------------------------------------------
// Frame driver

/// Per-area record of the model generation, for trace dumps.
struct AreaTrace {
    AreaDescriptor area;
    std::size_t mesh_points = 0;
    std::size_t key_points = 0;
    bool fallback = false;
    std::vector<BasisSelection> selections;
};

namespace detail {

/// Mesh indices bucketed by B x B cell, ascending within each bucket.
class BlockBuckets {
public:
    BlockBuckets(const MeshPointSet& mesh, int width, int height, int cell)
        : cell_(cell), cols_((width + cell - 1) / cell), rows_((height + cell - 1) / cell),
          buckets_(static_cast<std::size_t>(cols_) * rows_)
    {
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            const double x = mesh.xs[i], y = mesh.ys[i];
            if (!(x >= 0.0 && x < width && y >= 0.0 && y < height))
                continue;
            const int c = std::min(static_cast<int>(x) / cell_, cols_ - 1);
            const int r = std::min(static_cast<int>(y) / cell_, rows_ - 1);
            buckets_[static_cast<std::size_t>(r) * cols_ + c].push_back(i);
        }
    }

    ReconstructionArea gather(const AreaDescriptor& area, const MeshPointSet& mesh) const
    {
        std::vector<std::size_t> picked;
        const int c0 = area.left / cell_, c1 = std::min(cols_ - 1, (area.left + area.width - 1) / cell_);
        const int r0 = area.top / cell_, r1 = std::min(rows_ - 1, (area.top + area.height - 1) / cell_);
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c)
                for (auto i : buckets_[static_cast<std::size_t>(r) * cols_ + c])
                    if (area_contains(area, mesh.xs[i], mesh.ys[i]))
                        picked.push_back(i);
        std::sort(picked.begin(), picked.end());

        ReconstructionArea out;
        out.desc = area;
        out.xs.reserve(picked.size());
        out.ys.reserve(picked.size());
        out.vals.reserve(picked.size());
        for (auto i : picked) {
            out.xs.push_back(mesh.xs[i] - area.left);
            out.ys.push_back(mesh.ys[i] - area.top);
            out.vals.push_back(mesh.vals[i]);
        }
        out.mesh_points = out.xs.size();
        return out;
    }

private:
    int cell_, cols_, rows_;
    std::vector<std::vector<std::size_t>> buckets_;
};

}  // namespace detail

/// Resamples an irregular mesh onto the width x height grid, area by area.
/// Areas without mesh points take, per pixel, the value of the nearest mesh
/// point. Output values are clamped to [0, 255].
inline GrayFrame resample_frame(const MeshPointSet& mesh, int width, int height, const ResamplerConfig& cfg,
                                std::vector<AreaTrace>* traces = nullptr)
{
    cfg.validate();
    mesh.validate();
    if (mesh.empty())
        throw std::invalid_argument("resample_frame: mesh is empty, nothing to resample");

    const auto areas = partition(width, height, cfg);
    std::optional<GrayFrame> key_estimate;
    if (cfg.variant == ResamplerVariant::fsmr)
        key_estimate = interpolate_cubic(mesh, width, height);

    const detail::BlockBuckets buckets(mesh, width, height, std::max(cfg.block_size, 8));
    const PointGrid nearest(mesh.xs, mesh.ys);
    GrayFrame out(width, height);
    if (traces)
        traces->assign(areas.size(), {});

    parallel_for(areas.size(), cfg.threads, [&](std::size_t a) {
        const auto& desc = areas[a];
        ReconstructionArea area = buckets.gather(desc, mesh);
        const std::size_t mesh_points = area.size();
        std::optional<ModelState> state;
        if (mesh_points > 0) {
            if (key_estimate)
                add_key_points(area, *key_estimate, cfg.key_points);
            FrequencySelectiveModel model(area, cfg);
            model.run();
            state = model.release();
        }

        if (state) {
            const GrayFrame patch = synthesize_grid(*state, desc);
            for (int j = 0; j < desc.block_height; ++j)
                for (int i = 0; i < desc.block_width; ++i)
                    out(desc.block_left + i, desc.block_top + j) = std::clamp(patch(i, j), 0.0, 255.0);
        } else {
            for (int j = 0; j < desc.block_height; ++j)
                for (int i = 0; i < desc.block_width; ++i) {
                    const int m = desc.block_left + i, n = desc.block_top + j;
                    out(m, n) = std::clamp(mesh.vals[nearest.nearest(m, n)], 0.0, 255.0);
                }
        }

        if (traces) {
            auto& t = (*traces)[a];
            t.area = desc;
            t.mesh_points = mesh_points;
            t.key_points = area.size() - mesh_points;
            t.fallback = !state;
            if (state)
                t.selections = state->trace;
        }
    });
    return out;
}

}  // namespace afsmr
