#include <texsr/cli.hpp>

#include <texsr/appearance_sr.hpp>
#include <texsr/dataset.hpp>
#include <texsr/error.hpp>
#include <texsr/metrics.hpp>
#include <texsr/parallel.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace texsr::cli {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions
{
    int threads = 1;
    unsigned long long seed = 0;
};

struct SplatOptions
{
    SplatConfig config;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--sigma", config.sigma, "Gaussian footprint sigma in pixels")->capture_default_str();
        cmd->add_option("--radius", config.radius, "footprint truncation radius in pixels")->capture_default_str();
        cmd->add_option("--depth-epsilon", config.depth_epsilon, "relative depth tolerance for visibility")
            ->capture_default_str();
    }
};

struct RetrievalOptions
{
    RetrievalConfig config;
    std::string mode = "backprojection";

    void attach(CLI::App* cmd, bool with_mode)
    {
        if (with_mode) {
            cmd->add_option("--mode", mode, "backprojection or least_squares")
                ->check(CLI::IsMember({"backprojection", "least_squares"}))
                ->capture_default_str();
        }
        cmd->add_option("--lambda", config.lambda, "Tikhonov weight (least_squares)")->capture_default_str();
        cmd->add_option("--max-iters", config.max_iters, "CGLS iteration limit")->capture_default_str();
        cmd->add_option("--tol", config.tol, "relative CGLS tolerance")->capture_default_str();
    }

    RetrievalConfig resolved() const
    {
        RetrievalConfig c = config;
        c.mode = parse_retrieval_mode(mode);
        return c;
    }
};

class Session
{
public:
    explicit Session(CommandResult& result)
        : m_result(result)
    {}

    void out(const std::string& line) { m_result.output.push_back(line); }
    void log(const std::string& line) { m_result.log.push_back(line); }

    void artifact(const fs::path& path, const std::string& what)
    {
        if (!fs::is_regular_file(path)) fail(ErrorCode::IoError, "expected artifact was not written: " + path.string());
        m_result.artifacts.push_back(path.string());
        out(what + "=" + path.string());
    }

private:
    CommandResult& m_result;
};

std::string join_counts(std::size_t active, std::size_t unseen)
{
    return "active_texels=" + std::to_string(active) + " unseen_texels=" + std::to_string(unseen);
}

// --- subcommands -----------------------------------------------------------

struct RetrieveArgs
{
    std::string manifest;
    int scale = 1;
    RetrievalOptions retrieval;
    SplatOptions splat;
};

void run_retrieve(const RetrieveArgs& args, Session& s)
{
    SceneManifest m = read_manifest(args.manifest);
    const RetrievalResult r = retrieve_scale(m, args.scale, args.retrieval.resolved(), args.splat.config);
    write_manifest(args.manifest, m);
    const ScaleEntry& e = m.scale_entry(args.scale);
    s.artifact(m.resolve(e.texture), "texture");
    s.artifact(m.resolve(e.mask), "mask");
    s.artifact(args.manifest, "manifest");
    s.out(join_counts(r.texture.active_count(), r.unseen_count));
    if (args.retrieval.resolved().mode == RetrievalMode::LeastSquares) {
        s.out("cgls_iterations=" + std::to_string(r.iterations) + " converged=" + (r.converged ? "true" : "false"));
    }
    if (r.unseen_count > 0) s.log("warning: " + std::to_string(r.unseen_count) + " active texels are not observed");
}

struct RenderArgs
{
    std::string manifest;
    int scale = 1;
    std::string texture;
    std::string mask;
    std::string out_dir;
    SplatOptions splat;
};

void run_render(const RenderArgs& args, Session& s)
{
    const SceneManifest m = read_manifest(args.manifest);
    const ScaleEntry& e = m.scale_entry(args.scale);
    const TriangleMesh mesh = load_mesh(m.resolve(m.mesh));
    const TexelAtlasMap atlas = rasterize_atlas(mesh, m.atlas_width / args.scale, m.atlas_height / args.scale);
    TextureAtlas texture = read_texture_png(args.texture, args.mask);
    if (texture.width != atlas.width() || texture.height != atlas.height()) {
        fail(ErrorCode::DimensionMismatch, args.texture + " does not match the " + scale_dir(args.scale) + " atlas");
    }
    if (args.mask.empty()) {
        texture.mask = atlas.mask();
        sanitize(texture);
    }
    const auto cameras = load_cameras(m, e);
    fs::create_directories(args.out_dir);
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        const SparseProjectionOperator op = build_operator(atlas, mesh, cameras[v], args.splat.config);
        const ViewImage img = apply_forward(op, texture);
        const fs::path out = fs::path(args.out_dir) / (fs::path(e.cameras[v]).stem().string() + ".png");
        write_view_image(out, img);
        s.artifact(out, "image");
    }
}

struct BakeArgs
{
    std::string manifest;
    int scale = 1;
    std::string out;
};

void run_bake(const BakeArgs& args, Session& s)
{
    SceneManifest m = read_manifest(args.manifest);
    ScaleEntry* e = m.find_scale(args.scale);
    if (!e) fail(ErrorCode::MissingFile, "manifest has no " + scale_dir(args.scale) + " entry");
    const TriangleMesh mesh = load_mesh(m.resolve(m.mesh));
    const TexelAtlasMap atlas = rasterize_atlas(mesh, m.atlas_width / args.scale, m.atlas_height / args.scale);
    const NormalMapImage normals = bake_normal_map(atlas);
    fs::path out;
    if (args.out.empty()) {
        fs::create_directories(m.root / scale_dir(args.scale));
        e->normals = scale_dir(args.scale) + "/normals.png";
        out = m.resolve(e->normals);
    } else {
        out = args.out;
    }
    write_normal_map(out, normals);
    s.artifact(out, "normals");
    if (args.out.empty()) {
        write_manifest(args.manifest, m);
        s.artifact(args.manifest, "manifest");
    }
    s.out("active_texels=" + std::to_string(atlas.active_count()) +
          " degenerate_faces=" + std::to_string(atlas.degenerate_faces));
}

struct GenLrArgs
{
    std::string manifest;
    int factor = 2;
    RetrievalOptions retrieval;
    SplatOptions splat;
};

void run_gen_lr(const GenLrArgs& args, Session& s)
{
    const SceneManifest m = read_manifest(args.manifest);
    const SceneManifest updated = generate_lr_scene(m, args.factor, args.splat.config, args.retrieval.config);
    const ScaleEntry& e = updated.scale_entry(args.factor);
    for (std::size_t v = 0; v < e.images.size(); ++v) {
        s.artifact(updated.resolve(e.images[v]), "image");
        s.artifact(updated.resolve(e.cameras[v]), "camera");
    }
    s.artifact(updated.resolve(e.texture), "texture");
    s.artifact(updated.resolve(e.mask), "mask");
    s.artifact(args.manifest, "manifest");
}

struct UpsampleArgs
{
    std::string input;
    std::string input_mask;
    std::string hr_mask;
    int scale = 2;
    std::string kernel = "bilinear";
    std::string out;
    std::string out_mask;
};

void run_upsample(const UpsampleArgs& args, Session& s)
{
    const TextureAtlas lr = read_texture_png(args.input, args.input_mask);
    int w = 0;
    int h = 0;
    const auto hr_mask = read_mask_png(args.hr_mask, w, h);
    if (w != lr.width * args.scale || h != lr.height * args.scale) {
        fail(ErrorCode::MaskMismatch, args.hr_mask + " is not " + std::to_string(args.scale) + "x the LR size");
    }
    const UpsampleResult r = upsample_interp(lr, args.scale, InterpKernel{parse_kernel_kind(args.kernel)}, hr_mask);
    write_texture_png(args.out, r.texture, 16);
    s.artifact(args.out, "texture");
    if (!args.out_mask.empty()) {
        write_mask_png(args.out_mask, r.texture.width, r.texture.height, r.texture.mask);
        s.artifact(args.out_mask, "mask");
    }
    s.out(join_counts(r.texture.active_count(), r.unseen_count));
}

struct ModelSrArgs
{
    std::string manifest;
    int scale = 2;
    std::string init;
    std::string out;
    std::string trace;
    ModelSRConfig config;
    SplatOptions splat;
};

bool run_model_sr(ModelSrArgs args, Session& s)
{
    args.config.scale = args.scale;
    const SceneManifest m = read_manifest(args.manifest);
    const ScaleEntry& hr = m.scale_entry(1);
    const ScaleEntry& lr = m.scale_entry(args.scale);
    const TriangleMesh mesh = load_mesh(m.resolve(m.mesh));
    const TexelAtlasMap atlas = rasterize_atlas(mesh, m.atlas_width, m.atlas_height);
    const auto hr_mask = atlas.mask();
    (void)hr;

    TextureAtlas init;
    if (!args.init.empty()) {
        init = read_texture_png(args.init);
        if (init.width != atlas.width() || init.height != atlas.height()) {
            fail(ErrorCode::DimensionMismatch, args.init + " does not match the HR atlas");
        }
        init.mask = hr_mask;
        sanitize(init);
    } else {
        if (lr.texture.empty()) fail(ErrorCode::MissingFile, scale_dir(args.scale) + " has no texture map");
        const TextureAtlas lr_texture = read_texture_png(m.resolve(lr.texture), m.resolve(lr.mask));
        if (lr_texture.width * args.scale != atlas.width() || lr_texture.height * args.scale != atlas.height()) {
            fail(ErrorCode::MaskMismatch, "HR atlas is not " + std::to_string(args.scale) + "x the LR texture");
        }
        init = upsample_interp(lr_texture, args.scale, InterpKernel{KernelKind::Bilinear}, hr_mask).texture;
    }

    const auto cameras = load_cameras(m, lr);
    const auto images = load_images(m, lr);
    const auto ops = build_operators(atlas, mesh, cameras, args.splat.config);
    const ModelSRResult r = model_sr_solve(images, ops, init, args.config);
    write_texture_png(args.out, r.texture, 16);
    s.artifact(args.out, "texture");
    if (!args.trace.empty()) {
        write_trace_csv(args.trace, r.trace);
        s.artifact(args.trace, "trace");
    }
    std::ostringstream line;
    line << "iterations=" << r.iterations << " status=" << to_string(r.status)
         << " objective=" << format_db(r.trace.back().total);
    s.out(line.str());
    return r.status != SolverStatus::Diverged;
}

struct EvaluateArgs
{
    std::string gt;
    std::string test;
    std::string mask;
    std::string test_mask;
    std::string scene = "scene";
    std::string subset = "custom";
    std::string method = "method";
    int scale = 1;
    std::string csv;
};

void run_evaluate(const EvaluateArgs& args, Session& s)
{
    const TextureAtlas gt = read_texture_png(args.gt, args.mask);
    const TextureAtlas test = read_texture_png(args.test, args.test_mask.empty() ? args.mask : args.test_mask);
    EvaluationRow row;
    row.scene = args.scene;
    row.subset = args.subset;
    row.method = args.method;
    row.scale = args.scale;
    row.psnr_db = masked_psnr(gt, test);
    row.ssim = masked_ssim(gt, test);
    for (std::size_t t = 0; t < gt.texel_count(); ++t) row.active_texels += (gt.mask[t] && test.mask[t]) ? 1 : 0;

    std::ostringstream line;
    line << "psnr=" << format_db(row.psnr_db) << " ssim=" << std::fixed << std::setprecision(6) << row.ssim;
    s.out(line.str());
    s.out(kEvaluationCsvHeader);
    s.out(format_evaluation_row(row));
    if (!args.csv.empty()) {
        const bool fresh = !fs::exists(args.csv) || fs::file_size(args.csv) == 0;
        std::ofstream file(args.csv, std::ios::app | std::ios::binary);
        if (!file) fail(ErrorCode::IoError, "cannot write " + args.csv);
        if (fresh) file << kEvaluationCsvHeader << '\n';
        file << format_evaluation_row(row) << '\n';
        file.close();
        s.artifact(args.csv, "csv");
    }
}

void run_validate(const std::string& manifest, Session& s)
{
    const SceneManifest m = read_manifest(manifest);
    validate_manifest(m);
    s.out("manifest=" + manifest + " scales=" + std::to_string(m.scales.size()) + " valid=true");
}

void run_stats(const std::string& mesh_path, Session& s)
{
    const MeshStats st = mesh_stats(load_mesh(mesh_path));
    s.out("vertices=" + std::to_string(st.vertex_count) + " uvs=" + std::to_string(st.uv_count) +
          " normals=" + std::to_string(st.normal_count) + " faces=" + std::to_string(st.face_count));
}

} // namespace

CommandResult run_command(const std::vector<std::string>& argv)
{
    CommandResult result;
    Session session(result);

    CLI::App app{"Multi-view texture retrieval and texture-map super-resolution", "texsr"};
    app.require_subcommand(1);
    GlobalOptions global;
    app.add_option("--threads", global.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--seed", global.seed, "random seed (all pipelines are deterministic)")->capture_default_str();

    std::function<bool()> action;

    RetrieveArgs retrieve;
    auto* cmd = app.add_subcommand("retrieve", "retrieve a texture map from the views of one scale");
    cmd->add_option("--manifest", retrieve.manifest)->required();
    cmd->add_option("--scale", retrieve.scale)->check(CLI::Range(1, 4))->capture_default_str();
    retrieve.retrieval.attach(cmd, true);
    retrieve.splat.attach(cmd);
    cmd->callback([&] { action = [&] { run_retrieve(retrieve, session); return true; }; });

    RenderArgs render;
    cmd = app.add_subcommand("render", "render a texture map into every view of one scale");
    cmd->add_option("--manifest", render.manifest)->required();
    cmd->add_option("--scale", render.scale)->check(CLI::Range(1, 4))->capture_default_str();
    cmd->add_option("--texture", render.texture)->required();
    cmd->add_option("--mask", render.mask, "texture mask (default: the atlas coverage)");
    cmd->add_option("--out-dir", render.out_dir)->required();
    render.splat.attach(cmd);
    cmd->callback([&] { action = [&] { run_render(render, session); return true; }; });

    BakeArgs bake;
    cmd = app.add_subcommand("bake-normals", "bake the 4-channel normal map of one scale");
    cmd->add_option("--manifest", bake.manifest)->required();
    cmd->add_option("--scale", bake.scale)->check(CLI::Range(1, 4))->capture_default_str();
    cmd->add_option("--out", bake.out, "output PNG (default: x<scale>/normals.png, recorded in the manifest)");
    cmd->callback([&] { action = [&] { run_bake(bake, session); return true; }; });

    GenLrArgs gen;
    cmd = app.add_subcommand("gen-lr", "derive a down-scaled level from the HR level");
    cmd->add_option("--manifest", gen.manifest)->required();
    cmd->add_option("--factor", gen.factor)->required()->check(CLI::IsMember({2, 3, 4}));
    gen.retrieval.attach(cmd, false);
    gen.splat.attach(cmd);
    cmd->callback([&] { action = [&] { run_gen_lr(gen, session); return true; }; });

    UpsampleArgs up;
    cmd = app.add_subcommand("upsample", "interpolate an LR texture map onto the HR atlas");
    cmd->add_option("--input", up.input)->required();
    cmd->add_option("--input-mask", up.input_mask);
    cmd->add_option("--hr-mask", up.hr_mask)->required();
    cmd->add_option("--scale", up.scale)->required()->check(CLI::IsMember({2, 3, 4}));
    cmd->add_option("--kernel", up.kernel)
        ->check(CLI::IsMember({"nearest", "bilinear", "bicubic", "lanczos"}))
        ->capture_default_str();
    cmd->add_option("--out", up.out)->required();
    cmd->add_option("--out-mask", up.out_mask);
    cmd->callback([&] { action = [&] { run_upsample(up, session); return true; }; });

    ModelSrArgs msr;
    cmd = app.add_subcommand("model-sr", "multi-view model-based texture super-resolution");
    cmd->add_option("--manifest", msr.manifest)->required();
    cmd->add_option("--scale", msr.scale)->required()->check(CLI::IsMember({2, 3, 4}));
    cmd->add_option("--init", msr.init, "initial HR texture (default: bilinear upsampling of the LR map)");
    cmd->add_option("--out", msr.out)->required();
    cmd->add_option("--trace", msr.trace, "objective trace CSV");
    cmd->add_option("--lambda-tv", msr.config.lambda_tv)->capture_default_str();
    cmd->add_option("--step", msr.config.step)->capture_default_str();
    cmd->add_option("--max-iters", msr.config.max_iters)->capture_default_str();
    msr.splat.attach(cmd);
    cmd->callback([&] { action = [&] { return run_model_sr(msr, session); }; });

    EvaluateArgs eval;
    cmd = app.add_subcommand("evaluate", "masked PSNR and SSIM of a texture map against ground truth");
    cmd->add_option("--gt", eval.gt)->required();
    cmd->add_option("--test", eval.test)->required();
    cmd->add_option("--mask", eval.mask)->required();
    cmd->add_option("--test-mask", eval.test_mask);
    cmd->add_option("--scene", eval.scene)->capture_default_str();
    cmd->add_option("--subset", eval.subset)->capture_default_str();
    cmd->add_option("--method", eval.method)->capture_default_str();
    cmd->add_option("--scale", eval.scale)->capture_default_str();
    cmd->add_option("--csv", eval.csv, "append the row to this CSV file");
    cmd->callback([&] { action = [&] { run_evaluate(eval, session); return true; }; });

    std::string validate_path;
    cmd = app.add_subcommand("validate-manifest", "check that a scene manifest is complete and consistent");
    cmd->add_option("--manifest", validate_path)->required();
    cmd->callback([&] { action = [&] { run_validate(validate_path, session); return true; }; });

    std::string stats_path;
    cmd = app.add_subcommand("stats", "print mesh statistics");
    cmd->add_option("--mesh", stats_path)->required();
    cmd->callback([&] { action = [&] { run_stats(stats_path, session); return true; }; });

    std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        result.output.push_back(app.help());
        return result;
    } catch (const CLI::CallForAllHelp&) {
        result.output.push_back(app.help("", CLI::AppFormatMode::All));
        return result;
    } catch (const CLI::ParseError& e) {
        result.exit_code = kUsageError;
        result.log.push_back(std::string("error: ") + e.what());
        result.log.push_back(app.help());
        return result;
    }

    const int previous_threads = thread_count();
    set_thread_count(global.threads);
    try {
        if (!action || !action()) result.exit_code = kNumericalFailure;
    } catch (const Error& e) {
        result.exit_code = is_numerical(e.code()) ? kNumericalFailure : kDataError;
        result.log.push_back(std::string("error: ") + e.what());
    } catch (const std::exception& e) {
        result.exit_code = kDataError;
        result.log.push_back(std::string("error: ") + e.what());
    }
    set_thread_count(previous_threads);
    return result;
}

} // namespace texsr::cli
