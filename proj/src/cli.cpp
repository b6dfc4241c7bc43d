#include "hoin/cli.hpp"

#include "hoin/config.hpp"
#include "hoin/kernels.hpp"
#include "hoin/ntk.hpp"
#include "hoin/phantom.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace hoin {

namespace {

struct TaskOpts {
    std::string config;
    std::optional<uint64_t> seed;
    std::optional<int> epochs;
    std::optional<std::string> out;
    std::optional<int> bands;
    std::optional<std::string> truth;
    std::optional<std::string> image;
    std::optional<std::string> phantom;
    std::optional<int> size;
    bool force = false;
};

void add_task_flags(CLI::App* sub, TaskOpts& o) {
    sub->add_option("--config", o.config, "run configuration (INI)");
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--epochs", o.epochs, "training epochs");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--bands", o.bands, "spectral band count (logged every 25 epochs)");
    sub->add_option("--truth", o.truth, "ground-truth image for metrics");
    sub->add_option("--image", o.image, "source image; the operator is applied to it");
    sub->add_option("--phantom", o.phantom, "analytic phantom: disk|squares|shepp-like");
    sub->add_option("--size", o.size, "generated image side (no --image/--phantom: textured scene)");
    sub->add_flag("--force", o.force, "overwrite existing outputs");
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// CLI flags are merged as config text appended after the file so they win
RunConfig assemble_config(TaskKind kind, const TaskOpts& o) {
    std::ostringstream extra;
    extra << "\n[task]\nkind = " << to_string(kind) << "\n";
    if (o.image) extra << "image = " << *o.image << "\n";
    if (o.truth) extra << "truth = " << *o.truth << "\n";
    if (o.phantom) extra << "phantom = " << *o.phantom << "\n";
    if (o.size) extra << "size = " << *o.size << "\n";
    extra << "[train]\n";
    if (o.seed) extra << "seed = " << *o.seed << "\n";
    if (o.epochs) extra << "epochs = " << *o.epochs << "\n";
    extra << "[output]\n";
    if (o.out) extra << "dir = " << *o.out << "\n";
    if (o.bands) extra << "bands = " << *o.bands << "\n";
    const std::string base = o.config.empty() ? std::string() : slurp(o.config);
    return parse_config(base + extra.str());
}

int refuse_existing(const std::vector<fs::path>& paths, bool force) {
    if (force) return 0;
    for (const auto& p : paths)
        if (fs::exists(p)) {
            std::fprintf(stderr, "refusing to overwrite %s (pass --force)\n", p.string().c_str());
            return 2;
        }
    return 0;
}

int run_task(TaskKind kind, const TaskOpts& o, bool spectral_default_bands) {
    RunConfig cfg = assemble_config(kind, o);
    if (spectral_default_bands && cfg.task.bands < 2) cfg.task.bands = 10;

    ImageGrid src;
    if (!cfg.image_path.empty())
        src = read_image(cfg.image_path);
    else if (!cfg.phantom.empty())
        src = make_phantom(cfg.phantom, cfg.size);
    else
        src = make_scene(cfg.size, cfg.task.seed);
    if (kind == TaskKind::ct && src.c != 1) {
        ImageGrid g(src.h, src.w, 1);
        g.pix = luma(src);
        src = std::move(g);
    }
    const ImageGrid truth = cfg.truth_path.empty() ? src : read_image(cfg.truth_path);

    const fs::path dir(cfg.out_dir);
    const bool gray = kind == TaskKind::ct || src.c == 1;
    const fs::path recon8 = dir / (gray ? "recon.pgm" : "recon.ppm");
    const fs::path reconf = dir / "recon.pfm";
    const fs::path metrics = dir / "metrics.csv";
    const fs::path ckpt = dir / "model.ckpt";
    const fs::path cfg_out = dir / "config.ini";
    const fs::path bands_csv = dir / "bands.csv";
    const fs::path meas_pfm = dir / (kind == TaskKind::ct ? "sino.pfm" : "meas.pfm");
    const fs::path target8 = dir / (gray ? "target.pgm" : "target.ppm");

    std::vector<fs::path> outs = {recon8, reconf, metrics, ckpt, cfg_out};
    if (cfg.task.bands >= 2) outs.push_back(bands_csv);
    if (kind != TaskKind::represent) outs.push_back(meas_pfm);
    if (cfg.image_path.empty()) outs.push_back(target8);
    if (int rc = refuse_existing(outs, o.force)) return rc;

    Measurement meas = make_measurement(cfg.task, src);
    FitResult res = fit(cfg.task, meas, &truth);

    fs::create_directories(dir);
    ImageGrid recon = evaluate(res.model, meas.out_h, meas.out_w);
    write_image(recon8.string(), recon);
    write_image(reconf.string(), recon);
    write_records_csv(metrics.string(), res.records);
    save_checkpoint(res.model, ckpt.string());
    {
        std::ofstream f(cfg_out, std::ios::binary);
        if (!f) throw IoError("cannot open for write: " + cfg_out.string());
        f << serialize_config(cfg);
    }
    if (cfg.task.bands >= 2) write_bands_csv(bands_csv.string(), res.bands, cfg.task.bands);
    if (kind != TaskKind::represent) write_image(meas_pfm.string(), meas.img);
    if (cfg.image_path.empty()) write_image(target8.string(), src);

    double best_psnr = 0.0, best_ssim = 0.0;
    for (const auto& r : res.records)
        if (r.epoch == res.best_epoch && r.has_truth) {
            best_psnr = r.psnr_truth;
            best_ssim = r.ssim_truth;
        }
    std::printf("RESULT psnr=%.17g ssim=%.17g best_epoch=%d\n", best_psnr, best_ssim,
                res.best_epoch);
    if (res.diverged) {
        std::fprintf(stderr, "training diverged (non-finite loss/gradient); partial records kept\n");
        return 3;
    }
    return 0;
}

struct NtkOpts {
    std::vector<std::string> blocks{"ho", "plain"};
    int points = 64;
    int width = 64;
    int layers = 3;
    std::string encoder = "positional";
    std::optional<int> m;
    std::optional<double> sigma;
    std::string act = "relu";
    double w0 = 30.0;
    uint64_t seed = 0;
    std::string out = "out";
    int bandwidth = 2;
    double threshold = 10.0;
    bool force = false;
};

int run_ntk(const NtkOpts& o) {
    const fs::path dir(o.out);
    std::vector<fs::path> outs;
    for (const auto& b : o.blocks) {
        outs.push_back(dir / ("ntk_" + b + "_K.pfm"));
        outs.push_back(dir / ("ntk_" + b + "_eig.csv"));
        outs.push_back(dir / ("ntk_" + b + "_stats.txt"));
    }
    if (int rc = refuse_existing(outs, o.force)) return rc;
    fs::create_directories(dir);

    std::vector<double> coords((size_t)o.points);
    for (int i = 0; i < o.points; ++i)
        coords[(size_t)i] = o.points == 1 ? 0.0 : 2.0 * i / (o.points - 1) - 1.0;

    for (const auto& bname : o.blocks) {
        ModelSpec ms;
        BlockKind bk;
        if (bname == "plain")
            bk = BlockKind::plain;
        else if (bname == "residual")
            bk = BlockKind::residual;
        else if (bname == "ho")
            bk = BlockKind::ho;
        else
            throw ConfigError("ntk: unknown block '" + bname + "' (plain|residual|ho)");
        EncKind ek;
        if (o.encoder == "identity")
            ek = EncKind::identity;
        else if (o.encoder == "positional")
            ek = EncKind::positional;
        else if (o.encoder == "fourier")
            ek = EncKind::fourier;
        else
            throw ConfigError("ntk: unknown encoder '" + o.encoder + "'");
        ms.encoder = default_encoder(ek);
        if (o.m) ms.encoder.m = *o.m;
        if (o.sigma) ms.encoder.sigma = *o.sigma;
        ms.in_dim = 1;
        ms.block = bk;
        ms.hidden_layers = o.layers;
        ms.width = o.width;
        ms.act = o.act == "sine" ? Act::sine : Act::relu;
        ms.w0 = o.w0;
        ms.out_dim = 1;

        Model model = build_model(ms, o.seed);
        KernelMatrix km = ntk_matrix(model, coords, 1);
        auto [evals, V] = eig_symmetric(km.K, km.n);
        (void)V;
        const double ratio = diag_dominance(km.K, km.n, o.bandwidth);
        const int cnt = count_above(evals, o.threshold);
        double trace = 0.0;
        for (int i = 0; i < km.n; ++i) trace += km.K[(size_t)i * km.n + i];

        ImageGrid kimg(km.n, km.n, 1);
        kimg.pix = km.K;
        write_image((dir / ("ntk_" + bname + "_K.pfm")).string(), kimg);
        {
            std::ofstream f(dir / ("ntk_" + bname + "_eig.csv"), std::ios::binary);
            f << "index,eigenvalue\n";
            for (size_t i = 0; i < evals.size(); ++i) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.17g", evals[i]);
                f << i << ',' << buf << '\n';
            }
        }
        {
            std::ofstream f(dir / ("ntk_" + bname + "_stats.txt"), std::ios::binary);
            f << "block = " << bname << "\npoints = " << o.points << "\nwidth = " << o.width
              << "\nhidden_layers = " << o.layers << "\nencoder = " << o.encoder
              << "\nseed = " << o.seed << "\ndiag_dominance_w" << o.bandwidth << " = " << ratio
              << "\ncount_above_" << o.threshold << " = " << cnt << "\ntrace = " << trace
              << "\neig_max = " << (evals.empty() ? 0.0 : evals.front())
              << "\neig_min = " << (evals.empty() ? 0.0 : evals.back()) << "\n";
        }
        std::printf("NTK block=%s diag_dominance_w%d=%.6f count_above_%g=%d\n", bname.c_str(),
                    o.bandwidth, ratio, o.threshold, cnt);
    }
    return 0;
}

struct ConvertOpts {
    std::string input, output;
    bool force = false;
};

int run_convert(const ConvertOpts& o) {
    if (o.input.size() > 5 && o.input.substr(o.input.size() - 5) == ".ckpt") {
        Model m = load_checkpoint(o.input);
        const ModelSpec& s = m.spec;
        std::printf("checkpoint %s\n", o.input.c_str());
        std::printf("  encoder = %s\n  block = %s\n  activation = %s\n", to_string(s.encoder.kind),
                    to_string(s.block), to_string(s.act));
        std::printf("  in_dim = %d  width = %d  hidden_layers = %d  out_dim = %d\n", s.in_dim,
                    s.width, s.hidden_layers, s.out_dim);
        std::printf("  parameters = %lld\n", (long long)m.param_count());
        if (o.output.empty()) return 0;
    }
    if (o.output.empty()) throw ConfigError("convert: output path required for image conversion");
    if (!o.force && fs::exists(o.output)) {
        std::fprintf(stderr, "refusing to overwrite %s (pass --force)\n", o.output.c_str());
        return 2;
    }
    ImageGrid img = read_image(o.input);
    if (fs::path(o.output).has_parent_path())
        fs::create_directories(fs::path(o.output).parent_path());
    write_image(o.output, img);
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    kernels::set_threads_from_env();

    CLI::App app{"hoin: high-order implicit neural representation toolkit"};
    app.require_subcommand(1);

    struct SubDef {
        const char* name;
        const char* desc;
        TaskKind kind;
        bool spectral = false;
    };
    const SubDef defs[] = {
        {"fit", "fit an image directly (representation)", TaskKind::represent},
        {"denoise", "fit a noisy image, report peak PSNR vs the clean one", TaskKind::denoise},
        {"sr", "fit a downsampled image, evaluate on the full grid", TaskKind::sr},
        {"ct", "reconstruct from a simulated sinogram", TaskKind::ct},
        {"inpaint", "fit observed pixels only", TaskKind::inpaint},
        {"spectral", "representation plus frequency-band correspondence logging",
         TaskKind::represent, true},
    };
    std::vector<std::pair<CLI::App*, const SubDef*>> subs;
    std::vector<TaskOpts> opts(std::size(defs));
    for (size_t i = 0; i < std::size(defs); ++i) {
        CLI::App* sub = app.add_subcommand(defs[i].name, defs[i].desc);
        add_task_flags(sub, opts[i]);
        subs.emplace_back(sub, &defs[i]);
    }

    NtkOpts ntk_o;
    CLI::App* ntk_sub = app.add_subcommand("ntk", "empirical NTK of a model at initialization");
    ntk_sub->add_option("--block", ntk_o.blocks, "block kind, repeatable: plain|residual|ho");
    ntk_sub->add_option("--points", ntk_o.points, "1-D grid size in [-1,1]");
    ntk_sub->add_option("--width", ntk_o.width, "hidden width");
    ntk_sub->add_option("--layers", ntk_o.layers, "hidden layer count");
    ntk_sub->add_option("--encoder", ntk_o.encoder, "identity|positional|fourier");
    ntk_sub->add_option("--m", ntk_o.m, "encoder frequency count");
    ntk_sub->add_option("--sigma", ntk_o.sigma, "encoder bandwidth");
    ntk_sub->add_option("--act", ntk_o.act, "relu|sine");
    ntk_sub->add_option("--w0", ntk_o.w0, "sine frequency scale");
    ntk_sub->add_option("--seed", ntk_o.seed, "RNG seed");
    ntk_sub->add_option("--out", ntk_o.out, "output directory");
    ntk_sub->add_option("--bandwidth", ntk_o.bandwidth, "diagonal band half-width");
    ntk_sub->add_option("--threshold", ntk_o.threshold, "eigenvalue count threshold");
    ntk_sub->add_flag("--force", ntk_o.force, "overwrite existing outputs");

    ConvertOpts conv_o;
    CLI::App* conv_sub =
        app.add_subcommand("convert", "convert between pnm/pfm; print checkpoint info");
    conv_sub->add_option("input", conv_o.input, "input file (.pgm/.ppm/.pnm/.pfm/.ckpt)")
        ->required();
    conv_sub->add_option("output", conv_o.output, "output image path");
    conv_sub->add_flag("--force", conv_o.force, "overwrite existing output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        for (size_t i = 0; i < subs.size(); ++i)
            if (subs[i].first->parsed())
                return run_task(subs[i].second->kind, opts[i], subs[i].second->spectral);
        if (ntk_sub->parsed()) return run_ntk(ntk_o);
        if (conv_sub->parsed()) return run_convert(conv_o);
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}

} // namespace hoin
