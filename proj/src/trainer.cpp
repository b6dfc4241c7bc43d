#include "hoin/trainer.hpp"

#include "hoin/adam.hpp"
#include "hoin/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>

namespace hoin {

int default_epochs(TaskKind kind) {
    switch (kind) {
    case TaskKind::represent: return 5000;
    case TaskKind::denoise: return 2000;
    case TaskKind::sr: return 2000;
    case TaskKind::ct: return 5000;
    case TaskKind::inpaint: return 1000;
    }
    return 5000;
}

double default_lr(const ModelSpec& spec) {
    const bool sine_path = spec.act == Act::sine;
    const bool ho_path = spec.block == BlockKind::ho;
    return (sine_path || ho_path) ? 1e-4 : 1e-3;
}

std::vector<double> coord_grid(int h, int w) {
    if (h < 1 || w < 1) throw ShapeError("coord_grid: empty grid");
    std::vector<double> c((size_t)h * w * 2);
    for (int i = 0; i < h; ++i) {
        const double y = h == 1 ? 0.0 : 2.0 * i / (h - 1) - 1.0;
        for (int j = 0; j < w; ++j) {
            const double x = w == 1 ? 0.0 : 2.0 * j / (w - 1) - 1.0;
            c[((size_t)i * w + j) * 2 + 0] = x;
            c[((size_t)i * w + j) * 2 + 1] = y;
        }
    }
    return c;
}

ImageGrid evaluate(const Model& model, int h, int w) {
    if (model.spec.in_dim != 2) throw ShapeError("evaluate: model must take 2-D coords");
    auto coords = coord_grid(h, w);
    auto x = make_leaf({h * w, 2}, coords.data(), false);
    auto out = model.forward(x);
    ImageGrid img(h, w, model.spec.out_dim);
    std::memcpy(img.pix.data(), out->d(), sizeof(double) * (size_t)out->numel());
    return img;
}

Measurement make_measurement(const TaskSpec& task, const ImageGrid& truth) {
    Measurement m;
    m.out_h = truth.h;
    m.out_w = truth.w;
    switch (task.kind) {
    case TaskKind::represent:
        m.img = truth;
        break;
    case TaskKind::denoise:
        m.img = add_gaussian_noise(truth, task.noise_sigma, task.seed);
        break;
    case TaskKind::sr:
        m.img = downsample(truth, task.sr_factor);
        break;
    case TaskKind::ct: {
        if (truth.c != 1 || truth.h != truth.w)
            throw ShapeError("ct: truth must be a square single-channel image");
        m.geo = RadonGeometry::make(truth.h, task.ct_angles);
        m.img = radon(truth, m.geo);
        break;
    }
    case TaskKind::inpaint:
        m.mask = make_mask(truth.h, truth.w, task.mask_keep, task.seed);
        m.img = apply_mask(truth, m.mask);
        break;
    }
    return m;
}

TP loss_for_task(TaskKind kind, const TP& pred, const TP& target, const Measurement& meas) {
    switch (kind) {
    case TaskKind::represent:
    case TaskKind::denoise:
    case TaskKind::sr:
        return mse(pred, target);
    case TaskKind::inpaint: {
        if (pred->shape.size() != 2) throw ShapeError("inpaint loss: pred must be [N x c]");
        const int64_t n = pred->rows();
        const int c = (int)pred->cols();
        if ((int64_t)meas.mask.keep.size() != n) throw ShapeError("inpaint loss: mask size");
        auto keep = std::make_shared<std::vector<uint8_t>>((size_t)n * c);
        for (int64_t i = 0; i < n; ++i)
            for (int j = 0; j < c; ++j) (*keep)[(size_t)i * c + j] = meas.mask.keep[(size_t)i];
        return mse_masked(pred, target, keep);
    }
    case TaskKind::ct: {
        const int n = meas.geo.img_n;
        if (pred->numel() != (int64_t)n * n) throw ShapeError("ct loss: pred size");
        auto img = reshape(pred, {n, n});
        return mse(radon_op(img, meas.geo), target);
    }
    }
    throw ShapeError("loss_for_task: bad kind");
}

namespace {

ImageGrid grid_from_pred(const TP& pred, int h, int w, int c) {
    ImageGrid img(h, w, c);
    std::memcpy(img.pix.data(), pred->d(), sizeof(double) * (size_t)pred->numel());
    return img;
}

void snapshot_params(const std::vector<TP>& params, std::vector<std::vector<double>>& snap) {
    snap.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        snap[i].resize((size_t)params[i]->numel());
        std::memcpy(snap[i].data(), params[i]->d(), sizeof(double) * snap[i].size());
    }
}

} // namespace

FitResult fit(const TaskSpec& task, const Measurement& meas, const ImageGrid* truth) {
    if (task.epochs < 1) throw ShapeError("fit: epochs must be >= 1");
    if (task.lr <= 0) throw ShapeError("fit: lr must be > 0");

    const bool is_ct = task.kind == TaskKind::ct;
    const int th = is_ct ? meas.geo.img_n : meas.img.h;
    const int tw = is_ct ? meas.geo.img_n : meas.img.w;
    const int ch = is_ct ? 1 : meas.img.c;

    ModelSpec mspec = task.model;
    mspec.in_dim = 2;
    mspec.out_dim = ch;
    Model model = build_model(mspec, task.seed);

    const int64_t N = (int64_t)th * tw;
    auto coords = coord_grid(th, tw);
    auto x = make_leaf({(int)N, 2}, coords.data(), false);
    const bool frozen_enc = mspec.encoder.kind != EncKind::hashgrid;
    TP cached_feats = frozen_enc ? model.enc.encode(x) : nullptr;

    TP target;
    if (is_ct)
        target = make_leaf({meas.geo.angles, meas.geo.n_det}, meas.img.pix.data(), false);
    else
        target = make_leaf({(int)N, ch}, meas.img.pix.data(), false);

    AdamState opt;
    opt.lr = task.lr;
    opt.eps = task.adam_eps;
    adam_init(opt, model.params);
    const int decay_epoch = (int)std::llround(task.epochs * task.lr_decay_at);

    const char* timing_env = std::getenv("HOIN_TIMING");
    const bool timing = timing_env && std::strcmp(timing_env, "1") == 0;

    FitResult res;
    res.model = model.clone();
    res.best_psnr_truth = -std::numeric_limits<double>::infinity();
    res.best_loss = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_snap;
    bool have_snap = false;

    for (int epoch = 1; epoch <= task.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        TP feats = frozen_enc ? cached_feats : model.enc.encode(x);
        TP pred = model.forward_features(feats);
        TP loss = loss_for_task(task.kind, pred, target, meas);
        const double lv = loss->d()[0];
        if (!std::isfinite(lv)) {
            res.diverged = true;
            break;
        }

        TrainRecord rec;
        rec.epoch = epoch;
        rec.loss = lv;
        rec.psnr_meas = psnr_from_mse(lv, 1.0);

        const bool metric_now =
            truth && (epoch % task.metric_every == 0 || epoch == task.epochs || epoch == 1);
        const bool band_now = task.bands >= 2 && !is_ct && epoch % task.band_every == 0;

        if (metric_now || band_now) {
            ImageGrid recon = task.kind == TaskKind::sr
                                  ? evaluate(model, truth->h, truth->w)
                                  : grid_from_pred(pred, th, tw, ch);
            if (metric_now) {
                rec.psnr_truth = psnr(recon, *truth, 1.0);
                rec.ssim_truth = ssim(recon, *truth);
                rec.has_truth = true;
                if (rec.psnr_truth > res.best_psnr_truth) {
                    res.best_psnr_truth = rec.psnr_truth;
                    res.best_epoch = epoch;
                    res.best_loss = lv;
                    snapshot_params(model.params, best_snap);
                    have_snap = true;
                }
            }
            if (band_now) {
                const ImageGrid* bt =
                    truth && truth->h == recon.h && truth->w == recon.w ? truth : &meas.img;
                if (bt->h == recon.h && bt->w == recon.w) {
                    auto bc = band_correspondence(recon, *bt, task.bands);
                    bc.epoch = epoch;
                    res.bands.push_back(std::move(bc));
                }
            }
        }
        if (!truth && lv < res.best_loss) {
            res.best_loss = lv;
            res.best_epoch = epoch;
            snapshot_params(model.params, best_snap);
            have_snap = true;
        }

        backward(loss);
        opt.lr = epoch > decay_epoch ? task.lr * task.lr_decay_factor : task.lr;
        bool step_diverged = false;
        try {
            adam_step(model.params, opt);
        } catch (const DivergenceError&) {
            step_diverged = true;
        }
        zero_grads(model.params);

        if (timing) {
            rec.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            rec.has_wall = true;
        }
        res.records.push_back(rec);
        if (step_diverged) {
            res.diverged = true;
            break;
        }
    }

    if (have_snap) {
        for (size_t i = 0; i < res.model.params.size(); ++i)
            std::memcpy(res.model.params[i]->d(), best_snap[i].data(),
                        sizeof(double) * best_snap[i].size());
    } else {
        for (size_t i = 0; i < res.model.params.size(); ++i)
            std::memcpy(res.model.params[i]->d(), model.params[i]->d(),
                        sizeof(double) * (size_t)model.params[i]->numel());
        res.best_epoch = res.records.empty() ? 0 : res.records.back().epoch;
        if (!res.records.empty()) res.best_loss = res.records.back().loss;
    }
    return res;
}

namespace {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_records_csv(const std::string& path, const std::vector<TrainRecord>& records) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "epoch,loss,psnr_meas,psnr_truth,ssim_truth,wall_ms\n";
    for (const auto& r : records) {
        f << r.epoch << ',' << fmt_g17(r.loss) << ',' << fmt_g17(r.psnr_meas) << ',';
        if (r.has_truth) f << fmt_g17(r.psnr_truth);
        f << ',';
        if (r.has_truth) f << fmt_g17(r.ssim_truth);
        f << ',';
        if (r.has_wall) f << fmt_g17(r.wall_ms);
        f << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
}

void write_bands_csv(const std::string& path, const std::vector<BandCorrespondence>& bands,
                     int n_bands) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "epoch";
    for (int b = 0; b < n_bands; ++b) f << ",band_" << b;
    f << '\n';
    for (const auto& bc : bands) {
        f << bc.epoch;
        for (int b = 0; b < n_bands; ++b) {
            f << ',';
            if (b < (int)bc.values.size() && bc.defined[(size_t)b]) f << fmt_g17(bc.values[(size_t)b]);
        }
        f << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
}

} // namespace hoin
