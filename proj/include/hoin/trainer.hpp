#pragma once
#include "hoin/image.hpp"
#include "hoin/metrics.hpp"
#include "hoin/network.hpp"
#include "hoin/operators.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hoin {

enum class TaskKind { represent, denoise, sr, ct, inpaint };

int default_epochs(TaskKind kind);
double default_lr(const ModelSpec& spec); // 1e-3 relu paths, 1e-4 sine/HO paths

struct TaskSpec {
    TaskKind kind = TaskKind::represent;
    ModelSpec model;
    int epochs = 5000;
    double lr = 1e-3;
    double lr_decay_factor = 0.1;
    double lr_decay_at = 0.8; // fraction of epochs after which lr is scaled
    double adam_eps = 1e-8;
    uint64_t seed = 0;
    double noise_sigma = 25.0; // denoise, 8-bit units
    int sr_factor = 2;
    double mask_keep = 0.3; // inpaint, observed fraction
    int ct_angles = 40;
    int metric_every = 1; // truth-metric cadence, epochs
    int bands = 0;        // spectral probe band count, 0 = off
    int band_every = 25;
};

struct TrainRecord {
    int epoch = 0;
    double loss = 0.0;
    double psnr_meas = 0.0;
    double psnr_truth = 0.0;
    double ssim_truth = 0.0;
    double wall_ms = 0.0;
    bool has_truth = false;
    bool has_wall = false;
};

// kind-dependent training input; img holds the target image, the noisy or
// masked image, the low-res image, or the sinogram (A x n_det)
struct Measurement {
    ImageGrid img;
    Mask mask;         // inpaint
    RadonGeometry geo; // ct
    int out_h = 0;     // reconstruction grid
    int out_w = 0;
};

struct FitResult {
    Model model; // peak-metric snapshot
    int best_epoch = 0;
    double best_psnr_truth = 0.0;
    double best_loss = 0.0;
    std::vector<TrainRecord> records;
    std::vector<BandCorrespondence> bands;
    bool diverged = false;
};

// raster-order [x, y] pairs, each axis mapped to [-1, 1] (single row/col -> 0)
std::vector<double> coord_grid(int h, int w);

ImageGrid evaluate(const Model& model, int h, int w);

Measurement make_measurement(const TaskSpec& task, const ImageGrid& truth);

TP loss_for_task(TaskKind kind, const TP& pred, const TP& target, const Measurement& meas);

FitResult fit(const TaskSpec& task, const Measurement& meas, const ImageGrid* truth);

void write_records_csv(const std::string& path, const std::vector<TrainRecord>& records);
void write_bands_csv(const std::string& path, const std::vector<BandCorrespondence>& bands,
                     int n_bands);

} // namespace hoin
